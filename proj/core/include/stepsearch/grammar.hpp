#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stepsearch {

/// A multiple-choice question: statement, lettered options and gold index.
struct Problem {
  std::string id;
  std::string question;
  std::vector<std::string> options;
  int gold_answer = 0;

  int option_count() const { return static_cast<int>(options.size()); }
  bool valid() const {
    return !options.empty() && options.size() <= 26 && gold_answer >= 0 &&
           gold_answer < option_count();
  }
};

enum class StepKind { Proposal, Thought, Action, FinalAnswer };

/// One reasoning step. A step is a single <step> element containing either a
/// proposal, a thought, a final answer, or an action group (optional thought
/// preamble, tool call, input and optional observation).
struct Step {
  StepKind kind = StepKind::Thought;
  int option = -1;        // Proposal / FinalAnswer
  std::string text;       // Thought content; thought preamble for Action
  std::string tool;       // Action
  std::string input;      // Action
  std::optional<std::string> observation;  // Action; nullopt until retrieval ran
  std::string raw_text;   // exact form this step was parsed from / serialized to

  bool operator==(const Step& o) const {
    return kind == o.kind && option == o.option && text == o.text && tool == o.tool &&
           input == o.input && observation == o.observation;
  }

  static Step proposal(int option_index);
  static Step thought(std::string content);
  static Step action(std::string tool, std::string input,
                     std::optional<std::string> observation = std::nullopt,
                     std::string thought_preamble = "");
  static Step final_answer(int option_index);
};

char option_letter(int index);                 // 0 -> 'A'
std::optional<int> option_index(char letter);  // 'A'/'a' -> 0, non-letter -> nullopt

/// Parses a single <step> element. Returns nullopt when the text is not a
/// well-formed step over the sanctioned tags, or an option letter falls
/// outside [0, max_options). Callers drop unparsable samples.
std::optional<Step> parse_step(std::string_view text, int max_options);
std::optional<Step> parse_step(std::string_view text, const Problem& problem);

/// Canonical form: lowercase tags, single space between sibling tags,
/// escaped content, bare option letters.
std::string serialize_step(const Step& step);

struct Trajectory {
  std::vector<Step> steps;

  bool terminal() const {
    return !steps.empty() && steps.back().kind == StepKind::FinalAnswer;
  }
  std::size_t size() const { return steps.size(); }
  bool empty() const { return steps.empty(); }

  /// At most one final answer, only in last position; length within max_len
  /// (max_len <= 0 disables the length check).
  bool valid(int max_len) const;
};

/// Steps serialized canonically and joined with single newlines.
std::string serialize_trajectory(const Trajectory& traj);

/// Parses a whitespace-separated sequence of <step> elements. Fails (nullopt)
/// if any element is unparsable or non-whitespace appears between steps.
std::optional<Trajectory> parse_trajectory(std::string_view text, int max_options);

/// True iff no thought step occurs strictly between the last action step (or
/// the start when no action exists) and the final answer.
/// Throws NotTerminal when the trajectory has no final answer.
bool is_non_thought_terminal(const Trajectory& traj);

}  // namespace stepsearch
