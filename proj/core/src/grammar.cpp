#include "stepsearch/grammar.hpp"

#include <array>
#include <cassert>
#include <cctype>

#include "stepsearch/errors.hpp"
#include "stepsearch/text.hpp"

namespace stepsearch {

namespace {

constexpr std::array<std::string_view, 7> kTagNames = {
    "step", "proposal", "thought", "action", "action_input", "observation", "final_answer"};

bool is_sanctioned(std::string_view lower_name) {
  for (auto t : kTagNames)
    if (t == lower_name) return true;
  return false;
}

struct TagToken {
  bool closing = false;
  std::string name;   // lowercase
  size_t end = 0;     // index just past '>'
};

// Reads '<' '/'? [A-Za-z_]+ '>' at position i. Returns nullopt when the text
// at i is not tag-shaped at all.
std::optional<TagToken> read_tag(std::string_view s, size_t i) {
  if (i >= s.size() || s[i] != '<') return std::nullopt;
  size_t j = i + 1;
  TagToken tok;
  if (j < s.size() && s[j] == '/') {
    tok.closing = true;
    ++j;
  }
  const size_t name_start = j;
  while (j < s.size() &&
         (std::isalpha(static_cast<unsigned char>(s[j])) || s[j] == '_'))
    ++j;
  if (j == name_start || j >= s.size() || s[j] != '>') return std::nullopt;
  tok.name = to_lower(s.substr(name_start, j - name_start));
  tok.end = j + 1;
  return tok;
}

// Scans leaf content until the matching close tag. Any other sanctioned tag
// inside the content is a nesting violation; unknown tag-like text is taken
// literally. Returns the raw (still escaped) content and advances pos.
std::optional<std::string> scan_leaf_content(std::string_view s, size_t& pos,
                                             const std::string& name) {
  const size_t start = pos;
  size_t i = pos;
  while (i < s.size()) {
    if (s[i] != '<') {
      ++i;
      continue;
    }
    auto tag = read_tag(s, i);
    if (tag && is_sanctioned(tag->name)) {
      if (tag->closing && tag->name == name) {
        std::string content(s.substr(start, i - start));
        pos = tag->end;
        return content;
      }
      return std::nullopt;  // sanctioned tag nested in content
    }
    ++i;  // literal '<'
  }
  return std::nullopt;  // unterminated
}

struct Child {
  std::string name;
  std::string content;  // unescaped
};

// Parses the interior of one <step>...</step>; pos starts right after the
// opening tag and is left right after the closing tag.
std::optional<std::vector<Child>> parse_children(std::string_view s, size_t& pos) {
  std::vector<Child> children;
  while (true) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos >= s.size()) return std::nullopt;  // missing </step>
    if (s[pos] != '<') return std::nullopt;    // stray text inside <step>
    auto tag = read_tag(s, pos);
    if (!tag || !is_sanctioned(tag->name)) return std::nullopt;
    if (tag->closing) {
      if (tag->name != "step") return std::nullopt;
      pos = tag->end;
      return children;
    }
    if (tag->name == "step") return std::nullopt;  // nested step
    size_t content_pos = tag->end;
    auto raw = scan_leaf_content(s, content_pos, tag->name);
    if (!raw) return std::nullopt;
    children.push_back({tag->name, unescape_content(*raw)});
    pos = content_pos;
  }
}

// A standalone option letter: one alphabetic char bounded by non-alphanumerics
// whose index falls inside the option range. Exactly one occurrence required.
std::optional<int> extract_option_letter(std::string_view content, int max_options) {
  std::optional<int> found;
  for (size_t i = 0; i < content.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(content[i]);
    if (!std::isalpha(c)) continue;
    const bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(content[i - 1]));
    const bool right_ok =
        i + 1 >= content.size() || !std::isalnum(static_cast<unsigned char>(content[i + 1]));
    if (!left_ok || !right_ok) continue;
    auto idx = option_index(content[i]);
    if (!idx || *idx >= max_options) continue;
    if (found) return std::nullopt;  // ambiguous
    found = idx;
  }
  return found;
}

std::optional<Step> build_step(const std::vector<Child>& children, int max_options) {
  auto is = [&](size_t i, std::string_view name) { return children[i].name == name; };

  if (children.size() == 1 && is(0, "proposal")) {
    auto idx = extract_option_letter(children[0].content, max_options);
    if (!idx) return std::nullopt;
    Step s;
    s.kind = StepKind::Proposal;
    s.option = *idx;
    return s;
  }
  if (children.size() == 1 && is(0, "final_answer")) {
    auto t = trim(children[0].content);
    if (t.size() != 1 || !std::isalpha(static_cast<unsigned char>(t[0]))) return std::nullopt;
    auto idx = option_index(t[0]);
    if (!idx || *idx >= max_options) return std::nullopt;
    Step s;
    s.kind = StepKind::FinalAnswer;
    s.option = *idx;
    return s;
  }
  if (children.size() == 1 && is(0, "thought")) {
    Step s;
    s.kind = StepKind::Thought;
    s.text = children[0].content;
    return s;
  }

  // Action group: optional thought, action, action_input, optional observation.
  size_t i = 0;
  Step s;
  s.kind = StepKind::Action;
  if (i < children.size() && is(i, "thought")) {
    s.text = children[i].content;
    ++i;
  }
  if (i >= children.size() || !is(i, "action")) return std::nullopt;
  s.tool = std::string(trim(children[i].content));
  ++i;
  if (i >= children.size() || !is(i, "action_input")) return std::nullopt;
  s.input = std::string(trim(children[i].content));
  ++i;
  if (i < children.size() && is(i, "observation")) {
    s.observation = children[i].content;
    ++i;
  }
  if (i != children.size()) return std::nullopt;
  if (s.tool.empty()) return std::nullopt;
  return s;
}

}  // namespace

char option_letter(int index) {
  assert(index >= 0 && index < 26);
  return static_cast<char>('A' + index);
}

std::optional<int> option_index(char letter) {
  if (letter >= 'A' && letter <= 'Z') return letter - 'A';
  if (letter >= 'a' && letter <= 'z') return letter - 'a';
  return std::nullopt;
}

Step Step::proposal(int option_index) {
  Step s;
  s.kind = StepKind::Proposal;
  s.option = option_index;
  s.raw_text = serialize_step(s);
  return s;
}

Step Step::thought(std::string content) {
  Step s;
  s.kind = StepKind::Thought;
  s.text = std::move(content);
  s.raw_text = serialize_step(s);
  return s;
}

Step Step::action(std::string tool, std::string input, std::optional<std::string> observation,
                  std::string thought_preamble) {
  Step s;
  s.kind = StepKind::Action;
  s.tool = std::string(trim(tool));  // tool and input are kept trimmed, as the parser does
  s.input = std::string(trim(input));
  s.observation = std::move(observation);
  s.text = std::move(thought_preamble);
  s.raw_text = serialize_step(s);
  return s;
}

Step Step::final_answer(int option_index) {
  Step s;
  s.kind = StepKind::FinalAnswer;
  s.option = option_index;
  s.raw_text = serialize_step(s);
  return s;
}

std::optional<Step> parse_step(std::string_view text, int max_options) {
  const std::string_view s = trim(text);
  size_t pos = 0;
  auto open = read_tag(s, pos);
  if (!open || open->closing || open->name != "step") return std::nullopt;
  pos = open->end;
  auto children = parse_children(s, pos);
  if (!children || children->empty()) return std::nullopt;
  if (!trim(s.substr(pos)).empty()) return std::nullopt;  // trailing junk / second step
  auto step = build_step(*children, max_options);
  if (!step) return std::nullopt;
  step->raw_text = std::string(s);
  return step;
}

std::optional<Step> parse_step(std::string_view text, const Problem& problem) {
  return parse_step(text, problem.option_count());
}

std::string serialize_step(const Step& step) {
  std::string out = "<step>";
  switch (step.kind) {
    case StepKind::Proposal:
      out += "<proposal>";
      out += option_letter(step.option);
      out += "</proposal>";
      break;
    case StepKind::Thought:
      out += "<thought>" + escape_content(step.text) + "</thought>";
      break;
    case StepKind::FinalAnswer:
      out += "<final_answer>";
      out += option_letter(step.option);
      out += "</final_answer>";
      break;
    case StepKind::Action:
      if (!step.text.empty()) out += "<thought>" + escape_content(step.text) + "</thought> ";
      out += "<action>" + escape_content(step.tool) + "</action> ";
      out += "<action_input>" + escape_content(step.input) + "</action_input>";
      if (step.observation) out += " <observation>" + escape_content(*step.observation) + "</observation>";
      break;
  }
  out += "</step>";
  return out;
}

bool Trajectory::valid(int max_len) const {
  if (max_len > 0 && steps.size() > static_cast<size_t>(max_len)) return false;
  for (size_t i = 0; i < steps.size(); ++i) {
    if (steps[i].kind == StepKind::FinalAnswer && i + 1 != steps.size()) return false;
  }
  return true;
}

std::string serialize_trajectory(const Trajectory& traj) {
  std::string out;
  for (size_t i = 0; i < traj.steps.size(); ++i) {
    if (i) out += '\n';
    out += serialize_step(traj.steps[i]);
  }
  return out;
}

std::optional<Trajectory> parse_trajectory(std::string_view text, int max_options) {
  Trajectory traj;
  size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos >= text.size()) break;
    auto open = read_tag(text, pos);
    if (!open || open->closing || open->name != "step") return std::nullopt;
    // Find the first closing step tag; nested steps are rejected downstream.
    size_t i = open->end;
    size_t close_end = 0;
    while (i < text.size()) {
      if (text[i] == '<') {
        auto tag = read_tag(text, i);
        if (tag && tag->closing && tag->name == "step") {
          close_end = tag->end;
          break;
        }
      }
      ++i;
    }
    if (close_end == 0) return std::nullopt;
    auto step = parse_step(text.substr(pos, close_end - pos), max_options);
    if (!step) return std::nullopt;
    traj.steps.push_back(std::move(*step));
    pos = close_end;
  }
  if (!traj.valid(0)) return std::nullopt;
  return traj;
}

bool is_non_thought_terminal(const Trajectory& traj) {
  if (!traj.terminal()) throw NotTerminal();
  std::ptrdiff_t last_action = -1;
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(traj.steps.size()); ++i) {
    if (traj.steps[i].kind == StepKind::Action) last_action = i;
  }
  for (std::ptrdiff_t i = last_action + 1; i + 1 < static_cast<std::ptrdiff_t>(traj.steps.size());
       ++i) {
    if (traj.steps[i].kind == StepKind::Thought) return false;
  }
  return true;
}

}  // namespace stepsearch
