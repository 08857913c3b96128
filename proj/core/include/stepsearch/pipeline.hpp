#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stepsearch/config.hpp"
#include "stepsearch/grammar.hpp"
#include "stepsearch/pair_sampler.hpp"

namespace stepsearch {

/// Per-round bookkeeping written next to a round's outputs. The config
/// snapshot is frozen on first write; reruns with a different config fail.
struct RoundManifest {
  int round_index = 0;
  std::uint64_t seed = 0;
  std::string problems_file;
  std::string config_snapshot;            // flat key=value text
  std::vector<std::string> tree_files;    // basenames inside the round dir
  std::vector<std::string> pair_files;    // basenames
};

std::string manifest_to_json(const RoundManifest& manifest);
RoundManifest manifest_from_json(const std::string& text);  // throws SchemaError

struct Prediction {
  std::string problem_id;
  std::string output;
  std::optional<int> extracted;  // filled by evaluation
  bool guessed = false;          // true iff extracted was absent and drawn uniformly
};

// --- problems / predictions files (JSON lines) ---

std::string problem_to_json(const Problem& problem);
/// Accepts {"id", "question", "options", "answer"} with answer as letter or
/// index; normalizes to an index.
Problem problem_from_json(const std::string& line);  // throws SchemaError

struct ProblemsFile {
  std::vector<Problem> problems;
  std::vector<std::string> errors;  // "line N: why", corrupt lines skipped
};
ProblemsFile read_problems_file(const std::string& path);
void write_problems_file(const std::vector<Problem>& problems, const std::string& path);

Prediction prediction_from_json(const std::string& line);  // throws SchemaError
std::vector<Prediction> read_predictions_file(const std::string& path);

// --- evaluation ---

/// Answer extraction: first parsable final_answer element; else the first
/// standalone option letter; nullopt when neither matches.
std::optional<int> extract_answer(const std::string& output, int n_options);

struct EvalFileReport {
  std::string path;
  int total = 0;
  int correct = 0;
  int guessed = 0;
  double accuracy = 0.0;
};
struct EvalReport {
  std::vector<EvalFileReport> files;
  double average_accuracy = 0.0;
};

/// Scores one prediction set. Predictions lacking an extractable answer get a
/// uniform guess from a stream derived from (seed, problem id), independent
/// of the search RNG. Throws SchemaError on unknown or duplicate ids.
EvalFileReport evaluate_prediction_set(const std::map<std::string, Problem>& problems_by_id,
                                       std::vector<Prediction>& predictions,
                                       std::uint64_t seed);

std::string eval_report_to_json(const EvalReport& report);

// --- commands -------------------------------------------------------------

struct CommandResult {
  int exit_code = 0;  // 0 ok, 1 fatal, 2 completed with per-item errors
  int items_ok = 0;
  int items_failed = 0;
};

struct SearchOptions {
  PipelineConfig config;
  std::string problems_path;
  std::string out_dir;
  bool resume = false;
};
CommandResult cmd_search(const SearchOptions& options);

struct SampleOptions {
  PipelineConfig config;
  std::string trees_dir;
  std::string out_path;
};
CommandResult cmd_sample(const SampleOptions& options);
CommandResult cmd_porp(const SampleOptions& options);

struct ScoreOptions {
  PipelineConfig config;
  std::string pairs_path;
  std::string problems_path;
  std::string out_path;
};
CommandResult cmd_score(const ScoreOptions& options);

struct WarmupSplitOptions {
  std::string corpus_path;
  std::string out_dir;  // writes warmup_stage1.txt / warmup_stage2.txt
};
CommandResult cmd_warmup_split(const WarmupSplitOptions& options);

struct EvalOptions {
  std::vector<std::string> predictions_paths;
  std::string problems_path;
  std::uint64_t seed = 0;
  std::string out_path;  // empty -> stdout
};
CommandResult cmd_eval(const EvalOptions& options);

struct StatsOptions {
  PipelineConfig config;
  std::string trees_dir;
  std::string out_path;  // empty -> stdout
};
CommandResult cmd_stats(const StatsOptions& options);

struct ValidateOptions {
  std::vector<std::string> paths;
};
CommandResult cmd_validate(const ValidateOptions& options);

}  // namespace stepsearch
