// Command-line front end for the search / sampling / scoring pipeline.
// Subcommands: search, sample, porp, score, warmup-split, eval, stats, validate.
// Exit codes: 0 success, 1 fatal config or IO error, 2 completed with
// per-item errors.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stepsearch/config.hpp"
#include "stepsearch/errors.hpp"
#include "stepsearch/pipeline.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string preset = "standard";
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required = true) {
  auto* opt = cmd->add_option("--config", flags.config_path, "pipeline config file");
  if (config_required) opt->required();
  cmd->add_option("--preset", flags.preset, "standard|reflection")->default_val("standard");
  cmd->add_option("--seed", flags.seed, "override rng seed");
  cmd->add_option("--workers", flags.workers, "override worker count");
}

stepsearch::PipelineConfig resolve_config(const CommonFlags& flags) {
  stepsearch::PipelineConfig cfg = flags.config_path.empty()
                                       ? stepsearch::PipelineConfig{}
                                       : stepsearch::load_config_file(flags.config_path);
  cfg = stepsearch::apply_preset(std::move(cfg), flags.preset);
  if (flags.seed) cfg.set_seed(*flags.seed);
  if (flags.workers) cfg.workers = *flags.workers;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tree-search preference-data pipeline"};
  app.require_subcommand(1);

  // search
  CommonFlags search_flags;
  std::string search_problems, search_out;
  bool search_resume = false;
  auto* search = app.add_subcommand("search", "run tree search over a problems file");
  add_common(search, search_flags);
  search->add_option("--problems", search_problems, "problems JSONL")->required();
  search->add_option("--out", search_out, "output directory for tree dumps")->required();
  search->add_flag("--resume", search_resume, "skip problems with existing dumps");

  // sample
  CommonFlags sample_flags;
  std::string sample_trees, sample_out;
  auto* sample = app.add_subcommand("sample", "draw chosen/rejected pairs from tree dumps");
  add_common(sample, sample_flags);
  sample->add_option("--trees", sample_trees, "directory of tree dumps")->required();
  sample->add_option("--out", sample_out, "output pair file (JSONL)")->required();

  // porp
  CommonFlags porp_flags;
  std::string porp_trees, porp_out;
  auto* porp = app.add_subcommand("porp", "build reflection preference pairs");
  add_common(porp, porp_flags);
  porp->add_option("--trees", porp_trees, "directory of tree dumps")->required();
  porp->add_option("--out", porp_out, "output pair file (JSONL)")->required();

  // score
  CommonFlags score_flags;
  std::string score_pairs, score_problems, score_out;
  auto* score = app.add_subcommand("score", "evaluate training losses over a pair file");
  add_common(score, score_flags);
  score->add_option("--pairs", score_pairs, "pair file (JSONL)")->required();
  score->add_option("--problems", score_problems, "problems JSONL")->required();
  score->add_option("--out", score_out, "output loss report (JSONL)")->required();

  // warmup-split
  std::string warmup_corpus, warmup_out;
  auto* warmup = app.add_subcommand("warmup-split", "stage a trajectory corpus for warmup");
  warmup->add_option("--corpus", warmup_corpus, "trajectory corpus, one per line")->required();
  warmup->add_option("--out", warmup_out, "output directory")->required();

  // eval
  std::vector<std::string> eval_predictions;
  std::string eval_problems, eval_out;
  std::uint64_t eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "score prediction files for accuracy");
  eval->add_option("--predictions", eval_predictions, "prediction JSONL files")->required();
  eval->add_option("--problems", eval_problems, "problems JSONL")->required();
  eval->add_option("--seed", eval_seed, "seed for the guess fallback")->default_val(0);
  eval->add_option("--out", eval_out, "report path (default: stdout)");

  // stats
  CommonFlags stats_flags;
  std::string stats_trees, stats_out;
  auto* stats = app.add_subcommand("stats", "summarize tree dumps");
  add_common(stats, stats_flags, /*config_required=*/false);
  stats->add_option("--trees", stats_trees, "directory of tree dumps")->required();
  stats->add_option("--out", stats_out, "report path (default: stdout)");

  // validate
  std::vector<std::string> validate_paths;
  auto* validate = app.add_subcommand("validate", "check emitted files against their schemas");
  validate->add_option("paths", validate_paths, "files to validate")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage problems are fatal config errors
  }

  try {
    stepsearch::CommandResult result;
    if (*search) {
      stepsearch::SearchOptions opt;
      opt.config = resolve_config(search_flags);
      opt.problems_path = search_problems;
      opt.out_dir = search_out;
      opt.resume = search_resume;
      result = stepsearch::cmd_search(opt);
    } else if (*sample) {
      stepsearch::SampleOptions opt;
      opt.config = resolve_config(sample_flags);
      opt.trees_dir = sample_trees;
      opt.out_path = sample_out;
      result = stepsearch::cmd_sample(opt);
    } else if (*porp) {
      stepsearch::SampleOptions opt;
      opt.config = resolve_config(porp_flags);
      opt.trees_dir = porp_trees;
      opt.out_path = porp_out;
      result = stepsearch::cmd_porp(opt);
    } else if (*score) {
      stepsearch::ScoreOptions opt;
      opt.config = resolve_config(score_flags);
      opt.pairs_path = score_pairs;
      opt.problems_path = score_problems;
      opt.out_path = score_out;
      result = stepsearch::cmd_score(opt);
    } else if (*warmup) {
      result = stepsearch::cmd_warmup_split({warmup_corpus, warmup_out});
    } else if (*eval) {
      stepsearch::EvalOptions opt;
      opt.predictions_paths = eval_predictions;
      opt.problems_path = eval_problems;
      opt.seed = eval_seed;
      opt.out_path = eval_out;
      result = stepsearch::cmd_eval(opt);
    } else if (*stats) {
      stepsearch::StatsOptions opt;
      opt.config = resolve_config(stats_flags);
      opt.trees_dir = stats_trees;
      opt.out_path = stats_out;
      result = stepsearch::cmd_stats(opt);
    } else if (*validate) {
      result = stepsearch::cmd_validate({validate_paths});
    }
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "[fatal] " << e.what() << "\n";
    return 1;
  }
}
