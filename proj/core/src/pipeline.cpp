#include "stepsearch/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <thread>

#include "json.hpp"
#include "stepsearch/engine.hpp"
#include "stepsearch/errors.hpp"
#include "stepsearch/http_oracles.hpp"
#include "stepsearch/io.hpp"
#include "stepsearch/losses.hpp"
#include "stepsearch/mock_oracles.hpp"
#include "stepsearch/porp.hpp"
#include "stepsearch/text.hpp"
#include "stepsearch/tree_io.hpp"

namespace stepsearch {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// manifest

std::string manifest_to_json(const RoundManifest& m) {
  ordered_json j;
  j["round_index"] = m.round_index;
  j["seed"] = m.seed;
  j["problems_file"] = m.problems_file;
  j["config_snapshot"] = m.config_snapshot;
  j["tree_files"] = m.tree_files;
  j["pair_files"] = m.pair_files;
  return j.dump(2) + "\n";
}

RoundManifest manifest_from_json(const std::string& text) {
  try {
    const auto j = ordered_json::parse(text);
    RoundManifest m;
    m.round_index = j.at("round_index").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.problems_file = j.at("problems_file").get<std::string>();
    m.config_snapshot = j.at("config_snapshot").get<std::string>();
    m.tree_files = j.at("tree_files").get<std::vector<std::string>>();
    m.pair_files = j.at("pair_files").get<std::vector<std::string>>();
    return m;
  } catch (const std::exception& e) {
    throw SchemaError(std::string("bad manifest: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// problems / predictions

std::string problem_to_json(const Problem& p) {
  ordered_json j;
  j["id"] = p.id;
  j["question"] = p.question;
  j["options"] = p.options;
  j["answer"] = p.gold_answer;
  return j.dump();
}

Problem problem_from_json(const std::string& line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const std::exception& e) {
    throw SchemaError(std::string("problem line is not valid JSON: ") + e.what());
  }
  try {
    Problem p;
    p.id = j.at("id").get<std::string>();
    p.question = j.at("question").get<std::string>();
    p.options = j.at("options").get<std::vector<std::string>>();
    const auto& answer = j.at("answer");
    if (answer.is_number_integer()) {
      p.gold_answer = answer.get<int>();
    } else if (answer.is_string()) {
      const std::string s{trim(answer.get<std::string>())};
      if (s.size() == 1 && std::isalpha(static_cast<unsigned char>(s[0]))) {
        p.gold_answer = *option_index(s[0]);
      } else {
        // also accept a numeric string
        try {
          p.gold_answer = std::stoi(s);
        } catch (const std::exception&) {
          throw SchemaError("answer must be an option letter or index");
        }
      }
    } else {
      throw SchemaError("answer must be an option letter or index");
    }
    if (!p.valid()) throw SchemaError("problem '" + p.id + "' fails validation");
    return p;
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw SchemaError(std::string("problem field error: ") + e.what());
  }
}

ProblemsFile read_problems_file(const std::string& path) {
  ProblemsFile out;
  int line_no = 0;
  for (const std::string& line : split_lines(read_file(path))) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.problems.push_back(problem_from_json(line));
    } catch (const SchemaError& e) {
      out.errors.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_problems_file(const std::vector<Problem>& problems, const std::string& path) {
  std::string content;
  for (const Problem& p : problems) content += problem_to_json(p) + "\n";
  write_file_atomic(path, content);
}

Prediction prediction_from_json(const std::string& line) {
  try {
    const auto j = ordered_json::parse(line);
    Prediction p;
    p.problem_id = j.at("problem_id").get<std::string>();
    p.output = j.at("output").get<std::string>();
    return p;
  } catch (const std::exception& e) {
    throw SchemaError(std::string("bad prediction line: ") + e.what());
  }
}

std::vector<Prediction> read_predictions_file(const std::string& path) {
  std::vector<Prediction> out;
  for (const std::string& line : split_lines(read_file(path))) {
    if (trim(line).empty()) continue;
    out.push_back(prediction_from_json(line));
  }
  return out;
}

// ---------------------------------------------------------------------------
// evaluation

std::optional<int> extract_answer(const std::string& output, int n_options) {
  const std::string lower = to_lower(output);
  // 1) first parsable final_answer element
  size_t pos = 0;
  while (true) {
    const size_t open = lower.find("<final_answer>", pos);
    if (open == std::string::npos) break;
    const size_t begin = open + 14;
    const size_t close = lower.find("</final_answer>", begin);
    if (close == std::string::npos) break;
    const auto content = trim(std::string_view(output).substr(begin, close - begin));
    if (content.size() == 1) {
      if (auto idx = option_index(content[0]); idx && *idx < n_options) return idx;
    }
    pos = close + 15;
  }
  // 2) first standalone option letter
  for (size_t i = 0; i < output.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(output[i]);
    if (!std::isalpha(c)) continue;
    const bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(output[i - 1]));
    const bool right_ok =
        i + 1 >= output.size() || !std::isalnum(static_cast<unsigned char>(output[i + 1]));
    if (!left_ok || !right_ok) continue;
    if (auto idx = option_index(output[i]); idx && *idx < n_options) return idx;
  }
  return std::nullopt;
}

EvalFileReport evaluate_prediction_set(const std::map<std::string, Problem>& problems_by_id,
                                       std::vector<Prediction>& predictions,
                                       std::uint64_t seed) {
  EvalFileReport report;
  std::vector<std::string> seen;
  for (Prediction& pred : predictions) {
    auto it = problems_by_id.find(pred.problem_id);
    if (it == problems_by_id.end())
      throw SchemaError("prediction for unknown problem '" + pred.problem_id + "'");
    if (std::find(seen.begin(), seen.end(), pred.problem_id) != seen.end())
      throw SchemaError("duplicate prediction for problem '" + pred.problem_id + "'");
    seen.push_back(pred.problem_id);

    const Problem& problem = it->second;
    pred.extracted = extract_answer(pred.output, problem.option_count());
    pred.guessed = false;
    if (!pred.extracted) {
      // dedicated guess stream, independent of the search RNG
      Rng rng(derive_seed(seed, "eval:" + pred.problem_id));
      pred.extracted = rng.uniform_int(problem.option_count());
      pred.guessed = true;
    }
    report.total += 1;
    report.guessed += pred.guessed ? 1 : 0;
    report.correct += (*pred.extracted == problem.gold_answer) ? 1 : 0;
  }
  report.accuracy =
      report.total > 0 ? static_cast<double>(report.correct) / report.total : 0.0;
  return report;
}

std::string eval_report_to_json(const EvalReport& report) {
  ordered_json j;
  ordered_json files = ordered_json::array();
  for (const auto& f : report.files) {
    ordered_json e;
    e["path"] = f.path;
    e["total"] = f.total;
    e["correct"] = f.correct;
    e["guessed"] = f.guessed;
    e["accuracy"] = f.accuracy;
    files.push_back(std::move(e));
  }
  j["files"] = std::move(files);
  j["average_accuracy"] = report.average_accuracy;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// shared command machinery

namespace {

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

std::string sanitize_id(const std::string& id) {
  std::string out;
  for (char c : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  return out.empty() ? "problem" : out;
}

std::string tree_filename(const std::string& problem_id) {
  return sanitize_id(problem_id) + ".tree.json";
}

std::vector<std::string> list_tree_files(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() > 10 && name.substr(name.size() - 10) == ".tree.json")
      files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Owns whichever oracle implementations the config selects.
struct OracleSet {
  std::unique_ptr<PolicyOracle> policy;
  std::unique_ptr<ValueOracle> value;
  std::unique_ptr<RetrieverOracle> retriever;
  std::unique_ptr<ReflectionOracle> reflection;
  std::unique_ptr<ScorerOracle> scorer;
  std::unique_ptr<ScorerOracle> ref_scorer;

  Oracles view() const { return Oracles{policy.get(), value.get(), retriever.get()}; }
};

OracleSet make_oracles(const PipelineConfig& cfg, const std::vector<Problem>& problems) {
  OracleSet set;
  if (cfg.oracle_mode == "mock") {
    const std::uint64_t seed = cfg.engine.rng_seed;
    set.policy = std::make_unique<SyntheticPolicy>(problems, derive_seed(seed, "policy"));
    if (cfg.mock_value == "zero") {
      set.value = std::make_unique<ConstantValue>(0.0);
    } else {
      set.value = std::make_unique<GoldConsistentValue>(problems);
    }
    set.retriever = std::make_unique<KeywordRetriever>();
    set.reflection = std::make_unique<TemplateReflection>();
    // The reference scorer stands in for the previous round's policy.
    set.scorer = std::make_unique<HashScorer>(
        derive_seed(seed, "scorer:round:" + std::to_string(cfg.round_index)));
    set.ref_scorer = std::make_unique<HashScorer>(
        derive_seed(seed, "scorer:round:" + std::to_string(cfg.round_index - 1)));
  } else {
    // construct a client per configured endpoint; each command checks for
    // the oracles it actually uses
    if (!cfg.policy_url.empty())
      set.policy = std::make_unique<HttpPolicyOracle>(cfg.endpoint(cfg.policy_url));
    if (!cfg.value_url.empty())
      set.value = std::make_unique<HttpValueOracle>(cfg.endpoint(cfg.value_url));
    if (!cfg.retriever_url.empty())
      set.retriever = std::make_unique<HttpRetrieverOracle>(cfg.endpoint(cfg.retriever_url));
    if (!cfg.reflection_url.empty())
      set.reflection = std::make_unique<HttpReflectionOracle>(cfg.endpoint(cfg.reflection_url));
    if (!cfg.scorer_url.empty())
      set.scorer = std::make_unique<HttpScorerOracle>(cfg.endpoint(cfg.scorer_url));
    if (!cfg.ref_scorer_url.empty())
      set.ref_scorer = std::make_unique<HttpScorerOracle>(cfg.endpoint(cfg.ref_scorer_url));
  }
  return set;
}

void upsert_manifest_pair_file(const std::string& trees_dir, const std::string& pair_basename) {
  const std::string manifest_path = (fs::path(trees_dir) / "manifest.json").string();
  if (!fs::exists(manifest_path)) return;
  RoundManifest m = manifest_from_json(read_file(manifest_path));
  if (std::find(m.pair_files.begin(), m.pair_files.end(), pair_basename) == m.pair_files.end()) {
    m.pair_files.push_back(pair_basename);
    write_file_atomic(manifest_path, manifest_to_json(m));
  }
}

std::string join_steps_text(const std::string& a, const std::string& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  return a + "\n" + b;
}

std::vector<std::pair<std::size_t, std::size_t>> to_pairs(const std::vector<Span>& spans) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(spans.size());
  for (const Span& s : spans) out.emplace_back(s.begin, s.end);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// search

CommandResult cmd_search(const SearchOptions& options) {
  options.config.validate();
  const PipelineConfig& cfg = options.config;

  ProblemsFile input = read_problems_file(options.problems_path);
  CommandResult result;
  for (const std::string& err : input.errors) {
    std::cerr << "[error] " << options.problems_path << " " << err << "\n";
    result.items_failed += 1;
  }
  {
    std::set<std::string> seen;
    std::vector<Problem> unique;
    for (auto& p : input.problems) {
      if (!seen.insert(p.id).second) {
        std::cerr << "[error] duplicate problem id '" << p.id << "' skipped\n";
        result.items_failed += 1;
        continue;
      }
      unique.push_back(std::move(p));
    }
    input.problems = std::move(unique);
  }

  fs::create_directories(options.out_dir);
  const std::string manifest_path = (fs::path(options.out_dir) / "manifest.json").string();
  const std::string snapshot = serialize_config(cfg);
  if (fs::exists(manifest_path)) {
    const RoundManifest existing = manifest_from_json(read_file(manifest_path));
    if (existing.config_snapshot != snapshot)
      throw ConfigError("config differs from the snapshot already written to " + manifest_path);
  }

  const OracleSet oracles = make_oracles(cfg, input.problems);
  if (!oracles.policy || !oracles.value || !oracles.retriever)
    throw ConfigError("search needs policy_url, value_url and retriever_url in http mode");
  const int n = static_cast<int>(input.problems.size());
  std::vector<std::string> written(static_cast<size_t>(n));
  std::vector<std::string> failures(static_cast<size_t>(n));

  parallel_for(n, cfg.workers, [&](int i) {
    const Problem& problem = input.problems[static_cast<size_t>(i)];
    const std::string out_path =
        (fs::path(options.out_dir) / tree_filename(problem.id)).string();
    if (options.resume && fs::exists(out_path)) {
      written[static_cast<size_t>(i)] = tree_filename(problem.id);
      return;
    }
    try {
      EngineConfig engine_cfg = cfg.engine;
      engine_cfg.rng_seed = derive_seed(cfg.engine.rng_seed, "search:" + problem.id);
      const SearchTree tree = run_search(problem, oracles.view(), engine_cfg);
      write_tree_file(to_dump(tree), out_path);
      written[static_cast<size_t>(i)] = tree_filename(problem.id);
    } catch (const std::exception& e) {
      failures[static_cast<size_t>(i)] = e.what();
    }
  });

  RoundManifest manifest;
  manifest.round_index = cfg.round_index;
  manifest.seed = cfg.engine.rng_seed;
  manifest.problems_file = options.problems_path;
  manifest.config_snapshot = snapshot;
  for (int i = 0; i < n; ++i) {
    if (!written[static_cast<size_t>(i)].empty()) {
      manifest.tree_files.push_back(written[static_cast<size_t>(i)]);
      result.items_ok += 1;
    } else {
      std::cerr << "[error] search failed for problem '"
                << input.problems[static_cast<size_t>(i)].id
                << "': " << failures[static_cast<size_t>(i)] << "\n";
      result.items_failed += 1;
    }
  }
  write_file_atomic(manifest_path, manifest_to_json(manifest));

  result.exit_code = result.items_failed > 0 ? 2 : 0;
  std::cerr << "search: " << result.items_ok << " trees written, " << result.items_failed
            << " failures\n";
  return result;
}

// ---------------------------------------------------------------------------
// sample / porp

namespace {

CommandResult sample_like(const SampleOptions& options, bool reflection_mode) {
  options.config.validate();
  const PipelineConfig& cfg = options.config;
  const auto files = list_tree_files(options.trees_dir);

  OracleSet oracles;
  if (reflection_mode) oracles = make_oracles(cfg, {});
  if (reflection_mode && !oracles.reflection)
    throw ConfigError("porp requires a reflection oracle (reflection_url in http mode)");

  const int n = static_cast<int>(files.size());
  std::vector<std::vector<PreferencePair>> per_tree(static_cast<size_t>(n));
  std::vector<std::string> failures(static_cast<size_t>(n));

  parallel_for(n, cfg.workers, [&](int i) {
    try {
      const TreeDump dump = read_tree_file(files[static_cast<size_t>(i)]);
      per_tree[static_cast<size_t>(i)] =
          reflection_mode
              ? build_reflection_pairs(dump, *oracles.reflection, cfg.reflection)
              : sample_pairs(dump, cfg.sampler);
    } catch (const std::exception& e) {
      failures[static_cast<size_t>(i)] = e.what();
    }
  });

  CommandResult result;
  std::vector<PreferencePair> all;
  for (int i = 0; i < n; ++i) {
    if (!failures[static_cast<size_t>(i)].empty()) {
      std::cerr << "[error] " << files[static_cast<size_t>(i)] << ": "
                << failures[static_cast<size_t>(i)] << "\n";
      result.items_failed += 1;
      continue;
    }
    result.items_ok += 1;
    for (auto& p : per_tree[static_cast<size_t>(i)]) all.push_back(std::move(p));
  }

  std::stable_sort(all.begin(), all.end(), [](const PreferencePair& a, const PreferencePair& b) {
    if (a.problem_id != b.problem_id) return a.problem_id < b.problem_id;
    if (a.source != b.source) return static_cast<int>(a.source) < static_cast<int>(b.source);
    const double ma = a.q_chosen - a.q_rejected;
    const double mb = b.q_chosen - b.q_rejected;
    if (ma != mb) return ma > mb;
    if (a.chosen_node != b.chosen_node) return a.chosen_node < b.chosen_node;
    return a.rejected_node < b.rejected_node;
  });
  write_pairs_file(all, options.out_path);
  upsert_manifest_pair_file(options.trees_dir, fs::path(options.out_path).filename().string());

  result.exit_code = result.items_failed > 0 ? 2 : 0;
  std::cerr << (reflection_mode ? "porp: " : "sample: ") << all.size() << " pairs from "
            << result.items_ok << " trees, " << result.items_failed << " failures\n";
  return result;
}

}  // namespace

CommandResult cmd_sample(const SampleOptions& options) { return sample_like(options, false); }

CommandResult cmd_porp(const SampleOptions& options) { return sample_like(options, true); }

// ---------------------------------------------------------------------------
// score

CommandResult cmd_score(const ScoreOptions& options) {
  options.config.validate();
  const PipelineConfig& cfg = options.config;

  const ProblemsFile problems_file = read_problems_file(options.problems_path);
  if (!problems_file.errors.empty())
    throw ConfigError("problems file has " + std::to_string(problems_file.errors.size()) +
                      " corrupt lines");
  std::map<std::string, Problem> by_id;
  for (const Problem& p : problems_file.problems) {
    if (!by_id.emplace(p.id, p).second) throw ConfigError("duplicate problem id " + p.id);
  }

  const OracleSet oracles = make_oracles(cfg, problems_file.problems);
  if (!oracles.scorer || !oracles.ref_scorer || !oracles.value)
    throw ConfigError("score needs scorer_url, ref_scorer_url and value_url in http mode");

  const auto pairs = read_pairs_file(options.pairs_path);
  const int n = static_cast<int>(pairs.size());
  std::vector<std::string> lines(static_cast<size_t>(n));
  std::vector<std::string> failures(static_cast<size_t>(n));

  parallel_for(n, cfg.workers, [&](int i) {
    const PreferencePair& pair = pairs[static_cast<size_t>(i)];
    try {
      auto it = by_id.find(pair.problem_id);
      if (it == by_id.end()) throw SchemaError("pair references unknown problem");
      const Problem& problem = it->second;
      const std::string rendered_prefix = render_state(problem, pair.prefix);

      LossInputs in;
      in.logp_chosen_policy =
          oracles.scorer->logprob(rendered_prefix, pair.chosen, to_pairs(pair.mask_spans_chosen));
      in.logp_rejected_policy = oracles.scorer->logprob(rendered_prefix, pair.rejected,
                                                        to_pairs(pair.mask_spans_rejected));
      in.logp_chosen_ref = oracles.ref_scorer->logprob(rendered_prefix, pair.chosen,
                                                       to_pairs(pair.mask_spans_chosen));
      in.logp_rejected_ref = oracles.ref_scorer->logprob(rendered_prefix, pair.rejected,
                                                         to_pairs(pair.mask_spans_rejected));
      in.v_chosen = std::clamp(
          oracles.value->estimate(
              render_state(problem, join_steps_text(pair.prefix, pair.chosen))),
          -1.0, 1.0);
      in.v_rejected = std::clamp(
          oracles.value->estimate(
              render_state(problem, join_steps_text(pair.prefix, pair.rejected))),
          -1.0, 1.0);
      in.q_chosen = pair.q_chosen;
      in.q_rejected = pair.q_rejected;

      const TotalLoss loss = total_loss(in, cfg.weights);
      ordered_json j;
      j["pair_id"] = pair.problem_id + "#" + std::to_string(i);
      j["dpo"] = loss.dpo;
      j["mse"] = loss.mse;
      j["lm"] = loss.lm;
      j["reg"] = loss.reg;
      j["total"] = loss.value;
      lines[static_cast<size_t>(i)] = j.dump();
    } catch (const std::exception& e) {
      failures[static_cast<size_t>(i)] = e.what();
    }
  });

  CommandResult result;
  std::string content;
  for (int i = 0; i < n; ++i) {
    if (!failures[static_cast<size_t>(i)].empty()) {
      std::cerr << "[error] pair " << i << ": " << failures[static_cast<size_t>(i)] << "\n";
      result.items_failed += 1;
      continue;
    }
    content += lines[static_cast<size_t>(i)];
    content += '\n';
    result.items_ok += 1;
  }
  write_file_atomic(options.out_path, content);
  result.exit_code = result.items_failed > 0 ? 2 : 0;
  std::cerr << "score: " << result.items_ok << " pairs scored, " << result.items_failed
            << " failures\n";
  return result;
}

// ---------------------------------------------------------------------------
// warmup split

CommandResult cmd_warmup_split(const WarmupSplitOptions& options) {
  const std::string corpus = read_file(options.corpus_path);
  fs::create_directories(options.out_dir);

  CommandResult result;
  std::string stage1, stage2;
  int line_no = 0;
  for (const std::string& line : split_lines(corpus)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto traj = parse_trajectory(line, 26);
    if (!traj) {
      std::cerr << "[error] corpus line " << line_no << ": unparsable trajectory\n";
      result.items_failed += 1;
      continue;
    }
    // Stage 1 keeps only the answer skeleton: proposals and final answers.
    std::string skeleton;
    for (const Step& s : traj->steps) {
      if (s.kind != StepKind::Proposal && s.kind != StepKind::FinalAnswer) continue;
      if (!skeleton.empty()) skeleton += ' ';
      skeleton += serialize_step(s);
    }
    stage1 += skeleton + "\n";
    stage2 += line + "\n";
    result.items_ok += 1;
  }
  write_file_atomic((fs::path(options.out_dir) / "warmup_stage1.txt").string(), stage1);
  write_file_atomic((fs::path(options.out_dir) / "warmup_stage2.txt").string(), stage2);
  result.exit_code = result.items_failed > 0 ? 2 : 0;
  std::cerr << "warmup-split: " << result.items_ok << " trajectories, " << result.items_failed
            << " rejected\n";
  return result;
}

// ---------------------------------------------------------------------------
// eval

CommandResult cmd_eval(const EvalOptions& options) {
  const ProblemsFile problems_file = read_problems_file(options.problems_path);
  if (!problems_file.errors.empty())
    throw ConfigError("problems file has corrupt lines; fix before evaluating");
  std::map<std::string, Problem> by_id;
  for (const Problem& p : problems_file.problems) {
    if (!by_id.emplace(p.id, p).second) throw ConfigError("duplicate problem id " + p.id);
  }

  EvalReport report;
  for (const std::string& path : options.predictions_paths) {
    auto predictions = read_predictions_file(path);
    EvalFileReport file_report = evaluate_prediction_set(by_id, predictions, options.seed);
    file_report.path = path;
    report.files.push_back(std::move(file_report));
  }
  double sum = 0.0;
  for (const auto& f : report.files) sum += f.accuracy;
  report.average_accuracy = report.files.empty() ? 0.0 : sum / report.files.size();

  const std::string text = eval_report_to_json(report);
  if (options.out_path.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(options.out_path, text);
  }
  CommandResult result;
  result.items_ok = static_cast<int>(report.files.size());
  return result;
}

// ---------------------------------------------------------------------------
// stats

CommandResult cmd_stats(const StatsOptions& options) {
  options.config.validate();
  const auto files = list_tree_files(options.trees_dir);

  CommandResult result;
  ordered_json trees = ordered_json::array();
  long long agg_nodes = 0, agg_terminals = 0, agg_correct = 0, agg_non_thought = 0;
  std::map<int, long long> agg_depth_histogram;
  std::map<int, long long> agg_terminal_depths;
  long long mix_sb = 0, mix_sd = 0, mix_o = 0, mix_reflection = 0;
  TemplateReflection reflection;

  for (const std::string& file : files) {
    try {
      const TreeDump dump = read_tree_file(file);
      const TreeIndex index(dump);

      std::map<int, int> depth_histogram;
      std::map<int, int> terminal_depths;
      int terminals = 0, correct = 0, non_thought = 0;
      for (int id : index.ids()) {
        depth_histogram[index.depth(id)] += 1;
        const TreeDumpNode& n = index.node(id);
        if (!n.terminal) continue;
        terminals += 1;
        terminal_depths[index.depth(id)] += 1;
        if (n.correct.value_or(false)) correct += 1;
        if (is_non_thought_terminal(index.path(id))) non_thought += 1;
      }

      const auto pairs = sample_pairs(dump, options.config.sampler);
      const auto reflections =
          build_reflection_pairs(dump, reflection, options.config.reflection);
      int sb = 0, sd = 0, o = 0;
      for (const auto& p : pairs) {
        if (p.source == PairSource::Sb) ++sb;
        if (p.source == PairSource::Sd) ++sd;
        if (p.source == PairSource::O) ++o;
      }

      ordered_json t;
      t["problem_id"] = dump.problem_id;
      t["nodes"] = dump.nodes.size();
      ordered_json dh = ordered_json::object();
      for (const auto& [d, c] : depth_histogram) dh[std::to_string(d)] = c;
      t["depth_histogram"] = std::move(dh);
      ordered_json td = ordered_json::object();
      for (const auto& [d, c] : terminal_depths) td[std::to_string(d)] = c;
      t["terminal_depth_histogram"] = std::move(td);
      t["terminals"] = terminals;
      t["correct_leaves"] = correct;
      t["non_thought_terminals"] = non_thought;
      t["non_thought_fraction"] =
          terminals > 0 ? static_cast<double>(non_thought) / terminals : 0.0;
      t["pair_source_mix"] = ordered_json{
          {"sb", sb}, {"sd", sd}, {"o", o}, {"reflection", reflections.size()}};
      trees.push_back(std::move(t));

      agg_nodes += static_cast<long long>(dump.nodes.size());
      agg_terminals += terminals;
      agg_correct += correct;
      agg_non_thought += non_thought;
      for (const auto& [d, c] : depth_histogram) agg_depth_histogram[d] += c;
      for (const auto& [d, c] : terminal_depths) agg_terminal_depths[d] += c;
      mix_sb += sb;
      mix_sd += sd;
      mix_o += o;
      mix_reflection += static_cast<long long>(reflections.size());
      result.items_ok += 1;
    } catch (const std::exception& e) {
      std::cerr << "[error] " << file << ": " << e.what() << "\n";
      result.items_failed += 1;
    }
  }

  ordered_json doc;
  doc["trees"] = std::move(trees);
  ordered_json agg;
  agg["trees"] = result.items_ok;
  agg["nodes"] = agg_nodes;
  ordered_json adh = ordered_json::object();
  for (const auto& [d, c] : agg_depth_histogram) adh[std::to_string(d)] = c;
  agg["depth_histogram"] = std::move(adh);
  ordered_json atd = ordered_json::object();
  for (const auto& [d, c] : agg_terminal_depths) atd[std::to_string(d)] = c;
  agg["terminal_depth_histogram"] = std::move(atd);
  agg["terminals"] = agg_terminals;
  agg["correct_leaves"] = agg_correct;
  agg["non_thought_terminals"] = agg_non_thought;
  agg["non_thought_fraction"] =
      agg_terminals > 0 ? static_cast<double>(agg_non_thought) / agg_terminals : 0.0;
  agg["pair_source_mix"] = ordered_json{
      {"sb", mix_sb}, {"sd", mix_sd}, {"o", mix_o}, {"reflection", mix_reflection}};
  doc["aggregate"] = std::move(agg);

  const std::string text = doc.dump(2) + "\n";
  if (options.out_path.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(options.out_path, text);
  }
  result.exit_code = result.items_failed > 0 ? 2 : 0;
  return result;
}

// ---------------------------------------------------------------------------
// validate

namespace {

void validate_tree_text(const std::string& text) {
  const TreeDump dump = dump_from_json(text);
  const TreeIndex index(dump);
  // sibling priors sum to one wherever children exist
  for (int id : index.ids()) {
    const auto& children = index.children(id);
    if (children.empty()) continue;
    double sum = 0.0;
    for (int c : children) sum += index.node(c).prior;
    if (std::abs(sum - 1.0) > 1e-6)
      throw SchemaError("child priors of node " + std::to_string(id) + " sum to " +
                        std::to_string(sum));
  }
  for (const auto& n : dump.nodes) {
    if (n.visits < 0) throw SchemaError("negative visits");
    if (std::abs(n.value_sum) > n.visits + 1e-9)
      throw SchemaError("value_sum exceeds visit count on node " + std::to_string(n.id));
    if (n.leaf_value && (*n.leaf_value < -1.0 || *n.leaf_value > 1.0))
      throw SchemaError("leaf_value outside [-1,1] on node " + std::to_string(n.id));
    if (n.correct && !n.terminal)
      throw SchemaError("correct flag on non-terminal node " + std::to_string(n.id));
  }
}

void validate_spans(const std::vector<Span>& spans, const std::string& text,
                    const std::string& what) {
  size_t prev_end = 0;
  bool first = true;
  for (const Span& s : spans) {
    if (s.begin >= s.end || s.end > text.size())
      throw SchemaError(what + " span out of bounds");
    if (!first && s.begin < prev_end) throw SchemaError(what + " spans overlap");
    prev_end = s.end;
    first = false;
  }
}

void validate_pairs_text(const std::string& text) {
  int line_no = 0;
  for (const std::string& line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const PreferencePair pair = pair_from_json(line);
      if (pair.q_chosen < -1.0 || pair.q_chosen > 1.0 || pair.q_rejected < -1.0 ||
          pair.q_rejected > 1.0)
        throw SchemaError("q values outside [-1,1]");
      if (pair.q_chosen < pair.q_rejected) throw SchemaError("q_chosen below q_rejected");
      if (pair.chosen.empty() || pair.rejected.empty())
        throw SchemaError("empty chosen or rejected text");
      validate_spans(pair.mask_spans_chosen, pair.chosen, "chosen");
      validate_spans(pair.mask_spans_rejected, pair.rejected, "rejected");
    } catch (const SchemaError& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void validate_problems_text(const std::string& text) {
  int line_no = 0;
  for (const std::string& line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      (void)problem_from_json(line);
    } catch (const SchemaError& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void validate_predictions_text(const std::string& text) {
  int line_no = 0;
  for (const std::string& line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      (void)prediction_from_json(line);
    } catch (const SchemaError& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void validate_losses_text(const std::string& text) {
  int line_no = 0;
  for (const std::string& line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = ordered_json::parse(line);
      (void)j.at("pair_id").get<std::string>();
      for (const char* key : {"dpo", "mse", "lm", "reg", "total"}) {
        const double v = j.at(key).get<double>();
        if (!std::isfinite(v)) throw SchemaError(std::string(key) + " is not finite");
        if (key != std::string("total") && v < 0) throw SchemaError(std::string(key) + " negative");
      }
    } catch (const std::exception& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string detect_and_validate(const std::string& path) {
  const std::string text = read_file(path);
  const std::string_view head = trim(text);
  if (head.empty()) throw SchemaError("empty file");

  const std::string first_line = split_lines(std::string(head))[0];
  ordered_json j;
  try {
    j = ordered_json::parse(first_line.empty() ? std::string(head) : first_line);
  } catch (const std::exception&) {
    // whole-file JSON documents (manifest/report/stats) are multi-line
    try {
      j = ordered_json::parse(text);
    } catch (const std::exception& e) {
      throw SchemaError(std::string("not valid JSON: ") + e.what());
    }
  }

  if (j.contains("nodes") && j.contains("problem_id")) {
    validate_tree_text(text);
    return "tree";
  }
  if (j.contains("round_index") && j.contains("config_snapshot")) {
    (void)manifest_from_json(text);
    return "manifest";
  }
  if (j.contains("files") && j.contains("average_accuracy")) return "eval-report";
  if (j.contains("trees") && j.contains("aggregate")) return "stats";
  if (j.contains("prefix") && j.contains("chosen")) {
    validate_pairs_text(text);
    return "pairs";
  }
  if (j.contains("question") && j.contains("options")) {
    validate_problems_text(text);
    return "problems";
  }
  if (j.contains("problem_id") && j.contains("output")) {
    validate_predictions_text(text);
    return "predictions";
  }
  if (j.contains("pair_id")) {
    validate_losses_text(text);
    return "losses";
  }
  throw SchemaError("unrecognized document shape");
}

}  // namespace

CommandResult cmd_validate(const ValidateOptions& options) {
  CommandResult result;
  for (const std::string& path : options.paths) {
    try {
      const std::string kind = detect_and_validate(path);
      std::cout << path << ": OK (" << kind << ")\n";
      result.items_ok += 1;
    } catch (const std::exception& e) {
      std::cout << path << ": INVALID - " << e.what() << "\n";
      result.items_failed += 1;
    }
  }
  result.exit_code = result.items_failed > 0 ? 2 : 0;
  return result;
}

}  // namespace stepsearch
