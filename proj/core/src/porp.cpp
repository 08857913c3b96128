#include "stepsearch/porp.hpp"

#include <algorithm>

#include "stepsearch/errors.hpp"
#include "stepsearch/text.hpp"

namespace stepsearch {

void ReflectionConfig::validate() const {
  if (delta <= 0) throw ConfigError("delta must be positive");
  if (epsilon < 1) throw ConfigError("epsilon must be >= 1");
  if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
}

namespace {

void dfs_order(const TreeIndex& index, int cur, std::vector<int>& out) {
  out.push_back(cur);
  for (int child : index.children(cur)) dfs_order(index, child, out);
}

}  // namespace

std::vector<DfsTriple> collect_dfs_pairs(const TreeDump& dump, double delta) {
  const TreeIndex index(dump);
  const auto visited = prune_non_visited(index);
  const auto non_thought = prune_non_thought(index, visited);

  std::vector<int> order;
  dfs_order(index, index.root(), order);

  auto in_visited = [&](int id) {
    return std::binary_search(visited.begin(), visited.end(), id);
  };
  auto is_non_thought = [&](int id) {
    return std::find(non_thought.begin(), non_thought.end(), id) != non_thought.end();
  };

  std::vector<DfsTriple> triples;
  for (int c : order) {
    const TreeDumpNode& cn = index.node(c);
    if (!cn.terminal || !cn.correct.value_or(false)) continue;
    if (!in_visited(c) || is_non_thought(c)) continue;
    for (int r : order) {
      if (r == c || r == index.root() || !in_visited(r)) continue;
      if (index.is_ancestor(r, c) || index.is_ancestor(c, r)) continue;
      if (cn.q() < index.node(r).q() + delta) continue;
      triples.push_back({index.lca(c, r), c, r});
    }
  }
  return triples;
}

Segmented segment_rejected(const std::vector<Step>& rejected, Rng& rng) {
  if (rejected.size() < 3) throw TooShort(rejected.size());
  const int len = static_cast<int>(rejected.size());
  Segmented seg;
  seg.i = 2 + rng.uniform_int(len - 2);  // uniform over {2 .. len-1}
  seg.graft.assign(rejected.begin(), rejected.begin() + seg.i);
  seg.remainder.assign(rejected.begin() + seg.i, rejected.end());
  return seg;
}

namespace {

std::string serialize_steps(const std::vector<Step>& steps) {
  std::string out;
  for (size_t i = 0; i < steps.size(); ++i) {
    if (i) out += '\n';
    out += serialize_step(steps[i]);
  }
  return out;
}

std::vector<Step> drop_leading_proposal(const std::vector<Step>& steps) {
  if (!steps.empty() && steps.front().kind == StepKind::Proposal)
    return {steps.begin() + 1, steps.end()};
  return steps;
}

std::vector<Step> wrap_reflection(const std::string& text, bool split_blank_lines) {
  std::vector<Step> out;
  if (!split_blank_lines) {
    out.push_back(Step::thought(text));
    return out;
  }
  std::string block;
  auto flush = [&] {
    const auto t = trim(block);
    if (!t.empty()) out.push_back(Step::thought(std::string(t)));
    block.clear();
  };
  for (const std::string& line : split_lines(text)) {
    if (trim(line).empty()) {
      flush();
    } else {
      if (!block.empty()) block += '\n';
      block += line;
    }
  }
  flush();
  if (out.empty()) out.push_back(Step::thought(text));
  return out;
}

}  // namespace

PreferencePair build_reflection_pair(const std::string& problem_id,
                                     const std::vector<Step>& prefix_steps,
                                     const Segmented& segmented,
                                     const std::vector<Step>& target_steps, double q_chosen,
                                     double q_rejected, ReflectionOracle& reflection,
                                     bool split_blank_lines) {
  std::vector<Step> grafted_prefix = prefix_steps;
  grafted_prefix.insert(grafted_prefix.end(), segmented.graft.begin(), segmented.graft.end());

  const std::vector<Step> target = drop_leading_proposal(target_steps);

  PreferencePair pair;
  pair.problem_id = problem_id;
  pair.prefix = serialize_steps(grafted_prefix);
  pair.rejected = serialize_steps(segmented.remainder);

  const std::string reflection_text =
      reflection.write(pair.prefix, serialize_steps(segmented.remainder), serialize_steps(target));

  std::vector<Step> chosen_steps = wrap_reflection(reflection_text, split_blank_lines);
  chosen_steps.insert(chosen_steps.end(), target.begin(), target.end());
  pair.chosen = serialize_steps(chosen_steps);

  pair.q_chosen = q_chosen;
  pair.q_rejected = q_rejected;
  pair.source = PairSource::Reflection;
  apply_masks(pair);
  return pair;
}

std::vector<ScoredCandidate> length_weighted_select(std::vector<ScoredCandidate> candidates,
                                                    std::size_t limit) {
  std::sort(candidates.begin(), candidates.end(),
            [](const ScoredCandidate& a, const ScoredCandidate& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.triple.chosen != b.triple.chosen) return a.triple.chosen < b.triple.chosen;
              if (a.triple.rejected != b.triple.rejected)
                return a.triple.rejected < b.triple.rejected;
              return a.segmented.i < b.segmented.i;
            });
  if (candidates.size() > limit) candidates.resize(limit);
  return candidates;
}

std::vector<PreferencePair> build_reflection_pairs(const TreeDump& dump,
                                                   ReflectionOracle& reflection,
                                                   const ReflectionConfig& config) {
  config.validate();
  const TreeIndex index(dump);

  // Count-match against the pairs the normal sampler yields for this tree;
  // deterministic because the sampler derives its stream the same way.
  SamplerConfig sampler_config;
  sampler_config.delta = config.delta;
  sampler_config.epsilon = config.epsilon;
  sampler_config.seed = config.seed;
  const std::size_t normal_count = sample_pairs(dump, sampler_config).size();
  const std::size_t limit = std::min<std::size_t>(normal_count, static_cast<std::size_t>(config.epsilon));

  Rng rng(derive_seed(config.seed, "porp:" + dump.problem_id));
  std::vector<ScoredCandidate> candidates;
  for (const DfsTriple& t : collect_dfs_pairs(dump, config.delta)) {
    const auto rejected_steps = index.suffix(t.split, t.rejected);
    if (rejected_steps.size() < 3) continue;  // cannot be segmented non-empty
    ScoredCandidate cand;
    cand.triple = t;
    cand.segmented = segment_rejected(rejected_steps, rng);
    const auto target = index.suffix(t.split, t.chosen);
    std::size_t chosen_len = target.size();
    if (!target.empty() && target.front().kind == StepKind::Proposal) --chosen_len;
    ++chosen_len;  // the reflection thought itself
    const double gap = index.node(t.chosen).q() - index.node(t.rejected).q();
    cand.score = config.weight_gap * gap +
                 config.weight_length * (static_cast<double>(chosen_len) /
                                         static_cast<double>(config.max_depth));
    candidates.push_back(std::move(cand));
  }

  const auto selected = length_weighted_select(std::move(candidates), limit);

  std::vector<PreferencePair> pairs;
  pairs.reserve(selected.size());
  for (const ScoredCandidate& cand : selected) {
    const auto prefix_steps = index.path(cand.triple.split).steps;
    const auto target_steps = index.suffix(cand.triple.split, cand.triple.chosen);
    pairs.push_back(build_reflection_pair(
        dump.problem_id, prefix_steps, cand.segmented, target_steps,
        index.node(cand.triple.chosen).q(), index.node(cand.triple.rejected).q(), reflection,
        config.split_blank_lines));
    pairs.back().chosen_node = cand.triple.chosen;
    pairs.back().rejected_node = cand.triple.rejected;
  }
  return pairs;
}

}  // namespace stepsearch
