#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stepsearch/oracles.hpp"
#include "stepsearch/pair_sampler.hpp"
#include "stepsearch/rng.hpp"
#include "stepsearch/tree_io.hpp"

namespace stepsearch {

struct ReflectionConfig {
  double delta = 0.1;
  int epsilon = 20;
  std::uint64_t seed = 0;
  double weight_gap = 1.0;     // weight on q_chosen - q_rejected
  double weight_length = 0.2;  // weight on chosen length / max_depth
  int max_depth = 16;          // length normalizer
  bool split_blank_lines = false;  // wrap reflection as several thoughts

  void validate() const;
};

/// (prefix split node, chosen terminal, rejected node) found by depth-first
/// traversal: chosen ends at a correct thought-bearing terminal, rejected is
/// any visited margin-passing worse node off the chosen path.
struct DfsTriple {
  int split = -1;  // lowest common ancestor
  int chosen = -1;
  int rejected = -1;
};

std::vector<DfsTriple> collect_dfs_pairs(const TreeDump& dump, double delta);

/// Split of a rejected continuation: graft = steps [1..i], remainder the
/// rest, i uniform over {2 .. len-1} so neither side is empty.
struct Segmented {
  int i = 0;
  std::vector<Step> graft;
  std::vector<Step> remainder;
};

/// Throws TooShort when the rejected continuation has fewer than 3 steps.
Segmented segment_rejected(const std::vector<Step>& rejected, Rng& rng);

/// Assembles one reflection pair: prefix = old prefix + graft, rejected = the
/// remainder, chosen = generated reflection thought(s) followed by the target
/// continuation with a leading proposal dropped. Reflection text is escaped
/// before wrapping, so the chosen trajectory always re-parses.
PreferencePair build_reflection_pair(const std::string& problem_id,
                                     const std::vector<Step>& prefix_steps,
                                     const Segmented& segmented,
                                     const std::vector<Step>& target_steps, double q_chosen,
                                     double q_rejected, ReflectionOracle& reflection,
                                     bool split_blank_lines);

struct ScoredCandidate {
  DfsTriple triple;
  Segmented segmented;
  double score = 0.0;
};

/// Orders candidates by score (gap + length weighting) and keeps at most
/// `limit`. Ties break on node ids so output order is reproducible.
std::vector<ScoredCandidate> length_weighted_select(std::vector<ScoredCandidate> candidates,
                                                    std::size_t limit);

/// Full per-tree pipeline. Reflection pairs are count-matched against the
/// normal pairs the sampler would emit for the same tree and seed, and capped
/// at epsilon. For scoring, the reflection is assumed to wrap as one thought.
std::vector<PreferencePair> build_reflection_pairs(const TreeDump& dump,
                                                   ReflectionOracle& reflection,
                                                   const ReflectionConfig& config);

}  // namespace stepsearch
