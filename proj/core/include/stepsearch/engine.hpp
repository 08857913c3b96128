#pragma once

#include <cstdint>
#include <vector>

#include "stepsearch/oracles.hpp"
#include "stepsearch/rng.hpp"
#include "stepsearch/tree.hpp"

namespace stepsearch {

struct EngineConfig {
  double c_puct = 1.5;
  int n_expand = 4;
  double temperature = 1.0;
  int max_depth = 16;
  int simulations = 40;          // 80 under the reflection preset
  int top_k_retrieval = 3;
  double bleu_merge_threshold = 0.7;
  bool random_proposal = true;
  std::uint64_t rng_seed = 0;

  void validate() const;  // throws ConfigError
};

EngineConfig reflection_preset(EngineConfig base = {});

/// q + c_puct * prior * sqrt(parent_visits) / (child_visits + 1)
double puct_score(double q, double prior, int parent_visits, int child_visits, double c_puct);

/// Walks from the root taking the argmax-PUCT child at each level (ties break
/// to the lowest child index, dead ends are skipped) and stops at a node that
/// is terminal, has no eligible children, or sits at max depth.
NodeId select_leaf(const SearchTree& tree, const EngineConfig& config);

/// Samples n_expand steps from the policy, drops unparsable ones, merges
/// near-duplicates by BLEU-4, fills observations through the retriever and
/// attaches the survivors with normalized priors. Marks the node a dead end
/// when nothing survives.
std::vector<NodeId> expand(SearchTree& tree, NodeId id, const Oracles& oracles,
                           const EngineConfig& config);

/// Root-level uniform proposal draws, merged by option; priors uniform over
/// the distinct surviving options.
std::vector<NodeId> random_proposal_expand(SearchTree& tree, NodeId root,
                                           const EngineConfig& config, Rng& rng);

/// Terminal nodes score +1/-1 against the gold answer; everything else gets
/// the (clamped, cached) value-oracle estimate. Records leaf_value.
double evaluate(SearchTree& tree, NodeId id, ValueOracle& value);

/// True while some node can still be expanded.
bool has_expandable_node(const SearchTree& tree, const EngineConfig& config);

/// The full loop: up to config.simulations iterations of select / expand /
/// evaluate / backpropagate, stopping early once no unexplored node remains.
/// Oracle failures skip the simulation; they are never fatal.
SearchTree run_search(const Problem& problem, const Oracles& oracles, const EngineConfig& config);

}  // namespace stepsearch
