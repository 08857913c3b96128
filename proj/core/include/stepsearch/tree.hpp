#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "stepsearch/grammar.hpp"

namespace stepsearch {

using NodeId = int;

struct SearchNode {
  NodeId id = 0;
  std::optional<NodeId> parent;
  std::optional<Step> step;       // absent for the root
  double prior = 0.0;             // P(a|s), normalized over siblings
  int visits = 0;                 // N
  double value_sum = 0.0;         // running sum of backpropagated V
  std::optional<double> leaf_value;  // V recorded at evaluation
  int depth = 0;
  std::vector<NodeId> children;
  bool is_terminal = false;
  std::optional<bool> is_correct;  // terminal nodes only
  bool dead_end = false;           // expansion produced no parsable children

  double q() const { return value_sum / static_cast<double>(visits > 0 ? visits : 1); }
};

struct BackpropEntry {
  NodeId node = 0;
  double value = 0.0;
};

/// Deepest common ancestor over parallel parent/depth arrays. Shared by the
/// live tree and loaded dumps.
NodeId lowest_common_ancestor(std::span<const std::optional<NodeId>> parents,
                              std::span<const int> depths, NodeId a, NodeId b);

/// Mutable search tree. Single writer; reads are safe between mutations.
class SearchTree {
 public:
  SearchTree(Problem problem, std::uint64_t rng_seed);

  const Problem& problem() const { return problem_; }
  std::uint64_t rng_seed() const { return rng_seed_; }
  NodeId root() const { return 0; }
  std::size_t size() const { return nodes_.size(); }

  const SearchNode& node(NodeId id) const;  // throws UnknownNode
  SearchNode& mutable_node(NodeId id);

  /// Appends a child under parent. Terminal flag and correctness are fixed
  /// here from the step kind and the problem's gold answer.
  NodeId add_child(NodeId parent, Step step, double prior);

  Trajectory path_to(NodeId id) const;
  NodeId lca(NodeId a, NodeId b) const;

  void record_evaluation(NodeId id, double v);  // throws ValueOutOfRange
  /// Adds v to the node and every ancestor up to the root, bumping visits.
  void backpropagate(NodeId id, double v);

  const std::vector<SearchNode>& nodes() const { return nodes_; }
  const std::vector<BackpropEntry>& backprop_log() const { return backprop_log_; }

 private:
  void check(NodeId id) const;

  Problem problem_;
  std::uint64_t rng_seed_;
  std::vector<SearchNode> nodes_;
  std::vector<BackpropEntry> backprop_log_;
};

}  // namespace stepsearch
