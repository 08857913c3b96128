#include "stepsearch/tree.hpp"

#include <algorithm>
#include <cmath>

#include "stepsearch/errors.hpp"

namespace stepsearch {

NodeId lowest_common_ancestor(std::span<const std::optional<NodeId>> parents,
                              std::span<const int> depths, NodeId a, NodeId b) {
  auto up = [&](NodeId n) {
    const auto& p = parents[static_cast<size_t>(n)];
    if (!p) throw UnknownNode(n);
    return *p;
  };
  while (depths[static_cast<size_t>(a)] > depths[static_cast<size_t>(b)]) a = up(a);
  while (depths[static_cast<size_t>(b)] > depths[static_cast<size_t>(a)]) b = up(b);
  while (a != b) {
    a = up(a);
    b = up(b);
  }
  return a;
}

SearchTree::SearchTree(Problem problem, std::uint64_t rng_seed)
    : problem_(std::move(problem)), rng_seed_(rng_seed) {
  SearchNode root;
  root.id = 0;
  nodes_.push_back(std::move(root));
}

void SearchTree::check(NodeId id) const {
  if (id < 0 || static_cast<size_t>(id) >= nodes_.size()) throw UnknownNode(id);
}

const SearchNode& SearchTree::node(NodeId id) const {
  check(id);
  return nodes_[static_cast<size_t>(id)];
}

SearchNode& SearchTree::mutable_node(NodeId id) {
  check(id);
  return nodes_[static_cast<size_t>(id)];
}

NodeId SearchTree::add_child(NodeId parent, Step step, double prior) {
  check(parent);
  SearchNode child;
  child.id = static_cast<NodeId>(nodes_.size());
  child.parent = parent;
  child.depth = nodes_[static_cast<size_t>(parent)].depth + 1;
  child.prior = prior;
  child.is_terminal = step.kind == StepKind::FinalAnswer;
  if (child.is_terminal) child.is_correct = step.option == problem_.gold_answer;
  child.step = std::move(step);
  nodes_[static_cast<size_t>(parent)].children.push_back(child.id);
  nodes_.push_back(std::move(child));
  return static_cast<NodeId>(nodes_.size() - 1);
}

Trajectory SearchTree::path_to(NodeId id) const {
  check(id);
  std::vector<const SearchNode*> chain;
  for (NodeId cur = id;;) {
    const SearchNode& n = nodes_[static_cast<size_t>(cur)];
    chain.push_back(&n);
    if (!n.parent) break;
    cur = *n.parent;
  }
  Trajectory traj;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    if ((*it)->step) traj.steps.push_back(*(*it)->step);
  }
  return traj;
}

NodeId SearchTree::lca(NodeId a, NodeId b) const {
  check(a);
  check(b);
  std::vector<std::optional<NodeId>> parents(nodes_.size());
  std::vector<int> depths(nodes_.size());
  for (size_t i = 0; i < nodes_.size(); ++i) {
    parents[i] = nodes_[i].parent;
    depths[i] = nodes_[i].depth;
  }
  return lowest_common_ancestor(parents, depths, a, b);
}

void SearchTree::record_evaluation(NodeId id, double v) {
  check(id);
  if (!std::isfinite(v) || v < -1.0 || v > 1.0) throw ValueOutOfRange(v);
  nodes_[static_cast<size_t>(id)].leaf_value = v;
}

void SearchTree::backpropagate(NodeId id, double v) {
  check(id);
  if (!std::isfinite(v) || v < -1.0 || v > 1.0) throw ValueOutOfRange(v);
  backprop_log_.push_back({id, v});
  for (std::optional<NodeId> cur = id; cur;) {
    SearchNode& n = nodes_[static_cast<size_t>(*cur)];
    n.visits += 1;
    n.value_sum += v;
    cur = n.parent;
  }
}

}  // namespace stepsearch
