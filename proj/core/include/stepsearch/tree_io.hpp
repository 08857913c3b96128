#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stepsearch/grammar.hpp"
#include "stepsearch/tree.hpp"

namespace stepsearch {

/// One node of a serialized tree. Field names in the JSON document are fixed:
/// id, parent, step, prior, visits, value_sum, leaf_value, terminal, correct.
struct TreeDumpNode {
  int id = 0;
  std::optional<int> parent;
  std::string step;  // raw step text; empty for the root
  double prior = 0.0;
  int visits = 0;
  double value_sum = 0.0;
  std::optional<double> leaf_value;
  bool terminal = false;
  std::optional<bool> correct;

  double q() const { return value_sum / static_cast<double>(visits > 0 ? visits : 1); }
};

struct TreeDump {
  std::string problem_id;
  std::uint64_t rng_seed = 0;
  std::vector<TreeDumpNode> nodes;
};

TreeDump to_dump(const SearchTree& tree);

std::string dump_to_json(const TreeDump& dump);
TreeDump dump_from_json(const std::string& json_text);  // throws SchemaError

void write_tree_file(const TreeDump& dump, const std::string& path);  // atomic
TreeDump read_tree_file(const std::string& path);

/// Index over a TreeDump: children lists, depths, parsed steps, ancestor
/// queries. Construction validates structure and throws SchemaError on
/// broken dumps (unknown parents, cycles, unparsable steps, multiple roots).
class TreeIndex {
 public:
  explicit TreeIndex(const TreeDump& dump);

  const TreeDump& dump() const { return *dump_; }
  int root() const { return root_; }
  int depth(int id) const { return depths_[lookup(id)]; }
  const std::vector<int>& children(int id) const { return children_[lookup(id)]; }
  std::optional<int> parent(int id) const { return parents_[lookup(id)]; }
  const TreeDumpNode& node(int id) const { return dump_->nodes[lookup(id)]; }
  const Step& step(int id) const;  // root has none; throws UnknownNode
  const std::vector<int>& ids() const { return ids_; }

  int lca(int a, int b) const;
  bool is_ancestor(int anc, int node) const;

  /// Steps along root -> id (root's absent step skipped).
  Trajectory path(int id) const;
  /// Steps along (lca, id], i.e. the suffix below an ancestor.
  std::vector<Step> suffix(int ancestor, int id) const;

 private:
  size_t lookup(int id) const;  // throws UnknownNode

  const TreeDump* dump_;
  int root_ = 0;
  std::vector<int> ids_;
  std::vector<std::optional<int>> parents_;  // by slot
  std::vector<int> depths_;
  std::vector<std::vector<int>> children_;
  std::vector<std::optional<Step>> steps_;
  std::vector<size_t> slot_by_id_;
};

}  // namespace stepsearch
