#include "stepsearch/tree_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "stepsearch/errors.hpp"
#include "stepsearch/io.hpp"

namespace stepsearch {

using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path);
  return content;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename " + tmp + " -> " + path + ": " + ec.message());
}

TreeDump to_dump(const SearchTree& tree) {
  TreeDump dump;
  dump.problem_id = tree.problem().id;
  dump.rng_seed = tree.rng_seed();
  dump.nodes.reserve(tree.size());
  for (const SearchNode& n : tree.nodes()) {
    TreeDumpNode d;
    d.id = n.id;
    d.parent = n.parent;
    d.step = n.step ? n.step->raw_text : std::string();
    d.prior = n.prior;
    d.visits = n.visits;
    d.value_sum = n.value_sum;
    d.leaf_value = n.leaf_value;
    d.terminal = n.is_terminal;
    d.correct = n.is_correct;
    dump.nodes.push_back(std::move(d));
  }
  return dump;
}

std::string dump_to_json(const TreeDump& dump) {
  ordered_json doc;
  doc["problem_id"] = dump.problem_id;
  doc["rng_seed"] = dump.rng_seed;
  ordered_json nodes = ordered_json::array();
  for (const TreeDumpNode& n : dump.nodes) {
    ordered_json j;
    j["id"] = n.id;
    if (n.parent)
      j["parent"] = *n.parent;
    else
      j["parent"] = nullptr;
    j["step"] = n.step;
    j["prior"] = n.prior;
    j["visits"] = n.visits;
    j["value_sum"] = n.value_sum;
    if (n.leaf_value)
      j["leaf_value"] = *n.leaf_value;
    else
      j["leaf_value"] = nullptr;
    j["terminal"] = n.terminal;
    if (n.correct)
      j["correct"] = *n.correct;
    else
      j["correct"] = nullptr;
    nodes.push_back(std::move(j));
  }
  doc["nodes"] = std::move(nodes);
  return doc.dump();
}

TreeDump dump_from_json(const std::string& json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const std::exception& e) {
    throw SchemaError(std::string("tree dump is not valid JSON: ") + e.what());
  }
  try {
    TreeDump dump;
    dump.problem_id = doc.at("problem_id").get<std::string>();
    dump.rng_seed = doc.at("rng_seed").get<std::uint64_t>();
    for (const auto& j : doc.at("nodes")) {
      TreeDumpNode n;
      n.id = j.at("id").get<int>();
      if (!j.at("parent").is_null()) n.parent = j.at("parent").get<int>();
      n.step = j.at("step").get<std::string>();
      n.prior = j.at("prior").get<double>();
      n.visits = j.at("visits").get<int>();
      n.value_sum = j.at("value_sum").get<double>();
      if (!j.at("leaf_value").is_null()) n.leaf_value = j.at("leaf_value").get<double>();
      n.terminal = j.at("terminal").get<bool>();
      if (!j.at("correct").is_null()) n.correct = j.at("correct").get<bool>();
      dump.nodes.push_back(std::move(n));
    }
    return dump;
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw SchemaError(std::string("tree dump field error: ") + e.what());
  }
}

void write_tree_file(const TreeDump& dump, const std::string& path) {
  write_file_atomic(path, dump_to_json(dump) + "\n");
}

TreeDump read_tree_file(const std::string& path) { return dump_from_json(read_file(path)); }

// ---------------------------------------------------------------------------

TreeIndex::TreeIndex(const TreeDump& dump) : dump_(&dump) {
  const size_t n = dump.nodes.size();
  if (n == 0) throw SchemaError("tree dump has no nodes");
  int max_id = 0;
  for (const auto& node : dump.nodes) {
    if (node.id < 0) throw SchemaError("negative node id");
    max_id = std::max(max_id, node.id);
  }
  slot_by_id_.assign(static_cast<size_t>(max_id) + 1, std::numeric_limits<size_t>::max());
  ids_.reserve(n);
  parents_.resize(n);
  depths_.assign(n, -1);
  children_.resize(n);
  steps_.resize(n);

  int roots = 0;
  for (size_t i = 0; i < n; ++i) {
    const auto& node = dump.nodes[i];
    if (slot_by_id_[static_cast<size_t>(node.id)] != std::numeric_limits<size_t>::max())
      throw SchemaError("duplicate node id " + std::to_string(node.id));
    slot_by_id_[static_cast<size_t>(node.id)] = i;
    ids_.push_back(node.id);
    parents_[i] = node.parent;
    if (!node.parent) {
      ++roots;
      root_ = node.id;
      if (!node.step.empty()) throw SchemaError("root node carries a step");
    } else {
      // Dumps do not carry the option count; kinds and letters were validated
      // when the tree was built, so parse with the full letter range here.
      auto step = parse_step(node.step, 26);
      if (!step) throw SchemaError("unparsable step on node " + std::to_string(node.id));
      if (step->kind == StepKind::FinalAnswer && !node.terminal)
        throw SchemaError("final answer on non-terminal node " + std::to_string(node.id));
      steps_[i] = std::move(*step);
    }
  }
  if (roots != 1) throw SchemaError("tree dump must have exactly one root");

  for (size_t i = 0; i < n; ++i) {
    if (parents_[i]) {
      const int pid = *parents_[i];
      if (static_cast<size_t>(pid) >= slot_by_id_.size() ||
          slot_by_id_[static_cast<size_t>(pid)] == std::numeric_limits<size_t>::max())
        throw SchemaError("unknown parent " + std::to_string(pid));
      children_[slot_by_id_[static_cast<size_t>(pid)]].push_back(dump.nodes[i].id);
    }
  }

  // Depths via traversal; any node left unvisited sits on a cycle.
  std::vector<int> stack{root_};
  depths_[lookup(root_)] = 0;
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    for (int child : children_[lookup(cur)]) {
      depths_[lookup(child)] = depths_[lookup(cur)] + 1;
      stack.push_back(child);
    }
  }
  for (size_t i = 0; i < n; ++i) {
    if (depths_[i] < 0) throw SchemaError("cycle or unreachable node in tree dump");
  }
}

size_t TreeIndex::lookup(int id) const {
  if (id < 0 || static_cast<size_t>(id) >= slot_by_id_.size()) throw UnknownNode(id);
  const size_t slot = slot_by_id_[static_cast<size_t>(id)];
  if (slot == std::numeric_limits<size_t>::max()) throw UnknownNode(id);
  return slot;
}

const Step& TreeIndex::step(int id) const {
  const auto& s = steps_[lookup(id)];
  if (!s) throw UnknownNode(id);
  return *s;
}

int TreeIndex::lca(int a, int b) const {
  auto up = [&](int x) {
    auto p = parents_[lookup(x)];
    if (!p) throw UnknownNode(x);
    return *p;
  };
  while (depth(a) > depth(b)) a = up(a);
  while (depth(b) > depth(a)) b = up(b);
  while (a != b) {
    a = up(a);
    b = up(b);
  }
  return a;
}

bool TreeIndex::is_ancestor(int anc, int node) const {
  int cur = node;
  while (true) {
    if (cur == anc) return true;
    auto p = parents_[lookup(cur)];
    if (!p) return false;
    cur = *p;
  }
}

Trajectory TreeIndex::path(int id) const {
  std::vector<int> chain;
  for (int cur = id;;) {
    chain.push_back(cur);
    auto p = parents_[lookup(cur)];
    if (!p) break;
    cur = *p;
  }
  Trajectory traj;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    const auto& s = steps_[lookup(*it)];
    if (s) traj.steps.push_back(*s);
  }
  return traj;
}

std::vector<Step> TreeIndex::suffix(int ancestor, int id) const {
  std::vector<int> chain;
  int cur = id;
  while (cur != ancestor) {
    chain.push_back(cur);
    auto p = parents_[lookup(cur)];
    if (!p) throw UnknownNode(id);  // ancestor not on the path
    cur = *p;
  }
  std::vector<Step> steps;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) steps.push_back(step(*it));
  return steps;
}

}  // namespace stepsearch
