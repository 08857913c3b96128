#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "stepsearch/errors.hpp"
#include "stepsearch/rng.hpp"
#include "stepsearch/tree.hpp"
#include "stepsearch/tree_io.hpp"

using namespace stepsearch;

TEST_SUITE_BEGIN("tree");

namespace {

SearchTree small_tree() {
  SearchTree tree(fixtures::make_problem(), 7);
  const NodeId a = tree.add_child(tree.root(), Step::proposal(0), 0.5);
  const NodeId b = tree.add_child(tree.root(), Step::proposal(1), 0.5);
  const NodeId c = tree.add_child(a, Step::thought("t"), 1.0);
  tree.add_child(c, Step::final_answer(0), 1.0);
  (void)b;
  return tree;
}

}  // namespace

TEST_CASE("path_to root is empty; deeper paths follow ancestor order") {
  const SearchTree tree = small_tree();
  CHECK(tree.path_to(tree.root()).empty());

  const Trajectory t = tree.path_to(4);
  REQUIRE(t.size() == 3);
  CHECK(t.steps[0].kind == StepKind::Proposal);
  CHECK(t.steps[1].kind == StepKind::Thought);
  CHECK(t.steps[2].kind == StepKind::FinalAnswer);
  CHECK(t.terminal());
  CHECK(static_cast<int>(t.size()) == tree.node(4).depth);
}

TEST_CASE("terminal correctness fixed at creation") {
  SearchTree tree(fixtures::make_problem(4, 2), 0);
  const NodeId right = tree.add_child(tree.root(), Step::final_answer(2), 0.5);
  const NodeId wrong = tree.add_child(tree.root(), Step::final_answer(0), 0.5);
  CHECK(tree.node(right).is_terminal);
  CHECK(tree.node(right).is_correct == true);
  CHECK(tree.node(wrong).is_correct == false);
  CHECK(!tree.node(tree.root()).is_correct.has_value());
}

TEST_CASE("lca: siblings meet at the parent, node with itself is itself") {
  const SearchTree tree = small_tree();
  CHECK(tree.lca(1, 2) == tree.root());
  CHECK(tree.lca(3, 3) == 3);
  CHECK(tree.lca(3, 1) == 1);   // ancestor
  CHECK(tree.lca(4, 2) == tree.root());
  CHECK_THROWS_AS((void)tree.lca(0, 99), UnknownNode);
}

TEST_CASE("lca agrees with ancestor-set intersection on random trees") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    SearchTree tree(fixtures::make_problem(), 1);
    std::vector<NodeId> ids{tree.root()};
    for (int i = 0; i < 30; ++i) {
      const NodeId parent = ids[static_cast<size_t>(rng.uniform_int((int)ids.size()))];
      if (tree.node(parent).is_terminal) continue;
      ids.push_back(tree.add_child(parent, Step::thought("n" + std::to_string(i)), 1.0));
    }
    const TreeDump dump = to_dump(tree);
    for (int probe = 0; probe < 40; ++probe) {
      const NodeId a = ids[static_cast<size_t>(rng.uniform_int((int)ids.size()))];
      const NodeId b = ids[static_cast<size_t>(rng.uniform_int((int)ids.size()))];
      CHECK(tree.lca(a, b) == fixtures::oracle_lca(dump, a, b));
    }
  }
}

TEST_CASE("single backprop gives N=1 Q=v along the whole path") {
  SearchTree tree = small_tree();
  tree.backpropagate(4, 0.6);
  for (NodeId id : {4, 3, 1, 0}) {
    CHECK(tree.node(id).visits == 1);
    CHECK(tree.node(id).q() == doctest::Approx(0.6));
  }
  CHECK(tree.node(2).visits == 0);
}

TEST_CASE("opposite backprops cancel to Q=0 N=2") {
  SearchTree tree = small_tree();
  tree.backpropagate(3, 1.0);
  tree.backpropagate(3, -1.0);
  CHECK(tree.node(3).visits == 2);
  CHECK(tree.node(3).q() == doctest::Approx(0.0));
  CHECK(tree.node(0).visits == 2);
}

TEST_CASE("record and backprop reject out-of-range values") {
  SearchTree tree = small_tree();
  CHECK_THROWS_AS(tree.record_evaluation(1, 1.5), ValueOutOfRange);
  CHECK_THROWS_AS(tree.backpropagate(1, -1.01), ValueOutOfRange);
  CHECK_THROWS_AS(tree.backpropagate(42, 0.0), UnknownNode);
  tree.record_evaluation(1, 0.25);
  CHECK(tree.node(1).leaf_value == doctest::Approx(0.25));
}

TEST_CASE("replayed backprop log reproduces visits and q exactly") {
  Rng rng(5);
  SearchTree tree(fixtures::make_problem(), 3);
  std::vector<NodeId> ids{tree.root()};
  for (int i = 0; i < 25; ++i)
    ids.push_back(tree.add_child(ids[static_cast<size_t>(rng.uniform_int((int)ids.size()))],
                                 Step::thought("n" + std::to_string(i)), 1.0));
  for (int i = 0; i < 200; ++i) {
    const NodeId at = ids[static_cast<size_t>(rng.uniform_int((int)ids.size()))];
    tree.backpropagate(at, rng.uniform01() * 2.0 - 1.0);
  }

  const auto stats = fixtures::oracle_replay(to_dump(tree), tree.backprop_log());
  CHECK(tree.node(tree.root()).visits == static_cast<int>(tree.backprop_log().size()));
  for (NodeId id : ids) {
    const SearchNode& n = tree.node(id);
    if (n.visits == 0) {
      CHECK(stats.visits.count(id) == 0);
      continue;
    }
    CHECK(stats.visits.at(id) == n.visits);
    CHECK(std::fabs(stats.mean.at(id) - n.q()) <= 1e-9);
    CHECK(std::fabs(n.q() - n.value_sum / n.visits) <= 1e-12);
  }
}

TEST_CASE("dump round-trips through json byte-identically") {
  const SearchTree tree = small_tree();
  const TreeDump dump = to_dump(tree);
  const std::string json_text = dump_to_json(dump);
  const TreeDump back = dump_from_json(json_text);
  CHECK(dump_to_json(back) == json_text);
  CHECK(back.problem_id == dump.problem_id);
  CHECK(back.rng_seed == dump.rng_seed);
  REQUIRE(back.nodes.size() == dump.nodes.size());
}

TEST_CASE("tree index validates structure") {
  TreeDump dump = to_dump(small_tree());
  CHECK_NOTHROW(TreeIndex{dump});

  TreeDump broken = dump;
  broken.nodes[2].parent = 77;
  CHECK_THROWS_AS(TreeIndex{broken}, SchemaError);

  TreeDump cyclic = dump;
  cyclic.nodes[0].parent = 4;  // two nodes now form a loop, no root remains
  CHECK_THROWS_AS(TreeIndex{cyclic}, SchemaError);

  TreeDump garbled = dump;
  garbled.nodes[1].step = "<step><thought>unclosed";
  CHECK_THROWS_AS(TreeIndex{garbled}, SchemaError);
}

TEST_CASE("tree index suffix extraction") {
  const TreeDump dump = to_dump(small_tree());
  const TreeIndex index(dump);
  const auto suffix = index.suffix(1, 4);
  REQUIRE(suffix.size() == 2);
  CHECK(suffix[0].kind == StepKind::Thought);
  CHECK(suffix[1].kind == StepKind::FinalAnswer);
  CHECK(index.suffix(4, 4).empty());
}

TEST_SUITE_END();
