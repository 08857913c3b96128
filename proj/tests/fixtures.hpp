#pragma once

// Shared fixtures and independent test oracles. The oracles deliberately
// avoid the library's TreeIndex/select paths and recompute everything from
// the raw dump fields, so sampler and tree tests check against genuinely
// separate logic.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stepsearch/grammar.hpp"
#include "stepsearch/pair_sampler.hpp"
#include "stepsearch/tree_io.hpp"

namespace fixtures {

stepsearch::Problem make_problem(int n_options = 4, int gold = 0, const std::string& id = "fx");

/// The three-problem demo set that matches the built-in retriever articles.
std::vector<stepsearch::Problem> demo_problems();

/// A trajectory exercising the full tag repertoire: proposal, thought +
/// retriever action with observation, analysis thoughts, final answer.
std::string worked_trajectory_text();

/// Incremental hand-built dump. Node ids are assigned in insertion order.
class DumpBuilder {
 public:
  explicit DumpBuilder(std::string problem_id, std::uint64_t seed = 0);

  int root(int visits, double value_sum = 0.0);
  int child(int parent, const stepsearch::Step& step, double prior, int visits, double q,
            std::optional<bool> correct = std::nullopt);
  /// Child with explicit value_sum instead of q (q = value_sum / visits).
  int child_raw(int parent, const std::string& step_text, double prior, int visits,
                double value_sum, bool terminal, std::optional<bool> correct);

  const stepsearch::TreeDump& dump() const { return dump_; }

 private:
  stepsearch::TreeDump dump_;
};

/// The five hand-built trees the sampler acceptance runs against.
std::vector<stepsearch::TreeDump> sampler_fixture_trees();

/// A small tree matching the worked reflection topology: prefix node (1),
/// wrong branch (2)->(5), correct branch (4)->(6).
stepsearch::TreeDump reflection_topology_tree();

// --- independent oracles ----------------------------------------------------

/// LCA by intersecting full ancestor lists and taking the deepest element.
int oracle_lca(const stepsearch::TreeDump& dump, int a, int b);

struct OraclePair {
  int chosen = -1;
  int rejected = -1;
  stepsearch::PairSource source = stepsearch::PairSource::Sb;
  double margin = 0.0;
};

/// All margin-passing (chosen, rejected, source) combinations, recomputed
/// from raw dump fields.
std::vector<OraclePair> oracle_enumerate(const stepsearch::TreeDump& dump, double delta);

/// Replays the sampler's draw sequence with independent bookkeeping and
/// applies the balance rule, producing the exact multiset the sampler must
/// emit under the same seed.
std::vector<OraclePair> oracle_expected_pairs(const stepsearch::TreeDump& dump, double delta,
                                              int epsilon, std::uint64_t seed);

/// Recomputes (visits, mean value) per node from a backprop log and the
/// parent structure.
struct ReplayStats {
  std::map<int, int> visits;
  std::map<int, double> mean;
};
ReplayStats oracle_replay(const stepsearch::TreeDump& dump,
                          const std::vector<stepsearch::BackpropEntry>& log);

}  // namespace fixtures
