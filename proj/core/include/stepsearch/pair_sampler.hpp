#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stepsearch/rng.hpp"
#include "stepsearch/tree_io.hpp"

namespace stepsearch {

enum class PairSource { Sb, Sd, O, Reflection };

std::string_view to_string(PairSource source);
std::optional<PairSource> pair_source_from(std::string_view text);

/// Half-open byte interval [begin, end) into a serialized trajectory.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const Span&) const = default;
};

/// One chosen/rejected training unit. prefix/chosen/rejected are serialized
/// step texts; the chosen and rejected continuations branch off the shared
/// prefix. mask spans cover the inner content of every proposal and
/// observation element. Prefix spans are kept for loss computation but are
/// not part of the pair-file schema.
struct PreferencePair {
  std::string problem_id;
  std::string prefix;
  std::string chosen;
  std::string rejected;
  double q_chosen = 0.0;
  double q_rejected = 0.0;
  PairSource source = PairSource::Sb;
  std::vector<Span> mask_spans_chosen;
  std::vector<Span> mask_spans_rejected;
  std::vector<Span> mask_spans_prefix;

  // bookkeeping for tests and tooling; not serialized
  int chosen_node = -1;
  int rejected_node = -1;
};

struct SamplerConfig {
  double delta = 0.1;  // minimum Q margin between chosen and rejected
  int epsilon = 20;    // per-problem pair cap, split 2:1:1 across sources
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError (epsilon >= 4, delta > 0)
};

/// Node ids with visits > 0 plus the root, ascending.
std::vector<int> prune_non_visited(const TreeIndex& index);

/// Terminal ids among `visited` whose path jumps from the last action (or the
/// start) straight to the final answer. These stay eligible as rejected but
/// never as chosen endpoints.
std::vector<int> prune_non_thought(const TreeIndex& index, std::span<const int> visited);

/// Every correct, thought-bearing, visited terminal plus all its ancestors,
/// root excluded, ascending.
std::vector<int> chosen_set(const TreeIndex& index, std::span<const int> visited,
                            std::span<const int> non_thought);

struct DrawnPair {
  int chosen = -1;
  int rejected = -1;
  PairSource source = PairSource::Sb;
  double margin = 0.0;  // q_chosen - q_rejected
};

/// Rejected candidates for c under one source, margin-filtered, ascending.
/// Sb: siblings; Sd: same depth, different parent; O: different depth, not on
/// c's own root path (an ancestor or descendant would leave one side empty).
std::vector<int> eligible_rejected(const TreeIndex& index, std::span<const int> visited, int c,
                                   PairSource source, double delta);

/// Two sibling draws without replacement / one same-depth draw / one
/// other-depth draw, uniform over the eligible candidates.
std::vector<DrawnPair> sample_sb(const TreeIndex& index, std::span<const int> visited, int c,
                                 double delta, Rng& rng);
std::optional<DrawnPair> sample_sd(const TreeIndex& index, std::span<const int> visited, int c,
                                   double delta, Rng& rng);
std::optional<DrawnPair> sample_o(const TreeIndex& index, std::span<const int> visited, int c,
                                  double delta, Rng& rng);

/// Sorts each pool by margin (descending) and truncates to epsilon/2,
/// epsilon/4, epsilon/4. Short pools are not backfilled.
std::vector<DrawnPair> balance_and_cap(std::vector<DrawnPair> pool_sb,
                                       std::vector<DrawnPair> pool_sd,
                                       std::vector<DrawnPair> pool_o, int epsilon);

/// Byte spans of the inner content of every proposal / observation element.
std::vector<Span> mask_spans(std::string_view text);

/// Fills the three mask span lists from the pair's texts.
PreferencePair& apply_masks(PreferencePair& pair);

/// Splits the pair at the lowest common ancestor and assembles texts, Q
/// values and masks.
PreferencePair realize_pair(const TreeIndex& index, const DrawnPair& draw);

/// The whole per-tree algorithm: prune, collect the chosen set, draw from the
/// three sources, balance, realize, and order by (source, margin desc).
std::vector<PreferencePair> sample_pairs(const TreeDump& dump, const SamplerConfig& config);

// --- pair file (JSON lines) -------------------------------------------------

std::string pair_to_json(const PreferencePair& pair);
PreferencePair pair_from_json(const std::string& line);  // throws SchemaError

void write_pairs_file(std::span<const PreferencePair> pairs, const std::string& path);
std::vector<PreferencePair> read_pairs_file(const std::string& path);

}  // namespace stepsearch
