#include "stepsearch/pair_sampler.hpp"

#include <algorithm>

#include "json.hpp"
#include "stepsearch/errors.hpp"
#include "stepsearch/io.hpp"
#include "stepsearch/text.hpp"

namespace stepsearch {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(PairSource source) {
  switch (source) {
    case PairSource::Sb: return "sb";
    case PairSource::Sd: return "sd";
    case PairSource::O: return "o";
    case PairSource::Reflection: return "reflection";
  }
  return "sb";
}

std::optional<PairSource> pair_source_from(std::string_view text) {
  if (text == "sb") return PairSource::Sb;
  if (text == "sd") return PairSource::Sd;
  if (text == "o") return PairSource::O;
  if (text == "reflection") return PairSource::Reflection;
  return std::nullopt;
}

void SamplerConfig::validate() const {
  if (delta <= 0) throw ConfigError("delta must be positive");
  if (epsilon < 4) throw ConfigError("epsilon must be >= 4");
}

std::vector<int> prune_non_visited(const TreeIndex& index) {
  std::vector<int> out;
  for (int id : index.ids()) {
    if (id == index.root() || index.node(id).visits > 0) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> prune_non_thought(const TreeIndex& index, std::span<const int> visited) {
  std::vector<int> out;
  for (int id : visited) {
    const TreeDumpNode& n = index.node(id);
    if (!n.terminal) continue;
    if (is_non_thought_terminal(index.path(id))) out.push_back(id);
  }
  return out;
}

std::vector<int> chosen_set(const TreeIndex& index, std::span<const int> visited,
                            std::span<const int> non_thought) {
  std::vector<int> set;
  for (int id : visited) {
    const TreeDumpNode& n = index.node(id);
    if (!n.terminal || !n.correct.value_or(false)) continue;
    if (std::find(non_thought.begin(), non_thought.end(), id) != non_thought.end()) continue;
    for (int cur = id; cur != index.root();) {
      set.push_back(cur);
      auto p = index.parent(cur);
      if (!p) break;
      cur = *p;
    }
  }
  std::sort(set.begin(), set.end());
  set.erase(std::unique(set.begin(), set.end()), set.end());
  return set;
}

std::vector<int> eligible_rejected(const TreeIndex& index, std::span<const int> visited, int c,
                                   PairSource source, double delta) {
  const double q_c = index.node(c).q();
  const auto c_parent = index.parent(c);
  std::vector<int> out;
  for (int r : visited) {
    if (r == c || r == index.root()) continue;
    if (q_c < index.node(r).q() + delta) continue;
    const auto r_parent = index.parent(r);
    const bool sibling = r_parent && c_parent && *r_parent == *c_parent;
    switch (source) {
      case PairSource::Sb:
        if (!sibling) continue;
        break;
      case PairSource::Sd:
        if (sibling || index.depth(r) != index.depth(c)) continue;
        break;
      case PairSource::O:
        if (index.depth(r) == index.depth(c)) continue;
        if (index.is_ancestor(r, c) || index.is_ancestor(c, r)) continue;
        break;
      case PairSource::Reflection:
        continue;
    }
    out.push_back(r);
  }
  return out;
}

namespace {

DrawnPair make_draw(const TreeIndex& index, int c, int r, PairSource source) {
  DrawnPair d;
  d.chosen = c;
  d.rejected = r;
  d.source = source;
  d.margin = index.node(c).q() - index.node(r).q();
  return d;
}

}  // namespace

std::vector<DrawnPair> sample_sb(const TreeIndex& index, std::span<const int> visited, int c,
                                 double delta, Rng& rng) {
  auto cands = eligible_rejected(index, visited, c, PairSource::Sb, delta);
  std::vector<DrawnPair> out;
  for (int draw = 0; draw < 2 && !cands.empty(); ++draw) {
    const size_t pick = static_cast<size_t>(rng.uniform_int(static_cast<int>(cands.size())));
    out.push_back(make_draw(index, c, cands[pick], PairSource::Sb));
    cands.erase(cands.begin() + static_cast<std::ptrdiff_t>(pick));  // without replacement
  }
  return out;
}

std::optional<DrawnPair> sample_sd(const TreeIndex& index, std::span<const int> visited, int c,
                                   double delta, Rng& rng) {
  auto cands = eligible_rejected(index, visited, c, PairSource::Sd, delta);
  if (cands.empty()) return std::nullopt;
  const size_t pick = static_cast<size_t>(rng.uniform_int(static_cast<int>(cands.size())));
  return make_draw(index, c, cands[pick], PairSource::Sd);
}

std::optional<DrawnPair> sample_o(const TreeIndex& index, std::span<const int> visited, int c,
                                  double delta, Rng& rng) {
  auto cands = eligible_rejected(index, visited, c, PairSource::O, delta);
  if (cands.empty()) return std::nullopt;
  const size_t pick = static_cast<size_t>(rng.uniform_int(static_cast<int>(cands.size())));
  return make_draw(index, c, cands[pick], PairSource::O);
}

std::vector<DrawnPair> balance_and_cap(std::vector<DrawnPair> pool_sb,
                                       std::vector<DrawnPair> pool_sd,
                                       std::vector<DrawnPair> pool_o, int epsilon) {
  auto sort_and_cap = [](std::vector<DrawnPair>& pool, size_t cap) {
    std::sort(pool.begin(), pool.end(), [](const DrawnPair& a, const DrawnPair& b) {
      if (a.margin != b.margin) return a.margin > b.margin;
      if (a.chosen != b.chosen) return a.chosen < b.chosen;
      return a.rejected < b.rejected;
    });
    if (pool.size() > cap) pool.resize(cap);
  };
  sort_and_cap(pool_sb, static_cast<size_t>(epsilon / 2));
  sort_and_cap(pool_sd, static_cast<size_t>(epsilon / 4));
  sort_and_cap(pool_o, static_cast<size_t>(epsilon / 4));

  std::vector<DrawnPair> out;
  out.reserve(pool_sb.size() + pool_sd.size() + pool_o.size());
  out.insert(out.end(), pool_sb.begin(), pool_sb.end());
  out.insert(out.end(), pool_sd.begin(), pool_sd.end());
  out.insert(out.end(), pool_o.begin(), pool_o.end());
  return out;
}

std::vector<Span> mask_spans(std::string_view text) {
  const std::string lower = to_lower(text);
  std::vector<Span> spans;
  for (std::string_view tag : {"proposal", "observation"}) {
    const std::string open = "<" + std::string(tag) + ">";
    const std::string close = "</" + std::string(tag) + ">";
    size_t pos = 0;
    while (true) {
      const size_t o = lower.find(open, pos);
      if (o == std::string::npos) break;
      const size_t content_begin = o + open.size();
      const size_t c = lower.find(close, content_begin);
      if (c == std::string::npos) break;
      if (c > content_begin) spans.push_back({content_begin, c});
      pos = c + close.size();
    }
  }
  std::sort(spans.begin(), spans.end(),
            [](const Span& a, const Span& b) { return a.begin < b.begin; });
  return spans;
}

PreferencePair& apply_masks(PreferencePair& pair) {
  pair.mask_spans_chosen = mask_spans(pair.chosen);
  pair.mask_spans_rejected = mask_spans(pair.rejected);
  pair.mask_spans_prefix = mask_spans(pair.prefix);
  return pair;
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

}  // namespace

PreferencePair realize_pair(const TreeIndex& index, const DrawnPair& draw) {
  const int split = index.lca(draw.chosen, draw.rejected);
  PreferencePair pair;
  pair.problem_id = index.dump().problem_id;
  pair.prefix = serialize_trajectory(index.path(split));
  pair.chosen = serialize_steps(index.suffix(split, draw.chosen));
  pair.rejected = serialize_steps(index.suffix(split, draw.rejected));
  pair.q_chosen = index.node(draw.chosen).q();
  pair.q_rejected = index.node(draw.rejected).q();
  pair.source = draw.source;
  pair.chosen_node = draw.chosen;
  pair.rejected_node = draw.rejected;
  apply_masks(pair);
  return pair;
}

std::vector<PreferencePair> sample_pairs(const TreeDump& dump, const SamplerConfig& config) {
  config.validate();
  const TreeIndex index(dump);
  const auto visited = prune_non_visited(index);
  const auto non_thought = prune_non_thought(index, visited);
  const auto chosen = chosen_set(index, visited, non_thought);

  Rng rng(derive_seed(config.seed, "pairs:" + dump.problem_id));
  std::vector<DrawnPair> pool_sb, pool_sd, pool_o;
  for (int c : chosen) {
    for (auto& d : sample_sb(index, visited, c, config.delta, rng)) pool_sb.push_back(d);
    if (auto d = sample_sd(index, visited, c, config.delta, rng)) pool_sd.push_back(*d);
    if (auto d = sample_o(index, visited, c, config.delta, rng)) pool_o.push_back(*d);
  }

  auto drawn = balance_and_cap(std::move(pool_sb), std::move(pool_sd), std::move(pool_o),
                               config.epsilon);
  std::vector<PreferencePair> pairs;
  pairs.reserve(drawn.size());
  for (const DrawnPair& d : drawn) pairs.push_back(realize_pair(index, d));

  std::sort(pairs.begin(), pairs.end(), [](const PreferencePair& a, const PreferencePair& b) {
    if (a.source != b.source) return static_cast<int>(a.source) < static_cast<int>(b.source);
    const double ma = a.q_chosen - a.q_rejected;
    const double mb = b.q_chosen - b.q_rejected;
    if (ma != mb) return ma > mb;
    if (a.chosen_node != b.chosen_node) return a.chosen_node < b.chosen_node;
    return a.rejected_node < b.rejected_node;
  });
  return pairs;
}

// ---------------------------------------------------------------------------

namespace {

ordered_json spans_to_json(const std::vector<Span>& spans) {
  ordered_json arr = ordered_json::array();
  for (const Span& s : spans) arr.push_back(ordered_json::array({s.begin, s.end}));
  return arr;
}

std::vector<Span> spans_from_json(const ordered_json& arr) {
  std::vector<Span> spans;
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 2) throw SchemaError("mask span must be a [begin, end] pair");
    spans.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>()});
  }
  return spans;
}

}  // namespace

std::string pair_to_json(const PreferencePair& pair) {
  ordered_json j;
  j["problem_id"] = pair.problem_id;
  j["prefix"] = pair.prefix;
  j["chosen"] = pair.chosen;
  j["rejected"] = pair.rejected;
  j["q_chosen"] = pair.q_chosen;
  j["q_rejected"] = pair.q_rejected;
  j["source"] = std::string(to_string(pair.source));
  j["mask_spans_chosen"] = spans_to_json(pair.mask_spans_chosen);
  j["mask_spans_rejected"] = spans_to_json(pair.mask_spans_rejected);
  return j.dump();
}

PreferencePair pair_from_json(const std::string& line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const std::exception& e) {
    throw SchemaError(std::string("pair line is not valid JSON: ") + e.what());
  }
  try {
    PreferencePair pair;
    pair.problem_id = j.at("problem_id").get<std::string>();
    pair.prefix = j.at("prefix").get<std::string>();
    pair.chosen = j.at("chosen").get<std::string>();
    pair.rejected = j.at("rejected").get<std::string>();
    pair.q_chosen = j.at("q_chosen").get<double>();
    pair.q_rejected = j.at("q_rejected").get<double>();
    auto source = pair_source_from(j.at("source").get<std::string>());
    if (!source) throw SchemaError("unknown pair source");
    pair.source = *source;
    pair.mask_spans_chosen = spans_from_json(j.at("mask_spans_chosen"));
    pair.mask_spans_rejected = spans_from_json(j.at("mask_spans_rejected"));
    pair.mask_spans_prefix = mask_spans(pair.prefix);
    return pair;
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw SchemaError(std::string("pair field error: ") + e.what());
  }
}

void write_pairs_file(std::span<const PreferencePair> pairs, const std::string& path) {
  std::string content;
  for (const PreferencePair& p : pairs) {
    content += pair_to_json(p);
    content += '\n';
  }
  write_file_atomic(path, content);
}

std::vector<PreferencePair> read_pairs_file(const std::string& path) {
  std::vector<PreferencePair> pairs;
  for (const std::string& line : split_lines(read_file(path))) {
    if (trim(line).empty()) continue;
    pairs.push_back(pair_from_json(line));
  }
  return pairs;
}

}  // namespace stepsearch
