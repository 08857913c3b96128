#include "stepsearch/engine.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "stepsearch/bleu.hpp"
#include "stepsearch/errors.hpp"

namespace stepsearch {

void EngineConfig::validate() const {
  if (c_puct <= 0) throw ConfigError("c_puct must be positive");
  if (n_expand < 1) throw ConfigError("n_expand must be >= 1");
  if (temperature <= 0) throw ConfigError("temperature must be positive");
  if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
  if (simulations < 0) throw ConfigError("simulations must be >= 0");
  if (top_k_retrieval < 1) throw ConfigError("top_k_retrieval must be >= 1");
  if (bleu_merge_threshold <= 0 || bleu_merge_threshold > 1)
    throw ConfigError("bleu_merge_threshold must be in (0, 1]");
}

EngineConfig reflection_preset(EngineConfig base) {
  base.simulations = 80;
  return base;
}

double puct_score(double q, double prior, int parent_visits, int child_visits, double c_puct) {
  return q + c_puct * prior * std::sqrt(static_cast<double>(parent_visits)) /
                 (static_cast<double>(child_visits) + 1.0);
}

NodeId select_leaf(const SearchTree& tree, const EngineConfig& config) {
  NodeId cur = tree.root();
  while (true) {
    const SearchNode& n = tree.node(cur);
    if (n.is_terminal || n.children.empty()) return cur;
    NodeId best = -1;
    double best_score = 0.0;
    for (NodeId child_id : n.children) {
      const SearchNode& child = tree.node(child_id);
      if (child.dead_end) continue;
      const double score =
          puct_score(child.q(), child.prior, n.visits, child.visits, config.c_puct);
      if (best < 0 || score > best_score) {
        best = child_id;
        best_score = score;
      }
    }
    if (best < 0) return cur;  // every child is a dead end
    cur = best;
  }
}

namespace {

struct Candidate {
  Step step;
  double mass = 0.0;  // pre-normalization prior mass; merged samples add up
};

void fill_observation(Step& step, RetrieverOracle& retriever, int top_k) {
  if (step.kind != StepKind::Action || step.observation.has_value()) return;
  std::string obs;
  try {
    const auto docs = retriever.search(step.input, top_k);
    for (size_t i = 0; i < docs.size(); ++i) {
      if (i) obs += '\n';
      obs += docs[i].text;
    }
  } catch (const OracleError& e) {
    std::cerr << "[warn] retrieval failed, attaching empty observation: " << e.what() << "\n";
  }
  step.observation = std::move(obs);
  step.raw_text = serialize_step(step);
}

}  // namespace

std::vector<NodeId> expand(SearchTree& tree, NodeId id, const Oracles& oracles,
                           const EngineConfig& config) {
  const SearchNode& node = tree.node(id);
  if (node.is_terminal) throw AlreadyExpanded(id);
  if (!node.children.empty() || node.dead_end) throw AlreadyExpanded(id);
  if (node.depth >= config.max_depth) throw DepthExceeded(id);

  const std::string prefix = render_state(tree.problem(), tree.path_to(id));
  const auto samples = oracles.policy->sample(prefix, config.n_expand, config.temperature);

  std::vector<Candidate> merged;
  for (const PolicySample& s : samples) {
    auto step = parse_step(s.step_text, tree.problem());
    if (!step) continue;  // drop what cannot be understood
    // The tree stores canonical text: prose around option letters collapses
    // to the bare letter, so dumps re-parse without the problem context.
    step->raw_text = serialize_step(*step);
    const double mass =
        std::exp(s.seq_logprob / static_cast<double>(std::max(1, s.token_count)));
    bool absorbed = false;
    for (Candidate& c : merged) {
      if (bleu4_sym(step->raw_text, c.step.raw_text) > config.bleu_merge_threshold) {
        c.mass += mass;  // near-duplicate: keep the first text, add the mass
        absorbed = true;
        break;
      }
    }
    if (!absorbed) merged.push_back({std::move(*step), mass});
  }

  if (merged.empty()) {
    tree.mutable_node(id).dead_end = true;
    return {};
  }

  double total = 0.0;
  for (const Candidate& c : merged) total += c.mass;
  std::vector<NodeId> children;
  children.reserve(merged.size());
  for (Candidate& c : merged) {
    fill_observation(c.step, *oracles.retriever, config.top_k_retrieval);
    children.push_back(tree.add_child(id, std::move(c.step), c.mass / total));
  }
  return children;
}

std::vector<NodeId> random_proposal_expand(SearchTree& tree, NodeId root,
                                           const EngineConfig& config, Rng& rng) {
  const int n_options = tree.problem().option_count();
  std::vector<int> distinct;
  for (int i = 0; i < config.n_expand; ++i) {
    const int opt = rng.uniform_int(n_options);
    if (std::find(distinct.begin(), distinct.end(), opt) == distinct.end())
      distinct.push_back(opt);
  }
  const double prior = 1.0 / static_cast<double>(distinct.size());
  std::vector<NodeId> children;
  children.reserve(distinct.size());
  for (int opt : distinct) children.push_back(tree.add_child(root, Step::proposal(opt), prior));
  return children;
}

double evaluate(SearchTree& tree, NodeId id, ValueOracle& value) {
  const SearchNode& node = tree.node(id);
  if (node.is_terminal) {
    const double v = node.is_correct.value_or(false) ? 1.0 : -1.0;
    tree.record_evaluation(id, v);
    return v;
  }
  if (node.leaf_value) return *node.leaf_value;  // first estimate is cached
  double v = value.estimate(render_state(tree.problem(), tree.path_to(id)));
  if (v < -1.0 || v > 1.0 || !std::isfinite(v)) {
    std::cerr << "[warn] value estimate " << v << " clamped to [-1, 1]\n";
    v = std::isnan(v) ? 0.0 : std::clamp(v, -1.0, 1.0);
  }
  tree.record_evaluation(id, v);
  return v;
}

bool has_expandable_node(const SearchTree& tree, const EngineConfig& config) {
  for (const SearchNode& n : tree.nodes()) {
    if (!n.is_terminal && !n.dead_end && n.children.empty() && n.depth < config.max_depth)
      return true;
  }
  return false;
}

SearchTree run_search(const Problem& problem, const Oracles& oracles,
                      const EngineConfig& config) {
  config.validate();
  if (!problem.valid()) throw ConfigError("invalid problem: " + problem.id);

  SearchTree tree(problem, config.rng_seed);
  Rng rng(config.rng_seed);

  for (int sim = 0; sim < config.simulations; ++sim) {
    if (!has_expandable_node(tree, config)) break;
    try {
      const NodeId leaf = select_leaf(tree, config);
      const SearchNode& n = tree.node(leaf);
      if (!n.is_terminal && !n.dead_end && n.children.empty() && n.depth < config.max_depth) {
        if (leaf == tree.root() && config.random_proposal) {
          random_proposal_expand(tree, leaf, config, rng);
        } else {
          expand(tree, leaf, oracles, config);
        }
      }
      const double v = evaluate(tree, leaf, *oracles.value);
      tree.backpropagate(leaf, v);
    } catch (const OracleError& e) {
      std::cerr << "[warn] simulation " << sim << " skipped: " << e.what() << "\n";
    }
  }
  return tree;
}

}  // namespace stepsearch
