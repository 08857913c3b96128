#include "fixtures.hpp"

#include <algorithm>
#include <set>

#include "stepsearch/rng.hpp"

namespace fixtures {

using namespace stepsearch;

Problem make_problem(int n_options, int gold, const std::string& id) {
  Problem p;
  p.id = id;
  p.question = "Which option is supported by the retrieved rule?";
  for (int i = 0; i < n_options; ++i)
    p.options.push_back("statement " + std::string(1, option_letter(i)));
  p.gold_answer = gold;
  return p;
}

std::vector<Problem> demo_problems() {
  std::vector<Problem> out;
  {
    Problem p;
    p.id = "p1";
    p.question =
        "Country R claims full territorial sovereignty over its exclusive economic zone and "
        "demands that foreign aircraft obtain permission before overflying it. Which statement "
        "is correct?";
    p.options = {"The claim is wrong; the coastal state holds only specified sovereign rights "
                 "in the zone",
                 "Foreign aircraft must always request permission before overflight",
                 "The zone belongs to the high seas in every respect",
                 "Sovereignty over the zone includes the airspace above it"};
    p.gold_answer = 0;
    out.push_back(std::move(p));
  }
  {
    Problem p;
    p.id = "p2";
    p.question =
        "A shop window displays a coat with a price tag. A customer insists on buying it at "
        "that price but the shop refuses to sell. Has a sales contract been formed?";
    p.options = {"Yes, the display is an offer and the customer accepted it",
                 "No, the display is an invitation to negotiate, so no contract exists",
                 "Yes, and the refusal is already a breach of contract",
                 "Only if the coat is the last one in stock"};
    p.gold_answer = 1;
    out.push_back(std::move(p));
  }
  {
    Problem p;
    p.id = "p3";
    p.question =
        "Zhou wheels away a bicycle from a shed, believing it to be his own identical model, "
        "discovers the mix-up at home and returns it the same evening. Does Zhou commit theft?";
    p.options = {"Yes, taking another's property is always theft",
                 "Yes, unless the owner forgives him",
                 "No, he lacked the intent to permanently deprive the owner",
                 "No, bicycles are not objects of theft"};
    p.gold_answer = 2;
    out.push_back(std::move(p));
  }
  return out;
}

std::string worked_trajectory_text() {
  return "<step> <proposal>I guess the answer might be A.</proposal> </step>\n"
         "<step> <thought>The question turns on what rights a coastal state holds over the "
         "zone, so the convention text is needed.</thought> <action>retriever</action> "
         "<action_input>Exclusive Economic Zone Territorial Sovereignty</action_input> "
         "<observation>Under the law of the sea convention, a coastal state does not hold "
         "territorial sovereignty over its exclusive economic zone; it holds sovereign rights "
         "over the natural resources of the zone.</observation> </step>\n"
         "<step> <thought>Option A says rights rather than sovereignty, matching the retrieved "
         "rule, so A looks correct.</thought> </step>\n"
         "<step> <thought>Option B overstates the freedoms; activities remain subject to the "
         "coastal state's laws.</thought> </step>\n"
         "<step> <thought>Option C describes control over customs and similar matters, which "
         "is narrower than sovereignty, so it does not contradict A.</thought> </step>\n"
         "<step> <thought>Option D calls the rights inherent, but they derive from the "
         "convention, so D fails.</thought> </step>\n"
         "<step> <final_answer>A</final_answer> </step>";
}

DumpBuilder::DumpBuilder(std::string problem_id, std::uint64_t seed) {
  dump_.problem_id = std::move(problem_id);
  dump_.rng_seed = seed;
}

int DumpBuilder::root(int visits, double value_sum) {
  TreeDumpNode n;
  n.id = static_cast<int>(dump_.nodes.size());
  n.visits = visits;
  n.value_sum = value_sum;
  dump_.nodes.push_back(std::move(n));
  return dump_.nodes.back().id;
}

int DumpBuilder::child(int parent, const Step& step, double prior, int visits, double q,
                       std::optional<bool> correct) {
  return child_raw(parent, serialize_step(step), prior, visits, q * visits,
                   step.kind == StepKind::FinalAnswer, correct);
}

int DumpBuilder::child_raw(int parent, const std::string& step_text, double prior, int visits,
                           double value_sum, bool terminal, std::optional<bool> correct) {
  TreeDumpNode n;
  n.id = static_cast<int>(dump_.nodes.size());
  n.parent = parent;
  n.step = step_text;
  n.prior = prior;
  n.visits = visits;
  n.value_sum = value_sum;
  n.terminal = terminal;
  n.correct = correct;
  if (terminal) n.leaf_value = correct.value_or(false) ? 1.0 : -1.0;
  dump_.nodes.push_back(std::move(n));
  return dump_.nodes.back().id;
}

namespace {

Step thought(const std::string& text) { return Step::thought(text); }

Step action(int variant) {
  return Step::action("retriever", "zone rights variant " + std::to_string(variant),
                      "retrieved rule text " + std::to_string(variant));
}

}  // namespace

std::vector<TreeDump> sampler_fixture_trees() {
  std::vector<TreeDump> trees;

  {
    // fx1: one correct leaf; forced sibling pair, margin-filtered sibling,
    // several other-depth candidates for the leaf.
    DumpBuilder b("fx1");
    const int r = b.root(12);
    const int p_a = b.child(r, Step::proposal(0), 0.5, 8, 0.6);
    const int p_b = b.child(r, Step::proposal(1), 0.5, 3, -0.5);
    const int t_main = b.child(p_a, thought("weigh the options"), 0.4, 5, 0.7);
    const int t_low = b.child(p_a, thought("hasty take"), 0.3, 2, 0.2);
    b.child(p_a, thought("stray idea"), 0.3, 1, 0.65);
    b.child(t_main, Step::final_answer(0), 1.0, 3, 1.0, true);
    (void)p_b;
    trees.push_back(b.dump());
    (void)t_low;
  }

  {
    // fx2: a non-thought correct leaf (answer straight after the action) plus
    // an expanded-but-unvisited sibling.
    DumpBuilder b("fx2");
    const int r = b.root(10);
    const int p_a = b.child(r, Step::proposal(0), 1.0, 9, 0.5);
    const int act = b.child(p_a, action(1), 0.5, 6, 0.55);
    b.child(p_a, thought("shallow idea"), 0.3, 2, 0.3);
    b.child(p_a, thought("never evaluated"), 0.2, 0, 0.0);
    b.child(act, Step::final_answer(0), 0.5, 3, 1.0, true);  // non-thought terminal
    const int bridge = b.child(act, thought("bridge from the observation"), 0.5, 2, 0.8);
    b.child(bridge, Step::final_answer(0), 1.0, 2, 1.0, true);
    trees.push_back(b.dump());
  }

  {
    // fx3: two correct leaves sharing the proposal+action prefix.
    DumpBuilder b("fx3");
    const int r = b.root(20);
    const int p_a = b.child(r, Step::proposal(0), 1.0, 18, 0.7);
    const int act = b.child(p_a, action(2), 0.7, 16, 0.75);
    const int t_low = b.child(p_a, thought("doubtful angle"), 0.3, 1, -0.2);
    const int t1 = b.child(act, thought("first reading"), 0.5, 7, 0.8);
    const int t2 = b.child(act, thought("second reading"), 0.5, 6, 0.85);
    b.child(t1, Step::final_answer(0), 1.0, 4, 1.0, true);
    b.child(t2, Step::final_answer(0), 1.0, 5, 1.0, true);
    (void)t_low;
    trees.push_back(b.dump());
  }

  {
    // fx4: deep chain with siblings at every level, an expanded wrong
    // proposal providing same-depth candidates, and a wrong non-thought leaf.
    DumpBuilder b("fx4");
    const int r = b.root(40);
    const int p_a = b.child(r, Step::proposal(0), 0.5, 30, 0.6);
    const int p_b = b.child(r, Step::proposal(1), 0.5, 9, -0.3);
    const int t_main = b.child(p_a, thought("main line"), 0.4, 20, 0.7);
    b.child(p_a, thought("flat line"), 0.3, 5, 0.1);
    b.child(p_a, thought("dead line"), 0.3, 4, 0.0);
    const int act = b.child(t_main, action(3), 0.5, 15, 0.8);
    b.child(t_main, thought("side looks"), 0.3, 3, 0.2);
    b.child(t_main, thought("other side"), 0.2, 1, 0.15);
    const int t_deep = b.child(act, thought("synthesis"), 0.6, 12, 0.9);
    b.child(act, Step::final_answer(1), 0.4, 2, -1.0, false);  // wrong, non-thought
    b.child(t_deep, Step::final_answer(0), 1.0, 9, 1.0, true);
    b.child(p_b, thought("wrong premise"), 0.6, 3, -0.4);
    b.child(p_b, thought("worse premise"), 0.4, 2, -0.5);
    trees.push_back(b.dump());
  }

  {
    // fx5: no correct leaf, so no pairs at all.
    DumpBuilder b("fx5");
    const int r = b.root(6);
    const int p_b = b.child(r, Step::proposal(1), 1.0, 5, -0.2);
    b.child(p_b, Step::final_answer(1), 0.55, 3, -1.0, false);
    b.child(p_b, thought("aimless"), 0.45, 1, 0.1);
    trees.push_back(b.dump());
  }

  return trees;
}

TreeDump reflection_topology_tree() {
  DumpBuilder b("fig");
  const int r = b.root(10);
  const int n1 = b.child(r, thought("shared prefix step"), 1.0, 10, 0.5);
  const int n2 = b.child(n1, thought("wrong branch start"), 0.5, 4, 0.1);
  const int n4 = b.child(n1, thought("good branch start"), 0.5, 5, 0.8);
  b.child(n2, Step::final_answer(1), 1.0, 2, -1.0, false);  // (5)
  b.child(n4, Step::final_answer(0), 1.0, 4, 1.0, true);    // (6)
  return b.dump();
}

// ---------------------------------------------------------------------------
// independent oracles

namespace {

struct RawTree {
  std::map<int, const TreeDumpNode*> by_id;
  std::map<int, std::optional<int>> parent;
  std::map<int, int> depth;
  int root = -1;

  explicit RawTree(const TreeDump& dump) {
    for (const auto& n : dump.nodes) {
      by_id[n.id] = &n;
      parent[n.id] = n.parent;
      if (!n.parent) root = n.id;
    }
    for (const auto& n : dump.nodes) {
      int d = 0;
      int cur = n.id;
      while (parent[cur]) {
        cur = *parent[cur];
        ++d;
      }
      depth[n.id] = d;
    }
  }

  std::vector<int> ancestors(int id) const {  // id itself included
    std::vector<int> out;
    int cur = id;
    out.push_back(cur);
    while (parent.at(cur)) {
      cur = *parent.at(cur);
      out.push_back(cur);
    }
    return out;
  }

  double q(int id) const {
    const auto* n = by_id.at(id);
    return n->value_sum / std::max(1, n->visits);
  }
};

bool path_is_non_thought(const RawTree& tree, int terminal_id) {
  // walk root->terminal collecting coarse kinds straight from the text
  std::vector<int> chain = tree.ancestors(terminal_id);
  std::reverse(chain.begin(), chain.end());
  int last_action = -1;
  std::vector<int> kinds;  // 0 other, 1 thought, 2 action, 3 final
  for (int id : chain) {
    const std::string& text = tree.by_id.at(id)->step;
    if (text.empty()) continue;
    const auto step = parse_step(text, 26);
    int kind = 0;
    if (step) {
      if (step->kind == StepKind::Thought) kind = 1;
      if (step->kind == StepKind::Action) kind = 2;
      if (step->kind == StepKind::FinalAnswer) kind = 3;
    }
    kinds.push_back(kind);
  }
  for (size_t i = 0; i < kinds.size(); ++i)
    if (kinds[i] == 2) last_action = static_cast<int>(i);
  for (size_t i = static_cast<size_t>(last_action + 1); i + 1 < kinds.size(); ++i)
    if (kinds[i] == 1) return false;
  return true;
}

struct OracleView {
  RawTree tree;
  std::set<int> visited;
  std::set<int> non_thought;
  std::vector<int> chosen;  // ascending

  explicit OracleView(const TreeDump& dump) : tree(dump) {
    for (const auto& n : dump.nodes)
      if (n.visits > 0 || n.id == tree.root) visited.insert(n.id);
    for (const auto& n : dump.nodes)
      if (n.terminal && visited.count(n.id) && path_is_non_thought(tree, n.id))
        non_thought.insert(n.id);
    std::set<int> s;
    for (const auto& n : dump.nodes) {
      if (!n.terminal || !n.correct.value_or(false)) continue;
      if (!visited.count(n.id) || non_thought.count(n.id)) continue;
      for (int a : tree.ancestors(n.id))
        if (a != tree.root) s.insert(a);
    }
    chosen.assign(s.begin(), s.end());
  }

  std::vector<int> candidates(int c, PairSource source, double delta) const {
    std::vector<int> out;
    const double qc = tree.q(c);
    const auto anc_c = tree.ancestors(c);
    for (int r : visited) {
      if (r == c || r == tree.root) continue;
      if (qc < tree.q(r) + delta) continue;
      const bool sibling = tree.parent.at(r) && tree.parent.at(c) &&
                           *tree.parent.at(r) == *tree.parent.at(c);
      const bool same_depth = tree.depth.at(r) == tree.depth.at(c);
      const auto anc_r = tree.ancestors(r);
      const bool related =
          std::find(anc_c.begin(), anc_c.end(), r) != anc_c.end() ||
          std::find(anc_r.begin(), anc_r.end(), c) != anc_r.end();
      switch (source) {
        case PairSource::Sb:
          if (sibling) out.push_back(r);
          break;
        case PairSource::Sd:
          if (!sibling && same_depth) out.push_back(r);
          break;
        case PairSource::O:
          if (!same_depth && !related) out.push_back(r);
          break;
        default:
          break;
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }
};

}  // namespace

int oracle_lca(const TreeDump& dump, int a, int b) {
  const RawTree tree(dump);
  const auto anc_a = tree.ancestors(a);
  const auto anc_b = tree.ancestors(b);
  int best = tree.root;
  int best_depth = -1;
  for (int x : anc_a) {
    if (std::find(anc_b.begin(), anc_b.end(), x) == anc_b.end()) continue;
    if (tree.depth.at(x) > best_depth) {
      best = x;
      best_depth = tree.depth.at(x);
    }
  }
  return best;
}

std::vector<OraclePair> oracle_enumerate(const TreeDump& dump, double delta) {
  const OracleView view(dump);
  std::vector<OraclePair> out;
  for (int c : view.chosen) {
    for (PairSource source : {PairSource::Sb, PairSource::Sd, PairSource::O}) {
      for (int r : view.candidates(c, source, delta))
        out.push_back({c, r, source, view.tree.q(c) - view.tree.q(r)});
    }
  }
  return out;
}

std::vector<OraclePair> oracle_expected_pairs(const TreeDump& dump, double delta, int epsilon,
                                              std::uint64_t seed) {
  const OracleView view(dump);
  Rng rng(derive_seed(seed, "pairs:" + dump.problem_id));

  std::vector<OraclePair> sb, sd, o;
  for (int c : view.chosen) {
    auto sb_cands = view.candidates(c, PairSource::Sb, delta);
    for (int draw = 0; draw < 2 && !sb_cands.empty(); ++draw) {
      const size_t pick = static_cast<size_t>(rng.uniform_int(static_cast<int>(sb_cands.size())));
      sb.push_back({c, sb_cands[pick], PairSource::Sb, view.tree.q(c) - view.tree.q(sb_cands[pick])});
      sb_cands.erase(sb_cands.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    auto sd_cands = view.candidates(c, PairSource::Sd, delta);
    if (!sd_cands.empty()) {
      const size_t pick = static_cast<size_t>(rng.uniform_int(static_cast<int>(sd_cands.size())));
      sd.push_back({c, sd_cands[pick], PairSource::Sd, view.tree.q(c) - view.tree.q(sd_cands[pick])});
    }
    auto o_cands = view.candidates(c, PairSource::O, delta);
    if (!o_cands.empty()) {
      const size_t pick = static_cast<size_t>(rng.uniform_int(static_cast<int>(o_cands.size())));
      o.push_back({c, o_cands[pick], PairSource::O, view.tree.q(c) - view.tree.q(o_cands[pick])});
    }
  }

  auto cap = [](std::vector<OraclePair>& pool, size_t limit) {
    std::sort(pool.begin(), pool.end(), [](const OraclePair& a, const OraclePair& b) {
      if (a.margin != b.margin) return a.margin > b.margin;
      if (a.chosen != b.chosen) return a.chosen < b.chosen;
      return a.rejected < b.rejected;
    });
    if (pool.size() > limit) pool.resize(limit);
  };
  cap(sb, static_cast<size_t>(epsilon / 2));
  cap(sd, static_cast<size_t>(epsilon / 4));
  cap(o, static_cast<size_t>(epsilon / 4));

  std::vector<OraclePair> out;
  out.insert(out.end(), sb.begin(), sb.end());
  out.insert(out.end(), sd.begin(), sd.end());
  out.insert(out.end(), o.begin(), o.end());
  return out;
}

ReplayStats oracle_replay(const TreeDump& dump, const std::vector<BackpropEntry>& log) {
  const RawTree tree(dump);
  ReplayStats stats;
  std::map<int, double> sums;
  for (const auto& entry : log) {
    for (int id : tree.ancestors(entry.node)) {
      stats.visits[id] += 1;
      sums[id] += entry.value;
    }
  }
  for (const auto& [id, v] : stats.visits) stats.mean[id] = sums[id] / v;
  return stats;
}

}  // namespace fixtures
