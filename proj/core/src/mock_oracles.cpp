#include "stepsearch/mock_oracles.hpp"

#include <algorithm>
#include <set>

#include "stepsearch/errors.hpp"
#include "stepsearch/rng.hpp"
#include "stepsearch/text.hpp"

namespace stepsearch {

namespace {

// Case-insensitive find of "<step" outside the preamble (the preamble never
// contains angle brackets).
size_t find_first_step(const std::string& text) {
  const std::string lower = to_lower(text);
  return lower.find("<step");
}

int count_tokens(const std::string& text) {
  const auto toks = word_tokens(text);
  return std::max<int>(1, static_cast<int>(toks.size()));
}

PolicySample make_sample(std::string text, double per_token_cost) {
  PolicySample s;
  s.token_count = count_tokens(text);
  s.seq_logprob = -per_token_cost * s.token_count;
  s.step_text = std::move(text);
  return s;
}

}  // namespace

std::string extract_steps_text(const std::string& rendered_prefix) {
  const size_t pos = find_first_step(rendered_prefix);
  if (pos == std::string::npos) return "";
  auto traj = parse_trajectory(rendered_prefix.substr(pos), 26);
  if (!traj) return "";
  return serialize_trajectory(*traj);
}

// ---------------------------------------------------------------------------
// ScriptedPolicy

void ScriptedPolicy::script(std::string steps_key, std::vector<PolicySample> samples) {
  table_[std::move(steps_key)] = std::move(samples);
}

void ScriptedPolicy::set_default(std::vector<PolicySample> samples) {
  default_ = std::move(samples);
  has_default_ = true;
}

std::vector<PolicySample> ScriptedPolicy::sample(const std::string& prefix, int n,
                                                 double temperature) {
  const std::string key = extract_steps_text(prefix);
  auto it = table_.find(key);
  const std::vector<PolicySample>* entries = nullptr;
  if (it != table_.end()) {
    entries = &it->second;
  } else if (has_default_) {
    entries = &default_;
  } else {
    throw PolicyUnavailable("no scripted samples for prefix key: '" + key + "'");
  }
  std::vector<PolicySample> out = *entries;
  if (temperature == 0.0) {
    std::stable_sort(out.begin(), out.end(), [](const PolicySample& a, const PolicySample& b) {
      return a.seq_logprob > b.seq_logprob;
    });
  }
  if (static_cast<int>(out.size()) > n) out.resize(static_cast<size_t>(n));
  return out;
}

// ---------------------------------------------------------------------------
// SyntheticPolicy

SyntheticPolicy::SyntheticPolicy(std::vector<Problem> problems, std::uint64_t seed,
                                 double garbage_rate)
    : problems_(std::move(problems)), seed_(seed), garbage_rate_(garbage_rate) {}

const Problem& SyntheticPolicy::problem_for(const std::string& prefix) const {
  for (const Problem& p : problems_) {
    if (prefix.find("Question: " + p.question) != std::string::npos) return p;
  }
  throw PolicyUnavailable("prefix does not match any known problem");
}

std::vector<PolicySample> SyntheticPolicy::sample(const std::string& prefix, int n,
                                                  double /*temperature*/) {
  const Problem& problem = problem_for(prefix);
  const int n_options = problem.option_count();
  Rng rng(mix_seed(seed_, fnv1a(prefix)));

  Trajectory steps;
  const std::string steps_text = extract_steps_text(prefix);
  if (!steps_text.empty()) {
    auto parsed = parse_trajectory(steps_text, n_options);
    if (parsed) steps = std::move(*parsed);
  }

  bool has_action = false;
  for (const Step& s : steps.steps) has_action |= s.kind == StepKind::Action;
  const StepKind last = steps.empty() ? StepKind::Proposal : steps.steps.back().kind;

  auto query_for = [&](int variant) {
    std::string q = "keywords";
    const auto toks = word_tokens(problem.question);
    for (size_t i = 0; i < toks.size() && i < 6; ++i) q += " " + toks[i];
    if (variant > 0) q += " detail " + std::to_string(variant);
    return q;
  };
  auto action_step = [&](int variant) {
    return serialize_step(Step::action("retriever", query_for(variant)));
  };
  auto thought_step = [&](int variant) {
    static const char* kTemplates[] = {
        "Weighing the options against what the question states before settling on one.",
        "The retrieved passage narrows things down; checking which option it supports.",
        "Comparing each option with the rule just found and discarding the mismatches.",
        "One option contradicts the retrieved rule, so it can be ruled out first.",
        "Re-reading the question to make sure no qualifier changes the conclusion.",
    };
    return serialize_step(Step::thought(kTemplates[variant % 5]));
  };
  auto wrong_option = [&]() {
    int o = rng.uniform_int(n_options);
    if (o == problem.gold_answer) o = (o + 1) % n_options;
    return o;
  };

  std::vector<std::string> texts;
  texts.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::string text;
    if (steps.empty()) {
      // Root-level proposals (used when random proposal is off): mimic the
      // low-diversity behavior of a real sampler by favoring one option.
      const int favorite = static_cast<int>(fnv1a(problem.id) % static_cast<std::uint64_t>(n_options));
      const int opt = rng.bernoulli(0.7) ? favorite : rng.uniform_int(n_options);
      text = serialize_step(Step::proposal(opt));
    } else if (steps.terminal()) {
      text = thought_step(i);
    } else if (last == StepKind::Action) {
      // After an observation: guarantee one bridging thought; the rest may
      // answer straight away (always a wrong option: the plain answer-after-
      // retrieval shortcut never hits gold in this domain) or re-query.
      if (i == 0) {
        text = thought_step(rng.uniform_int(5));
      } else if (rng.bernoulli(0.4)) {
        text = serialize_step(Step::final_answer(wrong_option()));
      } else if (rng.bernoulli(0.3)) {
        text = action_step(1 + rng.uniform_int(3));
      } else {
        text = thought_step(rng.uniform_int(5));
      }
    } else if (last == StepKind::Thought && has_action) {
      // Thought after retrieval: the gold answer becomes available.
      if (i == 0 || rng.bernoulli(0.5)) {
        text = serialize_step(Step::final_answer(problem.gold_answer));
      } else if (rng.bernoulli(0.5)) {
        text = serialize_step(Step::final_answer(rng.uniform_int(n_options)));
      } else {
        text = thought_step(rng.uniform_int(5));
      }
    } else {
      // After a proposal (or thoughts with no retrieval yet): guarantee one
      // retriever call; wrong answers and filler thoughts otherwise.
      if (i == 0) {
        text = action_step(0);
      } else if (rng.bernoulli(0.35)) {
        text = serialize_step(Step::final_answer(wrong_option()));
      } else if (rng.bernoulli(0.4)) {
        text = action_step(1 + rng.uniform_int(3));
      } else {
        text = thought_step(rng.uniform_int(5));
      }
    }
    if (i != 0 && rng.bernoulli(garbage_rate_)) {
      text = "<step><thought>left dangling";  // unparsable on purpose
    }
    texts.push_back(std::move(text));
  }

  std::vector<PolicySample> out;
  out.reserve(texts.size());
  for (auto& t : texts) out.push_back(make_sample(std::move(t), 0.2 + 0.6 * rng.uniform01()));
  return out;
}

// ---------------------------------------------------------------------------
// Values

GoldConsistentValue::GoldConsistentValue(std::vector<Problem> problems, double magnitude)
    : problems_(std::move(problems)), magnitude_(magnitude) {}

double GoldConsistentValue::estimate(const std::string& prefix) {
  const Problem* problem = nullptr;
  for (const Problem& p : problems_) {
    if (prefix.find("Question: " + p.question) != std::string::npos) {
      problem = &p;
      break;
    }
  }
  if (!problem) throw ValueUnavailable("prefix does not match any known problem");

  const std::string steps_text = extract_steps_text(prefix);
  if (steps_text.empty()) return magnitude_;
  auto traj = parse_trajectory(steps_text, problem->option_count());
  if (!traj) return 0.0;
  for (const Step& s : traj->steps) {
    if ((s.kind == StepKind::Proposal || s.kind == StepKind::FinalAnswer) &&
        s.option != problem->gold_answer)
      return -magnitude_;
  }
  return magnitude_;
}

// ---------------------------------------------------------------------------
// Retriever

const std::vector<Article>& default_articles() {
  static const std::vector<Article> kArticles = {
      {"sea-eez-rights",
       "Under the law of the sea convention, a coastal state does not hold territorial "
       "sovereignty over its exclusive economic zone. It holds sovereign rights for exploring, "
       "exploiting, conserving and managing the natural resources of the zone's waters, seabed "
       "and subsoil."},
      {"sea-eez-control",
       "Within the exclusive economic zone, the coastal state may exercise control limited to "
       "specific matters such as customs, fiscal, immigration and sanitary regulation, without "
       "acquiring sovereignty over the zone or the airspace above it."},
      {"sea-high-seas",
       "On the high seas every state enjoys freedom of navigation, overflight and the laying of "
       "submarine cables and pipelines, subject to due regard for the interests of other "
       "states."},
      {"contract-formation",
       "A contract is formed when an offer meets an unqualified acceptance, the parties intend "
       "to create legal relations, and consideration or a lawful cause supports the promise."},
      {"contract-offer",
       "An invitation to negotiate, such as a displayed price list or shop window exhibit, is "
       "not an offer; it merely invites customers to make offers the seller remains free to "
       "accept or refuse."},
      {"contract-breach",
       "When a party fails to perform a contractual obligation, the injured party may demand "
       "performance, claim damages for the resulting loss, or rescind the contract where the "
       "breach defeats its purpose."},
      {"crime-theft",
       "Theft is the taking of another person's movable property without consent and with the "
       "intent to permanently deprive the owner of it; taking one's own property by mistake "
       "lacks that intent."},
      {"crime-intent",
       "A crime is intentional when the actor knows the conduct will bring about a harmful "
       "result and wishes or knowingly allows that result to occur."},
      {"crime-negligence",
       "A person acts negligently when they fail to foresee a harmful result they should have "
       "foreseen, or foresee it yet lightly assume it can be avoided, and the harm occurs."},
      {"tort-liability",
       "One who through fault infringes another's civil rights bears tort liability, typically "
       "by compensating the loss; liability without fault applies only where a statute so "
       "provides."},
      {"property-ownership",
       "Ownership entitles the holder to possess, use, benefit from and dispose of a thing "
       "within the limits of law, and to exclude unlawful interference by others."},
      {"civil-capacity",
       "A minor's capacity for civil conduct is limited; transactions beyond the minor's age "
       "and intellect require ratification by a statutory agent to take effect."},
      {"procedure-jurisdiction",
       "A civil action is ordinarily brought before the court of the defendant's domicile; a "
       "contract dispute may also be heard by the court of the place of performance."},
      {"evidence-burden",
       "The party asserting a fact bears the burden of producing evidence for it; failing to "
       "discharge the burden means bearing the unfavorable consequence of non-proof."},
      {"admin-review",
       "A person dissatisfied with a specific administrative act may apply for administrative "
       "reconsideration or file an administrative lawsuit within the statutory time limit."},
      {"labor-contract",
       "An employment relationship is established on the day the worker begins work; a written "
       "labor contract should be concluded within one month of that day."},
      {"marriage-property",
       "Property acquired by spouses during the marriage is jointly owned unless the law "
       "provides otherwise or the spouses have validly agreed otherwise."},
      {"succession-will",
       "Where several wills conflict, the most recent valid will controls the disposition; a "
       "notarized will enjoys no automatic priority over a later handwritten one."},
      {"ip-copyright",
       "Copyright arises upon the creation of a work without any registration; protection "
       "covers the expression of a work, not the ideas, procedures or methods it describes."},
      {"company-liability",
       "A company is liable for its debts with all of its assets, while shareholders are "
       "liable only to the extent of their subscribed capital contributions."},
  };
  return kArticles;
}

KeywordRetriever::KeywordRetriever(std::vector<Article> articles)
    : articles_(std::move(articles)) {}

std::vector<RetrievedDoc> KeywordRetriever::search(const std::string& query, int k) {
  if (trim(query).empty()) throw InvalidQuery("empty retriever query");
  if (k < 1) throw InvalidQuery("retriever k must be >= 1");

  std::set<std::string> query_tokens;
  for (const auto& t : word_tokens(query)) query_tokens.insert(to_lower(t));

  struct Scored {
    int score;
    const Article* article;
  };
  std::vector<Scored> scored;
  for (const Article& a : articles_) {
    std::set<std::string> doc_tokens;
    for (const auto& t : word_tokens(a.text)) doc_tokens.insert(to_lower(t));
    int score = 0;
    for (const auto& t : query_tokens)
      if (doc_tokens.count(t)) ++score;
    if (score > 0) scored.push_back({score, &a});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.article->source_id < b.article->source_id;
  });

  std::vector<RetrievedDoc> docs;
  for (size_t i = 0; i < scored.size() && static_cast<int>(i) < k; ++i) {
    RetrievedDoc d;
    d.rank = static_cast<int>(i) + 1;
    d.text = scored[i].article->text;
    d.source_id = scored[i].article->source_id;
    docs.push_back(std::move(d));
  }
  return docs;
}

// ---------------------------------------------------------------------------
// Reflection and scorer

std::string TemplateReflection::write(const std::string& /*prefix*/, const std::string& wrong,
                                      const std::string& target) {
  if (wrong.empty() || target.empty()) throw ReflectionUnavailable("empty reflection input");
  std::string subject = "the earlier step";
  auto traj = parse_trajectory(wrong, 26);
  if (traj) {
    for (const Step& s : traj->steps) {
      const std::string& candidate = s.text;  // thought content or action preamble
      if (!candidate.empty()) {
        const auto toks = word_tokens(candidate);
        std::string head;
        for (size_t i = 0; i < toks.size() && i < 8; ++i) {
          if (i) head += ' ';
          head += toks[i];
        }
        if (!head.empty()) {
          subject = "\"" + head + "\"";
          break;
        }
      }
    }
  }
  return "The previous reasoning about " + subject +
         " is flawed; reconsidering the retrieved facts, the earlier conclusion does not hold, "
         "so each option must be re-checked before answering.";
}

double HashScorer::logprob(const std::string& prefix, const std::string& completion,
                           const std::vector<std::pair<std::size_t, std::size_t>>& mask_spans) {
  std::size_t masked = 0;
  for (const auto& [b, e] : mask_spans) {
    const std::size_t begin = std::min(b, completion.size());
    const std::size_t end = std::min(e, completion.size());
    if (end > begin) masked += end - begin;
  }
  const std::size_t unmasked = completion.size() - std::min(masked, completion.size());
  const std::uint64_t h = mix_seed(seed_, fnv1a(prefix + "\x1e" + completion));
  return -0.01 * static_cast<double>(unmasked) - 1e-4 * static_cast<double>(h % 1000) - 1e-6;
}

}  // namespace stepsearch
