#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stepsearch/oracles.hpp"

namespace stepsearch {

/// Pulls the serialized-steps block out of a rendered state and returns it in
/// canonical form ("" when the prefix holds no steps yet).
std::string extract_steps_text(const std::string& rendered_prefix);

/// Table-driven policy. Entries are keyed by the canonical serialized steps
/// of the prefix (empty key = root). temperature 0 returns the top-n entries
/// by seq_logprob; otherwise the scripted list is returned verbatim.
class ScriptedPolicy final : public PolicyOracle {
 public:
  void script(std::string steps_key, std::vector<PolicySample> samples);
  void set_default(std::vector<PolicySample> samples);

  std::vector<PolicySample> sample(const std::string& prefix, int n, double temperature) override;

 private:
  std::map<std::string, std::vector<PolicySample>> table_;
  std::vector<PolicySample> default_;
  bool has_default_ = false;
};

/// Deterministic generator over a known problem set. Emits proposals at the
/// root, then retriever calls, bridging thoughts, and final answers such that
/// the only correct terminals follow proposal -> action -> thought -> answer.
/// Behavior depends only on (seed, prefix), so runs are reproducible no
/// matter how calls interleave.
class SyntheticPolicy final : public PolicyOracle {
 public:
  SyntheticPolicy(std::vector<Problem> problems, std::uint64_t seed, double garbage_rate = 0.05);

  std::vector<PolicySample> sample(const std::string& prefix, int n, double temperature) override;

 private:
  const Problem& problem_for(const std::string& prefix) const;

  std::vector<Problem> problems_;
  std::uint64_t seed_;
  double garbage_rate_;
};

class ConstantValue final : public ValueOracle {
 public:
  explicit ConstantValue(double v) : v_(v) {}
  double estimate(const std::string&) override { return v_; }

 private:
  double v_;
};

/// +magnitude when every proposal / final answer in the prefix matches the
/// gold option of its problem, -magnitude otherwise.
class GoldConsistentValue final : public ValueOracle {
 public:
  GoldConsistentValue(std::vector<Problem> problems, double magnitude = 0.9);
  double estimate(const std::string& prefix) override;

 private:
  std::vector<Problem> problems_;
  double magnitude_;
};

struct Article {
  std::string source_id;
  std::string text;
};

/// The built-in 20-article corpus the keyword retriever serves by default.
const std::vector<Article>& default_articles();

/// Scores articles by the number of distinct query tokens they contain;
/// zero-score articles are dropped, ties break on source_id.
class KeywordRetriever final : public RetrieverOracle {
 public:
  explicit KeywordRetriever(std::vector<Article> articles = default_articles());
  std::vector<RetrievedDoc> search(const std::string& query, int k) override;

 private:
  std::vector<Article> articles_;
};

/// Fills one fixed reflection template from the first thought found in the
/// wrong continuation.
class TemplateReflection final : public ReflectionOracle {
 public:
  std::string write(const std::string& prefix, const std::string& wrong,
                    const std::string& target) override;
};

/// Deterministic stand-in for a log-probability scorer: the result depends on
/// the unmasked length plus a content hash, and is always negative.
class HashScorer final : public ScorerOracle {
 public:
  explicit HashScorer(std::uint64_t seed) : seed_(seed) {}
  double logprob(const std::string& prefix, const std::string& completion,
                 const std::vector<std::pair<std::size_t, std::size_t>>& mask_spans) override;

 private:
  std::uint64_t seed_;
};

}  // namespace stepsearch
