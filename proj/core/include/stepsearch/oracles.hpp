#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stepsearch/grammar.hpp"

namespace stepsearch {

struct PolicySample {
  std::string step_text;
  double seq_logprob = 0.0;  // <= 0
  int token_count = 1;       // >= 1
};

struct RetrievedDoc {
  int rank = 1;  // 1-based, gapless
  std::string text;
  std::string source_id;
};

struct OracleEndpoint {
  std::string base_url;
  int timeout_ms = 10000;
  int retries = 2;
  std::optional<std::string> auth_token;
};

/// Fixed prompt layout handed to the policy, value and scorer oracles:
/// preamble, question, lettered options, then the serialized steps so far,
/// one per line. Log-probabilities are only comparable across rounds because
/// this rendering never changes.
inline constexpr const char* kStatePreamble =
    "Answer the multiple-choice question by reasoning in XML steps. Wrap each step in a "
    "step tag containing proposal, thought, action/action_input/observation or "
    "final_answer elements.";

std::string render_state(const Problem& problem, const Trajectory& prefix);
/// Same layout with the steps block supplied as already-serialized text.
std::string render_state(const Problem& problem, const std::string& steps_text);

class PolicyOracle {
 public:
  virtual ~PolicyOracle() = default;
  /// Returns exactly n samples; the engine drops unparsable ones.
  virtual std::vector<PolicySample> sample(const std::string& prefix, int n,
                                           double temperature) = 0;
};

class ValueOracle {
 public:
  virtual ~ValueOracle() = default;
  virtual double estimate(const std::string& prefix) = 0;
};

class RetrieverOracle {
 public:
  virtual ~RetrieverOracle() = default;
  virtual std::vector<RetrievedDoc> search(const std::string& query, int k) = 0;
};

class ReflectionOracle {
 public:
  virtual ~ReflectionOracle() = default;
  /// Free text bridging the wrong continuation to the target, given the
  /// grafted prefix. Inputs are serialized trajectory texts.
  virtual std::string write(const std::string& prefix, const std::string& wrong,
                            const std::string& target) = 0;
};

class ScorerOracle {
 public:
  virtual ~ScorerOracle() = default;
  /// Sequence log-probability of completion given prefix, with the given
  /// byte spans of the completion excluded from the sum.
  virtual double logprob(const std::string& prefix, const std::string& completion,
                         const std::vector<std::pair<std::size_t, std::size_t>>& mask_spans) = 0;
};

/// The full set of services the search loop consumes.
struct Oracles {
  PolicyOracle* policy = nullptr;
  ValueOracle* value = nullptr;
  RetrieverOracle* retriever = nullptr;
};

}  // namespace stepsearch
