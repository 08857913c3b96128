#pragma once

#include <memory>
#include <string>
#include <vector>

#include "stepsearch/oracles.hpp"

namespace stepsearch {

// JSON-over-HTTP clients for the oracle protocol:
//   POST /v1/sample  {prefix, n, temperature}        -> {samples: [{text, seq_logprob, token_count}]}
//   POST /v1/value   {prefix}                        -> {v}
//   POST /v1/search  {query, k}                      -> {docs: [{rank, text, source_id}]}
//   POST /v1/reflect {prefix, wrong, target}         -> {text}
//   POST /v1/logprob {prefix, completion, mask_spans} -> {logprob}
// Timeouts, transport faults and malformed bodies are retried endpoint.retries
// times, then surfaced as the matching *Unavailable error.

class HttpPolicyOracle final : public PolicyOracle {
 public:
  explicit HttpPolicyOracle(OracleEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  std::vector<PolicySample> sample(const std::string& prefix, int n, double temperature) override;

 private:
  OracleEndpoint endpoint_;
};

class HttpValueOracle final : public ValueOracle {
 public:
  explicit HttpValueOracle(OracleEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  double estimate(const std::string& prefix) override;

 private:
  OracleEndpoint endpoint_;
};

class HttpRetrieverOracle final : public RetrieverOracle {
 public:
  explicit HttpRetrieverOracle(OracleEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  std::vector<RetrievedDoc> search(const std::string& query, int k) override;

 private:
  OracleEndpoint endpoint_;
};

class HttpReflectionOracle final : public ReflectionOracle {
 public:
  explicit HttpReflectionOracle(OracleEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  std::string write(const std::string& prefix, const std::string& wrong,
                    const std::string& target) override;

 private:
  OracleEndpoint endpoint_;
};

class HttpScorerOracle final : public ScorerOracle {
 public:
  explicit HttpScorerOracle(OracleEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  double logprob(const std::string& prefix, const std::string& completion,
                 const std::vector<std::pair<std::size_t, std::size_t>>& mask_spans) override;

 private:
  OracleEndpoint endpoint_;
};

/// Serves any oracle implementations over the wire protocol above. Backed by
/// the mocks this makes the whole pipeline runnable offline through HTTP.
/// Oracles may be null; their endpoints then answer 501.
class OracleServer {
 public:
  OracleServer(PolicyOracle* policy, ValueOracle* value, RetrieverOracle* retriever,
               ReflectionOracle* reflection, ScorerOracle* scorer);
  ~OracleServer();

  OracleServer(const OracleServer&) = delete;
  OracleServer& operator=(const OracleServer&) = delete;

  /// Binds 127.0.0.1 on the given port (0 picks a free one) and serves on a
  /// background thread. Returns the bound port.
  int start(int port = 0);
  void stop();
  std::string base_url() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace stepsearch
