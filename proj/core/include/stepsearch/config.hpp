#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "stepsearch/engine.hpp"
#include "stepsearch/losses.hpp"
#include "stepsearch/oracles.hpp"
#include "stepsearch/pair_sampler.hpp"
#include "stepsearch/porp.hpp"

namespace stepsearch {

/// Everything a pipeline run needs, loaded from a flat `key = value` file
/// (one pair per line, '#' comments). Unknown keys are rejected so typos
/// do not silently fall back to defaults.
struct PipelineConfig {
  EngineConfig engine;
  SamplerConfig sampler;
  ReflectionConfig reflection;
  LossWeights weights;

  int round_index = 0;   // 0 = warmup stage
  int workers = 1;

  // mock: built-in deterministic oracles; http: wire clients below
  std::string oracle_mode = "mock";
  std::string mock_value = "gold";  // gold | zero
  std::string policy_url;
  std::string value_url;
  std::string retriever_url;
  std::string reflection_url;
  std::string scorer_url;      // policy-side logprob scorer
  std::string ref_scorer_url;  // reference-side logprob scorer
  int timeout_ms = 10000;
  int retries = 2;

  void validate() const;  // throws ConfigError

  /// Sets the shared seed for search, sampling and reflection together.
  void set_seed(std::uint64_t seed) {
    engine.rng_seed = seed;
    sampler.seed = seed;
    reflection.seed = seed;
  }

  OracleEndpoint endpoint(const std::string& url) const;
};

PipelineConfig parse_config(const std::string& text);       // throws ConfigError
PipelineConfig load_config_file(const std::string& path);   // throws ConfigError / IoError
std::string serialize_config(const PipelineConfig& config); // stable key order

/// standard: as loaded; reflection: simulation budget doubled to 80.
PipelineConfig apply_preset(PipelineConfig config, const std::string& preset);

}  // namespace stepsearch
