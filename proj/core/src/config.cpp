#include "stepsearch/config.hpp"

#include <charconv>
#include <functional>
#include <sstream>

#include "stepsearch/errors.hpp"
#include "stepsearch/io.hpp"
#include "stepsearch/text.hpp"

namespace stepsearch {

void PipelineConfig::validate() const {
  engine.validate();
  sampler.validate();
  reflection.validate();
  if (round_index < 0) throw ConfigError("round_index must be >= 0");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (oracle_mode != "mock" && oracle_mode != "http")
    throw ConfigError("oracle_mode must be 'mock' or 'http'");
  if (mock_value != "gold" && mock_value != "zero")
    throw ConfigError("mock_value must be 'gold' or 'zero'");
  if (timeout_ms <= 0) throw ConfigError("timeout_ms must be positive");
  if (retries < 0) throw ConfigError("retries must be >= 0");
}

OracleEndpoint PipelineConfig::endpoint(const std::string& url) const {
  OracleEndpoint e;
  e.base_url = url;
  e.timeout_ms = timeout_ms;
  e.retries = retries;
  return e;
}

namespace {

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const double d = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + value + "'");
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  long long out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("config key '" + key + "' expects an integer, got '" + value + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("config key '" + key + "' expects an unsigned integer, got '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw ConfigError("config key '" + key + "' expects a boolean, got '" + value + "'");
}

}  // namespace

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig cfg;
  const std::map<std::string, std::function<void(const std::string&, const std::string&)>>
      setters = {
          {"c_puct", [&](auto& k, auto& v) { cfg.engine.c_puct = parse_double(k, v); }},
          {"n_expand", [&](auto& k, auto& v) { cfg.engine.n_expand = (int)parse_int(k, v); }},
          {"temperature", [&](auto& k, auto& v) { cfg.engine.temperature = parse_double(k, v); }},
          {"max_depth",
           [&](auto& k, auto& v) {
             cfg.engine.max_depth = (int)parse_int(k, v);
             cfg.reflection.max_depth = cfg.engine.max_depth;
           }},
          {"simulations", [&](auto& k, auto& v) { cfg.engine.simulations = (int)parse_int(k, v); }},
          {"top_k_retrieval",
           [&](auto& k, auto& v) { cfg.engine.top_k_retrieval = (int)parse_int(k, v); }},
          {"bleu_merge_threshold",
           [&](auto& k, auto& v) { cfg.engine.bleu_merge_threshold = parse_double(k, v); }},
          {"random_proposal",
           [&](auto& k, auto& v) { cfg.engine.random_proposal = parse_bool(k, v); }},
          {"rng_seed",
           [&](auto& k, auto& v) {
             cfg.engine.rng_seed = parse_u64(k, v);
             cfg.sampler.seed = cfg.engine.rng_seed;
             cfg.reflection.seed = cfg.engine.rng_seed;
           }},
          {"delta",
           [&](auto& k, auto& v) {
             cfg.sampler.delta = parse_double(k, v);
             cfg.reflection.delta = cfg.sampler.delta;
           }},
          {"epsilon",
           [&](auto& k, auto& v) {
             cfg.sampler.epsilon = (int)parse_int(k, v);
             cfg.reflection.epsilon = cfg.sampler.epsilon;
           }},
          {"reflection_weight_gap",
           [&](auto& k, auto& v) { cfg.reflection.weight_gap = parse_double(k, v); }},
          {"reflection_weight_length",
           [&](auto& k, auto& v) { cfg.reflection.weight_length = parse_double(k, v); }},
          {"reflection_split_blank_lines",
           [&](auto& k, auto& v) { cfg.reflection.split_blank_lines = parse_bool(k, v); }},
          {"beta", [&](auto& k, auto& v) { cfg.weights.beta = parse_double(k, v); }},
          {"gamma", [&](auto& k, auto& v) { cfg.weights.gamma = parse_double(k, v); }},
          {"alpha1", [&](auto& k, auto& v) { cfg.weights.alpha1 = parse_double(k, v); }},
          {"alpha2", [&](auto& k, auto& v) { cfg.weights.alpha2 = parse_double(k, v); }},
          {"alpha3", [&](auto& k, auto& v) { cfg.weights.alpha3 = parse_double(k, v); }},
          {"round_index", [&](auto& k, auto& v) { cfg.round_index = (int)parse_int(k, v); }},
          {"workers", [&](auto& k, auto& v) { cfg.workers = (int)parse_int(k, v); }},
          {"oracle_mode", [&](auto&, auto& v) { cfg.oracle_mode = v; }},
          {"mock_value", [&](auto&, auto& v) { cfg.mock_value = v; }},
          {"policy_url", [&](auto&, auto& v) { cfg.policy_url = v; }},
          {"value_url", [&](auto&, auto& v) { cfg.value_url = v; }},
          {"retriever_url", [&](auto&, auto& v) { cfg.retriever_url = v; }},
          {"reflection_url", [&](auto&, auto& v) { cfg.reflection_url = v; }},
          {"scorer_url", [&](auto&, auto& v) { cfg.scorer_url = v; }},
          {"ref_scorer_url", [&](auto&, auto& v) { cfg.ref_scorer_url = v; }},
          {"timeout_ms", [&](auto& k, auto& v) { cfg.timeout_ms = (int)parse_int(k, v); }},
          {"retries", [&](auto& k, auto& v) { cfg.retries = (int)parse_int(k, v); }},
      };

  int line_no = 0;
  for (const std::string& raw : split_lines(text)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + " is not 'key = value'");
    const std::string key{trim(line.substr(0, eq))};
    const std::string value{trim(line.substr(eq + 1))};
    auto it = setters.find(key);
    if (it == setters.end())
      throw ConfigError("unknown config key '" + key + "' on line " + std::to_string(line_no));
    it->second(key, value);
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config_file(const std::string& path) { return parse_config(read_file(path)); }

std::string serialize_config(const PipelineConfig& cfg) {
  std::ostringstream out;
  out.precision(17);
  out << "c_puct = " << cfg.engine.c_puct << "\n";
  out << "n_expand = " << cfg.engine.n_expand << "\n";
  out << "temperature = " << cfg.engine.temperature << "\n";
  out << "max_depth = " << cfg.engine.max_depth << "\n";
  out << "simulations = " << cfg.engine.simulations << "\n";
  out << "top_k_retrieval = " << cfg.engine.top_k_retrieval << "\n";
  out << "bleu_merge_threshold = " << cfg.engine.bleu_merge_threshold << "\n";
  out << "random_proposal = " << (cfg.engine.random_proposal ? "true" : "false") << "\n";
  out << "rng_seed = " << cfg.engine.rng_seed << "\n";
  out << "delta = " << cfg.sampler.delta << "\n";
  out << "epsilon = " << cfg.sampler.epsilon << "\n";
  out << "reflection_weight_gap = " << cfg.reflection.weight_gap << "\n";
  out << "reflection_weight_length = " << cfg.reflection.weight_length << "\n";
  out << "reflection_split_blank_lines = "
      << (cfg.reflection.split_blank_lines ? "true" : "false") << "\n";
  out << "beta = " << cfg.weights.beta << "\n";
  out << "gamma = " << cfg.weights.gamma << "\n";
  out << "alpha1 = " << cfg.weights.alpha1 << "\n";
  out << "alpha2 = " << cfg.weights.alpha2 << "\n";
  out << "alpha3 = " << cfg.weights.alpha3 << "\n";
  out << "round_index = " << cfg.round_index << "\n";
  out << "oracle_mode = " << cfg.oracle_mode << "\n";
  out << "mock_value = " << cfg.mock_value << "\n";
  out << "policy_url = " << cfg.policy_url << "\n";
  out << "value_url = " << cfg.value_url << "\n";
  out << "retriever_url = " << cfg.retriever_url << "\n";
  out << "reflection_url = " << cfg.reflection_url << "\n";
  out << "scorer_url = " << cfg.scorer_url << "\n";
  out << "ref_scorer_url = " << cfg.ref_scorer_url << "\n";
  // workers, timeout_ms and retries are runtime knobs: they never change
  // output bytes, so they stay out of the frozen snapshot
  return out.str();
}

PipelineConfig apply_preset(PipelineConfig config, const std::string& preset) {
  if (preset == "standard" || preset.empty()) return config;
  if (preset == "reflection") {
    config.engine = reflection_preset(config.engine);
    return config;
  }
  throw ConfigError("unknown preset '" + preset + "'");
}

}  // namespace stepsearch
