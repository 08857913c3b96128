#include "stepsearch/http_oracles.hpp"

#include <chrono>
#include <functional>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "stepsearch/errors.hpp"

namespace stepsearch {

using nlohmann::json;

namespace {

struct HostPath {
  std::string host;  // scheme://host:port
  std::string path_prefix;
};

HostPath split_url(const std::string& base_url) {
  // httplib::Client takes scheme://host:port; any path prefix is ours to keep.
  const size_t scheme = base_url.find("://");
  const size_t path = scheme == std::string::npos ? base_url.find('/')
                                                  : base_url.find('/', scheme + 3);
  if (path == std::string::npos) return {base_url, ""};
  return {base_url.substr(0, path), base_url.substr(path)};
}

// One POST with retries. Throws the supplied error type on exhaustion.
template <typename ErrorT>
json post_json(const OracleEndpoint& endpoint, const std::string& path, const json& body) {
  const HostPath hp = split_url(endpoint.base_url);
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= endpoint.retries; ++attempt) {
    httplib::Client client(hp.host);
    client.set_connection_timeout(0, endpoint.timeout_ms * 1000);
    client.set_read_timeout(0, endpoint.timeout_ms * 1000);
    client.set_write_timeout(0, endpoint.timeout_ms * 1000);
    httplib::Headers headers;
    if (endpoint.auth_token) headers.emplace("Authorization", "Bearer " + *endpoint.auth_token);
    auto res = client.Post(hp.path_prefix + path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "http status " + std::to_string(res->status);
      continue;
    }
    try {
      return json::parse(res->body);
    } catch (const std::exception& e) {
      last_error = std::string("malformed response: ") + e.what();
      continue;
    }
  }
  throw ErrorT(path + " failed after " + std::to_string(endpoint.retries + 1) +
               " attempts; last: " + last_error);
}

}  // namespace

std::vector<PolicySample> HttpPolicyOracle::sample(const std::string& prefix, int n,
                                                   double temperature) {
  json body{{"prefix", prefix}, {"n", n}, {"temperature", temperature}};
  const json res = post_json<PolicyUnavailable>(endpoint_, "/v1/sample", body);
  try {
    std::vector<PolicySample> samples;
    for (const auto& s : res.at("samples")) {
      PolicySample sample;
      sample.step_text = s.at("text").get<std::string>();
      sample.seq_logprob = s.at("seq_logprob").get<double>();
      sample.token_count = s.at("token_count").get<int>();
      samples.push_back(std::move(sample));
    }
    return samples;
  } catch (const std::exception& e) {
    throw PolicyUnavailable(std::string("bad sample payload: ") + e.what());
  }
}

double HttpValueOracle::estimate(const std::string& prefix) {
  const json res = post_json<ValueUnavailable>(endpoint_, "/v1/value", json{{"prefix", prefix}});
  try {
    return res.at("v").get<double>();
  } catch (const std::exception& e) {
    throw ValueUnavailable(std::string("bad value payload: ") + e.what());
  }
}

std::vector<RetrievedDoc> HttpRetrieverOracle::search(const std::string& query, int k) {
  const json res =
      post_json<RetrieverUnavailable>(endpoint_, "/v1/search", json{{"query", query}, {"k", k}});
  try {
    std::vector<RetrievedDoc> docs;
    for (const auto& d : res.at("docs")) {
      RetrievedDoc doc;
      doc.rank = d.at("rank").get<int>();
      doc.text = d.at("text").get<std::string>();
      doc.source_id = d.at("source_id").get<std::string>();
      docs.push_back(std::move(doc));
    }
    return docs;
  } catch (const std::exception& e) {
    throw RetrieverUnavailable(std::string("bad search payload: ") + e.what());
  }
}

std::string HttpReflectionOracle::write(const std::string& prefix, const std::string& wrong,
                                        const std::string& target) {
  const json res = post_json<ReflectionUnavailable>(
      endpoint_, "/v1/reflect", json{{"prefix", prefix}, {"wrong", wrong}, {"target", target}});
  try {
    return res.at("text").get<std::string>();
  } catch (const std::exception& e) {
    throw ReflectionUnavailable(std::string("bad reflect payload: ") + e.what());
  }
}

double HttpScorerOracle::logprob(const std::string& prefix, const std::string& completion,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& spans) {
  json mask = json::array();
  for (const auto& [b, e] : spans) mask.push_back(json::array({b, e}));
  const json res = post_json<ScorerUnavailable>(
      endpoint_, "/v1/logprob",
      json{{"prefix", prefix}, {"completion", completion}, {"mask_spans", mask}});
  try {
    return res.at("logprob").get<double>();
  } catch (const std::exception& e) {
    throw ScorerUnavailable(std::string("bad logprob payload: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

struct OracleServer::Impl {
  httplib::Server server;
  std::thread thread;
  int port = 0;
};

namespace {

void handle(const httplib::Request& req, httplib::Response& res,
            const std::function<json(const json&)>& fn) {
  json body;
  try {
    body = json::parse(req.body);
  } catch (const std::exception& e) {
    res.status = 400;
    res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    return;
  }
  try {
    res.set_content(fn(body).dump(), "application/json");
  } catch (const std::exception& e) {
    res.status = 500;
    res.set_content(json{{"error", e.what()}}.dump(), "application/json");
  }
}

}  // namespace

OracleServer::OracleServer(PolicyOracle* policy, ValueOracle* value, RetrieverOracle* retriever,
                           ReflectionOracle* reflection, ScorerOracle* scorer)
    : impl_(std::make_unique<Impl>()) {
  auto not_implemented = [](httplib::Response& res) { res.status = 501; };

  impl_->server.Post("/v1/sample", [=](const httplib::Request& req, httplib::Response& res) {
    if (!policy) return not_implemented(res);
    handle(req, res, [=](const json& body) {
      const auto samples = policy->sample(body.at("prefix").get<std::string>(),
                                          body.at("n").get<int>(),
                                          body.at("temperature").get<double>());
      json arr = json::array();
      for (const auto& s : samples)
        arr.push_back({{"text", s.step_text},
                       {"seq_logprob", s.seq_logprob},
                       {"token_count", s.token_count}});
      return json{{"samples", arr}};
    });
  });

  impl_->server.Post("/v1/value", [=](const httplib::Request& req, httplib::Response& res) {
    if (!value) return not_implemented(res);
    handle(req, res, [=](const json& body) {
      return json{{"v", value->estimate(body.at("prefix").get<std::string>())}};
    });
  });

  impl_->server.Post("/v1/search", [=](const httplib::Request& req, httplib::Response& res) {
    if (!retriever) return not_implemented(res);
    handle(req, res, [=](const json& body) {
      const auto docs =
          retriever->search(body.at("query").get<std::string>(), body.at("k").get<int>());
      json arr = json::array();
      for (const auto& d : docs)
        arr.push_back({{"rank", d.rank}, {"text", d.text}, {"source_id", d.source_id}});
      return json{{"docs", arr}};
    });
  });

  impl_->server.Post("/v1/reflect", [=](const httplib::Request& req, httplib::Response& res) {
    if (!reflection) return not_implemented(res);
    handle(req, res, [=](const json& body) {
      return json{{"text", reflection->write(body.at("prefix").get<std::string>(),
                                             body.at("wrong").get<std::string>(),
                                             body.at("target").get<std::string>())}};
    });
  });

  impl_->server.Post("/v1/logprob", [=](const httplib::Request& req, httplib::Response& res) {
    if (!scorer) return not_implemented(res);
    handle(req, res, [=](const json& body) {
      std::vector<std::pair<std::size_t, std::size_t>> spans;
      for (const auto& s : body.at("mask_spans"))
        spans.emplace_back(s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>());
      return json{{"logprob", scorer->logprob(body.at("prefix").get<std::string>(),
                                              body.at("completion").get<std::string>(), spans)}};
    });
  });
}

OracleServer::~OracleServer() { stop(); }

int OracleServer::start(int port) {
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
    if (impl_->port <= 0) throw IoError("cannot bind an ephemeral port on 127.0.0.1");
  } else {
    if (!impl_->server.bind_to_port("127.0.0.1", port))
      throw IoError("cannot bind 127.0.0.1:" + std::to_string(port));
    impl_->port = port;
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->port;
}

void OracleServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
  if (impl_ && impl_->thread.joinable()) impl_->thread.join();
}

std::string OracleServer::base_url() const {
  return "http://127.0.0.1:" + std::to_string(impl_->port);
}

}  // namespace stepsearch
