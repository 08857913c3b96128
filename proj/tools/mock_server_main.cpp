// Serves the deterministic mock oracles over the HTTP protocol so the
// pipeline can run end to end in http mode without any model hosting.

#include <chrono>
#include <csignal>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "stepsearch/http_oracles.hpp"
#include "stepsearch/mock_oracles.hpp"
#include "stepsearch/pipeline.hpp"
#include "stepsearch/rng.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mock oracle server"};
  std::string problems_path;
  std::uint64_t seed = 0;
  int port = 8700;
  int round_index = 0;
  double garbage_rate = 0.05;
  app.add_option("--problems", problems_path, "problems JSONL the mocks answer for")->required();
  app.add_option("--seed", seed, "mock seed")->default_val(0);
  app.add_option("--port", port, "listen port (0 picks a free one)")->default_val(8700);
  app.add_option("--round", round_index, "round index for the scorer pair")->default_val(0);
  app.add_option("--garbage-rate", garbage_rate, "unparsable-sample rate")->default_val(0.05);
  CLI11_PARSE(app, argc, argv);

  try {
    const auto file = stepsearch::read_problems_file(problems_path);
    if (!file.errors.empty()) {
      for (const auto& e : file.errors) std::cerr << "[error] " << e << "\n";
      return 1;
    }
    stepsearch::SyntheticPolicy policy(file.problems, stepsearch::derive_seed(seed, "policy"),
                                       garbage_rate);
    stepsearch::GoldConsistentValue value(file.problems);
    stepsearch::KeywordRetriever retriever;
    stepsearch::TemplateReflection reflection;
    stepsearch::HashScorer scorer(
        stepsearch::derive_seed(seed, "scorer:round:" + std::to_string(round_index)));

    stepsearch::OracleServer server(&policy, &value, &retriever, &reflection, &scorer);
    const int bound = server.start(port);
    std::cout << "mock oracle server listening on http://127.0.0.1:" << bound << "\n";
    std::cout << "endpoints: /v1/sample /v1/value /v1/search /v1/reflect /v1/logprob\n";

    // run until interrupted
    static volatile std::sig_atomic_t stop_flag = 0;
    std::signal(SIGINT, [](int) { stop_flag = 1; });
    std::signal(SIGTERM, [](int) { stop_flag = 1; });
    while (!stop_flag) {
      std::this_thread::sleep_for(std::chrono::milliseconds(200));
    }
    server.stop();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "[fatal] " << e.what() << "\n";
    return 1;
  }
}
