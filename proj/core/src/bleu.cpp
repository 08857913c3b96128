#include "stepsearch/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "stepsearch/text.hpp"

namespace stepsearch {

namespace {

using Counts = std::map<std::string, int>;

Counts ngram_counts(const std::vector<std::string>& tokens, int n) {
  Counts counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (int k = 0; k < n; ++k) {
      if (k) key += '\x1f';
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

double bleu4(std::string_view candidate, std::string_view reference) {
  const auto cand = word_tokens(candidate);
  const auto ref = word_tokens(reference);
  if (cand.empty()) return 0.0;

  double log_prec_sum = 0.0;
  for (int n = 1; n <= 4; ++n) {
    const Counts cand_counts = ngram_counts(cand, n);
    const Counts ref_counts = ngram_counts(ref, n);
    long total = 0;
    long matched = 0;
    for (const auto& [gram, count] : cand_counts) {
      total += count;
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matched += std::min(count, it->second);
    }
    double p;
    if (n == 1) {
      if (matched == 0) return 0.0;
      p = static_cast<double>(matched) / static_cast<double>(total);
    } else {
      // add-one smoothing on the higher orders
      p = static_cast<double>(matched + 1) / static_cast<double>(total + 1);
    }
    log_prec_sum += std::log(p);
  }

  double bp = 1.0;
  if (cand.size() < ref.size()) {
    bp = std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(cand.size()));
  }
  return bp * std::exp(log_prec_sum / 4.0);
}

double bleu4_sym(std::string_view a, std::string_view b) {
  return std::max(bleu4(a, b), bleu4(b, a));
}

}  // namespace stepsearch
