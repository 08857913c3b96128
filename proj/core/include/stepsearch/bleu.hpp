#pragma once

#include <string_view>

namespace stepsearch {

/// Sentence BLEU-4 of candidate against reference over word_tokens():
/// modified n-gram precisions, add-one smoothing on orders 2..4, standard
/// brevity penalty. Returns 0 when the candidate is empty or shares no
/// unigram with the reference.
double bleu4(std::string_view candidate, std::string_view reference);

/// max(bleu4(a,b), bleu4(b,a)) — the score compared against the merge
/// threshold, so the decision is symmetric.
double bleu4_sym(std::string_view a, std::string_view b);

}  // namespace stepsearch
