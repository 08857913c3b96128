#include "stepsearch/oracles.hpp"

namespace stepsearch {

std::string render_state(const Problem& problem, const std::string& steps_text) {
  std::string out = kStatePreamble;
  out += "\n\nQuestion: ";
  out += problem.question;
  out += '\n';
  for (size_t i = 0; i < problem.options.size(); ++i) {
    out += option_letter(static_cast<int>(i));
    out += ": ";
    out += problem.options[i];
    out += '\n';
  }
  if (!steps_text.empty()) {
    out += '\n';
    out += steps_text;
    out += '\n';
  }
  return out;
}

std::string render_state(const Problem& problem, const Trajectory& prefix) {
  return render_state(problem, serialize_trajectory(prefix));
}

}  // namespace stepsearch
