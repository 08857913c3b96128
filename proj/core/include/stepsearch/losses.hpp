#pragma once

#include <array>

namespace stepsearch {

/// Externally supplied quantities for one pair. Log-probabilities are sums
/// over unmasked tokens only; value and target fields live in [-1, 1].
struct LossInputs {
  double logp_chosen_policy = 0.0;
  double logp_rejected_policy = 0.0;
  double logp_chosen_ref = 0.0;
  double logp_rejected_ref = 0.0;
  double v_chosen = 0.0;
  double v_rejected = 0.0;
  double q_chosen = 0.0;   // targets; no gradient flows into these
  double q_rejected = 0.0;
};

struct LossWeights {
  double beta = 0.1;
  double gamma = 0.1;
  double alpha1 = 0.25;  // value-head margin MSE
  double alpha2 = 5.0;   // language modeling
  double alpha3 = 0.001; // preference/value coherence
};

/// beta * [(logp_c_policy - logp_c_ref) - (logp_r_policy - logp_r_ref)]
double pref_logit(const LossInputs& in, double beta);

/// -log sigmoid(logit), computed as softplus(-logit) so large logits do not
/// overflow.
double dpo_loss(double logit);

/// 0.5 * [max(0, (v_w - q_w)^2 - gamma) + max(0, (v_l - q_l)^2 - gamma)]
double mse_margin_loss(double v_w, double v_l, double q_w, double q_l, double gamma);

/// -logp of the chosen continuation under the policy.
double lm_loss(double logp_chosen_policy);

/// (logit - sg(v_w - v_l))^2. The value gap is treated as a constant: the
/// gradient API reports exactly zero for the v terms of this component.
double reg_loss(double logit, double v_w, double v_l);

struct TotalLoss {
  double value = 0.0;
  // unweighted components, exposed for reports
  double dpo = 0.0;
  double mse = 0.0;
  double lm = 0.0;
  double reg = 0.0;
  /// d value / d {logp_chosen_policy, logp_rejected_policy, logp_chosen_ref,
  ///              logp_rejected_ref, v_chosen, v_rejected}
  std::array<double, 6> grad{};
};

/// dpo + a1*mse + a2*lm + a3*reg with the closed-form gradient.
/// Throws NonFinite when any input is NaN or infinite.
TotalLoss total_loss(const LossInputs& in, const LossWeights& weights);

}  // namespace stepsearch
