#include "stepsearch/losses.hpp"

#include <cmath>

#include "stepsearch/errors.hpp"

namespace stepsearch {

double pref_logit(const LossInputs& in, double beta) {
  return beta * ((in.logp_chosen_policy - in.logp_chosen_ref) -
                 (in.logp_rejected_policy - in.logp_rejected_ref));
}

double dpo_loss(double logit) {
  // softplus(-x) = max(-x, 0) + log1p(exp(-|x|))
  return std::max(-logit, 0.0) + std::log1p(std::exp(-std::fabs(logit)));
}

namespace {

double hinge_sq(double v, double q, double gamma) {
  const double d = v - q;
  return std::max(0.0, d * d - gamma);
}

// d hinge_sq / d v: zero inside the margin.
double hinge_sq_grad(double v, double q, double gamma) {
  const double d = v - q;
  return d * d > gamma ? 2.0 * d : 0.0;
}

}  // namespace

double mse_margin_loss(double v_w, double v_l, double q_w, double q_l, double gamma) {
  return 0.5 * (hinge_sq(v_w, q_w, gamma) + hinge_sq(v_l, q_l, gamma));
}

double lm_loss(double logp_chosen_policy) { return -logp_chosen_policy; }

double reg_loss(double logit, double v_w, double v_l) {
  const double d = logit - (v_w - v_l);
  return d * d;
}

TotalLoss total_loss(const LossInputs& in, const LossWeights& w) {
  const double fields[] = {in.logp_chosen_policy, in.logp_rejected_policy, in.logp_chosen_ref,
                           in.logp_rejected_ref,  in.v_chosen,            in.v_rejected,
                           in.q_chosen,           in.q_rejected};
  for (double f : fields)
    if (!std::isfinite(f)) throw NonFinite();

  TotalLoss out;
  const double logit = pref_logit(in, w.beta);
  out.dpo = dpo_loss(logit);
  out.mse = mse_margin_loss(in.v_chosen, in.v_rejected, in.q_chosen, in.q_rejected, w.gamma);
  out.lm = lm_loss(in.logp_chosen_policy);
  out.reg = reg_loss(logit, in.v_chosen, in.v_rejected);
  out.value = out.dpo + w.alpha1 * out.mse + w.alpha2 * out.lm + w.alpha3 * out.reg;

  const double sigmoid = 1.0 / (1.0 + std::exp(-logit));
  const double d_dpo_dlogit = sigmoid - 1.0;
  // stop-gradient: the (v_w - v_l) inside reg is a constant
  const double d_reg_dlogit = 2.0 * (logit - (in.v_chosen - in.v_rejected));
  const double d_dlogit = d_dpo_dlogit + w.alpha3 * d_reg_dlogit;

  out.grad[0] = d_dlogit * w.beta - w.alpha2;   // logp_chosen_policy (lm term)
  out.grad[1] = d_dlogit * -w.beta;             // logp_rejected_policy
  out.grad[2] = d_dlogit * -w.beta;             // logp_chosen_ref
  out.grad[3] = d_dlogit * w.beta;              // logp_rejected_ref
  out.grad[4] = w.alpha1 * 0.5 * hinge_sq_grad(in.v_chosen, in.q_chosen, w.gamma);
  out.grad[5] = w.alpha1 * 0.5 * hinge_sq_grad(in.v_rejected, in.q_rejected, w.gamma);
  return out;
}

}  // namespace stepsearch
