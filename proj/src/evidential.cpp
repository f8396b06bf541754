#include "evfuse/evidential.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "evfuse/special.hpp"

namespace evfuse {

namespace special {

double log_gamma(double x) { return boost::math::lgamma(x); }

double digamma(double x) { return boost::math::digamma(x); }

double log_sum_exp(std::span<const double> logits) {
  double hi = logits[0];
  for (double z : logits) hi = std::max(hi, z);
  double acc = 0.0;
  for (double z : logits) acc += std::exp(z - hi);
  return hi + std::log(acc);
}

std::vector<double> softmax(std::span<const double> logits) {
  const double lse = log_sum_exp(logits);
  std::vector<double> p(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) p[i] = std::exp(logits[i] - lse);
  return p;
}

}  // namespace special

void NIGParams::validate() const {
  if (!std::isfinite(gamma) || !std::isfinite(delta) || !std::isfinite(alpha) ||
      !std::isfinite(beta)) {
    throw InvalidParameter("NIG parameters must be finite");
  }
  if (!(delta > 0.0)) throw InvalidParameter("NIG delta must be > 0, got " + std::to_string(delta));
  if (!(alpha > 1.0)) throw InvalidParameter("NIG alpha must be > 1, got " + std::to_string(alpha));
  if (!(beta > 0.0)) throw InvalidParameter("NIG beta must be > 0, got " + std::to_string(beta));
}

StudentT::StudentT(double u, double sigma, double v) : u_(u), sigma_(sigma), v_(v) {
  if (!std::isfinite(u) || !std::isfinite(sigma) || !std::isfinite(v)) {
    throw InvalidParameter("Student's t parameters must be finite");
  }
  if (!(sigma > 0.0)) throw InvalidParameter("Student's t scale must be > 0");
  if (!(v > 2.0)) throw InvalidParameter("Student's t degrees of freedom must be > 2");
}

StudentT nig_to_student_t(const NIGParams& p) {
  p.validate();
  const double scale = p.beta * (1.0 + p.delta) / (p.delta * p.alpha);
  return StudentT(p.gamma, scale, 2.0 * p.alpha);
}

double st_log_density(const StudentT& st, double y) {
  const double v = st.v();
  const double r = y - st.u();
  return special::log_gamma(0.5 * (v + 1.0)) - special::log_gamma(0.5 * v) -
         0.5 * std::log(v * std::numbers::pi * st.sigma()) -
         0.5 * (v + 1.0) * std::log1p(r * r / (v * st.sigma()));
}

double aleatoric(const NIGParams& p) { return p.beta / (p.alpha - 1.0); }

double epistemic(const NIGParams& p) { return p.beta / (p.delta * (p.alpha - 1.0)); }

double st_variance(const StudentT& st) { return st.sigma() * st.v() / (st.v() - 2.0); }

}  // namespace evfuse
