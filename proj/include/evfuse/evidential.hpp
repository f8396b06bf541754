#pragma once

#include <stdexcept>
#include <string>

namespace evfuse {

/// Thrown when a distribution parameter falls outside its domain. Inside the
/// training pipeline this always points at an activation bug upstream.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Normal-Inverse-Gamma prior over the mean and variance of a Gaussian:
/// mu ~ N(gamma, sigma^2 / delta), sigma^2 ~ InvGamma(alpha, beta).
struct NIGParams {
  double gamma = 0.0;
  double delta = 1.0;
  double alpha = 2.0;
  double beta = 1.0;

  /// Throws InvalidParameter unless delta > 0, beta > 0, alpha > 1 and all
  /// four values are finite.
  void validate() const;
};

/// Non-standardized Student's t with location `u`, squared scale `sigma`
/// and `v` degrees of freedom. Only v > 2 is representable, so the variance
/// sigma * v / (v - 2) always exists.
class StudentT {
 public:
  StudentT(double u, double sigma, double v);

  double u() const { return u_; }
  double sigma() const { return sigma_; }
  double v() const { return v_; }

  bool operator==(const StudentT&) const = default;

 private:
  double u_;
  double sigma_;
  double v_;
};

struct UncertaintyReport {
  double aleatoric = 0.0;
  double epistemic = 0.0;
  double fused_uncertainty = 0.0;
};

/// Closed-form marginal of N(y | mu, sigma^2) under the NIG prior:
/// St(y; gamma, beta (1 + delta) / (delta alpha), 2 alpha).
StudentT nig_to_student_t(const NIGParams& p);

double st_log_density(const StudentT& st, double y);

/// E[sigma^2] = beta / (alpha - 1).
double aleatoric(const NIGParams& p);

/// Var[mu] = beta / (delta (alpha - 1)).
double epistemic(const NIGParams& p);

double st_variance(const StudentT& st);

}  // namespace evfuse
