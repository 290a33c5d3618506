#include "optrack/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

namespace optrack {

double kkt_residual(const BlockNlp& nlp, const Vector& z, const Vector& mu,
                    const Parameter& s, double rho) {
  const Vector grad = grad_aug_lagrangian(nlp, z, mu, s, rho);
  const Vector projected =
      (z - grad).cwiseMax(nlp.stacked_lower()).cwiseMin(nlp.stacked_upper());
  return (projected - z).norm();
}

double feasibility_norm(const BlockNlp& nlp, const Vector& z, const Parameter& s) {
  if (nlp.num_constraints() == 0) return 0.0;
  return eval_constraints(nlp, z, s).norm();
}

namespace {

void check_exponent_domain(int d, int n) {
  if (d < 2 || n < 2) {
    throw std::domain_error("Lojasiewicz exponent formulas require d >= 2 and n >= 2");
  }
}

}  // namespace

double lojasiewicz_theta(int d, int n) {
  check_exponent_domain(d, n);
  return 1.0 - 1.0 / (d * std::pow(3.0 * d - 3.0, n - 1));
}

double rate_psi(int d, int n) {
  check_exponent_domain(d, n);
  return 1.0 / (d * std::pow(3.0 * d - 3.0, n - 1) - 2.0);
}

double spectral_norm(const Matrix& t, double tol) {
  if (t.size() == 0) return 0.0;
  // power iteration on T^T T with a deterministic start
  Vector v = Vector::Ones(t.cols());
  v[0] += 0.5;  // break symmetry for alternating-sign leading vectors
  v.normalize();
  double sigma = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Vector w = t * v;
    const double sigma_new = w.norm();
    if (sigma_new == 0.0) return 0.0;
    Vector next = t.transpose() * w;
    const double n2 = next.norm();
    if (n2 == 0.0) return sigma_new;
    v = next / n2;
    if (std::abs(sigma_new - sigma) <= tol * std::max(1.0, sigma_new)) return sigma_new;
    sigma = sigma_new;
  }
  return sigma;
}

double lambda_f(const BlockNlp& nlp, bool* degenerate) {
  double max_norm = 0.0;
  for (const auto& t : nlp.parameter_maps) {
    if (t.size() > 0) max_norm = std::max(max_norm, spectral_norm(t));
  }
  const double value = nlp.num_groups() * max_norm;
  if (degenerate) *degenerate = (value == 0.0);
  return value;
}

double lambda_h(double lambda_f_value) {
  if (lambda_f_value < 0.0) throw std::domain_error("lambda_h: negative lambda_F");
  return std::sqrt(std::max(lambda_f_value * lambda_f_value, 1.0) + lambda_f_value);
}

void ContractionConstants::validate() const {
  if (lambda_A <= 0 || lambda_B <= 0 || lambda_G <= 0 || C <= 0 || lambda_F <= 0 ||
      lambda_H <= 0) {
    throw std::invalid_argument("ContractionConstants: all constants must be positive");
  }
  if (d_L < 2 || n_z < 2) {
    throw std::invalid_argument("ContractionConstants: d_L and n_z must be at least 2");
  }
}

BetaCoeffs beta_coeffs(const ContractionConstants& k, double rho, long sweeps) {
  k.validate();
  if (rho <= 0.0) throw std::invalid_argument("beta_coeffs: rho must be positive");
  if (sweeps < 1) throw std::invalid_argument("beta_coeffs: M must be at least 1");
  const double psi = rate_psi(k.d_L, k.n_z);
  const double rate = std::pow(static_cast<double>(sweeps), -psi);
  const double bh = k.lambda_B * k.lambda_H;
  BetaCoeffs out;
  out.beta_w = k.C * (1.0 + rho * k.lambda_G) * (1.0 + bh / rho) * rate + bh / rho;
  out.beta_s = k.C * (1.0 + rho * k.lambda_G) * bh * rate + bh * k.lambda_A * k.lambda_F / rho;
  return out;
}

double tracking_error(const Eigen::Ref<const Vector>& y_star,
                      const Eigen::Ref<const Vector>& y_bar) {
  if (y_star.size() != y_bar.size()) {
    throw std::invalid_argument("tracking_error: sequence lengths differ");
  }
  if (y_star.size() == 0) {
    throw std::invalid_argument("tracking_error: empty sequences");
  }
  return std::sqrt((y_star - y_bar).squaredNorm() / static_cast<double>(y_star.size()));
}

LambdaGEstimate estimate_lambda_g(const BlockNlp& nlp, const Parameter& s, int samples,
                                  std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("estimate_lambda_g: samples must be positive");
  LambdaGEstimate est;
  est.source = "sampled";
  if (nlp.num_constraints() == 0) return est;

  Rng rng(seed);
  const Vector& lo = nlp.stacked_lower();
  const Vector& hi = nlp.stacked_upper();
  const Index n = nlp.num_vars();
  Vector z(n), v(n);
  for (int sample = 0; sample < samples; ++sample) {
    for (Index j = 0; j < n; ++j) z[j] = rng.uniform(lo[j], hi[j]);
    for (Index j = 0; j < n; ++j) v[j] = rng.uniform(-1.0, 1.0);
    double nv = v.norm();
    if (nv == 0.0) continue;
    v /= nv;
    // power iteration on J^T J: the forward action J v by central differences,
    // the transpose action through the NLP callbacks
    const double h = 1e-6 * (1.0 + z.lpNorm<Eigen::Infinity>());
    double sigma = 0.0;
    for (int it = 0; it < 30; ++it) {
      const Vector jv =
          (eval_constraints(nlp, z + h * v, s) - eval_constraints(nlp, z - h * v, s)) /
          (2.0 * h);
      const double sigma_new = jv.norm();
      if (sigma_new == 0.0) break;
      Vector next = constraint_jac_t_apply(nlp, z, jv);
      const double n2 = next.norm();
      if (n2 == 0.0) {
        sigma = sigma_new;
        break;
      }
      v = next / n2;
      if (std::abs(sigma_new - sigma) <= 1e-6 * std::max(1.0, sigma_new)) {
        sigma = sigma_new;
        break;
      }
      sigma = sigma_new;
    }
    est.value = std::max(est.value, sigma);
  }
  return est;
}

}  // namespace optrack
