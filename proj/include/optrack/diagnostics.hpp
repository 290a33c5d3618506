#pragma once

#include "optrack/block_nlp.hpp"

#include <cstdint>
#include <string>

namespace optrack {

/// Projected-gradient criticality residual with unit step,
/// |pi_Z(z - grad L_rho(z, mu, s)) - z|_2.
double kkt_residual(const BlockNlp& nlp, const Vector& z, const Vector& mu,
                    const Parameter& s, double rho);

/// |G(z, s)|_2.
double feasibility_norm(const BlockNlp& nlp, const Vector& z, const Parameter& s);

/// Lojasiewicz exponent of a degree-d polynomial in n variables over a
/// polyhedron: theta(d, n) = 1 - 1 / (d (3d - 3)^(n-1)). Requires d, n >= 2.
double lojasiewicz_theta(int d, int n);

/// Sub-linear primal rate exponent psi(d, n) = 1 / (d (3d - 3)^(n-1) - 2).
double rate_psi(int d, int n);

/// Largest singular value via power iteration on T^T T.
double spectral_norm(const Matrix& t, double tol = 1e-10);

/// P times the largest spectral norm among the parameter maps T_i, with P the
/// number of sweep groups. Sets *degenerate when all maps vanish (the theory
/// assumes a positive value).
double lambda_f(const BlockNlp& nlp, bool* degenerate = nullptr);

/// sqrt(max(lambda_f^2, 1) + lambda_f).
double lambda_h(double lambda_f_value);

/// User-supplied theoretical constants feeding the contraction coefficients.
/// The defaults are unit placeholders for illustration only, never inputs the
/// solver acts on.
struct ContractionConstants {
  double lambda_A = 1.0;
  double lambda_B = 1.0;
  double lambda_G = 1.0;
  double C = 1.0;
  double lambda_F = 1.0;  // computable via lambda_f()
  double lambda_H = 1.0;  // computable via lambda_h()
  int d_L = 2;
  int n_z = 2;
  bool illustrative = true;

  void validate() const;  // all strictly positive, d_L >= 2, n_z >= 2
};

struct BetaCoeffs {
  double beta_w;
  double beta_s;
};

/// Contraction coefficients of the tracking step:
///   beta_w = C (1 + rho lG) (1 + lB lH / rho) M^(-psi) + lB lH / rho
///   beta_s = C (1 + rho lG) lB lH M^(-psi) + lB lH lA lF / rho
/// with psi = rate_psi(d_L, n_z).
BetaCoeffs beta_coeffs(const ContractionConstants& k, double rho, long sweeps);

/// Root-mean-square gap between two sampled output signals.
double tracking_error(const Eigen::Ref<const Vector>& y_star,
                      const Eigen::Ref<const Vector>& y_bar);

struct LambdaGEstimate {
  double value = 0.0;
  std::string source;  // "sampled" or "user"
};

/// Heuristic lower estimate of the Lipschitz constant of G(., s) on Z: the
/// largest constraint-Jacobian spectral norm over uniformly sampled points of
/// Z (Jacobian action by central differences, transpose action by callbacks).
LambdaGEstimate estimate_lambda_g(const BlockNlp& nlp, const Parameter& s,
                                  int samples = 10000, std::uint64_t seed = 0);

}  // namespace optrack
