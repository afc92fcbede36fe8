#pragma once

#include <complex>
#include <span>
#include <vector>

namespace gfc::specfun {

using Complex = std::complex<double>;

/// Principal-branch log Gamma. Throws DomainError at the poles 0, -1, -2, ...
Complex log_gamma(Complex z);

/// Gamma(x) for real non-pole x (reflection for x < 0).
double gamma_fn(double x);

/// 1/Gamma(x) for any real x; exactly 0 at the poles.
double gamma_reciprocal(double x);

/// Parameters of the multi-index Mittag-Leffler family.
struct MLParams {
  std::vector<double> alphas;  // all > 0, non-empty
  double beta = 1.0;
  int m = 1;  // Prabhakar upper index, >= 1

  void validate() const;
};

/// Two-parameter Mittag-Leffler function E_{alpha,beta}(z), alpha > 0.
Complex mittag_leffler(double alpha, double beta, Complex z);

/// Prabhakar (three-parameter) function E^m_{alpha,beta}(z) with integer m >= 1.
Complex ml_prabhakar(double alpha, double beta, int m, Complex z);

/// Multinomial Mittag-Leffler function; zs.size() must equal params.alphas.size().
Complex ml_multinomial(const MLParams& params, std::span<const Complex> zs);

enum class BesselKind { J, I };

/// Series evaluation of J_nu(x) or I_nu(x), x > 0, real nu.
double bessel(BesselKind kind, double nu, double x);

/// Lower incomplete gamma gamma(beta, t) = int_0^t tau^{beta-1} e^{-tau} dtau.
double lower_incomplete_gamma(double beta, double t);

/// Unnormalized incomplete beta B_x(a,b) = int_0^x u^{a-1}(1-u)^{b-1} du,
/// a,b > 0, x in [0,1]. Continued-fraction based.
double incomplete_beta(double a, double b, double x);

}  // namespace gfc::specfun
