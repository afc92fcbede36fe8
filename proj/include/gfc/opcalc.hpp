#pragma once

#include <complex>
#include <span>
#include <vector>

#include "gfc/hseries.hpp"
#include "gfc/kernels.hpp"

namespace gfc::opcalc {

/// Certified interval (0, T] for the convolution-series truncation rule.
inline constexpr double kCertifiedHorizon = 8.0;

/// P(S) = a_0 + a_1 S + ... + a_n S^n in the algebraic symbol S of the pair's
/// kernel; coeffs ascending, leading coefficient nonzero.
struct OperatorPolynomial {
  std::vector<Complex> coeffs;
  kernels::SoninePair pair;

  int degree() const { return int(coeffs.size()) - 1; }
  void validate() const;
  Complex eval(Complex s) const;
};

struct Root {
  Complex value;
  int multiplicity = 1;
};

/// c / (S - lambda_{root_index})^power
struct PartialFraction {
  int root_index;
  int power;
  Complex coefficient;
};

struct PartialFractionDecomposition {
  std::vector<Root> roots;
  /// one table per numerator passed to partial_fractions
  std::vector<std::vector<PartialFraction>> residues;
  bool conditioning_warning = false;
};

struct ResolventSeries {
  Complex lambda;
  int terms_used = 0;
  HSeries l;  // I/(S - lambda)
  HSeries L;  // k * l, normalized so that L(0) = 1
};

/// l = sum_{j>=1} lambda^{j-1} kappa^j, truncated by the convolution-power
/// majorant on (0, horizon].
HSeries conv_series_l(const kernels::SoninePair& pair, Complex lambda,
                      const TruncationPolicy& policy = {}, double horizon = kCertifiedHorizon);

/// L = 1 + {1} * sum_{j>=1} lambda^j kappa^j (exact h_1 head).
HSeries conv_series_L(const kernels::SoninePair& pair, Complex lambda,
                      const TruncationPolicy& policy = {}, double horizon = kCertifiedHorizon);

/// The other construction L = k * l; used as a cross-check of conv_series_L.
HSeries conv_series_L_via_k(const kernels::SoninePair& pair, Complex lambda,
                            const TruncationPolicy& policy = {},
                            double horizon = kCertifiedHorizon);

ResolventSeries build_resolvent(const kernels::SoninePair& pair, Complex lambda,
                                const TruncationPolicy& policy = {},
                                double horizon = kCertifiedHorizon);

/// I/(S - lambda)^m = l^m, m >= 1.
HSeries resolvent_power(const kernels::SoninePair& pair, Complex lambda, int m,
                        const TruncationPolicy& policy = {}, double horizon = kCertifiedHorizon);

/// All complex roots with multiplicities (Durand-Kerner + cluster analysis).
std::vector<Root> poly_roots(const OperatorPolynomial& p);

/// Residue tables of numerator_i / p for each numerator (deg < deg p).
PartialFractionDecomposition partial_fractions(const OperatorPolynomial& p,
                                               std::span<const OperatorPolynomial> numerators);

/// Realizes one residue table as an h-series: sum c_ij * l^j_{lambda_i}.
HSeries rational_to_hseries(const PartialFractionDecomposition& decomp, std::size_t numerator_index,
                            const kernels::SoninePair& pair, const TruncationPolicy& policy = {},
                            double horizon = kCertifiedHorizon);

}  // namespace gfc::opcalc
