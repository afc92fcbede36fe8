#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "json.hpp"

namespace gfc {

using Complex = std::complex<double>;

/// Two exponents within this distance are treated as the same analytic power.
inline constexpr double kExponentMergeTol = 1e-12;

/// Horizon up to which propagated truncation-tail majorants are certified.
inline constexpr double kTailHorizon = 16.0;

/// One term c * h_beta(t), where h_beta(t) = t^{beta-1} / Gamma(beta).
struct HTerm {
  Complex coeff;
  double exponent;  // beta > 0
};

struct TruncationPolicy {
  std::size_t max_terms = 512;
  double max_exponent = 200.0;
  double prune_tol = 1e-16;  // relative to the largest |coeff|

  void validate() const;
  /// The stricter of two policies, used when combining operands.
  static TruncationPolicy stricter(const TruncationPolicy& a, const TruncationPolicy& b);
  bool operator==(const TruncationPolicy&) const = default;
};

/// A finite generalized power series sum_j c_j h_{beta_j}(t) with strictly
/// increasing exponents. The zero function is the empty term list. Values are
/// immutable after construction; all operations return new series.
class HSeries {
 public:
  HSeries() = default;
  explicit HSeries(TruncationPolicy policy) : policy_(policy) { policy_.validate(); }
  HSeries(std::vector<HTerm> terms, TruncationPolicy policy = {});

  static HSeries h(double beta, Complex coeff = 1.0, TruncationPolicy policy = {});
  /// The constant function {1} = h_1.
  static HSeries one(TruncationPolicy policy = {});

  const std::vector<HTerm>& terms() const { return terms_; }
  const TruncationPolicy& policy() const { return policy_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  bool truncated() const { return truncated_; }
  /// Majorant of everything dropped so far: |dropped(t)| <= tail_coeff * h_{tail_exponent}(t)
  /// for t <= kTailHorizon. Zero coefficient when nothing was dropped.
  double tail_coeff() const { return tail_coeff_; }
  double tail_exponent() const { return tail_exponent_; }

  double min_exponent() const;  // throws DomainError on the zero series

  /// Coefficient of the term at the given exponent (0 if absent).
  Complex coefficient_at(double exponent) const;

  Complex evaluate(double t) const;
  struct EvalResult {
    Complex value;
    double tail_bound;  // 0 when the series is exact
  };
  EvalResult evaluate_with_bound(double t) const;

  HSeries with_policy(TruncationPolicy policy) const;

  /// Copy with an extra dropped-mass majorant folded in (marks truncation).
  HSeries with_tail_bound(double coeff, double exponent) const;

  friend HSeries operator+(const HSeries& a, const HSeries& b);
  friend HSeries operator-(const HSeries& a, const HSeries& b);
  friend HSeries operator*(Complex s, const HSeries& a);
  friend HSeries operator*(double s, const HSeries& a);

  nlohmann::json to_json() const;
  static HSeries from_json(const nlohmann::json& j);

 private:
  friend HSeries hs_normalize(std::vector<HTerm>, TruncationPolicy);
  friend HSeries hs_convolve(const HSeries&, const HSeries&);
  friend HSeries hs_differentiate(const HSeries&);

  void absorb_tail(double coeff, double exponent);

  std::vector<HTerm> terms_;
  TruncationPolicy policy_;
  bool truncated_ = false;
  double tail_coeff_ = 0.0;
  double tail_exponent_ = 1.0;
};

/// Merge, sort and prune raw terms under the policy.
HSeries hs_normalize(std::vector<HTerm> terms, TruncationPolicy policy = {});

/// Laplace convolution: h_a * h_b = h_{a+b} termwise, then normalization
/// under the stricter of the two policies.
HSeries hs_convolve(const HSeries& a, const HSeries& b);

/// n-fold convolution power, n >= 1.
HSeries hs_power(const HSeries& a, int n);

/// Pointwise value at t > 0 (t = 0 allowed when all exponents >= 1).
Complex hs_evaluate(const HSeries& a, double t);

/// Termwise derivative; requires every exponent >= 1. Constant terms vanish.
HSeries hs_differentiate(const HSeries& a);

/// Value at t = 0 (coefficient of h_1); requires all exponents >= 1.
Complex hs_value_at_zero(const HSeries& a);

/// Coefficient of h_{k+1}, i.e. the k-th derivative at zero in the series
/// sense (equals the classical limit whenever that exists).
Complex hs_derivative_at_zero(const HSeries& a, int k);

struct NeumannResult {
  HSeries series;
  int terms_used = 0;     // highest power of q accumulated
  double tail_bound = 0;  // majorant of the neglected part at the horizon
};

/// Accumulates sum_{j>=0} lambda^j (q^j * base) by the stable recurrence
/// X <- base + lambda (q * X). The truncation index follows the convolution
/// power majorant |q^j(t)| <= M^j h_{jp}(t) on (0, horizon], M from the
/// continuous part of q; stops once the tail bound falls below the policy
/// tolerance, or flags the result truncated when the budget runs out.
NeumannResult hs_neumann(const HSeries& base, const HSeries& q, Complex lambda,
                         TruncationPolicy policy = {}, double horizon = 8.0);

}  // namespace gfc
