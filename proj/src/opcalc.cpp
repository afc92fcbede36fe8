#include "gfc/opcalc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gfc/errors.hpp"

namespace gfc::opcalc {

void OperatorPolynomial::validate() const {
  if (coeffs.empty()) throw UsageError("OperatorPolynomial: empty coefficient list");
  if (coeffs.back() == Complex(0.0))
    throw UsageError("OperatorPolynomial: leading coefficient must be nonzero");
}

Complex OperatorPolynomial::eval(Complex s) const {
  Complex v = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 0;) v = v * s + coeffs[i];
  return v;
}

HSeries conv_series_l(const kernels::SoninePair& pair, Complex lambda,
                      const TruncationPolicy& policy, double horizon) {
  const HSeries kappa = kernels::kernel_to_hseries(pair.kappa, policy);
  return hs_neumann(kappa, kappa, lambda, policy, horizon).series;
}

HSeries conv_series_L(const kernels::SoninePair& pair, Complex lambda,
                      const TruncationPolicy& policy, double horizon) {
  // L = h_1 + lambda ({1} * l)
  const HSeries l = conv_series_l(pair, lambda, policy, horizon);
  return HSeries::one(policy) + lambda * hs_convolve(HSeries::one(policy), l);
}

HSeries conv_series_L_via_k(const kernels::SoninePair& pair, Complex lambda,
                            const TruncationPolicy& policy, double horizon) {
  const HSeries l = conv_series_l(pair, lambda, policy, horizon);
  if (pair.identity_associate()) return l;
  return hs_convolve(kernels::associate_to_hseries(pair.k, policy), l);
}

ResolventSeries build_resolvent(const kernels::SoninePair& pair, Complex lambda,
                                const TruncationPolicy& policy, double horizon) {
  const HSeries kappa = kernels::kernel_to_hseries(pair.kappa, policy);
  NeumannResult nr = hs_neumann(kappa, kappa, lambda, policy, horizon);
  ResolventSeries r;
  r.lambda = lambda;
  r.terms_used = nr.terms_used;
  r.l = nr.series;
  r.L = HSeries::one(policy) + lambda * hs_convolve(HSeries::one(policy), r.l);
  return r;
}

HSeries resolvent_power(const kernels::SoninePair& pair, Complex lambda, int m,
                        const TruncationPolicy& policy, double horizon) {
  if (m < 1) throw UsageError("resolvent_power: m must be >= 1");
  const HSeries l = conv_series_l(pair, lambda, policy, horizon);
  return hs_power(l, m);
}

std::vector<Root> poly_roots(const OperatorPolynomial& p) {
  p.validate();
  const int n = p.degree();
  if (n < 1) throw UsageError("poly_roots: degree must be >= 1");

  // monic coefficients
  std::vector<Complex> c(p.coeffs);
  for (Complex& ci : c) ci /= p.coeffs.back();

  auto eval_monic = [&](Complex z) {
    Complex v = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) v = v * z + c[i];
    return v;
  };

  // deterministic start: circle of radius 1 + max |a_i/a_n|
  double radius = 0.0;
  for (int i = 0; i < n; ++i) radius = std::max(radius, std::abs(c[std::size_t(i)]));
  radius += 1.0;
  constexpr double kTwoPi = 6.28318530717958647692;
  std::vector<Complex> z{};
  z.resize(std::size_t(n));
  for (int i = 0; i < n; ++i)
    z[std::size_t(i)] = std::polar(radius, kTwoPi * i / n + 0.4);

  // Durand-Kerner iteration
  std::vector<double> last_step(std::size_t(n), 0.0);
  for (int iter = 0; iter < 200; ++iter) {
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      Complex denom = 1.0;
      for (int j = 0; j < n; ++j)
        if (j != i) denom *= z[std::size_t(i)] - z[std::size_t(j)];
      if (denom == Complex(0.0)) denom = 1e-300;
      const Complex dz = eval_monic(z[std::size_t(i)]) / denom;
      z[std::size_t(i)] -= dz;
      last_step[std::size_t(i)] = std::abs(dz);
      worst = std::max(worst, std::abs(dz) / (1.0 + std::abs(z[std::size_t(i)])));
    }
    if (worst < 1e-15) break;
  }

  double zmax = 0.0;
  for (const Complex& zi : z) zmax = std::max(zmax, std::abs(zi));
  const double base_threshold = 1e-8 * (1.0 + zmax);

  // cluster: multiple roots stagnate at ~eps^{1/m}, so widen the threshold by
  // the stagnated correction sizes
  std::vector<bool> taken(std::size_t(n), false);
  std::vector<Root> roots;
  for (int i = 0; i < n; ++i) {
    if (taken[std::size_t(i)]) continue;
    taken[std::size_t(i)] = true;
    Complex sum = z[std::size_t(i)];
    int count = 1;
    for (int j = i + 1; j < n; ++j) {
      if (taken[std::size_t(j)]) continue;
      const double tol = std::max(base_threshold,
                                  4.0 * (last_step[std::size_t(i)] + last_step[std::size_t(j)]));
      if (std::abs(z[std::size_t(j)] - sum / double(count)) <= tol) {
        taken[std::size_t(j)] = true;
        sum += z[std::size_t(j)];
        ++count;
      }
    }
    roots.push_back({sum / double(count), count});
  }

  // polish each root with multiplicity-aware Newton
  auto eval_dmonic = [&](Complex zz) {
    Complex v = 0.0;
    for (std::size_t i = c.size(); i-- > 1;) v = v * zz + double(i) * c[i];
    return v;
  };
  for (Root& r : roots) {
    for (int it = 0; it < 60; ++it) {
      const Complex pv = eval_monic(r.value);
      const Complex dv = eval_dmonic(r.value);
      if (dv == Complex(0.0)) break;
      const Complex step = double(r.multiplicity) * pv / dv;
      r.value -= step;
      if (std::abs(step) <= 1e-16 * (1.0 + std::abs(r.value))) break;
    }
  }

  // residual sanity on the original (non-monic) polynomial
  for (const Root& r : roots) {
    double scale = 0.0, zp = 1.0;
    for (const Complex& a : p.coeffs) {
      scale += std::abs(a) * zp;
      zp *= std::max(1.0, std::abs(r.value));
    }
    if (std::abs(p.eval(r.value)) > 1e-10 * scale)
      throw NumericError("poly_roots: root finder did not converge");
  }

  std::sort(roots.begin(), roots.end(), [](const Root& a, const Root& b) {
    if (a.value.real() != b.value.real()) return a.value.real() < b.value.real();
    return a.value.imag() < b.value.imag();
  });
  return roots;
}

namespace {

// Taylor coefficients of a polynomial around z0 via repeated synthetic division.
std::vector<Complex> shift_poly(std::span<const Complex> coeffs, Complex z0) {
  std::vector<Complex> b(coeffs.begin(), coeffs.end());
  const int n = int(b.size());
  for (int j = 0; j < n; ++j)
    for (int i = n - 2; i >= j; --i) b[std::size_t(i)] += z0 * b[std::size_t(i) + 1];
  return b;
}

}  // namespace

PartialFractionDecomposition partial_fractions(const OperatorPolynomial& p,
                                               std::span<const OperatorPolynomial> numerators) {
  p.validate();
  PartialFractionDecomposition out;
  out.roots = poly_roots(p);

  double zmax = 0.0;
  for (const Root& r : out.roots) zmax = std::max(zmax, std::abs(r.value));
  const double threshold = 1e-8 * (1.0 + zmax);
  for (std::size_t i = 0; i < out.roots.size(); ++i)
    for (std::size_t j = i + 1; j < out.roots.size(); ++j)
      if (std::abs(out.roots[i].value - out.roots[j].value) < 10.0 * threshold)
        out.conditioning_warning = true;

  for (const OperatorPolynomial& num : numerators) {
    num.validate();
    if (num.degree() >= p.degree())
      throw UsageError("partial_fractions: numerator degree must be < denominator degree");
    std::vector<PartialFraction> table;
    for (std::size_t ri = 0; ri < out.roots.size(); ++ri) {
      const Root& root = out.roots[ri];
      const int m = root.multiplicity;
      // Taylor coefficients of P around the root; the first m vanish by
      // construction (up to roundoff) and are discarded
      const std::vector<Complex> ptay = shift_poly(p.coeffs, root.value);
      std::vector<Complex> q(ptay.begin() + m, ptay.end());  // Q = P/(S-l)^m around l
      const std::vector<Complex> ntay = shift_poly(num.coeffs, root.value);
      // tau = N/Q as a power series around the root, to order m-1
      std::vector<Complex> tau{};
      tau.resize(std::size_t(m));
      for (int r = 0; r < m; ++r) {
        Complex s = (std::size_t(r) < ntay.size()) ? ntay[std::size_t(r)] : Complex(0.0);
        for (int k = 0; k < r; ++k) {
          const std::size_t qi = std::size_t(r - k);
          if (qi < q.size()) s -= tau[std::size_t(k)] * q[qi];
        }
        tau[std::size_t(r)] = s / q[0];
      }
      // N/P = sum_j tau_{m-j} / (S-l)^j
      for (int j = 1; j <= m; ++j) {
        const Complex cij = tau[std::size_t(m - j)];
        if (cij != Complex(0.0)) table.push_back({int(ri), j, cij});
      }
    }
    out.residues.push_back(std::move(table));
  }
  return out;
}

HSeries rational_to_hseries(const PartialFractionDecomposition& decomp, std::size_t numerator_index,
                            const kernels::SoninePair& pair, const TruncationPolicy& policy,
                            double horizon) {
  if (numerator_index >= decomp.residues.size())
    throw UsageError("rational_to_hseries: numerator index out of range");
  HSeries sum(policy);
  // build l once per root, powers incrementally
  std::vector<HSeries> l_by_root;
  for (const Root& r : decomp.roots)
    l_by_root.push_back(conv_series_l(pair, r.value, policy, horizon));
  std::vector<HSeries> l_power = l_by_root;  // current power per root
  std::vector<int> current(decomp.roots.size(), 1);

  // group by root so powers are built in increasing order
  std::vector<PartialFraction> parts = decomp.residues[numerator_index];
  std::sort(parts.begin(), parts.end(), [](const PartialFraction& a, const PartialFraction& b) {
    if (a.root_index != b.root_index) return a.root_index < b.root_index;
    return a.power < b.power;
  });
  for (const PartialFraction& pf : parts) {
    const std::size_t ri = std::size_t(pf.root_index);
    while (current[ri] < pf.power) {
      l_power[ri] = hs_convolve(l_power[ri], l_by_root[ri]);
      ++current[ri];
    }
    sum = sum + pf.coefficient * l_power[ri];
  }
  return sum;
}

}  // namespace gfc::opcalc
