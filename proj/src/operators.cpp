#include "gfc/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "gfc/errors.hpp"
#include "gfc/specfun.hpp"

namespace gfc::ops {

void SampledFunction::validate() const {
  if (!(p > 0.0) || p > 1.0) throw UsageError("SampledFunction: p must be in (0,1]");
  if (nodes.size() < 2) throw UsageError("SampledFunction: needs at least 2 nodes");
  if (nodes.size() != values.size())
    throw UsageError("SampledFunction: nodes/values size mismatch");
  double prev = 0.0;
  for (double t : nodes) {
    if (!(t > prev)) throw UsageError("SampledFunction: nodes must be positive and increasing");
    prev = t;
  }
}

namespace {

// f1 values at the nodes, with a linear extrapolation to tau = 0
std::vector<Complex> f1_values(const SampledFunction& f) {
  std::vector<Complex> f1(f.nodes.size());
  for (std::size_t i = 0; i < f.nodes.size(); ++i)
    f1[i] = f.values[i] * std::pow(f.nodes[i], 1.0 - f.p);
  return f1;
}

Complex f1_at_zero(const SampledFunction& f, const std::vector<Complex>& f1) {
  const double t1 = f.nodes[0], t2 = f.nodes[1];
  return f1[0] - (f1[1] - f1[0]) / (t2 - t1) * t1;
}

}  // namespace

Complex SampledFunction::interpolate(double t) const {
  validate();
  if (!(t > 0.0)) throw DomainError("SampledFunction::interpolate: t must be positive");
  const std::vector<Complex> f1 = f1_values(*this);
  double a, b;
  Complex fa, fb;
  if (t <= nodes.front()) {
    a = 0.0, b = nodes.front();
    fa = f1_at_zero(*this, f1), fb = f1.front();
  } else {
    auto it = std::upper_bound(nodes.begin(), nodes.end(), t);
    const std::size_t hi = std::min<std::size_t>(std::size_t(it - nodes.begin()), nodes.size() - 1);
    a = nodes[hi - 1], b = nodes[hi];
    fa = f1[hi - 1], fb = f1[hi];
  }
  const Complex v1 = fa + (fb - fa) * ((t - a) / (b - a));
  return std::pow(t, p - 1.0) * v1;
}

SampledFunction SampledFunction::sample(const HSeries& f, double p, std::span<const double> nodes) {
  SampledFunction out;
  out.p = p;
  out.nodes.assign(nodes.begin(), nodes.end());
  out.values.reserve(nodes.size());
  for (double t : nodes) out.values.push_back(f.evaluate(t));
  out.validate();
  return out;
}

std::vector<double> graded_mesh(double T, int N, double gamma) {
  if (!(T > 0.0) || N < 2) throw UsageError("graded_mesh: need T > 0 and N >= 2");
  if (!(gamma >= 1.0)) throw UsageError("graded_mesh: gamma must be >= 1");
  std::vector<double> nodes;
  nodes.resize(std::size_t(N));
  for (int i = 1; i <= N; ++i) nodes[std::size_t(i - 1)] = T * std::pow(double(i) / N, gamma);
  return nodes;
}

FtTheorem ft_theorem_from_string(const std::string& name) {
  if (name == "ft1-rl") return FtTheorem::FT1_RL;
  if (name == "ft1-c") return FtTheorem::FT1_C;
  if (name == "ft2-rl") return FtTheorem::FT2_RL;
  if (name == "ft2-c") return FtTheorem::FT2_C;
  throw UsageError("unknown fundamental-theorem id '" + name + "'");
}

std::string to_string(FtTheorem t) {
  switch (t) {
    case FtTheorem::FT1_RL: return "ft1-rl";
    case FtTheorem::FT1_C: return "ft1-c";
    case FtTheorem::FT2_RL: return "ft2-rl";
    case FtTheorem::FT2_C: return "ft2-c";
  }
  return "?";
}

HSeries gfi(const HSeries& kappa, const HSeries& f, int n) {
  if (n < 1) throw UsageError("gfi: n must be >= 1");
  if (kappa.is_zero()) throw DomainError("gfi: zero kernel");
  return hs_convolve(hs_power(kappa, n), f);
}

namespace {

HSeries differentiate_n(const HSeries& f, int n, const char* who) {
  HSeries d = f;
  for (int i = 0; i < n; ++i) {
    for (const HTerm& t : d.terms())
      if (t.exponent < 1.0 - kExponentMergeTol)
        throw DomainError(std::string(who) + ": term h_" + std::to_string(t.exponent) +
                          " blocks derivative stage " + std::to_string(i + 1) + " of " +
                          std::to_string(n));
    d = hs_differentiate(d);
  }
  return d;
}

HSeries taylor_head(const HSeries& f, int n) {
  std::vector<HTerm> head;
  for (int j = 0; j < n; ++j) {
    const Complex c = hs_derivative_at_zero(f, j);
    if (c != Complex(0.0)) head.push_back({c, double(j) + 1.0});
  }
  return hs_normalize(std::move(head), f.policy());
}

}  // namespace

HSeries gfd_caputo(const kernels::SoninePair& pair, const HSeries& f, int n) {
  if (n < 1) throw UsageError("gfd_caputo: n must be >= 1");
  HSeries fn = differentiate_n(f, n, "gfd_caputo");
  if (pair.identity_associate()) return fn;
  if (fn.is_zero()) return HSeries(fn.policy());
  return hs_convolve(hs_power(pair.k_hat, n), fn);
}

HSeries gfd_rl(const kernels::SoninePair& pair, const HSeries& f, int n) {
  if (n < 1) throw UsageError("gfd_rl: n must be >= 1");
  if (pair.identity_associate()) return differentiate_n(f, n, "gfd_rl");
  HSeries conv = hs_convolve(hs_power(pair.k_hat, n), f);
  return differentiate_n(conv, n, "gfd_rl");
}

HSeries gfd_caputo_regularized(const kernels::SoninePair& pair, const HSeries& f, int n) {
  if (n < 1) throw UsageError("gfd_caputo_regularized: n must be >= 1");
  return gfd_rl(pair, f - taylor_head(f, n), n);
}

SampledFunction gfi_sampled(const HSeries& kappa, const SampledFunction& f) {
  f.validate();
  if (kappa.is_zero()) throw DomainError("gfi_sampled: zero kernel");
  const double p_k = kappa.min_exponent();
  if (!(p_k > 0.0) || p_k > 1.0)
    throw DomainError("gfi_sampled: kernel minimal exponent must be in (0,1]");

  const std::size_t n = f.nodes.size();
  const std::vector<Complex> f1 = f1_values(f);
  const Complex f1_0 = f1_at_zero(f, f1);

  // per-kernel-term reciprocal Gamma factors
  std::vector<double> rg(kappa.size());
  for (std::size_t m = 0; m < kappa.size(); ++m)
    rg[m] = std::exp(-std::lgamma(kappa.terms()[m].exponent));

  SampledFunction out;
  out.p = std::min(p_k + f.p, 1.0);
  out.nodes = f.nodes;
  out.values.assign(n, Complex(0.0));

  for (std::size_t i = 0; i < n; ++i) {
    const double t = f.nodes[i];
    const double logt = std::log(t);
    Complex acc = 0.0;
    // cells [tau_j, tau_{j+1}] with tau_0 = 0
    for (std::size_t j = 0; j <= i; ++j) {
      const double a = (j == 0) ? 0.0 : f.nodes[j - 1];
      const double b = f.nodes[j];
      const Complex fa = (j == 0) ? f1_0 : f1[j - 1];
      const Complex fb = f1[j];
      const Complex slope = (fb - fa) / (b - a);
      const Complex c0 = fa - slope * a;  // f1(tau) = c0 + slope*tau on the cell
      const double xa = a / t;
      const double xb = std::min(b / t, 1.0);
      for (std::size_t m = 0; m < kappa.size(); ++m) {
        const HTerm& km = kappa.terms()[m];
        const double mu = km.exponent;
        // int_a^b (t-tau)^{mu-1} tau^{p-1} (c0 + slope*tau) dtau
        //   = c0 t^{mu+p-1} dB(p,mu) + slope t^{mu+p} dB(p+1,mu)
        const double b1 = specfun::incomplete_beta(f.p, mu, xb) -
                          specfun::incomplete_beta(f.p, mu, xa);
        const double b2 = specfun::incomplete_beta(f.p + 1.0, mu, xb) -
                          specfun::incomplete_beta(f.p + 1.0, mu, xa);
        const double s1 = std::exp((mu + f.p - 1.0) * logt);
        acc += km.coeff * rg[m] * (c0 * s1 * b1 + slope * s1 * t * b2);
      }
    }
    out.values[i] = acc;
  }
  return out;
}

FtReport verify_ft(const kernels::SoninePair& pair, const HSeries& f, FtTheorem theorem, int n,
                   std::span<const double> grid) {
  if (n < 1) throw UsageError("verify_ft: n must be >= 1");
  FtReport report{theorem, n, 0.0, {grid.begin(), grid.end()}};

  HSeries residual;
  switch (theorem) {
    case FtTheorem::FT1_RL:
      residual = gfd_rl(pair, gfi(pair.kappa_hat, f, n), n) - f;
      break;
    case FtTheorem::FT1_C:
      // applicable when the caller built f = gfi(k, phi, n)
      residual = gfd_caputo(pair, gfi(pair.kappa_hat, f, n), n) - f;
      break;
    case FtTheorem::FT2_C: {
      HSeries lhs = gfi(pair.kappa_hat, gfd_caputo(pair, f, n), n);
      residual = lhs - (f - taylor_head(f, n));
      break;
    }
    case FtTheorem::FT2_RL:
      residual = gfi(pair.kappa_hat, gfd_rl(pair, f, n), n) - f;
      break;
  }
  for (double t : grid) {
    if (!(t > 0.0)) throw UsageError("verify_ft: grid points must be positive");
    const auto r = residual.evaluate_with_bound(t);
    report.max_residual = std::max(report.max_residual, std::abs(r.value) + r.tail_bound);
  }
  return report;
}

void write_csv(std::ostream& os, const SampledFunction& f) {
  os << "t,re,im\n";
  char buf[128];
  for (std::size_t i = 0; i < f.nodes.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", f.nodes[i], f.values[i].real(),
                  f.values[i].imag());
    os << buf;
  }
}

}  // namespace gfc::ops
