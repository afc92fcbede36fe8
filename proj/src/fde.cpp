#include "gfc/fde.hpp"

#include <algorithm>
#include <cmath>

#include "gfc/errors.hpp"

namespace gfc::fde {

using kernels::SoninePair;
using opcalc::OperatorPolynomial;
using opcalc::PartialFraction;
using opcalc::PartialFractionDecomposition;

void IvpProblem::validate() const {
  if (a.size() < 2) throw UsageError("IvpProblem: need at least a0 and a1");
  if (a.back() == 0.0) throw UsageError("IvpProblem: leading coefficient a_n must be nonzero");
  if (inits.size() != std::size_t(order()))
    throw UsageError("IvpProblem: need exactly n initial values");
}

IvpSolution solve_single(const SoninePair& pair, double lambda, const HSeries& f, double y0,
                         const TruncationPolicy& policy) {
  opcalc::ResolventSeries r = opcalc::build_resolvent(pair, lambda, policy);
  IvpSolution sol;
  sol.y_f = f.is_zero() ? HSeries(policy) : hs_convolve(f, r.l);
  sol.y_tilde = {r.L};
  sol.y = sol.y_f + y0 * r.L;
  const auto b = sol.y.evaluate_with_bound(1.0);
  sol.diagnostics.tail_bound = b.tail_bound;
  return sol;
}

namespace {

constexpr double kImagPairTol = 1e-10;

// Strips imaginary parts, recording their worst magnitude.
HSeries real_part(const HSeries& s, double& imag_max) {
  std::vector<HTerm> terms;
  terms.reserve(s.size());
  double scale = 0.0;
  for (const HTerm& t : s.terms()) scale = std::max(scale, std::abs(t.coeff));
  for (const HTerm& t : s.terms()) {
    imag_max = std::max(imag_max, scale > 0.0 ? std::abs(t.coeff.imag()) / scale : 0.0);
    if (t.coeff.real() != 0.0) terms.push_back({t.coeff.real(), t.exponent});
  }
  HSeries out = hs_normalize(std::move(terms), s.policy());
  if (s.truncated()) out = out.with_tail_bound(s.tail_coeff(), s.tail_exponent());
  return out;
}

// Doubles the real part termwise: the contribution of a conjugate root pair.
HSeries twice_real_part(const HSeries& s) {
  std::vector<HTerm> terms;
  terms.reserve(s.size());
  for (const HTerm& t : s.terms())
    if (t.coeff.real() != 0.0) terms.push_back({2.0 * t.coeff.real(), t.exponent});
  HSeries out = hs_normalize(std::move(terms), s.policy());
  if (s.truncated()) out = out.with_tail_bound(2.0 * s.tail_coeff(), s.tail_exponent());
  return out;
}

struct RootSeriesCache {
  // l and its convolution powers per root, built on demand
  std::vector<HSeries> l;
  std::vector<std::vector<HSeries>> powers;  // powers[i][j-1] = l_i^j
  std::vector<HSeries> L;

  RootSeriesCache(const PartialFractionDecomposition& pfd, const SoninePair& pair,
                  const TruncationPolicy& policy) {
    for (const opcalc::Root& r : pfd.roots) {
      opcalc::ResolventSeries rs = opcalc::build_resolvent(pair, r.value, policy);
      l.push_back(rs.l);
      L.push_back(rs.L);
      powers.push_back({rs.l});
    }
  }

  const HSeries& l_power(std::size_t root, int j) {
    auto& p = powers[root];
    while (int(p.size()) < j) p.push_back(hs_convolve(p.back(), l[root]));
    return p[std::size_t(j - 1)];
  }
};

bool roots_all_simple(const PartialFractionDecomposition& pfd) {
  for (const opcalc::Root& r : pfd.roots)
    if (r.multiplicity != 1) return false;
  return true;
}

// Realizes one residue table sum_ij c_ij * S_ij as a real h-series, where
// S_ij is either l^j (use_L = false) or L (use_L = true, simple roots only).
// Conjugate root pairs are combined analytically: only Im >= 0 roots are
// visited and complex-pair contributions enter as 2 Re(...) termwise.
HSeries realize_real(const PartialFractionDecomposition& pfd, std::size_t table_index,
                     RootSeriesCache& cache, bool use_L, const TruncationPolicy& policy,
                     IvpDiagnostics& diag) {
  const std::vector<PartialFraction>& table = pfd.residues.at(table_index);
  HSeries sum(policy);
  for (const PartialFraction& pf : table) {
    const Complex lam = pfd.roots[std::size_t(pf.root_index)].value;
    const double im_scale = std::abs(lam.imag()) / (1.0 + std::abs(lam));
    if (im_scale <= kImagPairTol) {
      // real root
      const HSeries& base = use_L ? cache.L[std::size_t(pf.root_index)]
                                  : cache.l_power(std::size_t(pf.root_index), pf.power);
      diag.imag_residue_max = std::max(diag.imag_residue_max, std::abs(pf.coefficient.imag()));
      sum = sum + real_part(pf.coefficient * base, diag.imag_residue_max);
    } else if (lam.imag() > 0.0) {
      const HSeries& base = use_L ? cache.L[std::size_t(pf.root_index)]
                                  : cache.l_power(std::size_t(pf.root_index), pf.power);
      sum = sum + twice_real_part(pf.coefficient * base);
    }
    // Im < 0: conjugate partner of a visited root, already accounted for
  }
  return sum;
}

// Checks that complex roots pair up (real coefficient problems); if they do
// not, realization falls back to the full complex sum.
bool conjugates_paired(const PartialFractionDecomposition& pfd) {
  std::vector<int> up, down;
  for (std::size_t i = 0; i < pfd.roots.size(); ++i) {
    const Complex v = pfd.roots[i].value;
    if (std::abs(v.imag()) / (1.0 + std::abs(v)) <= kImagPairTol) continue;
    (v.imag() > 0 ? up : down).push_back(int(i));
  }
  if (up.size() != down.size()) return false;
  for (int iu : up) {
    bool found = false;
    for (int id : down) {
      const Complex d = pfd.roots[std::size_t(iu)].value - std::conj(pfd.roots[std::size_t(id)].value);
      if (std::abs(d) <= 1e-7 * (1.0 + std::abs(pfd.roots[std::size_t(iu)].value)) &&
          pfd.roots[std::size_t(iu)].multiplicity == pfd.roots[std::size_t(id)].multiplicity) {
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

HSeries realize_complex(const PartialFractionDecomposition& pfd, std::size_t table_index,
                        RootSeriesCache& cache, bool use_L, const TruncationPolicy& policy,
                        IvpDiagnostics& diag) {
  const std::vector<PartialFraction>& table = pfd.residues.at(table_index);
  HSeries sum(policy);
  for (const PartialFraction& pf : table) {
    const HSeries& base = use_L ? cache.L[std::size_t(pf.root_index)]
                                : cache.l_power(std::size_t(pf.root_index), pf.power);
    sum = sum + pf.coefficient * base;
  }
  return real_part(sum, diag.imag_residue_max);
}

// Removes the (algebraically zero, numerically tiny) h_1 coefficient.
HSeries drop_constant_term(const HSeries& s) {
  double scale = 0.0;
  for (const HTerm& t : s.terms()) scale = std::max(scale, std::abs(t.coeff));
  std::vector<HTerm> terms;
  for (const HTerm& t : s.terms()) {
    if (std::abs(t.exponent - 1.0) <= kExponentMergeTol) {
      if (std::abs(t.coeff) > 1e-9 * scale)
        throw NumericError("solve_multiterm: constant term failed to cancel");
      continue;
    }
    terms.push_back(t);
  }
  HSeries out = hs_normalize(std::move(terms), s.policy());
  if (s.truncated()) out = out.with_tail_bound(s.tail_coeff(), s.tail_exponent());
  return out;
}

}  // namespace

IvpSolution solve_multiterm(const IvpProblem& problem, const TruncationPolicy& policy) {
  problem.validate();
  const int n = problem.order();
  const SoninePair& pair = problem.pair;

  OperatorPolynomial pn{{problem.a.begin(), problem.a.end()}, pair};
  std::vector<OperatorPolynomial> numerators;
  numerators.push_back({{Complex(1.0)}, pair});  // I / P_n
  for (int i = 0; i < n; ++i) {
    // P_i(S) = sum_{j=i+1}^{n} a_j S^{j-i-1}
    std::vector<Complex> ci(problem.a.begin() + i + 1, problem.a.end());
    numerators.push_back({std::move(ci), pair});
  }
  PartialFractionDecomposition pfd = opcalc::partial_fractions(pn, numerators);

  RootSeriesCache cache(pfd, pair, policy);
  IvpSolution sol;
  if (pfd.conditioning_warning)
    sol.diagnostics.notes += "clustered roots: residues may be ill-conditioned; ";

  const bool simple = roots_all_simple(pfd);
  const bool paired = conjugates_paired(pfd);
  auto realize = [&](std::size_t index, bool use_L) {
    return paired ? realize_real(pfd, index, cache, use_L, policy, sol.diagnostics)
                  : realize_complex(pfd, index, cache, use_L, policy, sol.diagnostics);
  };

  // G = I/P_n
  const HSeries g = realize(0, false);

  // forced part
  if (const HSeries* fs = std::get_if<HSeries>(&problem.f)) {
    sol.y_f = fs->is_zero() ? HSeries(policy) : hs_convolve(*fs, g);
  }

  // homogeneous basis
  const HSeries k_hat = pair.identity_associate() ? HSeries() : pair.k_hat;
  for (int i = 0; i < n; ++i) {
    HSeries yi;
    if (simple) {
      HSeries li = realize(std::size_t(i) + 1, true);  // sum_j d_ij L_j
      if (i >= 1) li = drop_constant_term(li);
      yi = (i == 0 || pair.identity_associate()) ? li : hs_convolve(hs_power(k_hat, i), li);
    } else {
      // multiplicity extension: y_i = k^{i+1} * realize(P_i / P_n)
      HSeries ti = realize(std::size_t(i) + 1, false);
      yi = pair.identity_associate() ? ti : hs_convolve(hs_power(k_hat, i + 1), ti);
    }
    sol.y_tilde.push_back(yi);
  }

  sol.y = sol.y_f;
  for (int i = 0; i < n; ++i)
    if (problem.inits[std::size_t(i)] != 0.0)
      sol.y = sol.y + problem.inits[std::size_t(i)] * sol.y_tilde[std::size_t(i)];

  // sampled source: numeric convolution with G on the source mesh
  if (const ops::SampledFunction* fs = std::get_if<ops::SampledFunction>(&problem.f)) {
    ops::SampledFunction yf_num = ops::gfi_sampled(g, *fs);
    for (std::size_t k = 0; k < yf_num.nodes.size(); ++k)
      yf_num.values[k] += sol.y.evaluate(yf_num.nodes[k]);
    sol.y_sampled = std::move(yf_num);
    sol.diagnostics.notes += "sampled source: forced part accurate to the mesh only; ";
  }

  const auto b = sol.y.evaluate_with_bound(1.0);
  sol.diagnostics.tail_bound = b.tail_bound;
  return sol;
}

namespace {

// *D^j via the k^j * y^{(j)} route when admissible, else the regularized form.
HSeries caputo_any(const SoninePair& pair, const HSeries& y, int j) {
  if (j == 0) return y;
  try {
    return ops::gfd_caputo(pair, y, j);
  } catch (const DomainError&) {
    return ops::gfd_caputo_regularized(pair, y, j);
  }
}

}  // namespace

ResidualReport residual_report(const IvpProblem& problem, const IvpSolution& solution,
                               std::span<const double> grid) {
  problem.validate();
  const int n = problem.order();
  const HSeries* fs = std::get_if<HSeries>(&problem.f);
  if (!fs)
    throw UsageError("residual_report: requires an h-series source (sampled sources are "
                     "mesh-limited; see diagnostics)");

  HSeries lhs(solution.y.policy());
  for (int j = 0; j <= n; ++j) {
    if (problem.a[std::size_t(j)] == 0.0) continue;
    lhs = lhs + problem.a[std::size_t(j)] * caputo_any(problem.pair, solution.y, j);
  }
  const HSeries residual = lhs - *fs;

  ResidualReport report;
  for (double t : grid) {
    if (t < 0.01) continue;  // exponents < 1 interact badly with n-fold derivatives near 0
    const auto r = residual.evaluate_with_bound(t);
    report.max_residual = std::max(report.max_residual, std::abs(r.value) + r.tail_bound);
  }
  for (int j = 0; j < n; ++j) {
    const Complex d = hs_derivative_at_zero(solution.y, j);
    report.init_errors.push_back(std::abs(d - problem.inits[std::size_t(j)]));
  }
  return report;
}

CmReport complete_monotonicity_check(const HSeries& series, double T, int orders) {
  if (!(T > 0.0)) throw UsageError("complete_monotonicity_check: T must be positive");
  if (orders < 0 || orders > 6) throw UsageError("complete_monotonicity_check: orders must be in [0,6]");

  constexpr int kGridN = 256;
  const double h = T / kGridN;

  // grid values; skip t=0 when the series is singular there
  std::vector<double> vals(kGridN + 1);
  const bool zero_ok = series.is_zero() || series.min_exponent() >= 1.0 - kExponentMergeTol;
  double max_abs = 0.0;
  for (int i = 0; i <= kGridN; ++i) {
    const double t = i * h;
    if (i == 0 && !zero_ok) {
      vals[0] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    vals[std::size_t(i)] = series.evaluate(t).real();
    max_abs = std::max(max_abs, std::abs(vals[std::size_t(i)]));
  }
  const double tol = 1e-9 * std::max(max_abs, 1.0);

  CmReport report;
  for (int nOrd = 0; nOrd <= orders; ++nOrd) {
    // binomial weights of the n-th forward difference
    std::vector<double> w(std::size_t(nOrd) + 1);
    double bc = 1.0;
    for (int k = 0; k <= nOrd; ++k) {
      w[std::size_t(k)] = ((nOrd - k) % 2 ? -bc : bc);
      bc = bc * (nOrd - k) / (k + 1);
    }
    const int start = zero_ok ? 0 : 1;
    for (int i = start; i + nOrd <= kGridN; ++i) {
      double d = 0.0;
      for (int k = 0; k <= nOrd; ++k) d += w[std::size_t(k)] * vals[std::size_t(i + k)];
      const double signed_value = (nOrd % 2 ? -d : d);
      if (signed_value < -tol && -signed_value > report.worst_violation) {
        report.worst_violation = -signed_value;
        report.worst_order = nOrd;
        report.passed = false;
      }
    }
  }

  // exact derivative route where the exponents permit
  HSeries d = series;
  for (int nOrd = 1; nOrd <= orders; ++nOrd) {
    bool ok = !d.is_zero();
    for (const HTerm& t : d.terms())
      if (t.exponent < 1.0 - kExponentMergeTol) ok = false;
    if (!ok) break;
    d = hs_differentiate(d);
    double dmax = 0.0;
    std::vector<double> dv(kGridN);
    for (int i = 1; i <= kGridN; ++i) {
      dv[std::size_t(i - 1)] = d.evaluate(i * h).real();
      dmax = std::max(dmax, std::abs(dv[std::size_t(i - 1)]));
    }
    const double dtol = 1e-9 * std::max(dmax, 1.0);
    for (int i = 0; i < kGridN; ++i) {
      const double signed_value = (nOrd % 2 ? -dv[std::size_t(i)] : dv[std::size_t(i)]);
      if (signed_value < -dtol && -signed_value > report.worst_violation) {
        report.worst_violation = -signed_value;
        report.worst_order = nOrd;
        report.passed = false;
      }
    }
  }
  return report;
}

IvpProblem problem_from_json(const nlohmann::json& j, const TruncationPolicy& policy) {
  IvpProblem p;
  p.pair = kernels::make_pair(kernels::kernel_from_json(j.at("kernel")), policy);
  p.a = j.at("a").get<std::vector<double>>();
  p.inits = j.at("inits").get<std::vector<double>>();
  if (j.contains("f") && !j.at("f").is_null()) {
    const auto& jf = j.at("f");
    if (jf.contains("sampled")) {
      const auto& js = jf.at("sampled");
      ops::SampledFunction s;
      s.p = js.at("p").get<double>();
      s.nodes = js.at("nodes").get<std::vector<double>>();
      const auto re = js.at("re").get<std::vector<double>>();
      std::vector<double> im(re.size(), 0.0);
      if (js.contains("im")) im = js.at("im").get<std::vector<double>>();
      if (im.size() != re.size()) throw UsageError("problem_from_json: re/im size mismatch");
      for (std::size_t k = 0; k < re.size(); ++k) s.values.push_back({re[k], im[k]});
      s.validate();
      p.f = std::move(s);
    } else {
      p.f = HSeries::from_json(jf).with_policy(policy);
    }
  } else {
    p.f = HSeries(policy);
  }
  p.validate();
  return p;
}

nlohmann::json problem_to_json(const IvpProblem& p) {
  nlohmann::json j;
  j["kernel"] = kernels::kernel_to_json(p.pair.kappa);
  j["a"] = p.a;
  j["inits"] = p.inits;
  if (const HSeries* fs = std::get_if<HSeries>(&p.f)) {
    j["f"] = fs->to_json();
  } else {
    const auto& s = std::get<ops::SampledFunction>(p.f);
    nlohmann::json js;
    js["p"] = s.p;
    js["nodes"] = s.nodes;
    std::vector<double> re, im;
    for (const Complex& v : s.values) {
      re.push_back(v.real());
      im.push_back(v.imag());
    }
    js["re"] = std::move(re);
    js["im"] = std::move(im);
    j["f"] = nlohmann::json{{"sampled", std::move(js)}};
  }
  return j;
}

}  // namespace gfc::fde
