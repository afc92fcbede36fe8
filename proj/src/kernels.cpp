#include "gfc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gfc/errors.hpp"
#include "gfc/specfun.hpp"

namespace gfc::kernels {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw UsageError(msg);
}

bool in_open_01(double x) { return x > 0.0 && x < 1.0; }

}  // namespace

bool is_unit_kernel(const KernelSpec& spec) {
  const auto* s = std::get_if<SeriesSpec>(&spec);
  return s && s->alpha == 1.0;
}

void validate(const KernelSpec& spec) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PowerSpec>) {
          require(in_open_01(s.alpha), "power kernel: alpha must be in (0,1)");
        } else if constexpr (std::is_same_v<T, TemperedSpec>) {
          require(in_open_01(s.alpha), "tempered kernel: alpha must be in (0,1)");
          require(s.rho >= 0.0, "tempered kernel: rho must be >= 0");
        } else if constexpr (std::is_same_v<T, SumOfPowersSpec>) {
          require(!s.terms.empty(), "sum kernel: needs at least one term");
          std::set<double> orders;
          for (const SumTerm& t : s.terms) {
            require(in_open_01(t.order), "sum kernel: orders must be in (0,1)");
            require(t.weight != 0.0, "sum kernel: zero weight");
            require(orders.insert(t.order).second, "sum kernel: orders must be distinct");
          }
        } else if constexpr (std::is_same_v<T, BesselSpec>) {
          require(in_open_01(s.alpha), "bessel kernel: alpha must be in (0,1)");
        } else if constexpr (std::is_same_v<T, MittagLefflerSpec>) {
          require(s.alpha > 0.0 && s.alpha < s.beta && s.beta < 1.0,
                  "ml kernel: need 0 < alpha < beta < 1");
        } else if constexpr (std::is_same_v<T, SeriesSpec>) {
          require(!s.a.empty() && s.a[0] != 0.0, "series kernel: a[0] must be nonzero");
          if (s.alpha == 1.0) {
            require(s.a.size() == 1 && s.a[0] == 1.0,
                    "series kernel: alpha = 1 is reserved for the constant kernel {1}");
          } else {
            require(in_open_01(s.alpha), "series kernel: alpha must be in (0,1)");
          }
        }
      },
      spec);
}

double min_exponent(const KernelSpec& spec) {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PowerSpec>) return s.alpha;
        if constexpr (std::is_same_v<T, TemperedSpec>) return s.alpha;
        if constexpr (std::is_same_v<T, SumOfPowersSpec>) {
          double p = 1.0;
          for (const SumTerm& t : s.terms) p = std::min(p, t.order);
          return p;
        }
        if constexpr (std::is_same_v<T, BesselSpec>) return s.alpha;
        if constexpr (std::is_same_v<T, MittagLefflerSpec>) return s.beta;
        if constexpr (std::is_same_v<T, SeriesSpec>) return s.alpha;
      },
      spec);
}

namespace {

// Generates sum_k c(k) h_{e(k)} with decreasing horizon magnitude, folding
// whatever the policy cuts into the tail bound.
template <class Coeff, class Expo>
HSeries expand(const TruncationPolicy& policy, Coeff coeff, Expo expo) {
  std::vector<HTerm> terms;
  HSeries out;
  double tail_c = 0.0, tail_e = 0.0;
  for (int k = 0;; ++k) {
    const double e = expo(k);
    const double c = coeff(k);
    const double mag =
        std::abs(c) * std::exp((e - 1.0) * std::log(kTailHorizon) - std::lgamma(e));
    const bool cut = e > policy.max_exponent || terms.size() >= policy.max_terms;
    if (cut) {
      if (tail_c == 0.0) {
        tail_e = e;
        tail_c = std::abs(c);
      } else {
        tail_c += std::abs(c) * std::exp((e - tail_e) * std::log(kTailHorizon) +
                                         std::lgamma(tail_e) - std::lgamma(e));
      }
      if (mag < 1e-250 || k > 100000) break;
      continue;
    }
    terms.push_back({c, e});
    if (mag < 1e-250 && k > 2) break;
  }
  out = hs_normalize(std::move(terms), policy);
  if (tail_c > 0.0) out = out.with_tail_bound(tail_c, tail_e);
  return out;
}

}  // namespace

HSeries kernel_to_hseries(const KernelSpec& spec, const TruncationPolicy& policy) {
  validate(spec);
  using specfun::gamma_fn;
  return std::visit(
      [&](const auto& s) -> HSeries {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PowerSpec>) {
          return HSeries::h(s.alpha, 1.0, policy);
        } else if constexpr (std::is_same_v<T, TemperedSpec>) {
          if (s.rho == 0.0) return HSeries::h(s.alpha, 1.0, policy);
          // h_alpha(t) e^{-rho t} = sum_j (-rho)^j Gamma(alpha+j) / (j! Gamma(alpha)) h_{alpha+j}
          const double lga = std::lgamma(s.alpha);
          return expand(
              policy,
              [&](int j) {
                const double logmag =
                    j * std::log(s.rho) + std::lgamma(s.alpha + j) - std::lgamma(double(j) + 1.0) - lga;
                return (j % 2 ? -1.0 : 1.0) * std::exp(logmag);
              },
              [&](int j) { return s.alpha + j; });
        } else if constexpr (std::is_same_v<T, SumOfPowersSpec>) {
          std::vector<HTerm> terms;
          for (const SumTerm& t : s.terms) terms.push_back({t.weight, t.order});
          return hs_normalize(std::move(terms), policy);
        } else if constexpr (std::is_same_v<T, BesselSpec>) {
          // (sqrt t)^{alpha-1} J_{alpha-1}(2 sqrt t) = sum_k (-1)^k/k! h_{alpha+k}
          return expand(
              policy,
              [&](int k) {
                return (k % 2 ? -1.0 : 1.0) * std::exp(-std::lgamma(double(k) + 1.0));
              },
              [&](int k) { return s.alpha + k; });
        } else if constexpr (std::is_same_v<T, MittagLefflerSpec>) {
          // t^{beta-1} E_{alpha,beta}(-t^alpha) = sum_k (-1)^k h_{alpha k + beta}
          return expand(
              policy, [&](int k) { return k % 2 ? -1.0 : 1.0; },
              [&](int k) { return s.beta + s.alpha * k; });
        } else if constexpr (std::is_same_v<T, SeriesSpec>) {
          // h_alpha(t) sum_k a_k t^k: coefficient of h_{alpha+k} is a_k Gamma(alpha+k)/Gamma(alpha)
          std::vector<HTerm> terms;
          const double lga = std::lgamma(s.alpha);
          for (std::size_t k = 0; k < s.a.size(); ++k) {
            if (s.a[k] == 0.0) continue;
            const double c = s.a[k] * std::exp(std::lgamma(s.alpha + double(k)) - lga);
            terms.push_back({c, s.alpha + double(k)});
          }
          return hs_normalize(std::move(terms), policy);
        }
      },
      spec);
}

AssociateResult associate_kernel(double alpha, std::span<const double> a, int N) {
  if (!in_open_01(alpha)) throw UsageError("associate_kernel: alpha must be in (0,1)");
  if (a.empty() || a[0] == 0.0) throw DomainError("associate_kernel: degenerate kernel, a[0] = 0");
  if (N < 0) throw UsageError("associate_kernel: N must be >= 0");

  auto coef = [&](std::size_t i) -> double { return i < a.size() ? a[i] : 0.0; };
  const double lg_alpha = std::lgamma(alpha);
  AssociateResult res;
  res.b.resize(std::size_t(N) + 1);
  res.b[0] = 1.0 / a[0];
  for (int n = 1; n <= N; ++n) {
    // row n, normalized by Gamma(n+1-alpha) Gamma(alpha):
    //   a0 b_n = -sum_{k<n} [G(k+1-a)G(a+n-k) / (G(n+1-a)G(a))] a_{n-k} b_k
    const double lg_nn = std::lgamma(double(n) + 1.0 - alpha) + lg_alpha;
    double s = 0.0;
    for (int k = 0; k < n; ++k) {
      const double ank = coef(std::size_t(n - k));
      if (ank == 0.0) continue;
      const double w =
          std::exp(std::lgamma(double(k) + 1.0 - alpha) + std::lgamma(alpha + double(n - k)) - lg_nn);
      s += w * ank * res.b[std::size_t(k)];
    }
    res.b[std::size_t(n)] = -s / a[0];
  }
  if (N >= 1 && std::abs(res.b[std::size_t(N)]) > 1e12 * std::abs(res.b[0]))
    res.conditioning_warning = true;
  return res;
}

HSeries invert_kernel(const HSeries& kappa_hat, const TruncationPolicy& policy) {
  if (kappa_hat.is_zero()) throw DomainError("invert_kernel: zero kernel");
  const double p = kappa_hat.min_exponent();
  if (!(p < 1.0)) throw DomainError("invert_kernel: kernel must be singular (min exponent < 1)");
  const Complex c0 = kappa_hat.terms().front().coeff;
  // kappa = c0 h_p + r; k = (1/c0) sum_j (-1)^j (s^j * h_{1-p}), s = r shifted by -p
  std::vector<HTerm> shifted;
  for (std::size_t i = 1; i < kappa_hat.size(); ++i) {
    const HTerm& t = kappa_hat.terms()[i];
    shifted.push_back({t.coeff / c0, t.exponent - p});
  }
  const HSeries base = HSeries::h(1.0 - p, 1.0, policy);
  if (shifted.empty()) return (1.0 / c0) * base;
  const HSeries s = hs_normalize(std::move(shifted), policy);
  NeumannResult r = hs_neumann(base, s, -1.0, policy, kTailHorizon / 2.0);
  return (1.0 / c0) * r.series;
}

HSeries associate_to_hseries(const AssociateRep& rep, const TruncationPolicy& policy) {
  return std::visit(
      [&](const auto& r) -> HSeries {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, KernelSpec>) {
          return kernel_to_hseries(r, policy);
        } else if constexpr (std::is_same_v<T, AssociateSeries>) {
          std::vector<HTerm> terms;
          const double q = 1.0 - r.alpha;
          const double lgq = std::lgamma(q);
          for (std::size_t k = 0; k < r.b.size(); ++k) {
            if (r.b[k] == 0.0) continue;
            const double c = r.b[k] * std::exp(std::lgamma(q + double(k)) - lgq);
            terms.push_back({c, q + double(k)});
          }
          return hs_normalize(std::move(terms), policy);
        } else if constexpr (std::is_same_v<T, IdentityAssociate>) {
          throw DomainError("associate_to_hseries: the identity associate is not a function");
        } else {
          return r.series.with_policy(policy);
        }
      },
      rep);
}

namespace {

AssociateSeries tempered_associate(double alpha, double rho, const TruncationPolicy& policy) {
  // k = h_{1-alpha,rho} + rho * ({1} * h_{1-alpha,rho}), written in the
  // factorized convention k = h_{1-alpha} * sum b_m t^m:
  //   b_m = (-rho)^m/m! + rho (-rho)^{m-1} / ((m-1)! (m - alpha)), m >= 1
  AssociateSeries as{alpha, {1.0}};
  if (rho == 0.0) return as;
  const int count = int(std::min<double>(policy.max_exponent + alpha, double(policy.max_terms)));
  double pw = 1.0;     // (-rho)^m / m!
  double pw_prev = 1.0;  // (-rho)^{m-1} / (m-1)!
  for (int m = 1; m <= count; ++m) {
    pw_prev = pw;
    pw *= -rho / m;
    as.b.push_back(pw + rho * pw_prev / (double(m) - alpha));
  }
  return as;
}

std::vector<double> bessel_analytic_coeffs(double alpha, int N) {
  // kappa_1 coefficients of the Bessel kernel: a_k = (-1)^k Gamma(alpha) / (k! Gamma(alpha+k))
  std::vector<double> a(std::size_t(N) + 1);
  const double lga = std::lgamma(alpha);
  for (int k = 0; k <= N; ++k)
    a[std::size_t(k)] = (k % 2 ? -1.0 : 1.0) *
                        std::exp(lga - std::lgamma(double(k) + 1.0) - std::lgamma(alpha + double(k)));
  return a;
}

std::optional<MittagLefflerSpec> match_ml_pattern(const SumOfPowersSpec& s) {
  if (s.terms.size() != 2) return std::nullopt;
  SumTerm lo = s.terms[0], hi = s.terms[1];
  if (lo.order > hi.order) std::swap(lo, hi);
  if (std::abs(lo.weight - 1.0) > 1e-12 || std::abs(hi.weight - 1.0) > 1e-12) return std::nullopt;
  const double beta = 1.0 - lo.order;
  const double alpha = hi.order - lo.order;
  if (alpha > 0.0 && alpha < beta && beta < 1.0) return MittagLefflerSpec{alpha, beta};
  return std::nullopt;
}

int coeff_budget(double alpha, const TruncationPolicy& policy) {
  const double span = policy.max_exponent - (1.0 - alpha);
  return int(std::clamp(span, 1.0, double(policy.max_terms)));
}

}  // namespace

SoninePair make_pair(const KernelSpec& spec, const TruncationPolicy& policy) {
  validate(spec);
  SoninePair pair;
  pair.kappa = spec;
  pair.policy = policy;

  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PowerSpec>) {
          pair.name = "power";
          pair.k = KernelSpec{PowerSpec{1.0 - s.alpha}};
          pair.class_K = true;
          pair.completely_monotone = true;
        } else if constexpr (std::is_same_v<T, TemperedSpec>) {
          pair.name = "tempered";
          pair.k = tempered_associate(s.alpha, s.rho, policy);
        } else if constexpr (std::is_same_v<T, SumOfPowersSpec>) {
          if (auto ml = match_ml_pattern(s)) {
            pair.name = "ml";
            pair.k = KernelSpec{*ml};
            pair.class_K = true;
            pair.completely_monotone = true;
          } else {
            pair.name = "sum";
            pair.k = LoweredAssociate{invert_kernel(kernel_to_hseries(spec, policy), policy)};
          }
        } else if constexpr (std::is_same_v<T, BesselSpec>) {
          pair.name = "bessel";
          const int n = coeff_budget(s.alpha, policy);
          pair.k = AssociateSeries{
              s.alpha, associate_kernel(s.alpha, bessel_analytic_coeffs(s.alpha, n), n).b};
        } else if constexpr (std::is_same_v<T, MittagLefflerSpec>) {
          // roles swapped relative to the ml pairing: the associate is the two-power sum
          pair.name = "ml-kappa";
          pair.k = KernelSpec{
              SumOfPowersSpec{{{1.0, 1.0 - s.beta + s.alpha}, {1.0, 1.0 - s.beta}}}};
        } else if constexpr (std::is_same_v<T, SeriesSpec>) {
          if (s.alpha == 1.0) {
            pair.name = "unit";
            pair.k = IdentityAssociate{};
            pair.class_K = true;
            pair.completely_monotone = true;
          } else {
            pair.name = "series";
            const int n = coeff_budget(s.alpha, policy);
            pair.k = AssociateSeries{s.alpha, associate_kernel(s.alpha, s.a, n).b};
          }
        }
      },
      spec);

  pair.kappa_hat = kernel_to_hseries(spec, policy);
  if (!pair.identity_associate()) pair.k_hat = associate_to_hseries(pair.k, policy);
  return pair;
}

SoninePair unit_pair(const TruncationPolicy& policy) {
  return make_pair(SeriesSpec{1.0, {1.0}}, policy);
}

std::vector<SoninePair> catalog(const TruncationPolicy& policy) {
  std::vector<SoninePair> pairs;
  pairs.push_back(make_pair(PowerSpec{0.6}, policy));
  pairs.push_back(make_pair(TemperedSpec{0.5, 1.0}, policy));
  pairs.push_back(make_pair(BesselSpec{0.4}, policy));
  pairs.push_back(make_pair(SumOfPowersSpec{{{1.0, 0.6}, {1.0, 0.3}}}, policy));  // ml, a=0.3 b=0.7
  // kappa_1 = (1 - e^{-t})/t, entire with a_0 = 1
  std::vector<double> a;
  double f = 1.0;
  for (int k = 0; k < 24; ++k) {
    f /= double(k + 1);
    a.push_back(k % 2 ? -f : f);
  }
  pairs.push_back(make_pair(SeriesSpec{0.5, std::move(a)}, policy));
  return pairs;
}

double sonine_residual(const SoninePair& pair, std::span<const double> grid,
                       const TruncationPolicy& policy) {
  for (double t : grid)
    if (!(t > 0.0)) throw UsageError("sonine_residual: grid points must be positive");

  HSeries conv;
  if (pair.identity_associate()) {
    conv = kernel_to_hseries(pair.kappa, policy);
  } else {
    conv = hs_convolve(kernel_to_hseries(pair.kappa, policy), associate_to_hseries(pair.k, policy));
  }
  double worst = 0.0;
  for (double t : grid) {
    const auto r = conv.evaluate_with_bound(t);
    worst = std::max(worst, std::abs(r.value - 1.0) + r.tail_bound);
  }
  return worst;
}

// --- JSON schema -------------------------------------------------------------

nlohmann::json kernel_to_json(const KernelSpec& spec) {
  return std::visit(
      [](const auto& s) -> nlohmann::json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PowerSpec>) {
          return {{"type", "power"}, {"alpha", s.alpha}};
        } else if constexpr (std::is_same_v<T, TemperedSpec>) {
          return {{"type", "tempered"}, {"alpha", s.alpha}, {"rho", s.rho}};
        } else if constexpr (std::is_same_v<T, SumOfPowersSpec>) {
          nlohmann::json terms = nlohmann::json::array();
          for (const SumTerm& t : s.terms)
            terms.push_back({{"weight", t.weight}, {"order", t.order}});
          return {{"type", "sum"}, {"terms", std::move(terms)}};
        } else if constexpr (std::is_same_v<T, BesselSpec>) {
          return {{"type", "bessel"}, {"alpha", s.alpha}};
        } else if constexpr (std::is_same_v<T, MittagLefflerSpec>) {
          return {{"type", "ml"}, {"alpha", s.alpha}, {"beta", s.beta}};
        } else if constexpr (std::is_same_v<T, SeriesSpec>) {
          return {{"type", "series"}, {"alpha", s.alpha}, {"a", s.a}};
        }
      },
      spec);
}

KernelSpec kernel_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  KernelSpec spec;
  if (type == "power") {
    spec = PowerSpec{j.at("alpha").get<double>()};
  } else if (type == "tempered") {
    spec = TemperedSpec{j.at("alpha").get<double>(), j.at("rho").get<double>()};
  } else if (type == "sum") {
    SumOfPowersSpec s;
    for (const auto& t : j.at("terms"))
      s.terms.push_back({t.at("weight").get<double>(), t.at("order").get<double>()});
    spec = std::move(s);
  } else if (type == "bessel") {
    spec = BesselSpec{j.at("alpha").get<double>()};
  } else if (type == "ml") {
    spec = MittagLefflerSpec{j.at("alpha").get<double>(), j.at("beta").get<double>()};
  } else if (type == "series") {
    spec = SeriesSpec{j.at("alpha").get<double>(), j.at("a").get<std::vector<double>>()};
  } else {
    throw UsageError("kernel_from_json: unknown kernel type '" + type + "'");
  }
  validate(spec);
  return spec;
}

}  // namespace gfc::kernels
