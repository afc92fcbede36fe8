#include "gfc/hseries.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gfc/errors.hpp"

namespace gfc {

namespace {

double h_value(double beta, double t) {
  // h_beta(t) = t^{beta-1} / Gamma(beta)
  const double logmag = (beta - 1.0) * std::log(t) - std::lgamma(beta);
  if (logmag > 709.0) throw NumericError("h_beta evaluation overflow (beta=" + std::to_string(beta) + ")");
  return std::exp(logmag);
}

}  // namespace

void TruncationPolicy::validate() const {
  if (max_terms < 1) throw UsageError("TruncationPolicy: max_terms must be >= 1");
  if (!(max_exponent > 0.0)) throw UsageError("TruncationPolicy: max_exponent must be positive");
  if (!(prune_tol >= 0.0) || prune_tol >= 1.0)
    throw UsageError("TruncationPolicy: prune_tol must be in [0, 1)");
}

TruncationPolicy TruncationPolicy::stricter(const TruncationPolicy& a, const TruncationPolicy& b) {
  return TruncationPolicy{std::min(a.max_terms, b.max_terms),
                          std::min(a.max_exponent, b.max_exponent),
                          std::max(a.prune_tol, b.prune_tol)};
}

void HSeries::absorb_tail(double coeff, double exponent) {
  if (coeff <= 0.0) return;
  truncated_ = true;
  if (tail_coeff_ == 0.0) {
    tail_coeff_ = coeff;
    tail_exponent_ = exponent;
    return;
  }
  // fold into a single bound C*h_q valid on (0, kTailHorizon]: for q <= e,
  // h_e(t) <= h_q(t) * h_e(H)/h_q(H) there, since the ratio is increasing.
  const double q = std::min(tail_exponent_, exponent);
  const double scale_old = (tail_exponent_ > q)
                               ? h_value(tail_exponent_, kTailHorizon) / h_value(q, kTailHorizon)
                               : 1.0;
  const double scale_new =
      (exponent > q) ? h_value(exponent, kTailHorizon) / h_value(q, kTailHorizon) : 1.0;
  tail_coeff_ = tail_coeff_ * scale_old + coeff * scale_new;
  tail_exponent_ = q;
}

HSeries hs_normalize(std::vector<HTerm> terms, TruncationPolicy policy) {
  policy.validate();
  for (const HTerm& t : terms)
    if (!(t.exponent > 0.0))
      throw DomainError("hs_normalize: non-positive exponent " + std::to_string(t.exponent));

  std::sort(terms.begin(), terms.end(),
            [](const HTerm& a, const HTerm& b) { return a.exponent < b.exponent; });

  HSeries out(policy);
  std::vector<HTerm> merged;
  merged.reserve(terms.size());
  for (const HTerm& t : terms) {
    if (!merged.empty() && t.exponent - merged.back().exponent <= kExponentMergeTol) {
      merged.back().coeff += t.coeff;
    } else {
      merged.push_back(t);
    }
  }

  double max_abs = 0.0;
  for (const HTerm& t : merged) max_abs = std::max(max_abs, std::abs(t.coeff));
  const double prune = policy.prune_tol * max_abs;

  std::vector<HTerm> kept;
  kept.reserve(merged.size());
  for (const HTerm& t : merged) {
    const double a = std::abs(t.coeff);
    if (a == 0.0) continue;
    if (t.exponent > policy.max_exponent || (prune > 0.0 && a <= prune)) {
      out.absorb_tail(a, t.exponent);
      continue;
    }
    kept.push_back(t);
  }
  if (kept.size() > policy.max_terms) {
    // keep the lowest exponents; that is the usual truncation of the series tail
    for (std::size_t i = policy.max_terms; i < kept.size(); ++i)
      out.absorb_tail(std::abs(kept[i].coeff), kept[i].exponent);
    kept.resize(policy.max_terms);
  }
  out.terms_ = std::move(kept);
  return out;
}

HSeries::HSeries(std::vector<HTerm> terms, TruncationPolicy policy) {
  *this = hs_normalize(std::move(terms), policy);
}

HSeries HSeries::h(double beta, Complex coeff, TruncationPolicy policy) {
  return HSeries({{coeff, beta}}, policy);
}

HSeries HSeries::one(TruncationPolicy policy) { return h(1.0, 1.0, policy); }

double HSeries::min_exponent() const {
  if (terms_.empty()) throw DomainError("min_exponent of the zero series");
  return terms_.front().exponent;
}

Complex HSeries::coefficient_at(double exponent) const {
  for (const HTerm& t : terms_)
    if (std::abs(t.exponent - exponent) <= kExponentMergeTol) return t.coeff;
  return 0.0;
}

Complex HSeries::evaluate(double t) const {
  if (t < 0.0) throw DomainError("hs_evaluate: t must be non-negative");
  if (t == 0.0) {
    Complex v = 0.0;
    for (const HTerm& term : terms_) {
      if (term.exponent < 1.0 - kExponentMergeTol)
        throw SingularityError("hs_evaluate: singular term h_" + std::to_string(term.exponent) +
                               " at t = 0");
      if (std::abs(term.exponent - 1.0) <= kExponentMergeTol) v += term.coeff;
    }
    return v;
  }
  // Kahan compensated summation, real and imaginary parts separately
  double sr = 0.0, cr = 0.0, si = 0.0, ci = 0.0;
  const double logt = std::log(t);
  for (const HTerm& term : terms_) {
    const double mag = std::exp((term.exponent - 1.0) * logt - std::lgamma(term.exponent));
    const double xr = term.coeff.real() * mag;
    const double xi = term.coeff.imag() * mag;
    double y = xr - cr, u = sr + y;
    cr = (u - sr) - y;
    sr = u;
    y = xi - ci;
    u = si + y;
    ci = (u - si) - y;
    si = u;
  }
  return {sr, si};
}

HSeries::EvalResult HSeries::evaluate_with_bound(double t) const {
  EvalResult r{evaluate(t), 0.0};
  if (truncated_ && tail_coeff_ > 0.0 && t > 0.0) {
    double bound = tail_coeff_ * h_value(tail_exponent_, t);
    if (t > kTailHorizon) bound *= h_value(tail_exponent_, t) / h_value(tail_exponent_, kTailHorizon);
    r.tail_bound = bound;
  }
  return r;
}

HSeries HSeries::with_policy(TruncationPolicy policy) const {
  HSeries out = hs_normalize(terms_, policy);
  if (truncated_) out.absorb_tail(tail_coeff_, tail_exponent_);
  return out;
}

HSeries HSeries::with_tail_bound(double coeff, double exponent) const {
  HSeries out = *this;
  out.truncated_ = true;
  out.absorb_tail(coeff, exponent);
  return out;
}

HSeries hs_convolve(const HSeries& a, const HSeries& b) {
  const TruncationPolicy policy = TruncationPolicy::stricter(a.policy(), b.policy());
  if (a.is_zero() || b.is_zero()) return HSeries(policy);

  std::vector<HTerm> products;
  products.reserve(a.size() * b.size());
  for (const HTerm& ta : a.terms())
    for (const HTerm& tb : b.terms())
      products.push_back({ta.coeff * tb.coeff, ta.exponent + tb.exponent});
  HSeries out = hs_normalize(std::move(products), policy);

  // propagate tails: tail_a * (|b| + tail_b) + |a| * tail_b
  auto abs_mass_from = [](const HSeries& s, double shift) {
    // sum_i |c_i| h_{beta_i + shift} bounded by C h_q on the horizon
    double q = 0.0, c = 0.0;
    for (const HTerm& t : s.terms()) {
      const double e = t.exponent + shift;
      if (c == 0.0) {
        q = e;
        c = std::abs(t.coeff);
      } else {
        c += std::abs(t.coeff) * (h_value(e, kTailHorizon) / h_value(q, kTailHorizon));
      }
    }
    return std::pair<double, double>{c, q};
  };
  if (a.truncated() && a.tail_coeff() > 0.0) {
    auto [c, q] = abs_mass_from(b, a.tail_exponent());
    if (c > 0.0) out.absorb_tail(a.tail_coeff() * c, q);
    if (b.truncated() && b.tail_coeff() > 0.0)
      out.absorb_tail(a.tail_coeff() * b.tail_coeff(), a.tail_exponent() + b.tail_exponent());
  }
  if (b.truncated() && b.tail_coeff() > 0.0) {
    auto [c, q] = abs_mass_from(a, b.tail_exponent());
    if (c > 0.0) out.absorb_tail(b.tail_coeff() * c, q);
  }
  if (a.truncated() || b.truncated()) out.truncated_ = true;
  return out;
}

HSeries hs_power(const HSeries& a, int n) {
  if (n < 1) throw UsageError("hs_power: n must be >= 1");
  HSeries result = a;
  for (int i = 1; i < n; ++i) result = hs_convolve(result, a);
  return result;
}

Complex hs_evaluate(const HSeries& a, double t) { return a.evaluate(t); }

HSeries hs_differentiate(const HSeries& a) {
  std::vector<HTerm> terms;
  terms.reserve(a.size());
  for (const HTerm& t : a.terms()) {
    if (t.exponent < 1.0 - kExponentMergeTol)
      throw DomainError("hs_differentiate: term h_" + std::to_string(t.exponent) +
                        " is not differentiable in C_{-1}");
    if (std::abs(t.exponent - 1.0) <= kExponentMergeTol) continue;  // constant
    terms.push_back({t.coeff, t.exponent - 1.0});
  }
  HSeries out = hs_normalize(std::move(terms), a.policy());
  if (a.truncated()) {
    out.truncated_ = true;
    // differentiating the dropped tail shifts its majorant exponent down by 1;
    // only meaningful when it stays positive, otherwise keep it as-is (coarse).
    const double q = a.tail_exponent() > 1.0 ? a.tail_exponent() - 1.0 : a.tail_exponent();
    out.absorb_tail(a.tail_coeff(), q);
  }
  return out;
}

Complex hs_value_at_zero(const HSeries& a) {
  Complex v = 0.0;
  for (const HTerm& t : a.terms()) {
    if (t.exponent < 1.0 - kExponentMergeTol)
      throw SingularityError("hs_value_at_zero: singular term h_" + std::to_string(t.exponent));
    if (std::abs(t.exponent - 1.0) <= kExponentMergeTol) v += t.coeff;
  }
  return v;
}

Complex hs_derivative_at_zero(const HSeries& a, int k) {
  if (k < 0) throw UsageError("hs_derivative_at_zero: k must be >= 0");
  return a.coefficient_at(double(k) + 1.0);
}

HSeries operator+(const HSeries& a, const HSeries& b) {
  std::vector<HTerm> terms = a.terms_;
  terms.insert(terms.end(), b.terms_.begin(), b.terms_.end());
  HSeries out = hs_normalize(std::move(terms), TruncationPolicy::stricter(a.policy_, b.policy_));
  if (a.truncated_) out.absorb_tail(a.tail_coeff_, a.tail_exponent_);
  if (b.truncated_) out.absorb_tail(b.tail_coeff_, b.tail_exponent_);
  return out;
}

HSeries operator-(const HSeries& a, const HSeries& b) { return a + (-1.0) * b; }

HSeries operator*(Complex s, const HSeries& a) {
  std::vector<HTerm> terms = a.terms_;
  for (HTerm& t : terms) t.coeff *= s;
  HSeries out = hs_normalize(std::move(terms), a.policy_);
  if (a.truncated_) out.absorb_tail(std::abs(s) * a.tail_coeff_, a.tail_exponent_);
  return out;
}

HSeries operator*(double s, const HSeries& a) { return Complex(s) * a; }

NeumannResult hs_neumann(const HSeries& base, const HSeries& q, Complex lambda,
                         TruncationPolicy policy, double horizon) {
  policy.validate();
  if (!(horizon > 0.0)) throw UsageError("hs_neumann: horizon must be positive");
  NeumannResult out{base.with_policy(policy), 0, 0.0};
  if (base.is_zero() || q.is_zero() || lambda == Complex(0.0)) return out;

  const double p_q = q.min_exponent();
  const double p_b = base.min_exponent();
  // |q(t)| <= M_q h_{p_q}(t) and |base(t)| <= C_b h_{p_b}(t) on (0, horizon]
  double m_q = 0.0, c_b = 0.0;
  for (const HTerm& t : q.terms())
    m_q += std::abs(t.coeff) * std::exp((t.exponent - p_q) * std::log(horizon) +
                                        std::lgamma(p_q) - std::lgamma(t.exponent));
  for (const HTerm& t : base.terms())
    c_b += std::abs(t.coeff) * std::exp((t.exponent - p_b) * std::log(horizon) +
                                        std::lgamma(p_b) - std::lgamma(t.exponent));

  const double log_lam = std::log(std::abs(lambda));
  const double log_m = std::log(m_q);
  const double log_h = std::log(horizon);
  // majorant of the term lambda^j (q^j * base) at the horizon
  auto log_term_bound = [&](int j) {
    const double e = j * p_q + p_b;
    return j * (log_lam + log_m) + std::log(c_b) + (e - 1.0) * log_h - std::lgamma(e);
  };
  const double tol = std::max(policy.prune_tol, 1e-18) * std::max(1.0, c_b);
  const int cap = int(std::max<std::size_t>(policy.max_terms, 64));

  HSeries x = out.series;
  int j = 0;
  bool converged = false;
  while (j < cap) {
    ++j;
    x = base + lambda * hs_convolve(q, x);
    const double m_next = std::exp(log_term_bound(j + 1));
    const double ratio = std::exp(log_term_bound(j + 2) - log_term_bound(j + 1));
    if (ratio < 0.9 && m_next / (1.0 - ratio) < tol) {
      converged = true;
      break;
    }
  }
  out.terms_used = j;
  out.series = x;
  if (!converged) {
    // geometric fold of everything past the budget
    double bound = std::exp(log_term_bound(j + 1));
    const double ratio = std::exp(log_term_bound(j + 2) - log_term_bound(j + 1));
    if (ratio < 1.0) bound /= (1.0 - ratio);
    out.tail_bound = bound;
    const double e = (j + 1) * p_q + p_b;
    // express the bound as C*h_e at the horizon
    const double c = bound / std::exp((e - 1.0) * log_h - std::lgamma(e));
    out.series = out.series.with_tail_bound(c, std::min(e, policy.max_exponent));
  }
  return out;
}

nlohmann::json HSeries::to_json() const {
  nlohmann::json terms = nlohmann::json::array();
  for (const HTerm& t : terms_)
    terms.push_back({{"re", t.coeff.real()}, {"im", t.coeff.imag()}, {"beta", t.exponent}});
  nlohmann::json j{{"terms", std::move(terms)},
                   {"policy",
                    {{"max_terms", policy_.max_terms},
                     {"max_exponent", policy_.max_exponent},
                     {"prune_tol", policy_.prune_tol}}},
                   {"truncated", truncated_}};
  if (truncated_ && tail_coeff_ > 0.0)
    j["tail"] = {{"coeff", tail_coeff_}, {"exponent", tail_exponent_}};
  return j;
}

HSeries HSeries::from_json(const nlohmann::json& j) {
  TruncationPolicy policy;
  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    policy.max_terms = p.value("max_terms", policy.max_terms);
    policy.max_exponent = p.value("max_exponent", policy.max_exponent);
    policy.prune_tol = p.value("prune_tol", policy.prune_tol);
  }
  policy.validate();
  HSeries out(policy);
  std::vector<HTerm>& terms = out.terms_;
  for (const auto& t : j.at("terms")) {
    const double beta = t.at("beta").get<double>();
    if (!(beta > 0.0)) throw UsageError("HSeries::from_json: non-positive exponent");
    terms.push_back({{t.at("re").get<double>(), t.value("im", 0.0)}, beta});
  }
  // loaded terms are trusted bit-exact; only validate ordering
  for (std::size_t i = 1; i < terms.size(); ++i)
    if (!(terms[i].exponent > terms[i - 1].exponent))
      throw UsageError("HSeries::from_json: exponents must be strictly increasing");
  out.truncated_ = j.value("truncated", false);
  if (j.contains("tail")) {
    out.tail_coeff_ = j.at("tail").at("coeff").get<double>();
    out.tail_exponent_ = j.at("tail").at("exponent").get<double>();
  }
  return out;
}

}  // namespace gfc
