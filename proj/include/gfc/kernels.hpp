#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gfc/hseries.hpp"
#include "json.hpp"

namespace gfc::kernels {

// --- kernel specifications -------------------------------------------------

struct PowerSpec {
  double alpha;  // kappa = h_alpha, 0 < alpha < 1
};

struct TemperedSpec {
  double alpha;  // 0 < alpha < 1
  double rho;    // >= 0
};

struct SumTerm {
  double weight;
  double order;  // in (0,1)
};

struct SumOfPowersSpec {
  std::vector<SumTerm> terms;  // distinct orders
};

struct BesselSpec {
  double alpha;  // 0 < alpha < 1
};

struct MittagLefflerSpec {
  double alpha;  // 0 < alpha < beta < 1
  double beta;
};

/// kappa = h_alpha(t) * sum_k a_k t^k with a_0 != 0. alpha = 1 is allowed for
/// the single coefficient list {1} only and encodes the constant kernel {1}.
struct SeriesSpec {
  double alpha;
  std::vector<double> a;
};

using KernelSpec =
    std::variant<PowerSpec, TemperedSpec, SumOfPowersSpec, BesselSpec, MittagLefflerSpec, SeriesSpec>;

void validate(const KernelSpec& spec);
bool is_unit_kernel(const KernelSpec& spec);  // the {1} limit case
/// Singularity order p of the kernel (minimal h-exponent).
double min_exponent(const KernelSpec& spec);

/// Exact h-series expansion, truncated under the policy (tail flagged).
HSeries kernel_to_hseries(const KernelSpec& spec, const TruncationPolicy& policy = {});

nlohmann::json kernel_to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const nlohmann::json& j);

// --- Sonine pairs ------------------------------------------------------------

/// Associate kernel in factorized form k = h_{1-alpha}(t) * sum_k b_k t^k.
struct AssociateSeries {
  double alpha;  // the order of the кappa convention this was derived from
  std::vector<double> b;
};

/// The associate of the {1} kernel is the convolution identity (delta).
struct IdentityAssociate {};

/// Associate known only as a lowered h-series (non-lattice exponents).
struct LoweredAssociate {
  HSeries series;
};

using AssociateRep = std::variant<KernelSpec, AssociateSeries, IdentityAssociate, LoweredAssociate>;

struct SoninePair {
  std::string name;
  KernelSpec kappa;
  AssociateRep k;
  // catalog metadata, never computed
  bool class_K = false;
  bool completely_monotone = false;
  // lowered at construction policy
  HSeries kappa_hat;
  HSeries k_hat;  // empty for the identity associate
  TruncationPolicy policy;

  bool identity_associate() const { return std::holds_alternative<IdentityAssociate>(k); }
};

struct AssociateResult {
  std::vector<double> b;
  bool conditioning_warning = false;
};

/// Solves the triangular system pairing the analytic parts of kappa and k:
/// a0*b0 = 1 and, for n >= 1,
///   sum_{k=0}^{n} Gamma(k+1-alpha) Gamma(alpha+n-k) a_{n-k} b_k = 0.
/// Returns b[0..N]; a is zero-padded beyond its length.
AssociateResult associate_kernel(double alpha, std::span<const double> a, int N);

/// Lowered associate of an arbitrary kernel series via Neumann inversion of
/// the Sonine condition in the h-series algebra.
HSeries invert_kernel(const HSeries& kappa_hat, const TruncationPolicy& policy = {});

HSeries associate_to_hseries(const AssociateRep& rep, const TruncationPolicy& policy = {});

/// Builds the pair (kappa, associate) with catalog metadata where known.
SoninePair make_pair(const KernelSpec& spec, const TruncationPolicy& policy = {});

/// The Mikusinski limit pair: kappa = {1}, associate = identity.
SoninePair unit_pair(const TruncationPolicy& policy = {});

/// The built-in catalog: power, tempered, bessel, ml, series.
std::vector<SoninePair> catalog(const TruncationPolicy& policy = {});

/// max_t |(kappa*k)(t) - 1| over the grid, including truncation tail bounds.
double sonine_residual(const SoninePair& pair, std::span<const double> grid,
                       const TruncationPolicy& policy = {});

}  // namespace gfc::kernels
