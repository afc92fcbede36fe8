#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gfc/hseries.hpp"
#include "gfc/kernels.hpp"

namespace gfc::ops {

/// Grid representation of f(t) = t^{p-1} f1(t) with f1 piecewise linear
/// between the nodes (values store f itself at the nodes).
struct SampledFunction {
  double p = 1.0;  // singularity exponent in (0,1]
  std::vector<double> nodes;
  std::vector<Complex> values;

  void validate() const;
  Complex interpolate(double t) const;
  static SampledFunction sample(const HSeries& f, double p, std::span<const double> nodes);
};

/// Nodes T (i/N)^gamma, i = 1..N; concentrates points at the singularity.
std::vector<double> graded_mesh(double T, int N, double gamma);

enum class FtTheorem { FT1_RL, FT1_C, FT2_RL, FT2_C };

FtTheorem ft_theorem_from_string(const std::string& name);
std::string to_string(FtTheorem t);

struct FtReport {
  FtTheorem theorem;
  int n = 1;
  double max_residual = 0.0;
  std::vector<double> grid;
};

/// General fractional integral (kappa^n * f).
HSeries gfi(const HSeries& kappa, const HSeries& f, int n = 1);

/// Caputo-type derivative k^n * f^{(n)}; requires f to be n-times
/// differentiable in the series sense.
HSeries gfd_caputo(const kernels::SoninePair& pair, const HSeries& f, int n = 1);

/// Riemann-Liouville-type derivative d^n/dt^n (k^n * f).
HSeries gfd_rl(const kernels::SoninePair& pair, const HSeries& f, int n = 1);

/// Regularized form: the RL derivative of f minus its Taylor head
/// sum_{j<n} f^{(j)}(0) h_{j+1}. Equals gfd_caputo on the common domain but
/// is also defined when f itself cannot be differentiated n times.
HSeries gfd_caputo_regularized(const kernels::SoninePair& pair, const HSeries& f, int n = 1);

/// Product-integration convolution of a lowered kernel with sampled data:
/// the two weakly singular power factors are integrated exactly against each
/// linear piece of f1 via incomplete-beta weights.
SampledFunction gfi_sampled(const HSeries& kappa, const SampledFunction& f);

/// Checks one of the fundamental-theorem identities on a grid and reports the
/// worst residual. Inadmissible inputs raise DomainError instead of failing.
FtReport verify_ft(const kernels::SoninePair& pair, const HSeries& f, FtTheorem theorem, int n,
                   std::span<const double> grid);

/// CSV emission, columns t,re,im with a mandatory header row.
void write_csv(std::ostream& os, const SampledFunction& f);

}  // namespace gfc::ops
