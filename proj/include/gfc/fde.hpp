#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gfc/hseries.hpp"
#include "gfc/kernels.hpp"
#include "gfc/opcalc.hpp"
#include "gfc/operators.hpp"
#include "json.hpp"

namespace gfc::fde {

/// sum_{j=0}^n a_j (*D^j y) = f with y^{(j)}(0) = inits[j], j < n.
struct IvpProblem {
  kernels::SoninePair pair;
  std::vector<double> a;  // a0..an, an != 0
  std::variant<HSeries, ops::SampledFunction> f;
  std::vector<double> inits;

  int order() const { return int(a.size()) - 1; }
  void validate() const;
};

struct IvpDiagnostics {
  double tail_bound = 0.0;
  double imag_residue_max = 0.0;
  std::string notes;
};

struct IvpSolution {
  HSeries y;                    // full solution on the exact path
  HSeries y_f;                  // forced part (zero series on the sampled path)
  std::vector<HSeries> y_tilde; // homogeneous basis solutions, one per init
  std::optional<ops::SampledFunction> y_sampled;  // total solution when f was sampled
  IvpDiagnostics diagnostics;
};

IvpSolution solve_single(const kernels::SoninePair& pair, double lambda, const HSeries& f,
                         double y0, const TruncationPolicy& policy = {});

IvpSolution solve_multiterm(const IvpProblem& problem, const TruncationPolicy& policy = {});

struct ResidualReport {
  double max_residual = 0.0;
  std::vector<double> init_errors;
};

/// Re-applies the derivatives independently and reports the worst equation
/// residual over the grid (restricted to t >= 0.01) plus the mismatch of the
/// series-sense initial values.
ResidualReport residual_report(const IvpProblem& problem, const IvpSolution& solution,
                               std::span<const double> grid);

struct CmReport {
  bool passed = true;
  int worst_order = 0;
  double worst_violation = 0.0;  // most negative (-1)^n difference seen, as a magnitude
};

/// Alternating-finite-difference shadow of complete monotonicity on (0, T],
/// orders n = 0..orders; exact series derivatives are used where the
/// exponents permit.
CmReport complete_monotonicity_check(const HSeries& series, double T, int orders);

IvpProblem problem_from_json(const nlohmann::json& j, const TruncationPolicy& policy = {});
nlohmann::json problem_to_json(const IvpProblem& p);

}  // namespace gfc::fde
