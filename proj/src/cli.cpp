#include "gfc/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "gfc/errors.hpp"
#include "gfc/fde.hpp"
#include "gfc/hseries.hpp"
#include "gfc/kernels.hpp"
#include "gfc/opcalc.hpp"
#include "gfc/operators.hpp"
#include "json.hpp"

namespace gfc::cli {

namespace {

struct KernelFlags {
  std::string kernel;
  double alpha = 0.5;
  double beta = 0.0;
  double rho = 0.0;
  std::string coeffs;
};

struct PolicyFlags {
  std::size_t terms = TruncationPolicy{}.max_terms;
  double tol = TruncationPolicy{}.prune_tol;
};

void add_kernel_flags(CLI::App* cmd, KernelFlags& kf, bool required = true) {
  auto* opt = cmd->add_option("--kernel", kf.kernel,
                              "kernel type: power|tempered|sum|bessel|ml|series|unit");
  if (required) opt->required();
  cmd->add_option("--alpha", kf.alpha, "order parameter alpha");
  cmd->add_option("--beta", kf.beta, "second order parameter (ml kernel)");
  cmd->add_option("--rho", kf.rho, "tempering parameter (tempered kernel)");
  cmd->add_option("--coeffs", kf.coeffs,
                  "series: a0,a1,...  sum: weight:order,weight:order,...");
}

void add_policy_flags(CLI::App* cmd, PolicyFlags& pf) {
  cmd->add_option("--terms", pf.terms, "series term budget");
  cmd->add_option("--tol", pf.tol, "relative pruning tolerance");
}

TruncationPolicy make_policy(const PolicyFlags& pf) {
  TruncationPolicy p;
  p.max_terms = pf.terms;
  p.prune_tol = pf.tol;
  p.validate();
  return p;
}

std::vector<double> split_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

kernels::KernelSpec kernel_from_flags(const KernelFlags& kf) {
  using namespace kernels;
  if (kf.kernel == "power") return PowerSpec{kf.alpha};
  if (kf.kernel == "tempered") return TemperedSpec{kf.alpha, kf.rho};
  if (kf.kernel == "bessel") return BesselSpec{kf.alpha};
  if (kf.kernel == "ml") return MittagLefflerSpec{kf.alpha, kf.beta};
  if (kf.kernel == "unit") return SeriesSpec{1.0, {1.0}};
  if (kf.kernel == "series") {
    if (kf.coeffs.empty()) throw UsageError("series kernel needs --coeffs a0,a1,...");
    return SeriesSpec{kf.alpha, split_list(kf.coeffs)};
  }
  if (kf.kernel == "sum") {
    if (kf.coeffs.empty()) throw UsageError("sum kernel needs --coeffs w:o,w:o,...");
    SumOfPowersSpec s;
    std::stringstream ss(kf.coeffs);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw UsageError("sum kernel terms must be weight:order");
      s.terms.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
    }
    return s;
  }
  throw UsageError("unknown kernel type '" + kf.kernel + "'");
}

struct GridFlags {
  std::string spec;
};

// grid spec: tmin:tmax:count[:log|graded|lin]
std::vector<double> parse_grid(const std::string& spec, double default_gamma) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() < 3 || parts.size() > 4) throw UsageError("grid spec must be tmin:tmax:count[:kind]");
  const double tmin = std::stod(parts[0]);
  const double tmax = std::stod(parts[1]);
  const int count = std::stoi(parts[2]);
  const std::string kind = parts.size() == 4 ? parts[3] : "graded";
  if (!(tmin > 0.0) || !(tmax > tmin) || count < 2)
    throw UsageError("grid spec needs 0 < tmin < tmax and count >= 2");
  std::vector<double> grid{};
  grid.resize(std::size_t(count));
  for (int i = 0; i < count; ++i) {
    const double u = double(i) / (count - 1);
    if (kind == "lin") {
      grid[std::size_t(i)] = tmin + (tmax - tmin) * u;
    } else if (kind == "log") {
      grid[std::size_t(i)] = tmin * std::pow(tmax / tmin, u);
    } else if (kind == "graded") {
      grid[std::size_t(i)] = tmin + (tmax - tmin) * std::pow(u, default_gamma);
    } else {
      throw UsageError("unknown grid kind '" + kind + "'");
    }
  }
  return grid;
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_series_csv(std::ostream& os, const HSeries& s, std::span<const double> grid) {
  os << "t,re,im\n";
  for (double t : grid) {
    const Complex v = s.evaluate(t);
    os << fmt17(t) << ',' << fmt17(v.real()) << ',' << fmt17(v.imag()) << '\n';
  }
}

class OutputSink {
 public:
  OutputSink(const std::string& path, std::ostream& fallback) : fallback_(fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw UsageError("cannot open output file '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : fallback_; }

 private:
  std::ofstream file_;
  std::ostream& fallback_;
};

HSeries load_hseries(const std::string& path, const TruncationPolicy& policy) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  nlohmann::json j;
  in >> j;
  return HSeries::from_json(j).with_policy(policy);
}

double kernel_gamma(const kernels::KernelSpec& spec) {
  const double p = kernels::min_exponent(spec);
  return std::max(1.0, 2.0 / p);
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"operational calculus for general fractional derivatives with Sonine kernels"};
  app.require_subcommand(1);

  KernelFlags kf;
  PolicyFlags pf;
  std::string grid_spec, out_path, f_path, problem_path, format = "csv", theorem = "ft1-rl";
  double lambda = -1.0, y0 = 1.0, tmax_cm = 2.0;
  int n_fold = 1, power_m = 1, orders = 4, assoc_n = 16;

  // kernel show / kernel associate
  auto* kernel_cmd = app.add_subcommand("kernel", "kernel inspection");
  auto* show = kernel_cmd->add_subcommand("show", "lowered h-series of a kernel");
  add_kernel_flags(show, kf);
  add_policy_flags(show, pf);
  show->add_option("--grid", grid_spec, "also sample on tmin:tmax:count[:kind]");
  show->add_option("--out", out_path);
  show->add_option("--format", format, "csv|json");

  auto* assoc = kernel_cmd->add_subcommand("associate", "associate-kernel coefficients");
  assoc->add_option("--alpha", kf.alpha)->required();
  assoc->add_option("--coeffs", kf.coeffs, "a0,a1,... of the analytic part")->required();
  assoc->add_option("-N,--count", assoc_n, "number of coefficients to compute");
  assoc->add_option("--out", out_path);

  // sonine check
  auto* sonine = app.add_subcommand("sonine", "Sonine condition checks");
  auto* check = sonine->add_subcommand("check", "residual of (kappa*k)(t) = 1");
  add_kernel_flags(check, kf);
  add_policy_flags(check, pf);
  check->add_option("--grid", grid_spec);

  // op gfi|gfd-c|gfd-rl
  auto* op = app.add_subcommand("op", "apply an operator to an h-series");
  auto* op_gfi = op->add_subcommand("gfi", "general fractional integral");
  auto* op_gfdc = op->add_subcommand("gfd-c", "Caputo-type derivative");
  auto* op_gfdrl = op->add_subcommand("gfd-rl", "Riemann-Liouville-type derivative");
  for (CLI::App* c : {op_gfi, op_gfdc, op_gfdrl}) {
    add_kernel_flags(c, kf);
    add_policy_flags(c, pf);
    c->add_option("--f", f_path, "input function (h-series JSON file)")->required();
    c->add_option("--n", n_fold, "fold count");
    c->add_option("--grid", grid_spec);
    c->add_option("--out", out_path);
    c->add_option("--format", format, "csv|json");
  }

  // series l|L|resolvent
  auto* series = app.add_subcommand("series", "resolvent convolution series");
  auto* ser_l = series->add_subcommand("l", "l_{kappa,lambda}");
  auto* ser_L = series->add_subcommand("L", "L_{kappa,lambda}");
  auto* ser_r = series->add_subcommand("resolvent", "l^m (I/(S-lambda)^m)");
  for (CLI::App* c : {ser_l, ser_L, ser_r}) {
    add_kernel_flags(c, kf);
    add_policy_flags(c, pf);
    c->add_option("--lambda", lambda)->required();
    c->add_option("--grid", grid_spec);
    c->add_option("--out", out_path);
    c->add_option("--format", format, "csv|json");
  }
  ser_r->add_option("--power", power_m, "resolvent power m");

  // solve single|multi
  auto* solve = app.add_subcommand("solve", "initial value problems");
  auto* sv_single = solve->add_subcommand("single", "single-term problem");
  add_kernel_flags(sv_single, kf);
  add_policy_flags(sv_single, pf);
  sv_single->add_option("--lambda", lambda)->required();
  sv_single->add_option("--y0", y0, "initial value");
  sv_single->add_option("--f", f_path, "source term (h-series JSON file)");
  sv_single->add_option("--grid", grid_spec);
  sv_single->add_option("--out", out_path);
  sv_single->add_option("--format", format, "csv|json");
  auto* sv_multi = solve->add_subcommand("multi", "multi-term problem from JSON");
  add_policy_flags(sv_multi, pf);
  sv_multi->add_option("--problem", problem_path, "problem JSON file")->required();
  sv_multi->add_option("--grid", grid_spec);
  sv_multi->add_option("--out", out_path);
  sv_multi->add_option("--format", format, "csv|json");

  // verify ft|cm
  auto* verify = app.add_subcommand("verify", "verification suites");
  auto* vf_ft = verify->add_subcommand("ft", "fundamental theorem residual");
  add_kernel_flags(vf_ft, kf);
  add_policy_flags(vf_ft, pf);
  vf_ft->add_option("--theorem", theorem, "ft1-rl|ft1-c|ft2-rl|ft2-c");
  vf_ft->add_option("--n", n_fold, "fold count");
  vf_ft->add_option("--f", f_path, "test function (h-series JSON; default built in)");
  vf_ft->add_option("--grid", grid_spec);
  auto* vf_cm = verify->add_subcommand("cm", "complete monotonicity of L");
  add_kernel_flags(vf_cm, kf);
  add_policy_flags(vf_cm, pf);
  vf_cm->add_option("--lambda", lambda)->required();
  vf_cm->add_option("--orders", orders, "highest difference order");
  vf_cm->add_option("--tmax", tmax_cm, "check interval (0, tmax]");

  std::vector<const char*> argv;
  argv.push_back("gfcalc");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    try {
      app.parse(int(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) {  // --help
        out << app.help();
        return 0;
      }
      err << "usage error: " << e.what() << "\n";
      return 2;
    }

    const TruncationPolicy policy = make_policy(pf);

    if (show->parsed()) {
      const kernels::KernelSpec spec = kernel_from_flags(kf);
      const HSeries hs = kernels::kernel_to_hseries(spec, policy);
      OutputSink sink(out_path, out);
      if (!grid_spec.empty() && format == "csv") {
        write_series_csv(sink.stream(), hs, parse_grid(grid_spec, kernel_gamma(spec)));
      } else {
        nlohmann::json j{{"spec", kernels::kernel_to_json(spec)}, {"hseries", hs.to_json()}};
        sink.stream() << j.dump(2) << '\n';
      }
      return 0;
    }

    if (assoc->parsed()) {
      const std::vector<double> a = split_list(kf.coeffs);
      const kernels::AssociateResult res = kernels::associate_kernel(kf.alpha, a, assoc_n);
      if (res.conditioning_warning) err << "warning: coefficient growth indicates ill-conditioning\n";
      OutputSink sink(out_path, out);
      nlohmann::json j{{"alpha", kf.alpha}, {"b", res.b},
                       {"conditioning_warning", res.conditioning_warning}};
      sink.stream() << j.dump(2) << '\n';
      return 0;
    }

    if (check->parsed()) {
      const kernels::KernelSpec spec = kernel_from_flags(kf);
      const kernels::SoninePair pair = kernels::make_pair(spec, policy);
      const std::vector<double> grid =
          parse_grid(grid_spec.empty() ? "0.01:5:32" : grid_spec, kernel_gamma(spec));
      const double r = kernels::sonine_residual(pair, grid, policy);
      out << "sonine residual (" << pair.name << ") = " << fmt17(r) << "\n";
      return 0;
    }

    if (op_gfi->parsed() || op_gfdc->parsed() || op_gfdrl->parsed()) {
      const kernels::KernelSpec spec = kernel_from_flags(kf);
      const kernels::SoninePair pair = kernels::make_pair(spec, policy);
      const HSeries f = load_hseries(f_path, policy);
      HSeries result;
      if (op_gfi->parsed()) {
        result = ops::gfi(pair.kappa_hat, f, n_fold);
      } else if (op_gfdc->parsed()) {
        result = ops::gfd_caputo(pair, f, n_fold);
      } else {
        result = ops::gfd_rl(pair, f, n_fold);
      }
      OutputSink sink(out_path, out);
      if (!grid_spec.empty() && format == "csv") {
        write_series_csv(sink.stream(), result, parse_grid(grid_spec, kernel_gamma(spec)));
      } else {
        sink.stream() << result.to_json().dump(2) << '\n';
      }
      return 0;
    }

    if (ser_l->parsed() || ser_L->parsed() || ser_r->parsed()) {
      const kernels::KernelSpec spec = kernel_from_flags(kf);
      const kernels::SoninePair pair = kernels::make_pair(spec, policy);
      HSeries s;
      if (ser_l->parsed()) {
        s = opcalc::conv_series_l(pair, lambda, policy);
      } else if (ser_L->parsed()) {
        s = opcalc::conv_series_L(pair, lambda, policy);
      } else {
        s = opcalc::resolvent_power(pair, lambda, power_m, policy);
      }
      OutputSink sink(out_path, out);
      if (format == "json" || grid_spec.empty()) {
        sink.stream() << s.to_json().dump(2) << '\n';
      } else {
        write_series_csv(sink.stream(), s, parse_grid(grid_spec, kernel_gamma(spec)));
      }
      return 0;
    }

    if (sv_single->parsed()) {
      const kernels::KernelSpec spec = kernel_from_flags(kf);
      const kernels::SoninePair pair = kernels::make_pair(spec, policy);
      const HSeries f = f_path.empty() ? HSeries(policy) : load_hseries(f_path, policy);
      const fde::IvpSolution sol = fde::solve_single(pair, lambda, f, y0, policy);
      fde::IvpProblem problem{pair, {-lambda, 1.0}, f, {y0}};
      const std::vector<double> grid =
          parse_grid(grid_spec.empty() ? "0.01:2:64" : grid_spec, kernel_gamma(spec));
      const fde::ResidualReport rep = fde::residual_report(problem, sol, grid);
      OutputSink sink(out_path, out);
      if (format == "json") {
        nlohmann::json j{{"y", sol.y.to_json()}, {"y_f", sol.y_f.to_json()}};
        sink.stream() << j.dump(2) << '\n';
      } else {
        write_series_csv(sink.stream(), sol.y, grid);
      }
      (out_path.empty() ? err : out) << "residual max = " << fmt17(rep.max_residual)
                                     << ", init error = " << fmt17(rep.init_errors.at(0)) << "\n";
      return 0;
    }

    if (sv_multi->parsed()) {
      std::ifstream in(problem_path);
      if (!in) throw UsageError("cannot open '" + problem_path + "'");
      nlohmann::json pj;
      in >> pj;
      const fde::IvpProblem problem = fde::problem_from_json(pj, policy);
      const fde::IvpSolution sol = fde::solve_multiterm(problem, policy);
      const std::vector<double> grid = parse_grid(grid_spec.empty() ? "0.01:2:64" : grid_spec,
                                                  kernel_gamma(problem.pair.kappa));
      OutputSink sink(out_path, out);
      if (format == "json") {
        nlohmann::json j{{"y", sol.y.to_json()}, {"y_f", sol.y_f.to_json()}};
        nlohmann::json basis = nlohmann::json::array();
        for (const HSeries& yt : sol.y_tilde) basis.push_back(yt.to_json());
        j["y_tilde"] = std::move(basis);
        sink.stream() << j.dump(2) << '\n';
      } else if (sol.y_sampled) {
        ops::write_csv(sink.stream(), *sol.y_sampled);
      } else {
        write_series_csv(sink.stream(), sol.y, grid);
      }
      std::ostream& rep_os = out_path.empty() ? err : out;
      if (std::holds_alternative<HSeries>(problem.f)) {
        const fde::ResidualReport rep = fde::residual_report(problem, sol, grid);
        rep_os << "residual max = " << fmt17(rep.max_residual) << ", init errors =";
        for (double e : rep.init_errors) rep_os << ' ' << fmt17(e);
        rep_os << "\n";
      } else {
        rep_os << "residual check skipped: sampled source is mesh-limited\n";
      }
      if (!sol.diagnostics.notes.empty()) rep_os << "note: " << sol.diagnostics.notes << "\n";
      return 0;
    }

    if (vf_ft->parsed()) {
      const kernels::KernelSpec spec = kernel_from_flags(kf);
      const kernels::SoninePair pair = kernels::make_pair(spec, policy);
      HSeries f = f_path.empty()
                      ? HSeries({{1.0, 1.2}, {2.0, 2.0}}, policy)
                      : load_hseries(f_path, policy);
      const ops::FtTheorem th = ops::ft_theorem_from_string(theorem);
      if (f_path.empty() && (th == ops::FtTheorem::FT2_C || th == ops::FtTheorem::FT2_RL)) {
        // the default test function must be differentiable n times
        f = HSeries({{3.0, 1.0}, {1.0, double(n_fold) + 1.3}, {0.5, double(n_fold) + 2.0}}, policy);
      }
      if (th == ops::FtTheorem::FT1_C && f_path.empty() && !pair.identity_associate())
        f = ops::gfi(pair.k_hat, f, n_fold);
      const std::vector<double> grid =
          parse_grid(grid_spec.empty() ? "0.1:2:16" : grid_spec, kernel_gamma(spec));
      const ops::FtReport rep = ops::verify_ft(pair, f, th, n_fold, grid);
      out << ops::to_string(rep.theorem) << " n=" << rep.n
          << " residual = " << fmt17(rep.max_residual) << "\n";
      return 0;
    }

    if (vf_cm->parsed()) {
      const kernels::KernelSpec spec = kernel_from_flags(kf);
      const kernels::SoninePair pair = kernels::make_pair(spec, policy);
      const HSeries L = opcalc::conv_series_L(pair, lambda, policy);
      const fde::CmReport rep = fde::complete_monotonicity_check(L, tmax_cm, orders);
      out << "cm " << (rep.passed ? "pass" : "FAIL") << " worst order " << rep.worst_order
          << " violation = " << fmt17(rep.worst_violation) << "\n";
      return rep.passed ? 0 : 1;
    }

    err << "usage error: no subcommand\n";
    return 2;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const nlohmann::json::exception& e) {
    err << "usage error: bad JSON: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace gfc::cli
