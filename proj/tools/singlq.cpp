// Command-line front end.
//
//   singlq validate <file>
//   singlq solve <file> --epsilon <e> [--out bundle.json]
//   singlq sweep <file> [--epsilons a,b,c] [--out dir]
//   singlq example-tracking [--out dir]
//
// Exit codes: 0 success, 1 usage, 2 validation failure, 3 solver failure,
// 4 parse failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "singlq/io.hpp"
#include "singlq/tracking_example.hpp"

namespace fs = std::filesystem;
using namespace singlq;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitParse = 4;

struct Globals {
  double tol = 1e-9;
  double horizon = 0.0;
  bool json = false;
};

struct ValidationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

AssumptionReport validate_problem(const ProblemFile& pf) {
  if (pf.mode == ProblemFile::Mode::kOocp) return validate_all(*pf.oocp);
  AssumptionReport report = validate_raw(pf.raw);
  bool transformable = true;
  for (const char* id : {"A1", "A2", "A5"})
    transformable = transformable && report.find(id)->pass;
  if (transformable) {
    report.append(validate_reduced(transform_problem(pf.raw)));
  } else {
    report.entries.push_back({"A6", false, 0.0, "not checked: transform unavailable"});
    report.entries.push_back({"A7", false, 0.0, "not checked: transform unavailable"});
  }
  return report;
}

void print_report(const AssumptionReport& r) {
  for (const auto& e : r.entries) {
    std::cout << e.id << "  " << (e.pass ? "pass" : "FAIL") << "  witness="
              << std::setprecision(6) << e.witness << "  " << e.message << "\n";
  }
}

Oocp require_valid(const ProblemFile& pf, bool quiet) {
  const AssumptionReport r = validate_problem(pf);
  if (!r.all_pass()) {
    if (!quiet) print_report(r);
    throw ValidationFailure("assumptions violated");
  }
  return pf.transformed();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string eps_tag(double e) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", e);
  return buf;
}

void emit_sweep(const SweepReport& rep, const Oocp& o, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "sweep.json", sweep_to_json(rep).dump(2) + "\n");
  {
    std::ostringstream os;
    write_sweep_csv(os, rep);
    write_file(dir / "sweep.csv", os.str());
  }
  for (const auto& e : rep.entries) {
    if (e.trajectory1.times.empty()) continue;
    std::ostringstream os;
    write_csv(os, e.trajectory1);
    write_file(dir / ("traj_eps_" + eps_tag(e.epsilon) + ".csv"), os.str());
  }
  write_file(dir / "plot.py", plot_script(rep, o.slow_dim()));
}

void print_sweep(const SweepReport& rep) {
  std::cout << "Jbar = " << std::setprecision(12) << rep.Jbar << "\n";
  std::cout << std::setw(8) << "eps" << std::setw(16) << "J*_eps"
            << std::setw(16) << "J(u_eps,1)" << std::setw(16) << "J(u_eps,2)"
            << std::setw(14) << "eps*max|u|" << "  status\n";
  for (const auto& e : rep.entries) {
    std::cout << std::setprecision(6) << std::setw(8) << e.epsilon
              << std::setprecision(10) << std::setw(16) << e.Jstar
              << std::setw(16) << e.J1 << std::setw(16) << e.J2
              << std::setprecision(6) << std::setw(14)
              << e.epsilon * e.max_u_lower << "  " << e.status << "\n";
  }
}

SweepOptions sweep_options(const Globals& g, std::vector<double> eps) {
  SweepOptions so;
  so.epsilons = std::move(eps);
  so.tol = g.tol;
  so.horizon = g.horizon;
  return so;
}

int cmd_validate(const std::string& path, const Globals& g) {
  const ProblemFile pf = load_problem(path);
  const AssumptionReport r = validate_problem(pf);
  if (g.json)
    std::cout << report_to_json(r).dump(2) << "\n";
  else
    print_report(r);
  return r.all_pass() ? 0 : kExitValidation;
}

int cmd_solve(const std::string& path, double eps, const std::string& out,
              const Globals& g) {
  const ProblemFile pf = load_problem(path);
  const Oocp o = require_valid(pf, g.json);
  const ReducedSolution rs = solve_reduced(o);
  const CheapSolution sol = solve_pccp(o, eps);
  const Json bundle = solution_bundle(o, sol, rs);
  if (!out.empty()) write_file(out, bundle.dump(2) + "\n");
  if (g.json) {
    std::cout << bundle.dump(2) << "\n";
  } else {
    const AffineFeedback u = cheap_feedback(sol, o);
    std::cout << std::setprecision(12) << "epsilon = " << eps << "\n"
              << "J*_eps  = " << sol.Jstar << "\n"
              << "Jbar    = " << rs.Jbar << "\n"
              << "gain    =\n" << u.gain << "\n";
  }
  return 0;
}

int cmd_sweep(const std::string& path, const std::vector<double>& eps,
              const std::string& out, const Globals& g) {
  const ProblemFile pf = load_problem(path);
  const Oocp o = require_valid(pf, g.json);
  const SweepReport rep = run_sweep(o, sweep_options(g, eps));
  if (!out.empty()) emit_sweep(rep, o, out);
  if (g.json)
    std::cout << sweep_to_json(rep).dump(2) << "\n";
  else
    print_sweep(rep);
  return rep.all_ok() ? 0 : kExitSolver;
}

int cmd_example(const std::string& out, const Globals& g) {
  const fs::path dir = out;
  fs::create_directories(dir);
  ProblemFile pf;
  pf.mode = ProblemFile::Mode::kOocp;
  pf.oocp = tracking_oocp();
  write_file(dir / "problem.json", problem_to_json(pf).dump(2) + "\n");

  const Oocp& o = *pf.oocp;
  const ReducedSolution rs = solve_reduced(o);
  const SweepReport rep = run_sweep(o, sweep_options(g, default_epsilons()));
  emit_sweep(rep, o, dir);
  Json summary = {{"Jbar", rs.Jbar},
                  {"P10", rs.P10(0, 0)},
                  {"P20", rs.P20(0, 0)},
                  {"P30", rs.P30(0, 0)},
                  {"Acl0", rs.Acl0(0, 0)},
                  {"h10_0", rs.h10(0.0)(0)},
                  {"h20_0", rs.h20(0.0)(0)},
                  {"s0_0", rs.s0.scalar(0.0)},
                  {"sweep", sweep_to_json(rep)}};
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  if (g.json)
    std::cout << summary.dump(2) << "\n";
  else
    print_sweep(rep);
  return rep.all_ok() ? 0 : kExitSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Singular LQ control by cheap-control regularization"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--tol", g.tol, "Integrator tolerance")
      ->check(CLI::PositiveNumber);
  app.add_option("--horizon", g.horizon, "Simulation horizon (0 = automatic)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--json", g.json, "Print JSON instead of text");

  std::string file, out;
  double epsilon = 0.0;
  std::vector<double> epsilons = default_epsilons();

  auto* validate = app.add_subcommand("validate", "Check assumptions A1-A7");
  validate->add_option("file", file, "Problem file")->required();

  auto* solve = app.add_subcommand("solve", "Exact and zero-order solves");
  solve->add_option("file", file, "Problem file")->required();
  solve->add_option("--epsilon", epsilon, "Regularization parameter")
      ->required()
      ->check(CLI::PositiveNumber);
  solve->add_option("--out", out, "Write the JSON solution bundle here");

  auto* sweep = app.add_subcommand("sweep", "Epsilon sweep with simulations");
  sweep->add_option("file", file, "Problem file")->required();
  sweep->add_option("--epsilons", epsilons, "Comma-separated epsilon list")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  sweep->add_option("--out", out, "Output directory");

  auto* example =
      app.add_subcommand("example-tracking", "Built-in unit-mass tracking example");
  std::string example_out = "tracking_out";
  example->add_option("--out", example_out, "Output directory");

  for (auto* sub : {validate, solve, sweep, example}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*validate) return cmd_validate(file, g);
    if (*solve) return cmd_solve(file, epsilon, out, g);
    if (*sweep) {
      if (epsilons.size() < 2) {
        std::cerr << "sweep: --epsilons needs at least two values\n";
        return kExitUsage;
      }
      return cmd_sweep(file, epsilons, out, g);
    }
    if (*example) return cmd_example(example_out, g);
  } catch (const ValidationFailure& e) {
    std::cerr << "validation failed: " << e.what() << "\n";
    return kExitValidation;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == ErrorCode::kParseError ? kExitParse : kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitSolver;
  }
  return kExitUsage;
}
