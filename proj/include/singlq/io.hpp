#pragma once

// JSON problem files, solution bundles and sweep reports.
//
//   {
//     "schema_version": "1",
//     "mode": "raw" | "oocp",
//     "dimensions": {"n": 2, "r": 1, "q": 0},
//     "matrices": {"A": [[...]], "B": [[...]], "D": [[...]], "H": [[...]]},
//     "g": [...],
//     "disturbance": [{"rate": 1.0, "coef": [...]}],
//     "initial_state": [...]
//   }
//
// "H" is optional and only allowed in oocp mode.

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>

#include "json.hpp"

#include "singlq/cheap_solver.hpp"
#include "singlq/error.hpp"
#include "singlq/problem_model.hpp"
#include "singlq/reduced_solver.hpp"
#include "singlq/state_transform.hpp"
#include "singlq/sweep.hpp"

namespace singlq {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1";

struct ProblemFile {
  enum class Mode { kRaw, kOocp };
  Mode mode = Mode::kRaw;
  RawProblem raw;               // mode == kRaw
  std::optional<Oocp> oocp;     // mode == kOocp

  /// The problem in transformed coordinates.
  Oocp transformed() const {
    return mode == Mode::kOocp ? *oocp : transform_problem(raw);
  }
  /// Untransformed view (identity transform in oocp mode).
  RawProblem untransformed() const {
    return mode == Mode::kOocp ? as_raw(*oocp) : raw;
  }
};

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& field,
                                    const std::string& what) {
  fail(ErrorCode::kParseError, field + ": " + what);
}

inline void check_keys(const Json& obj, const std::string& where,
                       const std::set<std::string>& allowed) {
  if (!obj.is_object()) parse_fail(where, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key))
      parse_fail(where.empty() ? key : where + "." + key, "unknown field");
  }
}

inline const Json& member(const Json& obj, const std::string& where,
                          const std::string& key) {
  if (!obj.contains(key)) parse_fail(where + key, "missing field");
  return obj.at(key);
}

inline double number(const Json& v, const std::string& field) {
  if (!v.is_number()) parse_fail(field, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) parse_fail(field, "not finite");
  return x;
}

inline int integer(const Json& v, const std::string& field) {
  if (!v.is_number_integer()) parse_fail(field, "expected an integer");
  return v.get<int>();
}

inline Vector vector_of(const Json& v, const std::string& field,
                        Eigen::Index size) {
  if (!v.is_array()) parse_fail(field, "expected an array");
  if (static_cast<Eigen::Index>(v.size()) != size)
    parse_fail(field, "expected " + std::to_string(size) + " entries, got " +
                          std::to_string(v.size()));
  Vector out(size);
  for (Eigen::Index i = 0; i < size; ++i)
    out(i) = number(v[i], field + "[" + std::to_string(i) + "]");
  return out;
}

inline Matrix matrix_of(const Json& v, const std::string& field,
                        Eigen::Index rows, Eigen::Index cols) {
  if (!v.is_array()) parse_fail(field, "expected an array of rows");
  if (static_cast<Eigen::Index>(v.size()) != rows)
    parse_fail(field, "expected " + std::to_string(rows) + " rows, got " +
                          std::to_string(v.size()));
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    out.row(i) =
        vector_of(v[i], field + "[" + std::to_string(i) + "]", cols).transpose();
  return out;
}

inline Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Json to_json(const ExpSignal& s) {
  Json out = Json::array();
  for (const auto& m : s.modes())
    out.push_back({{"rate", m.rate}, {"coef", to_json(m.coef)}});
  return out;
}

/// NaN/inf become null so the output stays valid JSON.
inline Json number_or_null(double x) {
  return std::isfinite(x) ? Json(x) : Json(nullptr);
}

}  // namespace detail

inline ProblemFile parse_problem(const Json& j) {
  using namespace detail;
  check_keys(j, "", {"schema_version", "mode", "dimensions", "matrices", "g",
                     "disturbance", "initial_state"});
  const Json& version = member(j, "", "schema_version");
  if (!version.is_string() || version.get<std::string>() != kSchemaVersion)
    parse_fail("schema_version", std::string("expected \"") + kSchemaVersion + "\"");

  const Json& mode_j = member(j, "", "mode");
  if (!mode_j.is_string()) parse_fail("mode", "expected a string");
  const std::string mode = mode_j.get<std::string>();
  if (mode != "raw" && mode != "oocp")
    parse_fail("mode", "expected \"raw\" or \"oocp\"");

  const Json& dims = member(j, "", "dimensions");
  check_keys(dims, "dimensions", {"n", "r", "q"});
  const int n = integer(member(dims, "dimensions.", "n"), "dimensions.n");
  const int r = integer(member(dims, "dimensions.", "r"), "dimensions.r");
  const int q = integer(member(dims, "dimensions.", "q"), "dimensions.q");
  if (!(n > 0 && q >= 0 && q < r && r <= n))
    parse_fail("dimensions", "need 0 <= q < r <= n and n > 0");

  const Json& mats = member(j, "", "matrices");
  if (mode == "raw")
    check_keys(mats, "matrices", {"A", "B", "D"});
  else
    check_keys(mats, "matrices", {"A", "B", "D", "H"});
  Matrix a = matrix_of(member(mats, "matrices.", "A"), "matrices.A", n, n);
  Matrix b = matrix_of(member(mats, "matrices.", "B"), "matrices.B", n, r);
  Matrix d = matrix_of(member(mats, "matrices.", "D"), "matrices.D", n, n);
  if (asymmetry(d) > kSymmetryTolerance * std::max(1.0, d.norm()))
    parse_fail("matrices.D", "matrix is not symmetric");

  Vector g = vector_of(member(j, "", "g"), "g", q);
  const Json& dist = member(j, "", "disturbance");
  if (!dist.is_array()) parse_fail("disturbance", "expected an array");
  ExpSignal f(n);
  for (std::size_t k = 0; k < dist.size(); ++k) {
    const std::string where = "disturbance[" + std::to_string(k) + "]";
    check_keys(dist[k], where, {"rate", "coef"});
    const double rate = number(member(dist[k], where + ".", "rate"), where + ".rate");
    if (!(rate > 0.0)) parse_fail(where + ".rate", "must be positive");
    f.add_mode(rate, vector_of(member(dist[k], where + ".", "coef"),
                               where + ".coef", n));
  }
  Vector z0 = vector_of(member(j, "", "initial_state"), "initial_state", n);

  ProblemFile pf;
  if (mode == "raw") {
    pf.mode = ProblemFile::Mode::kRaw;
    pf.raw = RawProblem{n, r, q, std::move(a), std::move(b), std::move(d),
                        std::move(g), std::move(f), std::move(z0)};
  } else {
    pf.mode = ProblemFile::Mode::kOocp;
    std::optional<Matrix> h;
    if (mats.contains("H"))
      h = matrix_of(mats.at("H"), "matrices.H", r - q, n - r + q);
    try {
      pf.oocp = make_oocp(n, r, q, std::move(a), std::move(b), d, std::move(g),
                          std::move(f), std::move(z0), h);
    } catch (const Error& e) {
      parse_fail("matrices", e.what());
    }
  }
  return pf;
}

inline ProblemFile parse_problem_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParseError, std::string("malformed JSON: ") + e.what());
  }
  return parse_problem(j);
}

inline ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kParseError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem_text(ss.str());
}

inline Json problem_to_json(const ProblemFile& pf) {
  using detail::to_json;
  const bool raw = pf.mode == ProblemFile::Mode::kRaw;
  const RawProblem p = pf.untransformed();
  Json mats = {{"A", to_json(p.A)}, {"B", to_json(p.B)}, {"D", to_json(p.D)}};
  if (!raw) mats["H"] = to_json(pf.oocp->Hcal);
  return {{"schema_version", kSchemaVersion},
          {"mode", raw ? "raw" : "oocp"},
          {"dimensions", {{"n", p.n}, {"r", p.r}, {"q", p.q}}},
          {"matrices", std::move(mats)},
          {"g", to_json(p.g)},
          {"disturbance", to_json(p.disturbance)},
          {"initial_state", to_json(p.z0)}};
}

inline Json report_to_json(const AssumptionReport& r) {
  Json entries = Json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"id", e.id},
                       {"pass", e.pass},
                       {"witness", detail::number_or_null(e.witness)},
                       {"message", e.message}});
  }
  return {{"all_pass", r.all_pass()}, {"assumptions", std::move(entries)}};
}

inline Json reduced_to_json(const ReducedSolution& rs) {
  using detail::to_json;
  return {{"P10", to_json(rs.P10)},
          {"P20", to_json(rs.P20)},
          {"P30", to_json(rs.P30)},
          {"S0", to_json(rs.S0)},
          {"Bbar", to_json(rs.Bbar)},
          {"Theta", to_json(rs.Theta)},
          {"Acl0", to_json(rs.Acl0)},
          {"h10_modes", to_json(rs.h10)},
          {"h20_modes", to_json(rs.h20)},
          {"s0_modes", to_json(rs.s0)},
          {"h10_0", to_json(rs.h10(0.0))},
          {"h20_0", to_json(rs.h20(0.0))},
          {"s0_0", rs.s0.scalar(0.0)},
          {"Jbar", rs.Jbar},
          {"alpha", detail::number_or_null(rs.alpha)},
          {"mu", detail::number_or_null(rs.mu)}};
}

inline Json cheap_to_json(const CheapSolution& sol) {
  using detail::to_json;
  return {{"epsilon", sol.epsilon},
          {"P", to_json(sol.P)},
          {"P1", to_json(sol.P1)},
          {"P2", to_json(sol.P2)},
          {"P3", to_json(sol.P3)},
          {"Acl", to_json(sol.Acl)},
          {"h_modes", to_json(sol.h)},
          {"s_modes", to_json(sol.s)},
          {"Jstar", sol.Jstar}};
}

inline Json solution_bundle(const Oocp& o, const CheapSolution& sol,
                            const ReducedSolution& rs) {
  const AffineFeedback u = cheap_feedback(sol, o);
  return {{"cheap", cheap_to_json(sol)},
          {"cheap_gain", detail::to_json(u.gain)},
          {"reduced", reduced_to_json(rs)}};
}

inline Json sweep_to_json(const SweepReport& rep) {
  using detail::number_or_null;
  Json rows = Json::array();
  for (const auto& e : rep.entries) {
    rows.push_back({{"epsilon", e.epsilon},
                    {"status", e.status},
                    {"Jstar", number_or_null(e.Jstar)},
                    {"J_u1", number_or_null(e.J1)},
                    {"J_u2", number_or_null(e.J2)},
                    {"J_u1_tail", number_or_null(e.J1_tail)},
                    {"J_u2_tail", number_or_null(e.J2_tail)},
                    {"P1_error", number_or_null(e.P_error[0])},
                    {"P2_error", number_or_null(e.P_error[1])},
                    {"P3_error", number_or_null(e.P_error[2])},
                    {"h1_error", number_or_null(e.h_error[0])},
                    {"h2_error", number_or_null(e.h_error[1])},
                    {"s_error", number_or_null(e.s_error)},
                    {"x_error", number_or_null(e.x_error)},
                    {"y_error", number_or_null(e.y_error)},
                    {"max_u_lower", number_or_null(e.max_u_lower)},
                    {"eps_max_u_lower", number_or_null(e.epsilon * e.max_u_lower)},
                    {"u0_lower", number_or_null(e.u0_lower)},
                    {"are_residual", number_or_null(e.are_residual)},
                    {"block_residual", number_or_null(e.block_residual)}});
  }
  Json ratios = Json::object();
  if (rep.all_ok() && rep.entries.size() >= 2) {
    const auto eps = rep.epsilons();
    auto add = [&](const char* name, auto f, double floor) {
      const FirstOrderCheck c = check_first_order(eps, rep.column(f), 4.0, floor);
      Json r = Json::array();
      for (double x : c.ratios) r.push_back(number_or_null(x));
      ratios[name] = {{"ratios", r},
                      {"spread", number_or_null(c.spread)},
                      {"below_floor", c.below_floor},
                      {"pass", c.pass}};
    };
    const double jb = rep.Jbar;
    add("J_u1", [jb](const SweepEntry& e) { return std::abs(e.J1 - jb); }, 0.0);
    add("J_u2", [jb](const SweepEntry& e) { return std::abs(e.J2 - jb); }, 0.0);
    add("Jstar", [jb](const SweepEntry& e) { return std::abs(e.Jstar - jb); }, 0.0);
    for (int i = 0; i < 3; ++i) {
      const std::string name = "P" + std::to_string(i + 1);
      add(name.c_str(), [i](const SweepEntry& e) { return e.P_error[i]; },
          roundoff_floor(1.0));
    }
    add("h1", [](const SweepEntry& e) { return e.h_error[0]; }, roundoff_floor(1.0));
    add("h2", [](const SweepEntry& e) { return e.h_error[1]; }, roundoff_floor(1.0));
    add("s", [](const SweepEntry& e) { return e.s_error; }, roundoff_floor(1.0));
    Json prod = Json::array();
    for (const auto& e : rep.entries) prod.push_back(e.epsilon * e.max_u_lower);
    ratios["eps_max_u_lower"] = prod;
  }
  return {{"Jbar", rep.Jbar},
          {"mu", number_or_null(rep.mu)},
          {"entries", std::move(rows)},
          {"diagnostics", std::move(ratios)}};
}

inline void write_sweep_csv(std::ostream& os, const SweepReport& rep) {
  os << "epsilon,status,Jstar,J_u1,J_u2,P1_error,P2_error,P3_error,h1_error,"
        "h2_error,s_error,x_error,y_error,max_u_lower\n";
  const auto old = os.precision(17);
  for (const auto& e : rep.entries) {
    os << e.epsilon << ',' << (e.status == "ok" ? "ok" : "failed") << ','
       << e.Jstar << ',' << e.J1 << ',' << e.J2 << ',' << e.P_error[0] << ','
       << e.P_error[1] << ',' << e.P_error[2] << ',' << e.h_error[0] << ','
       << e.h_error[1] << ',' << e.s_error << ',' << e.x_error << ','
       << e.y_error << ',' << e.max_u_lower << '\n';
  }
  os.precision(old);
}

/// A matplotlib script that reads sweep.csv and traj_eps_*.csv from its own
/// directory.
inline std::string plot_script(const SweepReport& rep, int slow_dim) {
  std::ostringstream os;
  os.precision(17);
  os << "import csv, os\n"
        "import matplotlib\n"
        "matplotlib.use('Agg')\n"
        "import matplotlib.pyplot as plt\n\n"
        "here = os.path.dirname(os.path.abspath(__file__))\n"
        "JBAR = "
     << rep.Jbar << "\nEPSILONS = [";
  for (std::size_t i = 0; i < rep.entries.size(); ++i)
    os << (i ? ", " : "") << rep.entries[i].epsilon;
  os << "]\nSLOW = " << slow_dim
     << "\n\n"
        "def read(name):\n"
        "    with open(os.path.join(here, name)) as fh:\n"
        "        rows = list(csv.DictReader(fh))\n"
        "    return rows\n\n"
        "sweep = read('sweep.csv')\n"
        "eps = [float(r['epsilon']) for r in sweep]\n"
        "fig, ax = plt.subplots()\n"
        "ax.plot(eps, [float(r['J_u1']) for r in sweep], 'o-', label='J(u_eps,1)')\n"
        "ax.plot(eps, [float(r['Jstar']) for r in sweep], 's--', label='J*_eps')\n"
        "ax.axhline(JBAR, color='k', lw=0.8, label='Jbar')\n"
        "ax.set_xlabel('epsilon'); ax.set_ylabel('cost'); ax.legend()\n"
        "fig.savefig(os.path.join(here, 'cost_vs_eps.png'), dpi=150)\n\n"
        "for comp, fname in ((1, 'fig_x.png'), (SLOW + 1, 'fig_y.png')):\n"
        "    fig, ax = plt.subplots()\n"
        "    for e in EPSILONS:\n"
        "        rows = read('traj_eps_%g.csv' % e)\n"
        "        ax.plot([float(r['t']) for r in rows], [float(r['z_%d' % comp]) for r in rows], label='eps=%g' % e)\n"
        "    ax.set_xlabel('t'); ax.set_ylabel('z_%d' % comp); ax.legend()\n"
        "    fig.savefig(os.path.join(here, fname), dpi=150)\n\n"
        "fig, ax = plt.subplots()\n"
        "for e in EPSILONS:\n"
        "    rows = read('traj_eps_%g.csv' % e)\n"
        "    keys = [k for k in rows[0] if k.startswith('u_')]\n"
        "    ax.plot([float(r['t']) for r in rows], [float(r[keys[-1]]) for r in rows], label='eps=%g' % e)\n"
        "ax.set_xlim(0, 1); ax.set_xlabel('t'); ax.set_ylabel('u'); ax.legend()\n"
        "fig.savefig(os.path.join(here, 'fig_u.png'), dpi=150)\n";
  return os.str();
}

}  // namespace singlq
