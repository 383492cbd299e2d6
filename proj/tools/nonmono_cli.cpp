#include "nonmono/analysis.hpp"
#include "nonmono/errors.hpp"
#include "nonmono/problems.hpp"
#include "nonmono/rules.hpp"
#include "nonmono/semimono.hpp"
#include "nonmono/solver.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace nonmono;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitDiverged = 2;
constexpr int kExitInvalidPlan = 3;
constexpr int kExitUsage = 64;

// nlohmann prints the shortest round-trip form; we want a fixed 17 digits.
void dump(std::ostream& os, const json& j, int indent = 0) {
  const std::string pad(static_cast<size_t>(indent + 2), ' ');
  const std::string close(static_cast<size_t>(indent), ' ');
  if (j.is_object()) {
    if (j.empty()) {
      os << "{}";
      return;
    }
    os << "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) os << ",\n";
      first = false;
      os << pad << json(it.key()).dump() << ": ";
      dump(os, it.value(), indent + 2);
    }
    os << '\n' << close << '}';
  } else if (j.is_array()) {
    os << '[';
    for (size_t i = 0; i < j.size(); ++i) {
      if (i > 0) os << ", ";
      dump(os, j[i], indent + 2);
    }
    os << ']';
  } else if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isfinite(v)) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << buf;
    } else {
      os << number_to_json(v).dump();
    }
  } else {
    os << j.dump();
  }
}

void emit(const json& j) {
  dump(std::cout, j);
  std::cout << '\n';
}

json num(double v) { return std::isfinite(v) ? json(v) : number_to_json(v); }

json vec(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

json plan_json(const StepsizePlan& p) {
  return json{{"gamma", num(p.gamma)},
              {"tau", num(p.tau)},
              {"lambda", num(p.lambda)},
              {"semidefinite", p.semidefinite},
              {"source", p.source},
              {"delta", num(p.delta)},
              {"gamma_window", json::array({num(p.gamma_window.lo), num(p.gamma_window.hi)})},
              {"tau_window", json::array({num(p.tau_window.lo), num(p.tau_window.hi)})},
              {"eta", num(p.eta)},
              {"eta_p", num(p.eta_p)},
              {"eta_bar", num(p.eta_bar)}};
}

struct StepArgs {
  std::optional<double> gamma;
  std::string tau;  // number or "max"
  std::optional<double> lambda;
};

PlanRequest to_request(const StepArgs& a) {
  PlanRequest r;
  r.gamma = a.gamma;
  r.lambda = a.lambda;
  if (a.tau == "max") {
    r.tau_max = true;
  } else if (!a.tau.empty()) {
    size_t used = 0;
    double t = 0.0;
    try {
      t = std::stod(a.tau, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != a.tau.size()) throw SchemaError("--tau must be a number or 'max'");
    r.tau = t;
  }
  return r;
}

std::vector<double> parse_list(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw SchemaError(flag + " expects a comma-separated list of numbers");
    }
  }
  return out;
}

// Deterministic start that is not aligned with any coordinate block.
VectorXd start_point(Eigen::Index dim, Eigen::Index offset) {
  VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = 1.0 / static_cast<double>(i + 1 + offset) - 0.3;
  return v;
}

struct SolveArgs {
  std::string problem;
  StepArgs steps;
  int max_iter = 100000;
  double eps = 1e-8;
  std::string out;
  bool sweep = false;
  bool unchecked = false;
  std::string gamma_grid;
  std::string tau_grid;
  std::string lambda_grid;
};

// Runs outside the admissible windows: stepsizes the rules did not supply must be given.
StepsizePlan unchecked_plan(const Instance& inst, const PlanRequest& req) {
  const GroupedSvd& svd = inst.problem.svd;
  PlanRequest base = req;
  base.lambda.reset();
  double gamma = 0.0;
  double tau = 0.0;
  try {
    const StepsizePlan p = plan_for(inst, base);
    gamma = p.gamma;
    tau = p.tau;
  } catch (const Error&) {
    if (!req.gamma) throw SchemaError("--unchecked outside the stepsize window needs --gamma");
    gamma = *req.gamma;
    tau = req.tau ? *req.tau : 1.0 / (gamma * svd.norm_sq());
  }
  if (!req.lambda) throw SchemaError("--unchecked needs --lambda");
  return manual_plan(gamma, tau, *req.lambda, svd);
}

int cmd_solve(const SolveArgs& a) {
  const Instance inst = load_problem(a.problem);
  const PdProblem& p = inst.problem;
  const VectorXd x0 = start_point(p.n(), 0);
  const VectorXd y0 = start_point(p.m(), p.n());
  RunOptions opt;
  opt.max_iter = a.max_iter;
  opt.eps_res = a.eps;

  if (a.sweep) {
    const PlanRequest base = to_request(a.steps);
    std::vector<double> gs = a.gamma_grid.empty() ? std::vector<double>{} : parse_list(a.gamma_grid, "--gamma-grid");
    std::vector<double> ts = a.tau_grid.empty() ? std::vector<double>{} : parse_list(a.tau_grid, "--tau-grid");
    std::vector<double> ls = a.lambda_grid.empty() ? std::vector<double>{} : parse_list(a.lambda_grid, "--lambda-grid");
    std::vector<std::optional<double>> gopt(gs.begin(), gs.end());
    std::vector<std::optional<double>> topt(ts.begin(), ts.end());
    std::vector<std::optional<double>> lopt(ls.begin(), ls.end());
    if (gopt.empty()) gopt.push_back(base.gamma);
    if (topt.empty()) topt.push_back(base.tau);
    if (lopt.empty()) lopt.push_back(base.lambda);
    json points = json::array();
    std::vector<StepsizePlan> plans;
    std::vector<size_t> slot;
    for (const auto& g : gopt) {
      for (const auto& t : topt) {
        for (const auto& l : lopt) {
          PlanRequest r = base;
          r.gamma = g;
          r.tau = t;
          r.tau_max = base.tau_max && !t;
          r.lambda = l;
          json pt{{"gamma", g ? num(*g) : json(nullptr)},
                  {"tau", t ? num(*t) : json(nullptr)},
                  {"lambda", l ? num(*l) : json(nullptr)}};
          try {
            plans.push_back(plan_for(inst, r));
            slot.push_back(points.size());
          } catch (const Error& e) {
            pt["status"] = "InvalidPlan";
            pt["error"] = e.what();
          }
          points.push_back(pt);
        }
      }
    }
    const auto traces = sweep(p, plans, x0, y0, opt);
    for (size_t i = 0; i < traces.size(); ++i) {
      json& pt = points[slot[i]];
      pt["status"] = status_name(traces[i].status);
      pt["iters"] = traces[i].iters;
      pt["final_residual"] = num(traces[i].final_residual());
      pt["plan"] = plan_json(traces[i].plan);
    }
    emit(json{{"sweep", points}});
    return kExitOk;
  }

  StepsizePlan plan;
  const PlanRequest req = to_request(a.steps);
  try {
    plan = plan_for(inst, req);
  } catch (const Error& e) {
    if (!a.unchecked) {
      emit(json{{"status", "InvalidPlan"}, {"error", e.what()}});
      std::cerr << e.what() << '\n';
      return kExitInvalidPlan;
    }
    plan = unchecked_plan(inst, req);
  }
  const IterateTrace t = run(p, plan, x0, y0, opt);
  if (!a.out.empty()) {
    std::ofstream os(a.out);
    if (!os) throw SchemaError("cannot write trace to '" + a.out + "'");
    write_trace_csv(os, t);
  }
  json summary{{"status", status_name(t.status)},
               {"iters", t.iters},
               {"final_residual", num(t.final_residual())},
               {"plan", plan_json(plan)},
               {"x", vec(t.xbar)},
               {"y", vec(t.ybar)}};
  if (!t.error.empty()) summary["error"] = t.error;
  emit(summary);
  switch (t.status) {
    case RunStatus::Converged: return kExitOk;
    case RunStatus::Diverged: return kExitDiverged;
    default: return kExitOther;
  }
}

std::string fmt_g(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

int cmd_window(const std::string& problem, const StepArgs& steps) {
  const Instance inst = load_problem(problem);
  StepsizePlan plan;
  try {
    plan = plan_for(inst, to_request(steps));
  } catch (const Error& e) {
    emit(json{{"error", e.what()}});
    std::cerr << e.what() << '\n';
    return kExitInvalidPlan;
  }
  json out{{"source", plan.source},
           {"gamma", json::array({num(plan.gamma_window.lo), num(plan.gamma_window.hi)})},
           {"gamma_used", num(plan.gamma)},
           {"tau_at_" + fmt_g(plan.gamma), json::array({num(plan.tau_window.lo), num(plan.tau_window.hi)})},
           {"tau_used", num(plan.tau)},
           {"semidefinite", plan.semidefinite},
           {"eta", num(plan.eta)},
           {"eta_p", num(plan.eta_p)},
           {"eta_bar", num(plan.eta_bar)},
           {"lambda", json::array({0.0, num(2.0 * plan.eta_bar)})}};
  if (!inst.certs_verified) out["warning"] = "shipped certificates are not verified: " + inst.notes;
  emit(out);
  return kExitOk;
}

MatrixXd read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open matrix file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw SchemaError("'" + path + "' is not valid JSON: " + e.what());
  }
  if (j.is_object() && j.contains("matrix")) j = j.at("matrix");
  return matrix_from_json(j, path);
}

int cmd_certify(const std::string& dpath, const std::string& mpath, const std::string& rpath, bool optimal) {
  const MatrixXd D = read_matrix_file(dpath);
  const MatrixXd M = read_matrix_file(mpath);
  if (D.rows() != D.cols() || M.rows() != D.rows() || M.cols() != D.cols()) {
    throw SchemaError("D and M must be square of the same size");
  }
  if (optimal) {
    try {
      const SymMatrix R = cert_linear_optimal_R(D, SymMatrix(M));
      emit(json{{"feasible", true}, {"R_opt", matrix_to_json(R.mat())}});
      return kExitOk;
    } catch (const Error& e) {
      emit(json{{"feasible", false}, {"error", e.what()}});
      return kExitInvalidPlan;
    }
  }
  if (rpath.empty()) throw SchemaError("certify needs --R or --optimal-R");
  const MatrixXd R = read_matrix_file(rpath);
  if (R.rows() != D.rows() || R.cols() != D.cols()) throw SchemaError("R must match D");
  const double slack = linear_cert_slack(D, SymMatrix(M), SymMatrix(R));
  const bool pass = check_linear_cert(D, SymMatrix(M), SymMatrix(R));
  emit(json{{"pass", pass}, {"slack", num(slack)}});
  return pass ? kExitOk : kExitInvalidPlan;
}

int cmd_spectral(const std::string& problem, const StepArgs& steps, bool projected) {
  const Instance inst = load_problem(problem);
  const PdProblem& p = inst.problem;
  if (!steps.gamma) throw SchemaError("spectral needs --gamma");
  const double gamma = *steps.gamma;
  const PlanRequest req = to_request(steps);
  const double tau = (req.tau_max || !req.tau) ? 1.0 / (gamma * p.svd.norm_sq()) : *req.tau;
  const ObliqueParams ob = oblique_for(inst);
  const EtaBounds e = eta_bound(ob, p.svd, gamma, tau);
  json out{{"gamma", num(gamma)}, {"tau", num(tau)}, {"projected", projected}, {"lambda_theorem", num(2.0 * e.eta_bar)}};
  try {
    out["lambda_spectral"] = num(tight_lambda(p, gamma, tau, projected));
  } catch (const Error& err) {
    out["lambda_spectral"] = nullptr;
    out["error"] = err.what();
  }
  try {
    const Preconditioner pc = assemble_preconditioner(p.L, p.svd, gamma, tau);
    out["slack"] = num(verify_weak_minty_linear(linear_pd(p).T, oblique_weight(ob, p.svd), projected, pc.U));
  } catch (const Error& err) {
    out["slack"] = nullptr;
    out["slack_error"] = err.what();
  }
  emit(out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relaxed primal-dual splitting for semimonotone inclusions"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* sc = app.add_subcommand("solve", "run the primal-dual iteration");
  sc->add_option("--problem", solve.problem, "problem file or builtin:name[:key=value...]")->required();
  sc->add_option("--gamma", solve.steps.gamma);
  sc->add_option("--tau", solve.steps.tau, "number or 'max'");
  sc->add_option("--lambda", solve.steps.lambda);
  sc->add_option("--max-iter", solve.max_iter);
  sc->add_option("--eps", solve.eps);
  sc->add_option("--out", solve.out, "CSV trace path");
  sc->add_flag("--sweep", solve.sweep, "run a grid of plans");
  sc->add_flag("--unchecked", solve.unchecked, "run even when the plan is outside the admissible windows");
  sc->add_option("--gamma-grid", solve.gamma_grid);
  sc->add_option("--tau-grid", solve.tau_grid);
  sc->add_option("--lambda-grid", solve.lambda_grid);

  std::string wproblem;
  StepArgs wsteps;
  auto* wc = app.add_subcommand("window", "print stepsize and relaxation windows");
  wc->add_option("--problem", wproblem)->required();
  wc->add_option("--gamma", wsteps.gamma);
  wc->add_option("--tau", wsteps.tau, "number or 'max'");

  std::string dpath;
  std::string mpath;
  std::string rpath;
  bool optimal = false;
  auto* cc = app.add_subcommand("certify", "check a linear semimonotonicity certificate");
  cc->add_option("--matrix", dpath)->required();
  cc->add_option("--M", mpath)->required();
  auto* ropt = cc->add_option("--R", rpath);
  cc->add_flag("--optimal-R", optimal)->excludes(ropt);

  std::string sproblem;
  StepArgs ssteps;
  bool projected = false;
  auto* pc = app.add_subcommand("spectral", "compare the tight and theoretical relaxation bounds");
  pc->add_option("--problem", sproblem)->required();
  pc->add_option("--gamma", ssteps.gamma)->required();
  pc->add_option("--tau", ssteps.tau, "number or 'max'");
  pc->add_flag("--projected", projected);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*sc) return cmd_solve(solve);
    if (*wc) return cmd_window(wproblem, wsteps);
    if (*cc) return cmd_certify(dpath, mpath, rpath, optimal);
    if (*pc) return cmd_spectral(sproblem, ssteps, projected);
  } catch (const SchemaError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    if (e.code() == ErrorCode::UnknownName || e.code() == ErrorCode::DimensionMismatch ||
        e.code() == ErrorCode::ZeroMatrix) {
      return kExitUsage;
    }
    return kExitInvalidPlan;
  }
  return kExitOther;
}
