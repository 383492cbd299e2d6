#pragma once

#include "nonmono/numlin.hpp"
#include "nonmono/ops.hpp"
#include "nonmono/rules.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nonmono {

struct CpaStep {
  VectorXd xbar;
  VectorXd ybar;
  VectorXd x_next;
  VectorXd y_next;
};

CpaStep cpa_step(const PdProblem& p, double gamma, double tau, double lambda, const VectorXd& x,
                 const VectorXd& y);

// z+ = z + lambda ((M + T)^{-1} (M z - c) - z) for the affine operator z -> T z + c.
VectorXd pppa_step(const MatrixXd& T, const MatrixXd& M, double lambda, const VectorXd& z,
                   const VectorXd& c = VectorXd());

struct Preconditioner {
  SymMatrix M;
  MatrixXd U;  // orthonormal basis of range(M)
  bool semidefinite = false;
  int top_mult = 0;  // multiplicity of sigma_1, the size of ker M in the semidefinite branch
  double gamma = 0.0;
  double tau = 0.0;
};

Preconditioner assemble_preconditioner(const MatrixXd& L, const GroupedSvd& svd, double gamma, double tau,
                                       double eq_tol = 1e-12);

struct Shadow {
  VectorXd s;
  bool wrong_branch = false;  // definite branch: s is z itself
};

Shadow shadow(const GroupedSvd& svd, double gamma, double tau, const VectorXd& x, const VectorXd& y,
              double eq_tol = 1e-12);
// Throws WrongBranch instead of falling back to z.
VectorXd shadow_strict(const GroupedSvd& svd, double gamma, double tau, const VectorXd& x,
                       const VectorXd& y, double eq_tol = 1e-12);

enum class RunStatus { Converged, MaxIter, Diverged, Failed };
std::string status_name(RunStatus s);

struct IterRecord {
  int k = 0;
  double res_norm = 0.0;       // |M (z^k - zbar^k)|
  double projdiff_norm = 0.0;  // |P_Q z^k - P_Q zbar^k|
  double shadow_norm = 0.0;
  double z_norm = 0.0;
  double pz_norm = 0.0;  // |P_Q z^k|
  // Filled only when the history is kept.
  VectorXd x, y, xbar, ybar;
};

struct RunOptions {
  int max_iter = 100000;
  double eps_res = 1e-8;
  std::optional<double> divergence_cap;  // default 1e8 (1 + |z^0|)
  std::optional<bool> keep_history;      // default: n + m <= 64
  double eq_tol = 1e-12;
};

struct IterateTrace {
  std::vector<IterRecord> records;
  RunStatus status = RunStatus::MaxIter;
  std::string error;
  StepsizePlan plan;
  bool history = false;
  int iters = 0;
  VectorXd x, y;        // last iterate
  VectorXd xbar, ybar;  // last resolvent point

  double final_residual() const { return records.empty() ? 0.0 : records.back().res_norm; }
};

IterateTrace run(const PdProblem& p, const StepsizePlan& plan, const VectorXd& x0, const VectorXd& y0,
                 const RunOptions& opt = {});

// One run per plan, fanned out across threads; result order follows the input.
std::vector<IterateTrace> sweep(const PdProblem& p, const std::vector<StepsizePlan>& plans,
                                const VectorXd& x0, const VectorXd& y0, const RunOptions& opt = {});
std::vector<IterateTrace> sweep_serial(const PdProblem& p, const std::vector<StepsizePlan>& plans,
                                       const VectorXd& x0, const VectorXd& y0,
                                       const RunOptions& opt = {});

struct ResidualRate {
  bool applicable = true;
  std::vector<double> values;  // N * min_{k <= N} |vbar^k|^2
};
ResidualRate min_residual_rate(const IterateTrace& t);

// Geometric fit on the tail of a positive series; throws NotGeometric.
struct RateFit {
  double q = 0.0;
  double r2 = 0.0;
  int used = 0;
};
RateFit rlinear_fit(const std::vector<double>& series, double min_r2 = 0.98, double drop_frac = 0.2);

std::vector<double> projdiff_series(const IterateTrace& t);
std::vector<double> residual_series(const IterateTrace& t);

void write_trace_csv(std::ostream& os, const IterateTrace& t);

}  // namespace nonmono
