#include "nonmono/solver.hpp"

#include "nonmono/errors.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace nonmono {

namespace {

struct Resolvents {
  ResolventOracle A;
  ResolventOracle Binv;
};

CpaStep step_with(const Resolvents& r, const MatrixXd& L, double gamma, double tau, double lambda,
                  const VectorXd& x, const VectorXd& y) {
  CpaStep s;
  s.xbar = r.A(gamma, x - gamma * (L.transpose() * y));
  s.ybar = r.Binv(tau, y + tau * (L * (2.0 * s.xbar - x)));
  s.x_next = x + lambda * (s.xbar - x);
  s.y_next = y + lambda * (s.ybar - y);
  return s;
}

VectorXd stack(const VectorXd& x, const VectorXd& y) {
  VectorXd z(x.size() + y.size());
  z << x, y;
  return z;
}

bool all_finite(const VectorXd& v) { return v.allFinite(); }

}  // namespace

CpaStep cpa_step(const PdProblem& p, double gamma, double tau, double lambda, const VectorXd& x,
                 const VectorXd& y) {
  if (x.size() != p.n() || y.size() != p.m()) {
    throw Error(ErrorCode::DimensionMismatch, "iterate does not match L");
  }
  return step_with(Resolvents{p.res_A(), p.res_Binv()}, p.L, gamma, tau, lambda, x, y);
}

VectorXd pppa_step(const MatrixXd& T, const MatrixXd& M, double lambda, const VectorXd& z, const VectorXd& c) {
  if (T.rows() != T.cols() || M.rows() != T.rows() || M.cols() != T.cols() || z.size() != T.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "PPPA shapes");
  }
  Eigen::PartialPivLU<MatrixXd> lu(M + T);
  if (!(lu.rcond() > 1e-12)) throw Error(ErrorCode::SingularResolvent, "M + T is numerically singular");
  VectorXd rhs = M * z;
  if (c.size() == z.size()) rhs -= c;
  const VectorXd zbar = lu.solve(rhs);
  return z + lambda * (zbar - z);
}

Preconditioner assemble_preconditioner(const MatrixXd& L, const GroupedSvd& svd, double gamma, double tau,
                                       double eq_tol) {
  if (!(gamma > 0.0 && tau > 0.0)) throw Error(ErrorCode::StepsizeOutOfRange, "stepsizes must be positive");
  const Eigen::Index n = L.cols();
  const Eigen::Index m = L.rows();
  Preconditioner pc;
  pc.gamma = gamma;
  pc.tau = tau;
  pc.semidefinite = is_semidefinite(gamma, tau, svd, eq_tol);
  MatrixXd M(n + m, n + m);
  M << MatrixXd::Identity(n, n) / gamma, -L.transpose(), -L, MatrixXd::Identity(m, m) / tau;
  pc.M = SymMatrix(M);
  if (!pc.semidefinite) {
    pc.U = MatrixXd::Identity(n + m, n + m);
    return pc;
  }
  const int m1 = svd.mult.front();
  pc.top_mult = m1;
  const int r = svd.rank();
  MatrixXd U = MatrixXd::Zero(n + m, n + m - m1);
  const double c = std::sqrt(tau / (gamma + tau));
  U.block(0, 0, n, m1) = c * svd.X.leftCols(m1);
  U.block(n, 0, m, m1) = -c * std::sqrt(gamma / tau) * svd.Y.leftCols(m1);
  Eigen::Index col = m1;
  U.block(0, col, n, r - m1) = svd.X.rightCols(r - m1);
  col += r - m1;
  U.block(0, col, n, n - r) = svd.Xp;
  col += n - r;
  U.block(n, col, m, r - m1) = svd.Y.rightCols(r - m1);
  col += r - m1;
  U.block(n, col, m, m - r) = svd.Yp;
  pc.U = U;
  return pc;
}

Shadow shadow(const GroupedSvd& svd, double gamma, double tau, const VectorXd& x, const VectorXd& y,
              double eq_tol) {
  Shadow out;
  if (!is_semidefinite(gamma, tau, svd, eq_tol)) {
    out.s = stack(x, y);
    out.wrong_branch = true;
    return out;
  }
  const int m1 = svd.mult.front();
  const int r = svd.rank();
  const Eigen::Index n = svd.n;
  const Eigen::Index m = svd.m;
  out.s.resize(n + m - m1);
  out.s.head(m1) = svd.X.leftCols(m1).transpose() * x - std::sqrt(gamma / tau) * (svd.Y.leftCols(m1).transpose() * y);
  Eigen::Index at = m1;
  out.s.segment(at, r - m1) = svd.X.rightCols(r - m1).transpose() * x;
  at += r - m1;
  out.s.segment(at, n - r) = svd.Xp.transpose() * x;
  at += n - r;
  out.s.segment(at, r - m1) = svd.Y.rightCols(r - m1).transpose() * y;
  at += r - m1;
  out.s.segment(at, m - r) = svd.Yp.transpose() * y;
  return out;
}

VectorXd shadow_strict(const GroupedSvd& svd, double gamma, double tau, const VectorXd& x, const VectorXd& y,
                       double eq_tol) {
  Shadow s = shadow(svd, gamma, tau, x, y, eq_tol);
  if (s.wrong_branch) {
    throw Error(ErrorCode::WrongBranch, "the shadow sequence needs gamma * tau * |L|^2 = 1");
  }
  return s.s;
}

std::string status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "Converged";
    case RunStatus::MaxIter: return "MaxIter";
    case RunStatus::Diverged: return "Diverged";
    case RunStatus::Failed: return "Failed";
  }
  return "Unknown";
}

IterateTrace run(const PdProblem& p, const StepsizePlan& plan, const VectorXd& x0, const VectorXd& y0,
                 const RunOptions& opt) {
  if (x0.size() != p.n() || y0.size() != p.m()) {
    throw Error(ErrorCode::DimensionMismatch, "starting point does not match L");
  }
  const double gamma = plan.gamma;
  const double tau = plan.tau;
  const Preconditioner pc = assemble_preconditioner(p.L, p.svd, gamma, tau, opt.eq_tol);
  const Resolvents res{p.res_A(), p.res_Binv()};
  const MatrixXd Ut = pc.U.transpose();

  IterateTrace t;
  t.plan = plan;
  t.history = opt.keep_history.value_or(p.n() + p.m() <= 64);
  const double cap = opt.divergence_cap.value_or(1e8 * (1.0 + stack(x0, y0).norm()));

  VectorXd x = x0;
  VectorXd y = y0;
  for (int k = 0;; ++k) {
    CpaStep s;
    try {
      s = step_with(res, p.L, gamma, tau, plan.lambda, x, y);
    } catch (const Error& e) {
      t.status = RunStatus::Failed;
      t.error = e.what();
      t.iters = k;
      break;
    }
    const VectorXd z = stack(x, y);
    const VectorXd diff = z - stack(s.xbar, s.ybar);
    IterRecord rec;
    rec.k = k;
    rec.res_norm = (pc.M.mat() * diff).norm();
    rec.projdiff_norm = (Ut * diff).norm();
    rec.shadow_norm = shadow(p.svd, gamma, tau, x, y, opt.eq_tol).s.norm();
    rec.z_norm = z.norm();
    rec.pz_norm = (Ut * z).norm();
    if (t.history) {
      rec.x = x;
      rec.y = y;
      rec.xbar = s.xbar;
      rec.ybar = s.ybar;
    }
    t.records.push_back(std::move(rec));
    t.x = x;
    t.y = y;
    t.xbar = s.xbar;
    t.ybar = s.ybar;
    t.iters = k;
    if (!std::isfinite(t.records.back().res_norm)) {
      t.status = RunStatus::Diverged;
      break;
    }
    if (t.records.back().res_norm <= opt.eps_res) {
      t.status = RunStatus::Converged;
      break;
    }
    if (k >= opt.max_iter) {
      t.status = RunStatus::MaxIter;
      break;
    }
    x = s.x_next;
    y = s.y_next;
    const VectorXd zn = stack(x, y);
    if (!all_finite(zn) || (Ut * zn).norm() > cap) {
      t.status = RunStatus::Diverged;
      t.x = x;
      t.y = y;
      t.iters = k + 1;
      break;
    }
  }
  return t;
}

std::vector<IterateTrace> sweep(const PdProblem& p, const std::vector<StepsizePlan>& plans, const VectorXd& x0,
                                const VectorXd& y0, const RunOptions& opt) {
  std::vector<IterateTrace> out(plans.size());
  const long count = static_cast<long>(plans.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    out[static_cast<size_t>(i)] = run(p, plans[static_cast<size_t>(i)], x0, y0, opt);
  }
  return out;
}

std::vector<IterateTrace> sweep_serial(const PdProblem& p, const std::vector<StepsizePlan>& plans,
                                       const VectorXd& x0, const VectorXd& y0, const RunOptions& opt) {
  std::vector<IterateTrace> out;
  out.reserve(plans.size());
  for (const auto& plan : plans) out.push_back(run(p, plan, x0, y0, opt));
  return out;
}

ResidualRate min_residual_rate(const IterateTrace& t) {
  ResidualRate r;
  if (t.status == RunStatus::Diverged || t.status == RunStatus::Failed) {
    r.applicable = false;
    return r;
  }
  double best = kInf;
  for (size_t N = 0; N < t.records.size(); ++N) {
    const double v = t.records[N].res_norm;
    best = std::min(best, v * v);
    r.values.push_back(static_cast<double>(N) * best);
  }
  return r;
}

RateFit rlinear_fit(const std::vector<double>& series, double min_r2, double drop_frac) {
  const size_t start = static_cast<size_t>(std::floor(drop_frac * static_cast<double>(series.size())));
  std::vector<double> ks;
  std::vector<double> ls;
  for (size_t k = start; k < series.size(); ++k) {
    if (series[k] > 0.0 && std::isfinite(series[k])) {
      ks.push_back(static_cast<double>(k));
      ls.push_back(std::log(series[k]));
    }
  }
  if (ks.size() < 3) throw Error(ErrorCode::NotGeometric, "fewer than 3 positive points in the tail");
  const double n = static_cast<double>(ks.size());
  double mk = 0.0;
  double ml = 0.0;
  for (size_t i = 0; i < ks.size(); ++i) {
    mk += ks[i];
    ml += ls[i];
  }
  mk /= n;
  ml /= n;
  double skk = 0.0;
  double skl = 0.0;
  double sll = 0.0;
  for (size_t i = 0; i < ks.size(); ++i) {
    skk += (ks[i] - mk) * (ks[i] - mk);
    skl += (ks[i] - mk) * (ls[i] - ml);
    sll += (ls[i] - ml) * (ls[i] - ml);
  }
  if (!(sll > 1e-14 * n)) throw Error(ErrorCode::NotGeometric, "series tail is constant");
  const double slope = skl / skk;
  RateFit f;
  f.r2 = skl * skl / (skk * sll);
  f.q = std::exp(slope);
  f.used = static_cast<int>(ks.size());
  if (!(slope < 0.0)) throw Error(ErrorCode::NotGeometric, "series tail does not decrease");
  if (f.r2 < min_r2) {
    throw Error(ErrorCode::NotGeometric, "log-linear fit has R^2 = " + std::to_string(f.r2));
  }
  return f;
}

std::vector<double> projdiff_series(const IterateTrace& t) {
  std::vector<double> v;
  v.reserve(t.records.size());
  for (const auto& r : t.records) v.push_back(r.projdiff_norm);
  return v;
}

std::vector<double> residual_series(const IterateTrace& t) {
  std::vector<double> v;
  v.reserve(t.records.size());
  for (const auto& r : t.records) v.push_back(r.res_norm);
  return v;
}

void write_trace_csv(std::ostream& os, const IterateTrace& t) {
  const auto old_prec = os.precision(17);
  const bool iterates = t.history && !t.records.empty() && t.records.front().x.size() > 0;
  os << "k,res_norm,projdiff_norm,shadow_norm";
  if (iterates) {
    for (Eigen::Index i = 0; i < t.records.front().x.size(); ++i) os << ",x" << i;
    for (Eigen::Index i = 0; i < t.records.front().y.size(); ++i) os << ",y" << i;
  }
  os << '\n';
  for (const auto& r : t.records) {
    os << r.k << ',' << r.res_norm << ',' << r.projdiff_norm << ',' << r.shadow_norm;
    if (iterates) {
      for (Eigen::Index i = 0; i < r.x.size(); ++i) os << ',' << r.x(i);
      for (Eigen::Index i = 0; i < r.y.size(); ++i) os << ',' << r.y(i);
    }
    os << '\n';
  }
  os.precision(old_prec);
}

}  // namespace nonmono
