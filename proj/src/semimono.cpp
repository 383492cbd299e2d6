#include "nonmono/semimono.hpp"

#include "nonmono/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace nonmono {

namespace {

double op_norm(const MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  return Eigen::JacobiSVD<MatrixXd>(a).singularValues()(0);
}

void require_square_same(const MatrixXd& D, const SymMatrix& M, const SymMatrix& R) {
  if (D.rows() != D.cols() || M.size() != D.rows() || R.size() != D.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "D, M and R must be square of one size");
  }
}

MatrixXd kernel_projector(const MatrixXd& D, double rank_tol) {
  const Eigen::Index n = D.cols();
  return MatrixXd::Identity(n, n) - pinv(D, rank_tol) * D;
}

// Both certificates pointwise, or both global.
bool both_pointwise(const SemiCert& a, const SemiCert& b) {
  if (a.point.has_value() != b.point.has_value()) {
    throw Error(ErrorCode::InvalidModuli,
                "cannot combine a pointwise certificate with a global one without its graph point");
  }
  return a.point.has_value();
}

bool range_inside_kernel(const MatrixXd& L, const MatrixXd& S, double rank_tol) {
  const double scale = std::max(1.0, op_norm(L) * op_norm(S));
  return (L * S).norm() <= 1e3 * rank_tol * scale;
}

}  // namespace

double linear_cert_slack(const MatrixXd& D, const SymMatrix& M, const SymMatrix& R) {
  require_square_same(D, M, R);
  const MatrixXd form = 0.5 * (D + D.transpose()) - M.mat() - D.transpose() * R.mat() * D;
  return min_eig_sym(SymMatrix(form));
}

bool check_linear_cert(const MatrixXd& D, const SymMatrix& M, const SymMatrix& R, double tol) {
  return linear_cert_slack(D, M, R) >= -tol;
}

SemiCert universal_cert(const SymMatrix& M, const SymMatrix& R) {
  if (M.size() != R.size()) throw Error(ErrorCode::DimensionMismatch, "M and R differ in size");
  if (!(max_eig_sym(R) < 0.0)) throw Error(ErrorCode::InvalidModuli, "R must be negative definite");
  if (!(max_eig_sym(M) < 0.0)) throw Error(ErrorCode::InvalidModuli, "M must be negative definite");
  const MatrixXd gap = 0.25 * R.mat().inverse() - M.mat();
  const double scale = std::max(1.0, op_norm(gap));
  if (min_eig_sym(SymMatrix(gap)) < -1e-12 * scale) {
    throw Error(ErrorCode::InvalidModuli, "M exceeds R^{-1}/4");
  }
  SemiCert c{M, R, std::nullopt, true, "universal"};
  return c;
}

SemiCert cert_inverse(const SemiCert& c) {
  SemiCert out{c.R, c.M, std::nullopt, c.universal, c.subject.empty() ? "" : c.subject + "^-1"};
  if (c.point) out.point = GraphPoint{c.point->y, c.point->x};
  return out;
}

SemiCert cert_scale_shift(const SemiCert& c, double alpha, const VectorXd& u, const VectorXd& w) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidModuli, "scaling factor must be positive");
  if (u.size() != c.dim() || w.size() != c.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "shift vectors have the wrong size");
  }
  SemiCert out{SymMatrix(alpha * c.M.mat()), SymMatrix(c.R.mat() / alpha), std::nullopt, false,
               c.subject};
  if (c.point) out.point = GraphPoint{c.point->x - u, w + alpha * c.point->y};
  return out;
}

SemiCert cert_cartesian(const SemiCert& a, const SemiCert& b) {
  SemiCert out{SymMatrix(direct_sum(a.M, b.M)), SymMatrix(direct_sum(a.R, b.R)), std::nullopt, false,
               a.subject + " x " + b.subject};
  if (both_pointwise(a, b)) {
    VectorXd x(a.dim() + b.dim());
    VectorXd y(a.dim() + b.dim());
    x << a.point->x, b.point->x;
    y << a.point->y, b.point->y;
    out.point = GraphPoint{x, y};
  }
  return out;
}

SemiCert cert_sum(const SemiCert& a, const SemiCert& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "summands differ in dimension");
  if (!in_parallel_domain(a.R, b.R)) {
    throw Error(ErrorCode::NotParallelSummable, "(R_A, R_B) is outside the parallel-sum domain");
  }
  SemiCert out{SymMatrix(a.M.mat() + b.M.mat()), parallel_sum_matrix(a.R, b.R), std::nullopt, false,
               a.subject + " + " + b.subject};
  if (both_pointwise(a, b)) {
    if ((a.point->x - b.point->x).norm() > 1e-12 * std::max(1.0, a.point->x.norm())) {
      throw Error(ErrorCode::InvalidModuli, "pointwise summands need a common base point");
    }
    out.point = GraphPoint{a.point->x, a.point->y + b.point->y};
  }
  return out;
}

SemiCert cert_parallel_sum(const SemiCert& a, const SemiCert& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "operands differ in dimension");
  if (!in_parallel_domain(a.M, b.M)) {
    throw Error(ErrorCode::NotParallelSummable, "(M_A, M_B) is outside the parallel-sum domain");
  }
  SemiCert out{parallel_sum_matrix(a.M, b.M), SymMatrix(a.R.mat() + b.R.mat()), std::nullopt, false,
               a.subject + " [] " + b.subject};
  if (both_pointwise(a, b)) {
    if ((a.point->y - b.point->y).norm() > 1e-12 * std::max(1.0, a.point->y.norm())) {
      throw Error(ErrorCode::InvalidModuli, "pointwise operands need a common image point");
    }
    out.point = GraphPoint{a.point->x + b.point->x, a.point->y};
  }
  return out;
}

bool lmi_feasible(const MatrixXd& D, const SymMatrix& Y, double rank_tol) {
  if (D.cols() != Y.size()) throw Error(ErrorCode::DimensionMismatch, "D and Y do not conform");
  const MatrixXd P = kernel_projector(D, rank_tol);
  const double scale = std::max(1.0, op_norm(Y.mat()));
  const MatrixXd PY = P * Y.mat();
  const SymMatrix PYP(PY * P);
  if (min_eig_sym(PYP) < -1e-10 * scale) return false;
  return numerical_rank(PYP.mat(), rank_tol, scale) == numerical_rank(PY, rank_tol, scale);
}

SymMatrix lmi_solve(const MatrixXd& D, const SymMatrix& Y, double rank_tol) {
  if (!lmi_feasible(D, Y, rank_tol)) {
    throw Error(ErrorCode::Infeasible, "no symmetric X satisfies D^T X D <= Y");
  }
  const MatrixXd P = kernel_projector(D, rank_tol);
  const double scale = std::max(1.0, op_norm(Y.mat()));
  const MatrixXd PYP = P * Y.mat() * P;
  const MatrixXd inner = Y.mat() - Y.mat() * P * pinv(PYP, rank_tol, scale) * P * Y.mat();
  const MatrixXd Dp = pinv(D, rank_tol);
  return SymMatrix(Dp.transpose() * inner * Dp);
}

SymMatrix cert_linear_optimal_R(const MatrixXd& D, const SymMatrix& M, double rank_tol) {
  if (D.rows() != D.cols() || M.size() != D.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "D must be square and match M");
  }
  const Eigen::Index n = D.rows();
  const MatrixXd S = 0.5 * (D + D.transpose());
  if (!lmi_feasible(D, SymMatrix(S - M.mat()), rank_tol)) {
    throw Error(ErrorCode::Infeasible, "no R makes D (M, R)-semimonotone");
  }
  MatrixXd K = MatrixXd::Zero(2 * n, 2 * n);
  K.topLeftCorner(n, n) = M.mat() - S;
  K.topRightCorner(n, n) = D.transpose();
  K.bottomLeftCorner(n, n) = D;
  const double scale = std::max({1.0, op_norm(D), op_norm(M.mat())});
  return SymMatrix(pinv(K, rank_tol, scale).bottomRightCorner(n, n));
}

SymMatrix cert_linear_optimal_R_sym(const MatrixXd& D, const SymMatrix& M, double rank_tol) {
  const MatrixXd S = 0.5 * (D + D.transpose());
  if (!lmi_feasible(D, SymMatrix(S - M.mat()), rank_tol)) {
    throw Error(ErrorCode::Infeasible, "no R makes D (M, R)-semimonotone");
  }
  const MatrixXd Dp = pinv(D, rank_tol);
  const MatrixXd P = kernel_projector(D, rank_tol);
  const double scale = std::max(1.0, op_norm(M.mat()));
  const MatrixXd PMP = P * M.mat() * P;
  return SymMatrix(pinv(S, rank_tol) - Dp.transpose() * M.mat() * Dp +
                   Dp.transpose() * M.mat() * P * pinv(PMP, rank_tol, scale) * P * M.mat() * Dp);
}

SemiCert cert_compose_DTD(const MatrixXd& D, const SemiCert& t, double rank_tol) {
  if (D.cols() != t.dim()) throw Error(ErrorCode::DimensionMismatch, "D and T do not conform");
  SemiCert out{SymMatrix(D * t.M.mat() * D.transpose()), lmi_solve(D, t.R, rank_tol), std::nullopt,
               false, "D(" + t.subject + ")D^T"};
  if (t.point) {
    const MatrixXd Dt = D.transpose();
    const VectorXd xbar = pinv(Dt, rank_tol) * t.point->x;
    if ((Dt * xbar - t.point->x).norm() > 1e-9 * std::max(1.0, t.point->x.norm())) {
      throw Error(ErrorCode::RangeConditionViolated, "graph point of T is not in range(D^T)");
    }
    out.point = GraphPoint{xbar, D * t.point->y};
  }
  return out;
}

SemiCert cert_sum_skew(const MatrixXd& D, const SymMatrix& M, const SymMatrix& R, const SymMatrix& Rp,
                       std::optional<GraphPoint> point, double rank_tol) {
  if (D.rows() != D.cols() || M.size() != D.rows() || R.size() != D.rows() || Rp.size() != D.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "D, M, R, R' must share one size");
  }
  const double dn = std::max(1.0, D.norm());
  const bool sym = (D - D.transpose()).norm() <= 1e-12 * dn;
  const bool skew = (D + D.transpose()).norm() <= 1e-12 * dn;
  if (!sym && !skew) {
    throw Error(ErrorCode::RangeConditionViolated, "D must be symmetric or skew-symmetric");
  }
  if (!range_inside_kernel(D, Rp.mat(), rank_tol)) {
    throw Error(ErrorCode::RangeConditionViolated, "range(R') is not inside ker(D)");
  }
  if (!in_parallel_domain(M, R, rank_tol)) {
    throw Error(ErrorCode::NotParallelSummable, "(M, R) is outside the parallel-sum domain");
  }
  SemiCert out{SymMatrix::zero(D.rows()), SymMatrix(Rp.mat() + parallel_sum_matrix(M, R, rank_tol).mat()),
               std::nullopt, false, "T + D"};
  if (point) out.point = GraphPoint{point->x, point->y + D * point->x};
  return out;
}

SemiCert cert_shift_scaled_identity(const SemiCert& c, double alpha, double eps) {
  if (alpha == 0.0) throw Error(ErrorCode::InvalidModuli, "shift must be nonzero");
  const Eigen::Index n = c.dim();
  const SymMatrix eps_id = SymMatrix::identity(n, eps);
  if (!in_parallel_domain(c.R, eps_id)) {
    throw Error(ErrorCode::NotParallelSummable, "(R, eps I) is outside the parallel-sum domain");
  }
  SemiCert out{SymMatrix(c.M.mat() + alpha * (1.0 - eps * alpha) * MatrixXd::Identity(n, n)),
               parallel_sum_matrix(c.R, eps_id), std::nullopt, false, c.subject + " + aI"};
  if (c.point) out.point = GraphPoint{c.point->x, c.point->y + alpha * c.point->x};
  return out;
}

SemiCert cert_box_normal_cone(const BoxNormalCone& box, const VectorXd& x, const VectorXd& v) {
  if (!box.in_graph(x, v)) throw Error(ErrorCode::NotInGraph, "(x, v) is not in the graph of N_C");
  VectorXd d(box.dim());
  for (Eigen::Index i = 0; i < box.dim(); ++i) d(i) = std::abs(v(i)) / (box.u(i) - box.l(i));
  SemiCert c{SymMatrix::diag(d), SymMatrix::zero(box.dim()), GraphPoint{x, v}, false, "N_C"};
  return c;
}

ObliqueParams derive_oblique_params(const PdCertificates& c, const GroupedSvd& svd, double rank_tol) {
  const auto m = svd.m;
  const auto n = svd.n;
  if (c.MA.size() != m || c.MB.size() != m || c.MBp.size() != m || c.RA.size() != n ||
      c.RAp.size() != n || c.RB.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "certificate blocks do not match L");
  }
  const MatrixXd L = svd.reconstruct();
  if (!range_inside_kernel(L, c.RAp.mat(), rank_tol)) {
    throw Error(ErrorCode::RangeConditionViolated, "range(R_A') is not inside ker(L)");
  }
  if (!range_inside_kernel(L.transpose(), c.MBp.mat(), rank_tol)) {
    throw Error(ErrorCode::RangeConditionViolated, "range(M_B') is not inside ker(L^T)");
  }
  if (!in_parallel_domain(c.MA, c.MB, rank_tol)) {
    throw Error(ErrorCode::NotParallelSummable, "(M_A, M_B) is outside the parallel-sum domain");
  }
  if (!in_parallel_domain(c.RA, c.RB, rank_tol)) {
    throw Error(ErrorCode::NotParallelSummable, "(R_A, R_B) is outside the parallel-sum domain");
  }
  const MatrixXd R = parallel_sum_matrix(c.RA, c.RB, rank_tol).mat();
  const MatrixXd M = parallel_sum_matrix(c.MA, c.MB, rank_tol).mat();
  ObliqueParams p;
  p.beta_P = min_eig_sym(SymMatrix(svd.X.transpose() * R * svd.X));
  p.beta_D = min_eig_sym(SymMatrix(svd.Y.transpose() * M * svd.Y));
  p.beta_Pp = min_eig_sym(SymMatrix(svd.Xp.transpose() * c.RAp.mat() * svd.Xp));
  p.beta_Dp = min_eig_sym(SymMatrix(svd.Yp.transpose() * c.MBp.mat() * svd.Yp));
  return p;
}

ObliqueParams scalar_oblique_params(const ScalarModuli& mod, const GroupedSvd& svd) {
  if (!scalar_in_parallel_domain(mod.muA, mod.muB)) {
    throw Error(ErrorCode::NotParallelSummable, "(muA, muB) is outside the parallel-sum domain");
  }
  if (!scalar_in_parallel_domain(mod.rhoA, mod.rhoB)) {
    throw Error(ErrorCode::NotParallelSummable, "(rhoA, rhoB) is outside the parallel-sum domain");
  }
  ObliqueParams p;
  p.beta_P = parallel_sum_scalar(mod.rhoA, mod.rhoB);
  p.beta_D = parallel_sum_scalar(mod.muA, mod.muB);
  p.beta_Pp = svd.rank() == svd.n ? 0.0 : mod.rhoA;
  p.beta_Dp = svd.rank() == svd.m ? 0.0 : mod.muB;
  return p;
}

PdCertificates matrix_certificates(const ScalarModuli& mod, const GroupedSvd& svd) {
  const MatrixXd PX = svd.proj_range_Lt();
  const MatrixXd PY = svd.proj_range_L();
  PdCertificates c;
  c.MA = SymMatrix(mod.muA * PY);
  c.MB = SymMatrix(mod.muB * PY);
  c.MBp = SymMatrix(mod.muB * svd.proj_ker_Lt());
  c.RA = SymMatrix(mod.rhoA * PX);
  c.RAp = SymMatrix(mod.rhoA * svd.proj_ker_L());
  c.RB = SymMatrix(mod.rhoB * PX);
  return c;
}

SemiCert cert_of_A(const PdCertificates& c, const MatrixXd& L) {
  SemiCert out{SymMatrix(L.transpose() * c.MA.mat() * L), SymMatrix(c.RA.mat() + c.RAp.mat()),
               std::nullopt, false, "A"};
  return out;
}

SemiCert cert_of_B(const PdCertificates& c, const MatrixXd& L) {
  SemiCert out{SymMatrix(c.MB.mat() + c.MBp.mat()), SymMatrix(L * c.RB.mat() * L.transpose()),
               std::nullopt, false, "B"};
  return out;
}

ModuliCase classify_moduli(const ScalarModuli& mod, const GroupedSvd& svd) {
  const bool mu_zero = mod.muA == 0.0 && mod.muB == 0.0;
  const bool rho_zero = mod.rhoA == 0.0 && mod.rhoB == 0.0;
  const double mu_sum = mod.muA + mod.muB;
  const double rho_sum = mod.rhoA + mod.rhoB;
  if (mu_zero && rho_zero) return ModuliCase::Monotone;
  if (rho_zero) {
    if (mu_sum > 0.0) return ModuliCase::DualOnly;
    throw Error(ErrorCode::CaseViolated, "case (ii) needs muA + muB > 0");
  }
  if (mu_zero) {
    if (rho_sum > 0.0) return ModuliCase::PrimalOnly;
    throw Error(ErrorCode::CaseViolated, "case (iii) needs rhoA + rhoB > 0");
  }
  if (!(mu_sum > 0.0 && rho_sum > 0.0)) {
    throw Error(ErrorCode::CaseViolated, "case (iv) needs muA + muB > 0 and rhoA + rhoB > 0");
  }
  const double bd = parallel_sum_scalar(mod.muA, mod.muB);
  const double bp = parallel_sum_scalar(mod.rhoA, mod.rhoB);
  if (!(neg_part(bd) * neg_part(bp) < 1.0 / (4.0 * svd.norm_sq()))) {
    throw Error(ErrorCode::CaseViolated, "case (iv) needs [muA[]muB]_-[rhoA[]rhoB]_- < 1/(4|L|^2)");
  }
  return ModuliCase::Both;
}

bool check_moduli_bounds(const ScalarModuli& mod, const GroupedSvd& svd) {
  const double cap = 1.0 / (4.0 * svd.sigma_min() * svd.sigma_min());
  return pos_part(mod.muA) * pos_part(mod.rhoA) <= cap && pos_part(mod.muB) * pos_part(mod.rhoB) <= cap;
}

std::uint64_t seed_from_env(std::uint64_t fallback) {
  const char* s = std::getenv("NONMONO_SEED");
  if (s == nullptr || *s == '\0') return fallback;
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    return fallback;
  }
}

std::vector<GraphPoint> sample_graph(const Operator& op, int count, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<GraphPoint> out;
  out.reserve(static_cast<size_t>(count));
  const Eigen::Index n = op_dim(op);
  for (int k = 0; k < count; ++k) {
    VectorXd x(n);
    VectorXd y(n);
    if (const auto* a = std::get_if<AffineOp>(&op)) {
      for (Eigen::Index i = 0; i < n; ++i) x(i) = 3.0 * normal(rng);
      y = a->apply(x);
    } else {
      const auto& b = std::get<BoxNormalCone>(op);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double face = unif(rng);
        if (face < 1.0 / 3.0) {
          x(i) = b.l(i);
          y(i) = -std::abs(3.0 * normal(rng));
        } else if (face < 2.0 / 3.0) {
          x(i) = b.u(i);
          y(i) = std::abs(3.0 * normal(rng));
        } else {
          x(i) = b.l(i) + unif(rng) * (b.u(i) - b.l(i));
          y(i) = 0.0;
        }
      }
    }
    out.push_back(GraphPoint{x, y});
  }
  return out;
}

double sampled_slack_at(const SemiCert& c, const std::vector<GraphPoint>& samples) {
  if (!c.point) throw Error(ErrorCode::InvalidModuli, "certificate has no graph point");
  double worst = kInf;
  for (const auto& s : samples) {
    const VectorXd dx = s.x - c.point->x;
    const VectorXd dy = s.y - c.point->y;
    const double v = dx.dot(dy) - dx.dot(c.M.mat() * dx) - dy.dot(c.R.mat() * dy);
    worst = std::min(worst, v);
  }
  return worst;
}

double sampled_slack_pairs(const SemiCert& c, const std::vector<GraphPoint>& samples) {
  double worst = kInf;
  for (size_t i = 0; i < samples.size(); ++i) {
    for (size_t j = i + 1; j < samples.size(); ++j) {
      const VectorXd dx = samples[i].x - samples[j].x;
      const VectorXd dy = samples[i].y - samples[j].y;
      const double v = dx.dot(dy) - dx.dot(c.M.mat() * dx) - dy.dot(c.R.mat() * dy);
      worst = std::min(worst, v);
    }
  }
  return worst;
}

}  // namespace nonmono
