#include "nonmono/analysis.hpp"

#include "nonmono/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nonmono {

namespace {

// Directions with a vanishing eigenvalue are fixed by every H(lambda).
constexpr double kZeroEig = 1e-9;

MatrixXd k_matrix(const PdProblem& p, const Preconditioner& pc) {
  const LinearPd lin = linear_pd(p);
  const MatrixXd& M = pc.M.mat();
  Eigen::PartialPivLU<MatrixXd> lu(M + lin.T);
  if (!(lu.rcond() > 1e-12)) throw Error(ErrorCode::SingularResolvent, "M + T_PD is numerically singular");
  return lu.solve(M) - MatrixXd::Identity(M.rows(), M.cols());
}

double radius_from(const std::vector<std::complex<double>>& nu, double lambda) {
  double r = 0.0;
  for (const auto& v : nu) {
    if (std::abs(v) <= kZeroEig) continue;
    r = std::max(r, std::abs(1.0 + lambda * v));
  }
  return r;
}

}  // namespace

MatrixXd algo_operator(const PdProblem& p, double gamma, double tau, double lambda) {
  const Preconditioner pc = assemble_preconditioner(p.L, p.svd, gamma, tau);
  const MatrixXd K = k_matrix(p, pc);
  return MatrixXd::Identity(K.rows(), K.cols()) + lambda * K;
}

std::vector<std::complex<double>> iteration_spectrum(const PdProblem& p, double gamma, double tau, bool projected,
                                                     double eq_tol) {
  const Preconditioner pc = assemble_preconditioner(p.L, p.svd, gamma, tau, eq_tol);
  MatrixXd K = k_matrix(p, pc);
  if (projected) K = pc.U.transpose() * K * pc.U;
  Eigen::EigenSolver<MatrixXd> es(K, false);
  std::vector<std::complex<double>> out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i));
  return out;
}

double iteration_radius(const PdProblem& p, double gamma, double tau, double lambda, bool projected,
                        double eq_tol) {
  return radius_from(iteration_spectrum(p, gamma, tau, projected, eq_tol), lambda);
}

double tight_lambda(const PdProblem& p, double gamma, double tau, bool projected, double tol, double eq_tol) {
  const auto nu = iteration_spectrum(p, gamma, tau, projected, eq_tol);
  for (const auto& v : nu) {
    if (std::abs(v) > kZeroEig && v.real() >= -kZeroEig * std::abs(v)) {
      throw Error(ErrorCode::NoStableLambda,
                  "an eigenvalue of the iteration has nonnegative real part, so no lambda > 0 is stable");
    }
  }
  double lo = 0.0;
  double hi = 8.0;
  while (radius_from(nu, hi) < 1.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) return kInf;
  }
  while (hi - lo > tol * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (radius_from(nu, mid) < 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double verify_weak_minty_linear(const MatrixXd& T, const SymMatrix& V, bool restrict_to_range_M,
                                const std::optional<MatrixXd>& U) {
  if (T.rows() != T.cols() || V.size() != T.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "weak Minty shapes");
  }
  const MatrixXd Q = 0.5 * (T + T.transpose()) - T.transpose() * V.mat() * T;
  if (!restrict_to_range_M) return min_eig_sym(SymMatrix(Q));
  if (!U) throw Error(ErrorCode::DimensionMismatch, "restricted check needs a basis of range(M)");
  Eigen::FullPivLU<MatrixXd> lu(T);
  if (!lu.isInvertible()) throw Error(ErrorCode::SingularOperator, "T_PD is singular");
  const MatrixXd W = lu.solve(*U);
  Eigen::HouseholderQR<MatrixXd> qr(W);
  const MatrixXd basis = qr.householderQ() * MatrixXd::Identity(W.rows(), W.cols());
  return min_eig_sym(SymMatrix(basis.transpose() * Q * basis));
}

PdMatrices pd_matrices(const PdProblem& p) {
  const auto* a = std::get_if<AffineOp>(&p.A);
  const auto* b = std::get_if<AffineOp>(&p.B);
  if (a == nullptr || b == nullptr) throw Error(ErrorCode::NotLinear, "pd_matrices needs affine A and B");
  PdMatrices out;
  out.T_P = a->D + p.L.transpose() * b->D * p.L;
  out.T_PD = linear_pd(p).T;
  Eigen::FullPivLU<MatrixXd> la(a->D);
  if (la.isInvertible()) {
    Eigen::FullPivLU<MatrixXd> lb(b->D);
    out.T_D = MatrixXd(lb.inverse() + p.L * la.inverse() * p.L.transpose());
  }
  return out;
}

TraceProbe trace_negativity_probe(const MatrixXd& T_P, const MatrixXd& T_D, const MatrixXd& T_PD) {
  return TraceProbe{T_P.trace(), T_D.trace(), T_PD.trace()};
}

SymMatrix oblique_weight(const ObliqueParams& p, const GroupedSvd& svd) {
  const auto kernel_term = [](double beta, const MatrixXd& basis) -> MatrixXd {
    if (basis.cols() == 0) return MatrixXd::Zero(basis.rows(), basis.rows());
    if (std::isinf(beta)) {
      throw Error(ErrorCode::InvalidModuli, "an infinite kernel parameter needs an empty kernel block");
    }
    return beta * basis * basis.transpose();
  };
  const MatrixXd VP = p.beta_P * svd.X * svd.X.transpose() + kernel_term(p.beta_Pp, svd.Xp);
  const MatrixXd VD = p.beta_D * svd.Y * svd.Y.transpose() + kernel_term(p.beta_Dp, svd.Yp);
  return SymMatrix(direct_sum(VP, VD));
}

double eta_bar_eigen(const ObliqueParams& p, const GroupedSvd& svd, const MatrixXd& L, double gamma, double tau,
                     double eq_tol) {
  const Preconditioner pc = assemble_preconditioner(L, svd, gamma, tau, eq_tol);
  const MatrixXd& U = pc.U;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(U.transpose() * pc.M.mat() * U);
  const MatrixXd S = es.operatorSqrt();
  const MatrixXd V = U.transpose() * oblique_weight(p, svd).mat() * U;
  return 1.0 + min_eig_sym(SymMatrix(S * V * S));
}

std::vector<ScanPoint> scan_tight_lambda(const PdProblem& p, const std::vector<std::pair<double, double>>& steps,
                                         bool projected) {
  std::vector<ScanPoint> out(steps.size());
  const long count = static_cast<long>(steps.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    const auto [g, t] = steps[static_cast<size_t>(i)];
    ScanPoint sp{g, t, std::numeric_limits<double>::quiet_NaN()};
    try {
      sp.lambda_spectral = tight_lambda(p, g, t, projected);
    } catch (const Error&) {
    }
    out[static_cast<size_t>(i)] = sp;
  }
  return out;
}

std::vector<ScanPoint> scan_tight_lambda_serial(const PdProblem& p,
                                                const std::vector<std::pair<double, double>>& steps,
                                                bool projected) {
  std::vector<ScanPoint> out;
  out.reserve(steps.size());
  for (const auto& [g, t] : steps) {
    ScanPoint sp{g, t, std::numeric_limits<double>::quiet_NaN()};
    try {
      sp.lambda_spectral = tight_lambda(p, g, t, projected);
    } catch (const Error&) {
    }
    out.push_back(sp);
  }
  return out;
}

}  // namespace nonmono
