#include "nonmono/numlin.hpp"

#include "nonmono/errors.hpp"

#include <algorithm>
#include <cmath>

namespace nonmono {

namespace {

double sigma_max(const MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(a);
  return svd.singularValues()(0);
}

// Pseudoinverse with an absolute cutoff on the singular values.
MatrixXd pinv_abs(const MatrixXd& a, double cutoff) {
  if (a.size() == 0) return MatrixXd::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& s = svd.singularValues();
  VectorXd inv = VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace

SymMatrix::SymMatrix(const MatrixXd& a) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "symmetric matrix must be square");
  }
  m_ = 0.5 * (a + a.transpose());
}

SymMatrix SymMatrix::identity(Eigen::Index n, double scale) {
  return SymMatrix(MatrixXd::Identity(n, n) * scale);
}

SymMatrix SymMatrix::zero(Eigen::Index n) { return SymMatrix(MatrixXd::Zero(n, n)); }

SymMatrix SymMatrix::diag(const VectorXd& d) { return SymMatrix(MatrixXd(d.asDiagonal())); }

int GroupedSvd::offset(int group) const {
  int off = 0;
  for (int i = 0; i < group; ++i) off += mult[static_cast<size_t>(i)];
  return off;
}

MatrixXd GroupedSvd::X_block(int group) const {
  return X.middleCols(offset(group), mult[static_cast<size_t>(group)]);
}

MatrixXd GroupedSvd::Y_block(int group) const {
  return Y.middleCols(offset(group), mult[static_cast<size_t>(group)]);
}

MatrixXd GroupedSvd::reconstruct() const {
  VectorXd s(rank());
  for (int g = 0; g < d(); ++g) {
    s.segment(offset(g), mult[static_cast<size_t>(g)]).setConstant(sigma[static_cast<size_t>(g)]);
  }
  return Y * s.asDiagonal() * X.transpose();
}

GroupedSvd grouped_svd(const MatrixXd& L, double group_tol, double rank_tol) {
  if (L.size() == 0 || L.norm() == 0.0) {
    throw Error(ErrorCode::ZeroMatrix, "L has zero Frobenius norm");
  }
  Eigen::JacobiSVD<MatrixXd> svd(L, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXd& s = svd.singularValues();
  const double smax = s(0);

  int r = 0;
  while (r < s.size() && s(r) > rank_tol * smax) ++r;

  GroupedSvd out;
  out.m = L.rows();
  out.n = L.cols();
  out.group_tol = group_tol;
  out.X = svd.matrixV().leftCols(r);
  out.Y = svd.matrixU().leftCols(r);
  out.Xp = svd.matrixV().rightCols(L.cols() - r);
  out.Yp = svd.matrixU().rightCols(L.rows() - r);

  int start = 0;
  while (start < r) {
    int end = start + 1;
    while (end < r && s(start) - s(end) <= group_tol * smax) ++end;
    out.sigma.push_back(s.segment(start, end - start).mean());
    out.mult.push_back(end - start);
    start = end;
  }
  return out;
}

MatrixXd pinv(const MatrixXd& a, double rank_tol, double scale) {
  return pinv_abs(a, rank_tol * std::max(sigma_max(a), scale));
}

int numerical_rank(const MatrixXd& a, double rank_tol, double scale) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<MatrixXd> svd(a);
  const VectorXd& s = svd.singularValues();
  const double cutoff = rank_tol * std::max(s(0), scale);
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) ++r;
  }
  return r;
}

MatrixXd kernel_basis(const MatrixXd& a, double rank_tol) {
  const Eigen::Index n = a.cols();
  if (a.rows() == 0) return MatrixXd::Identity(n, n);
  Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeFullV);
  const int r = numerical_rank(a, rank_tol);
  return svd.matrixV().rightCols(n - r);
}

double parallel_sum_scalar(double a, double b) {
  if (std::isinf(a) && std::isinf(b)) {
    if (a == b) return a;
    throw Error(ErrorCode::NotParallelSummable, "opposite infinities");
  }
  if (std::isinf(a)) return b;
  if (std::isinf(b)) return a;
  if (a == 0.0 && b == 0.0) return 0.0;
  if (a + b == 0.0) {
    throw Error(ErrorCode::NotParallelSummable, "a + b = 0 with (a, b) != (0, 0)");
  }
  return a * b / (a + b);
}

bool scalar_in_parallel_domain(double a, double b) {
  return (a == 0.0 && b == 0.0) || a + b > 0.0;
}

bool parallel_summable(const MatrixXd& a, const MatrixXd& b, double rank_tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "parallel sum operands differ in shape");
  }
  const MatrixXd s = a + b;
  const double scale = std::max(sigma_max(a), sigma_max(b));
  const int rs = numerical_rank(s, rank_tol, scale);
  MatrixXd rows(2 * a.rows(), a.cols());
  rows << a, s;
  MatrixXd cols(a.rows(), 2 * a.cols());
  cols << a, s;
  return numerical_rank(rows, rank_tol, scale) == rs && numerical_rank(cols, rank_tol, scale) == rs;
}

SymMatrix parallel_sum_matrix(const SymMatrix& a, const SymMatrix& b, double rank_tol) {
  if (!parallel_summable(a.mat(), b.mat(), rank_tol)) {
    throw Error(ErrorCode::NotParallelSummable, "range(A) is not contained in range(A + B)");
  }
  const double scale = std::max(sigma_max(a.mat()), sigma_max(b.mat()));
  const MatrixXd s_pinv = pinv_abs(a.mat() + b.mat(), rank_tol * scale);
  return SymMatrix(a.mat() * s_pinv * b.mat());
}

bool in_parallel_domain(const SymMatrix& a, const SymMatrix& b, double rank_tol) {
  const double scale = std::max({1.0, sigma_max(a.mat()), sigma_max(b.mat())});
  if (min_eig_sym(SymMatrix(a.mat() + b.mat())) < -1e-10 * scale) return false;
  return parallel_summable(a.mat(), b.mat(), rank_tol);
}

double min_eig_sym(const SymMatrix& s) {
  if (s.size() == 0) return kInf;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s.mat(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_eig_sym(const SymMatrix& s) {
  if (s.size() == 0) return -kInf;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s.mat(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(s.size() - 1);
}

double spectral_radius(const MatrixXd& h) {
  if (h.rows() != h.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "spectral radius needs a square matrix");
  }
  if (h.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(h, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

MatrixXd direct_sum(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out = MatrixXd::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

}  // namespace nonmono
