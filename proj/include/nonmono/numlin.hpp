#pragma once

#include <Eigen/Dense>

#include <limits>
#include <vector>

namespace nonmono {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Relative tolerances shared by the rank and grouping decisions.
struct LinTol {
  double rank_tol = 1e-10;   // singular values below rank_tol * sigma_max count as zero
  double group_tol = 1e-8;   // singular values this close (relative) share a group
};

// Dense symmetric matrix, stored symmetrized.
class SymMatrix {
public:
  SymMatrix() = default;
  SymMatrix(const MatrixXd& a);  // NOLINT(google-explicit-constructor)

  static SymMatrix identity(Eigen::Index n, double scale = 1.0);
  static SymMatrix zero(Eigen::Index n);
  static SymMatrix diag(const VectorXd& d);

  const MatrixXd& mat() const { return m_; }
  operator const MatrixXd&() const { return m_; }  // NOLINT(google-explicit-constructor)
  Eigen::Index size() const { return m_.rows(); }

private:
  MatrixXd m_;
};

struct GroupedSvd {
  Eigen::Index m = 0;  // rows of L
  Eigen::Index n = 0;  // cols of L
  std::vector<double> sigma;  // distinct positive singular values, descending
  std::vector<int> mult;
  MatrixXd X;   // n x r
  MatrixXd Y;   // m x r
  MatrixXd Xp;  // n x (n - r), kernel of L
  MatrixXd Yp;  // m x (m - r), kernel of L^T
  double group_tol = 1e-8;

  int d() const { return static_cast<int>(sigma.size()); }
  int rank() const { return static_cast<int>(X.cols()); }
  double norm() const { return sigma.empty() ? 0.0 : sigma.front(); }
  double norm_sq() const { return norm() * norm(); }
  double sigma_min() const { return sigma.empty() ? 0.0 : sigma.back(); }
  int offset(int group) const;
  MatrixXd X_block(int group) const;
  MatrixXd Y_block(int group) const;

  MatrixXd proj_range_L() const { return Y * Y.transpose(); }
  MatrixXd proj_range_Lt() const { return X * X.transpose(); }
  MatrixXd proj_ker_L() const { return Xp * Xp.transpose(); }
  MatrixXd proj_ker_Lt() const { return Yp * Yp.transpose(); }
  MatrixXd reconstruct() const;
};

GroupedSvd grouped_svd(const MatrixXd& L, double group_tol = 1e-8, double rank_tol = 1e-10);

// Singular values below rank_tol * max(sigma_max(a), scale) are dropped.
MatrixXd pinv(const MatrixXd& a, double rank_tol = 1e-10, double scale = 0.0);

// Number of singular values above rank_tol * max(sigma_max(a), scale).
int numerical_rank(const MatrixXd& a, double rank_tol = 1e-10, double scale = 0.0);

// Orthonormal basis of ker(a); zero-width when a has full column rank.
MatrixXd kernel_basis(const MatrixXd& a, double rank_tol = 1e-10);

double parallel_sum_scalar(double a, double b);
bool scalar_in_parallel_domain(double a, double b);

bool parallel_summable(const MatrixXd& a, const MatrixXd& b, double rank_tol = 1e-10);
SymMatrix parallel_sum_matrix(const SymMatrix& a, const SymMatrix& b, double rank_tol = 1e-10);
// (a, b) in the parallel-sum domain: a + b psd and parallel summable.
bool in_parallel_domain(const SymMatrix& a, const SymMatrix& b, double rank_tol = 1e-10);

double min_eig_sym(const SymMatrix& s);
double max_eig_sym(const SymMatrix& s);
double spectral_radius(const MatrixXd& h);

MatrixXd direct_sum(const MatrixXd& a, const MatrixXd& b);

inline double pos_part(double v) { return v > 0.0 ? v : 0.0; }
inline double neg_part(double v) { return v < 0.0 ? v : 0.0; }

}  // namespace nonmono
