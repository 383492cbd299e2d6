#pragma once

#include "nonmono/numlin.hpp"
#include "nonmono/ops.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace nonmono {

struct GraphPoint {
  VectorXd x;
  VectorXd y;
};

// (M, R)-semimonotonicity certificate, global unless a graph point is attached.
struct SemiCert {
  SymMatrix M;
  SymMatrix R;
  std::optional<GraphPoint> point;
  bool universal = false;
  std::string subject;

  Eigen::Index dim() const { return M.size(); }
};

// A is (muA L^T L, rhoA I)-semimonotone and B is (muB I, rhoB L L^T)-semimonotone.
struct ScalarModuli {
  double muA = 0.0;
  double rhoA = 0.0;
  double muB = 0.0;
  double rhoB = 0.0;
};

enum class ModuliCase { Monotone, DualOnly, PrimalOnly, Both };

// Block weak-Minty parameters; an infinite value marks an empty kernel block.
struct ObliqueParams {
  double beta_P = 0.0;
  double beta_Pp = 0.0;
  double beta_D = 0.0;
  double beta_Dp = 0.0;
};

// Matrix certificates in the form used by the primal-dual rule:
// A is (L^T MA L, RA + RAp) and B is (MB + MBp, L RB L^T).
struct PdCertificates {
  SymMatrix MA;   // m x m
  SymMatrix RA;   // n x n
  SymMatrix RAp;  // n x n, range inside ker L
  SymMatrix MB;   // m x m
  SymMatrix MBp;  // m x m, range inside ker L^T
  SymMatrix RB;   // n x n
};

double linear_cert_slack(const MatrixXd& D, const SymMatrix& M, const SymMatrix& R);
bool check_linear_cert(const MatrixXd& D, const SymMatrix& M, const SymMatrix& R, double tol = 1e-9);

SemiCert universal_cert(const SymMatrix& M, const SymMatrix& R);

SemiCert cert_inverse(const SemiCert& c);
SemiCert cert_scale_shift(const SemiCert& c, double alpha, const VectorXd& u, const VectorXd& w);
SemiCert cert_cartesian(const SemiCert& a, const SemiCert& b);
SemiCert cert_sum(const SemiCert& a, const SemiCert& b);
SemiCert cert_parallel_sum(const SemiCert& a, const SemiCert& b);

bool lmi_feasible(const MatrixXd& D, const SymMatrix& Y, double rank_tol = 1e-10);
// Largest X (in the sense of D^T X D) with D^T X D <= Y; throws Infeasible.
SymMatrix lmi_solve(const MatrixXd& D, const SymMatrix& Y, double rank_tol = 1e-10);

// Optimal R for a linear operator D and a given M; throws Infeasible.
SymMatrix cert_linear_optimal_R(const MatrixXd& D, const SymMatrix& M, double rank_tol = 1e-10);
// Closed form valid when D is symmetric or skew-symmetric.
SymMatrix cert_linear_optimal_R_sym(const MatrixXd& D, const SymMatrix& M, double rank_tol = 1e-10);

// Certificate of D T D^T from a certificate (M, Y) of T.
SemiCert cert_compose_DTD(const MatrixXd& D, const SemiCert& t, double rank_tol = 1e-10);

// T is (D^T M D, R + Rp)-semimonotone; returns the certificate of T + D.
SemiCert cert_sum_skew(const MatrixXd& D, const SymMatrix& M, const SymMatrix& R, const SymMatrix& Rp,
                       std::optional<GraphPoint> point = std::nullopt, double rank_tol = 1e-10);

SemiCert cert_shift_scaled_identity(const SemiCert& c, double alpha, double eps);

SemiCert cert_box_normal_cone(const BoxNormalCone& box, const VectorXd& x, const VectorXd& v);

ObliqueParams derive_oblique_params(const PdCertificates& certs, const GroupedSvd& svd,
                                    double rank_tol = 1e-10);
ObliqueParams scalar_oblique_params(const ScalarModuli& mod, const GroupedSvd& svd);
PdCertificates matrix_certificates(const ScalarModuli& mod, const GroupedSvd& svd);
SemiCert cert_of_A(const PdCertificates& c, const MatrixXd& L);
SemiCert cert_of_B(const PdCertificates& c, const MatrixXd& L);

ModuliCase classify_moduli(const ScalarModuli& mod, const GroupedSvd& svd);
bool check_moduli_bounds(const ScalarModuli& mod, const GroupedSvd& svd);

// Graph sampling for certificates that cannot be checked in closed form.
std::uint64_t seed_from_env(std::uint64_t fallback = 20240601);
std::vector<GraphPoint> sample_graph(const Operator& op, int count, std::mt19937_64& rng);
// min over samples of <x - xb, y - yb> - |x - xb|_M^2 - |y - yb|_R^2 at the attached point.
double sampled_slack_at(const SemiCert& c, const std::vector<GraphPoint>& samples);
// Same inequality over all sample pairs (global certificates).
double sampled_slack_pairs(const SemiCert& c, const std::vector<GraphPoint>& samples);

}  // namespace nonmono
