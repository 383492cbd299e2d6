#pragma once

#include "nonmono/numlin.hpp"
#include "nonmono/ops.hpp"
#include "nonmono/semimono.hpp"
#include "nonmono/solver.hpp"

#include <complex>
#include <optional>
#include <utility>
#include <vector>

namespace nonmono {

// H = I + lambda ((M + T)^{-1} M - I) for the linear primal-dual operator.
MatrixXd algo_operator(const PdProblem& p, double gamma, double tau, double lambda);

// Eigenvalues of K = (M + T)^{-1} M - I, compressed to range(M) when projected.
std::vector<std::complex<double>> iteration_spectrum(const PdProblem& p, double gamma, double tau,
                                                     bool projected, double eq_tol = 1e-12);

// Spectral radius of H(lambda), or of its compression to range(M).
double iteration_radius(const PdProblem& p, double gamma, double tau, double lambda, bool projected,
                        double eq_tol = 1e-12);

// sup{lambda > 0 : rho(P H(lambda) P) < 1}; throws NoStableLambda.
double tight_lambda(const PdProblem& p, double gamma, double tau, bool projected, double tol = 1e-12,
                    double eq_tol = 1e-12);

// Smallest eigenvalue of (T + T^T)/2 - T^T V T, optionally restricted to T^{-1} range(M).
double verify_weak_minty_linear(const MatrixXd& T, const SymMatrix& V, bool restrict_to_range_M,
                                const std::optional<MatrixXd>& U = std::nullopt);

struct PdMatrices {
  MatrixXd T_P;
  std::optional<MatrixXd> T_D;  // needs A invertible
  MatrixXd T_PD;
};
PdMatrices pd_matrices(const PdProblem& p);

struct TraceProbe {
  double trace_P = 0.0;
  double trace_D = 0.0;
  double trace_PD = 0.0;
};
TraceProbe trace_negativity_probe(const MatrixXd& T_P, const MatrixXd& T_D, const MatrixXd& T_PD);

// Block-diagonal V built from the oblique parameters in the coordinates of the SVD of L.
SymMatrix oblique_weight(const ObliqueParams& p, const GroupedSvd& svd);

// eta_bar from the eigenvalues of V relative to M on range(M).
double eta_bar_eigen(const ObliqueParams& p, const GroupedSvd& svd, const MatrixXd& L, double gamma, double tau,
                     double eq_tol = 1e-12);

struct ScanPoint {
  double gamma = 0.0;
  double tau = 0.0;
  double lambda_spectral = 0.0;  // NaN when no lambda is stable
};

std::vector<ScanPoint> scan_tight_lambda(const PdProblem& p, const std::vector<std::pair<double, double>>& steps,
                                         bool projected);
std::vector<ScanPoint> scan_tight_lambda_serial(const PdProblem& p,
                                                const std::vector<std::pair<double, double>>& steps,
                                                bool projected);

}  // namespace nonmono
