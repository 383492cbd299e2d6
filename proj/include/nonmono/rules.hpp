#pragma once

#include "nonmono/numlin.hpp"
#include "nonmono/semimono.hpp"

#include <optional>
#include <string>

namespace nonmono {

struct RuleTol {
  double eq_tol = 1e-12;      // relative band deciding gamma*tau*|L|^2 == 1
  double margin_tol = 1e-6;   // lower bound on lambda * (2 eta_bar - lambda)
};

struct QuadWindow {
  bool exists = false;
  double delta = 1.0;
  double gamma_min = 0.0;
  double gamma_max = kInf;
};

// Open interval (lo, hi) for gamma; half-open (lo, hi] for tau.
struct Interval {
  double lo = 0.0;
  double hi = kInf;
};

struct EtaBounds {
  double eta = 1.0;
  double eta_p = kInf;
  double eta_bar = 1.0;
  bool semidefinite = false;
};

struct PlanRequest {
  std::optional<double> gamma;
  std::optional<double> tau;
  bool tau_max = false;  // tau = 1/(gamma sigma_1^2) exactly
  std::optional<double> lambda;
};

struct StepsizePlan {
  double gamma = 0.0;
  double tau = 0.0;
  double lambda = 0.0;
  bool semidefinite = false;
  double delta = 1.0;
  double gamma_min = 0.0;
  double gamma_max = kInf;
  Interval gamma_window;
  Interval tau_window;
  double eta = 1.0;
  double eta_p = kInf;
  double eta_bar = 1.0;
  std::string source;  // "oblique", "moduli" or "manual"
};

double theta(double beta_P, double beta_D, double gamma, double tau, double sigma);

QuadWindow quadratic_window(double beta_P, double beta_D, double normL, double sigma_d);
double tau_min(double beta_P, double beta_D, double delta, double normL, double gamma);
// Throws EmptyWindow when the interval is empty.
Interval tau_window(double beta_P, double beta_D, double beta_Dp, double delta, double normL, double gamma);

// Classifies gamma*tau*|L|^2 against 1; throws StepsizeOutOfRange above 1 + eq_tol.
bool is_semidefinite(double gamma, double tau, const GroupedSvd& svd, double eq_tol = 1e-12);

EtaBounds eta_bound(const ObliqueParams& p, const GroupedSvd& svd, double gamma, double tau,
                    double eq_tol = 1e-12);

// Empty string when (iii)a and (iii)b hold, else the name of the first failure.
std::string existence_failure(const ObliqueParams& p, const GroupedSvd& svd);

StepsizePlan plan_from_oblique(const ObliqueParams& p, const GroupedSvd& svd, const PlanRequest& req = {},
                               const RuleTol& tol = {});
StepsizePlan plan_from_moduli(const ScalarModuli& mod, const GroupedSvd& svd, const PlanRequest& req = {},
                              const RuleTol& tol = {});

// Unvalidated plan for experiments outside the admissible windows.
StepsizePlan manual_plan(double gamma, double tau, double lambda, const GroupedSvd& svd,
                         double eq_tol = 1e-12);

}  // namespace nonmono
