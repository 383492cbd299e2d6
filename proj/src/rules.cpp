#include "nonmono/rules.hpp"

#include "nonmono/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace nonmono {

namespace {

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

double inv_or_inf(double v) { return v > 0.0 ? 1.0 / v : kInf; }

double default_gamma(const Interval& w, double normL) {
  const bool lo_open = w.lo <= 0.0;
  const bool hi_open = std::isinf(w.hi);
  if (lo_open && hi_open) return 1.0 / normL;
  if (lo_open) return 0.5 * w.hi;
  if (hi_open) return 2.0 * w.lo;
  return std::sqrt(w.lo * w.hi);
}

double eta_prime(double rho_like, double mu_like, const GroupedSvd& svd, double gamma, double tau) {
  double e = kInf;
  if (svd.rank() < svd.n) e = std::min(e, 1.0 + rho_like / gamma);
  if (svd.rank() < svd.m) e = std::min(e, 1.0 + mu_like / tau);
  return e;
}

// Shared tail of both planners: pick gamma, tau, lambda and validate them.
StepsizePlan finish_plan(StepsizePlan plan, const GroupedSvd& svd, const PlanRequest& req,
                         const RuleTol& tol, const std::function<double(double)>& tau_lo_at,
                         const std::function<EtaBounds(double, double)>& eta_at) {
  const double L2 = svd.norm_sq();
  const Interval& gw = plan.gamma_window;
  if (!(gw.lo < gw.hi)) {
    throw Error(ErrorCode::EmptyWindow,
                "gamma window (" + fmt_num(gw.lo) + ", " + fmt_num(gw.hi) + ") is empty");
  }
  plan.gamma = req.gamma.value_or(default_gamma(gw, svd.norm()));
  if (!(plan.gamma > gw.lo && plan.gamma < gw.hi)) {
    throw Error(ErrorCode::RequestedOutOfWindow, "gamma = " + fmt_num(plan.gamma) +
                                                     " is outside the stepsize window (" +
                                                     fmt_num(gw.lo) + ", " + fmt_num(gw.hi) + ")");
  }
  plan.tau_window = Interval{tau_lo_at(plan.gamma), 1.0 / (plan.gamma * L2)};
  if (req.tau_max || !req.tau) {
    plan.tau = 1.0 / (plan.gamma * svd.sigma.front() * svd.sigma.front());
  } else {
    plan.tau = *req.tau;
  }
  const Interval& tw = plan.tau_window;
  if (!(plan.tau > tw.lo && plan.tau <= tw.hi * (1.0 + tol.eq_tol))) {
    throw Error(ErrorCode::RequestedOutOfWindow, "tau = " + fmt_num(plan.tau) +
                                                     " is outside the window (" + fmt_num(tw.lo) +
                                                     ", " + fmt_num(tw.hi) + "]");
  }
  const EtaBounds e = eta_at(plan.gamma, plan.tau);
  plan.semidefinite = e.semidefinite;
  plan.eta = e.eta;
  plan.eta_p = e.eta_p;
  plan.eta_bar = e.eta_bar;
  if (!(plan.eta_bar > 0.0)) {
    throw Error(ErrorCode::EmptyWindow, "eta_bar = " + fmt_num(plan.eta_bar) + " leaves no relaxation");
  }
  plan.lambda = req.lambda.value_or(plan.eta_bar);
  if (!(plan.lambda > 0.0 && plan.lambda * (2.0 * plan.eta_bar - plan.lambda) >= tol.margin_tol)) {
    throw Error(ErrorCode::RequestedOutOfWindow, "lambda = " + fmt_num(plan.lambda) +
                                                     " is outside (0, 2 eta_bar) = (0, " +
                                                     fmt_num(2.0 * plan.eta_bar) + ")");
  }
  return plan;
}

}  // namespace

double theta(double beta_P, double beta_D, double gamma, double tau, double sigma) {
  const double diff = beta_P / (2.0 * gamma) - beta_D / (2.0 * tau);
  return std::sqrt(std::max(0.0, diff * diff + beta_P * beta_D * sigma * sigma));
}

QuadWindow quadratic_window(double beta_P, double beta_D, double normL, double sigma_d) {
  const double L2 = normL * normL;
  QuadWindow w;
  w.delta = 1.0 + neg_part(beta_P * beta_D) * (L2 - sigma_d * sigma_d);
  const double disc = w.delta * w.delta - 4.0 * beta_P * beta_D * L2;
  const double root = w.delta + std::sqrt(std::max(0.0, disc));
  w.gamma_min = 2.0 * pos_part(-beta_P) / root;
  w.gamma_max = pos_part(-beta_D) > 0.0 ? root / (2.0 * pos_part(-beta_D) * L2) : kInf;
  // disc < 0 only when both betas are positive; then the window is (0, inf)
  w.exists = neg_part(beta_P) * neg_part(beta_D) < 1.0 / (4.0 * L2) && w.gamma_min < w.gamma_max;
  return w;
}

double tau_min(double beta_P, double beta_D, double delta, double normL, double gamma) {
  if (beta_D >= 0.0) return 0.0;
  const double L2 = normL * normL;
  const double den = gamma * (delta - beta_P * beta_D * L2) + beta_P;
  if (!(den > 0.0)) return kInf;
  return pos_part(-beta_D) * (gamma + beta_P) / den;
}

Interval tau_window(double beta_P, double beta_D, double beta_Dp, double delta, double normL,
                    double gamma) {
  Interval w{std::max(tau_min(beta_P, beta_D, delta, normL, gamma), pos_part(-beta_Dp)),
             1.0 / (gamma * normL * normL)};
  if (!(w.lo < w.hi)) {
    throw Error(ErrorCode::EmptyWindow, "tau window (" + fmt_num(w.lo) + ", " + fmt_num(w.hi) +
                                            "] is empty at gamma = " + fmt_num(gamma));
  }
  return w;
}

bool is_semidefinite(double gamma, double tau, const GroupedSvd& svd, double eq_tol) {
  const double g = gamma * tau * svd.norm_sq();
  if (g > 1.0 + eq_tol) {
    throw Error(ErrorCode::StepsizeOutOfRange,
                "gamma * tau * |L|^2 = " + fmt_num(g) + " exceeds 1");
  }
  return std::abs(g - 1.0) <= eq_tol;
}

EtaBounds eta_bound(const ObliqueParams& p, const GroupedSvd& svd, double gamma, double tau,
                    double eq_tol) {
  if (!(gamma > 0.0 && tau > 0.0)) {
    throw Error(ErrorCode::StepsizeOutOfRange, "stepsizes must be positive");
  }
  EtaBounds e;
  e.semidefinite = is_semidefinite(gamma, tau, svd, eq_tol);
  const double half = 1.0 + p.beta_P / (2.0 * gamma) + p.beta_D / (2.0 * tau);
  const double full = 1.0 + p.beta_P / gamma + p.beta_D / tau;
  const double prod = p.beta_P * p.beta_D;
  const auto th = [&](double s) { return theta(p.beta_P, p.beta_D, gamma, tau, s); };
  if (!e.semidefinite) {
    e.eta = half - th(prod < 0.0 ? svd.sigma_min() : svd.norm());
  } else if (svd.d() == 1) {
    e.eta = full;
  } else if (prod < 0.0) {
    e.eta = half - th(svd.sigma_min());
  } else if (std::min(p.beta_P, p.beta_D) >= 0.0) {
    e.eta = half - th(svd.sigma[1]);
  } else {
    e.eta = full;
  }
  e.eta_p = eta_prime(p.beta_Pp, p.beta_Dp, svd, gamma, tau);
  e.eta_bar = std::min(e.eta, e.eta_p);
  return e;
}

std::string existence_failure(const ObliqueParams& p, const GroupedSvd& svd) {
  const double L2 = svd.norm_sq();
  if (!(neg_part(p.beta_P) * neg_part(p.beta_D) < 1.0 / (4.0 * L2))) {
    return "(iii)a: [beta_P]_-[beta_D]_- < 1/(4|L|^2) fails";
  }
  if (!(neg_part(p.beta_Pp) * neg_part(p.beta_Dp) < 1.0 / L2)) {
    return "(iii)a: [beta_P']_-[beta_D']_- < 1/|L|^2 fails";
  }
  const QuadWindow q = quadratic_window(p.beta_P, p.beta_D, svd.norm(), svd.sigma_min());
  if (!q.exists) return "(iii)a: the quadratic stepsize window is empty";
  if (!(pos_part(-p.beta_Pp) < q.gamma_max)) return "(iii)b: [-beta_P']_+ < gamma_max fails";
  if (!(pos_part(-p.beta_Dp) * q.gamma_min * L2 < 1.0)) {
    return "(iii)b: [-beta_D']_+ < 1/(gamma_min |L|^2) fails";
  }
  return {};
}

StepsizePlan plan_from_oblique(const ObliqueParams& p, const GroupedSvd& svd, const PlanRequest& req,
                               const RuleTol& tol) {
  const std::string fail = existence_failure(p, svd);
  if (!fail.empty()) throw Error(ErrorCode::ExistenceViolated, fail);
  const double L2 = svd.norm_sq();
  const QuadWindow q = quadratic_window(p.beta_P, p.beta_D, svd.norm(), svd.sigma_min());
  StepsizePlan plan;
  plan.source = "oblique";
  plan.delta = q.delta;
  plan.gamma_min = q.gamma_min;
  plan.gamma_max = q.gamma_max;
  plan.gamma_window = Interval{std::max(q.gamma_min, pos_part(-p.beta_Pp)),
                              std::min(q.gamma_max, inv_or_inf(pos_part(-p.beta_Dp) * L2))};
  return finish_plan(
      plan, svd, req, tol,
      [&](double g) {
        return std::max(tau_min(p.beta_P, p.beta_D, q.delta, svd.norm(), g), pos_part(-p.beta_Dp));
      },
      [&](double g, double t) { return eta_bound(p, svd, g, t, tol.eq_tol); });
}

StepsizePlan plan_from_moduli(const ScalarModuli& mod, const GroupedSvd& svd, const PlanRequest& req,
                              const RuleTol& tol) {
  classify_moduli(mod, svd);
  const double L2 = svd.norm_sq();
  const double sd2 = svd.sigma_min() * svd.sigma_min();
  const double bP = parallel_sum_scalar(mod.rhoA, mod.rhoB);
  const double bD = parallel_sum_scalar(mod.muA, mod.muB);
  const bool rho_zero = mod.rhoA == 0.0 && mod.rhoB == 0.0;
  const bool mu_zero = mod.muA == 0.0 && mod.muB == 0.0;
  const double rp = mod.rhoA * mod.rhoB;
  const double mp = mod.muA * mod.muB;

  StepsizePlan plan;
  plan.source = "moduli";
  plan.delta = 1.0 + neg_part(bD * bP) * (L2 - sd2);
  const double root = plan.delta + std::sqrt(std::max(0.0, plan.delta * plan.delta - 4.0 * bD * bP * L2));
  plan.gamma_min = bP < 0.0 ? -2.0 * bP / root : 0.0;
  plan.gamma_max = bD < 0.0 ? -root / (2.0 * bD * L2) : kInf;

  Interval gw;
  if (rho_zero || rp >= 0.0) {
    gw.lo = 0.0;
  } else {
    gw.lo = mu_zero ? -bP : plan.gamma_min;
  }
  if (mu_zero || mp >= 0.0) {
    gw.hi = kInf;
  } else {
    gw.hi = rho_zero ? -1.0 / (bD * L2) : plan.gamma_max;
  }
  plan.gamma_window = gw;

  const double delta = plan.delta;
  const auto tau_lo_at = [&](double g) {
    if (mu_zero || mp >= 0.0) return 0.0;
    if (rho_zero) return -bD;
    const double den = g * (delta - bD * bP * L2) + bP;
    return den > 0.0 ? -bD * (g + bP) / den : kInf;
  };
  const auto eta_at = [&](double g, double t) {
    EtaBounds e;
    e.semidefinite = is_semidefinite(g, t, svd, tol.eq_tol);
    const double delta_gt = bP / (2.0 * g) + bD / (2.0 * t);
    const auto th = [&](double s) { return theta(bP, bD, g, t, s); };
    e.eta_p = eta_prime(mod.rhoA, mod.muB, svd, g, t);
    if (!e.semidefinite) {
      if (mp * rp >= 0.0) {
        e.eta = 1.0 + delta_gt - th(svd.norm());
        e.eta_bar = e.eta;
      } else {
        e.eta = 1.0 + delta_gt - th(svd.sigma_min());
        e.eta_bar = std::min(e.eta, e.eta_p);
      }
    } else if (std::max(mp, rp) <= 0.0) {
      e.eta = 1.0 + 2.0 * delta_gt;
      e.eta_bar = e.eta;
    } else if (svd.d() == 1) {
      e.eta = 1.0 + 2.0 * delta_gt;
      e.eta_bar = std::min(e.eta, e.eta_p);
    } else if (std::min(mp, rp) > 0.0) {
      e.eta = 1.0 + delta_gt - th(svd.sigma[1]);
      e.eta_bar = e.eta;
    } else {
      e.eta = 1.0 + delta_gt - th(svd.sigma_min());
      e.eta_bar = std::min(e.eta, e.eta_p);
    }
    return e;
  };
  return finish_plan(plan, svd, req, tol, tau_lo_at, eta_at);
}

StepsizePlan manual_plan(double gamma, double tau, double lambda, const GroupedSvd& svd, double eq_tol) {
  StepsizePlan plan;
  plan.source = "manual";
  plan.gamma = gamma;
  plan.tau = tau;
  plan.lambda = lambda;
  plan.semidefinite = std::abs(gamma * tau * svd.norm_sq() - 1.0) <= eq_tol;
  plan.gamma_window = Interval{0.0, kInf};
  plan.tau_window = Interval{0.0, 1.0 / (gamma * svd.norm_sq())};
  return plan;
}

}  // namespace nonmono
