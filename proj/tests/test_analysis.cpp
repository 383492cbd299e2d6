#include "nonmono/analysis.hpp"
#include "nonmono/errors.hpp"
#include "nonmono/problems.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace nonmono;

namespace {

template <class F>
void expect_error(ErrorCode code, F&& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << error_name(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

VectorXd randv(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

VectorXd stack(const VectorXd& a, const VectorXd& b) {
  VectorXd z(a.size() + b.size());
  z << a, b;
  return z;
}

PdProblem convex_toy() {
  const MatrixXd A = Eigen::Vector3d(1.0, 2.0, 0.5).asDiagonal();
  const MatrixXd B = Eigen::Vector3d(0.3, 1.0, 2.0).asDiagonal();
  return make_problem(MatrixXd::Identity(3, 3), AffineOp{A, VectorXd::Zero(3)}, AffineOp{B, VectorXd::Zero(3)});
}

double saddle_bound(double g) { return std::min(2 - 2 / (101 * g) - 200 * g / 101, 2 * (1 - g)); }

StepsizePlan plan_at(const Instance& inst, double gamma, std::optional<double> tau = std::nullopt,
                     std::optional<double> lambda = std::nullopt) {
  PlanRequest r;
  r.gamma = gamma;
  r.tau = tau;
  r.tau_max = !tau.has_value();
  r.lambda = lambda;
  return plan_for(inst, r);
}

}  // namespace

TEST(AlgoOperator, ZeroRelaxationIsIdentity) {
  const Instance inst = builtin("saddle");
  const MatrixXd H = algo_operator(inst.problem, 0.2, 1.25, 0.0);
  EXPECT_LE((H - MatrixXd::Identity(5, 5)).norm(), 0.0);
}

TEST(AlgoOperator, ReproducesCpaStep) {
  std::mt19937_64 rng(80);
  for (const char* name : {"saddle", "singvals"}) {
    const Instance inst = builtin(name);
    const PdProblem& p = inst.problem;
    for (double lam : {0.3, 1.0, 1.6}) {
      const double g = 0.3, t = 0.9 / (g * p.svd.norm_sq());
      const MatrixXd H = algo_operator(p, g, t, lam);
      const VectorXd x = randv(rng, p.n()), y = randv(rng, p.m());
      const CpaStep s = cpa_step(p, g, t, lam, x, y);
      EXPECT_LE((H * stack(x, y) - stack(s.x_next, s.y_next)).norm(), 1e-10);
    }
  }
}

TEST(TightLambda, SaddleClosedForm) {
  const Instance inst = builtin("saddle");
  for (double g : {0.05, 0.1, 0.5, 0.9}) {
    const double lam = tight_lambda(inst.problem, g, 1.0 / (4 * g), false);
    EXPECT_NEAR(lam, saddle_bound(g), 1e-4) << "gamma=" << g;
  }
}

TEST(TightLambda, SingularValuesProjected) {
  const Instance inst = builtin("singvals", {{"l", {0.5, 0.2}}});
  const double lam = tight_lambda(inst.problem, 1.0, 1.0, true);
  EXPECT_GE(lam, 2.5);
  EXPECT_LE(lam, 2.5 + 0.1);
}

TEST(TightLambda, MonotoneAtLeastTwo) {
  const PdProblem p = convex_toy();
  EXPECT_GE(tight_lambda(p, 1.0, 1.0, true), 2.0 - 1e-9);
  EXPECT_GE(tight_lambda(p, 0.5, 1.0, false), 2.0 - 1e-9);
}

TEST(TightLambda, NoStableLambda) {
  MatrixXd L(1, 1);
  L << 0.01;
  const PdProblem p = make_problem(L, AffineOp{-MatrixXd::Identity(1, 1), VectorXd::Zero(1)},
                                   AffineOp{MatrixXd::Identity(1, 1), VectorXd::Zero(1)});
  expect_error(ErrorCode::NoStableLambda, [&] { tight_lambda(p, 0.5, 1.0, false); });
}

TEST(TightLambda, RadiusCrossesOneAtBound) {
  const Instance inst = builtin("saddle");
  const double g = 0.3, t = 1.0 / (4 * g);
  const double lam = tight_lambda(inst.problem, g, t, true);
  EXPECT_LT(iteration_radius(inst.problem, g, t, lam * (1 - 1e-4), true), 1.0);
  EXPECT_GT(iteration_radius(inst.problem, g, t, lam * (1 + 1e-4), true), 1.0);
}

TEST(WeakMinty, MonotoneWithZeroWeight) {
  std::mt19937_64 rng(81);
  for (int k = 0; k < 20; ++k) {
    MatrixXd g(4, 4);
    for (int i = 0; i < 16; ++i) g.data()[i] = randv(rng, 1)(0);
    const MatrixXd T = g * g.transpose() + (g - g.transpose());
    EXPECT_GE(verify_weak_minty_linear(T, SymMatrix::zero(4), false), -1e-10);
  }
}

TEST(WeakMinty, SingularValuesGlobalHalfWeight) {
  for (double l2 : {0.3, 0.8, 1.0}) {
    const Instance inst = builtin("singvals", {{"l", {l2}}});
    const PdProblem& p = inst.problem;
    const MatrixXd T = pd_matrices(p).T_PD;
    EXPECT_GE(verify_weak_minty_linear(T, SymMatrix::identity(p.n() + p.m(), 0.5), false), -1e-8);
    // A - (A^T A + L^T L)/2 >= 0
    const MatrixXd A = std::get<AffineOp>(p.A).D;
    EXPECT_GE(min_eig_sym(SymMatrix(A - 0.5 * (A.transpose() * A + p.L.transpose() * p.L))), -1e-12);
  }
}

TEST(WeakMinty, SaddleRestrictedToRangeOfPreconditioner) {
  const Instance inst = builtin("saddle");
  const PdProblem& p = inst.problem;
  const MatrixXd T = pd_matrices(p).T_PD;
  const SymMatrix V = oblique_weight(*inst.oblique, p.svd);
  for (double g : {0.05, 0.2, 0.6}) {
    const Preconditioner pc = assemble_preconditioner(p.L, p.svd, g, 1.0 / (4 * g));
    EXPECT_GE(verify_weak_minty_linear(T, V, true, pc.U), -1e-8) << "gamma=" << g;
  }
  // the unrestricted form fails for the same weight
  EXPECT_LT(verify_weak_minty_linear(T, V, false), -0.1);
}

TEST(WeakMinty, RestrictionNeedsInvertibleOperator) {
  const MatrixXd T = Eigen::Vector2d(1.0, 0.0).asDiagonal();
  expect_error(ErrorCode::SingularOperator,
               [&] { verify_weak_minty_linear(T, SymMatrix::zero(2), true, MatrixXd::Identity(2, 2)); });
}

TEST(TraceProbe, SaddleAndTrivialCases) {
  const Instance inst = builtin("saddle");
  const PdMatrices pm = pd_matrices(inst.problem);
  ASSERT_TRUE(pm.T_D.has_value());
  const TraceProbe tp = trace_negativity_probe(pm.T_P, *pm.T_D, pm.T_PD);
  EXPECT_NEAR(tp.trace_P, -2.0, 1e-12);
  EXPECT_NEAR(tp.trace_PD, -12.0, 1e-12);
  EXPECT_LT(tp.trace_D, 0.0);

  const TraceProbe id = trace_negativity_probe(MatrixXd::Identity(3, 3), MatrixXd::Identity(2, 2),
                                               MatrixXd::Identity(5, 5));
  EXPECT_EQ(id.trace_P, 3.0);
  EXPECT_EQ(id.trace_PD, 5.0);
  std::mt19937_64 rng(82);
  MatrixXd g(4, 4);
  for (int i = 0; i < 16; ++i) g.data()[i] = randv(rng, 1)(0);
  const MatrixXd skew = g - g.transpose();
  EXPECT_NEAR(trace_negativity_probe(skew, skew, skew).trace_PD, 0.0, 1e-14);
}

TEST(Dominance, RuleBoundNeverExceedsSpectral) {
  for (const char* name : {"saddle", "singvals"}) {
    SCOPED_TRACE(name);
    const Instance inst = builtin(name);
    const PdProblem& p = inst.problem;
    const StepsizePlan ref = plan_for(inst);
    const double lo = ref.gamma_window.lo;
    const double hi = std::isfinite(ref.gamma_window.hi) ? ref.gamma_window.hi : 4.0 / p.svd.norm();
    for (int i = 1; i < 10; ++i) {
      const double g = lo + (hi - lo) * i / 10.0;
      for (double frac : {0.5, 0.9, 1.0}) {
        StepsizePlan pl;
        try {
          pl = frac == 1.0 ? plan_at(inst, g) : plan_at(inst, g, frac / (g * p.svd.norm_sq()));
        } catch (const Error&) {
          continue;
        }
        const double spec = tight_lambda(p, pl.gamma, pl.tau, true);
        EXPECT_LE(2 * pl.eta_bar, spec + 1e-6) << "gamma=" << g << " frac=" << frac;
      }
    }
  }
}

TEST(Exactness, SaddleRuleMatchesSpectral) {
  const Instance inst = builtin("saddle");
  for (double g : {0.05, 0.1, 0.3, 0.5, 0.9}) {
    const StepsizePlan pl = plan_at(inst, g);
    const double spec = tight_lambda(inst.problem, pl.gamma, pl.tau, true);
    EXPECT_NEAR(2 * pl.eta_bar, spec, 1e-4) << "gamma=" << g;
    EXPECT_NEAR(spec, saddle_bound(g), 1e-4);
  }
}

TEST(Consistency, SpectralRadiusPredictsRunOutcome) {
  std::mt19937_64 rng(83);
  int converged = 0, diverged = 0;
  for (const char* name : {"saddle", "singvals"}) {
    const Instance inst = builtin(name);
    const PdProblem& p = inst.problem;
    for (double g : {0.2, 0.5}) {
      const double t = 1.0 / (g * p.svd.norm_sq());
      for (double lam = 0.25; lam < 4.0; lam += 0.25) {
        const double rho = iteration_radius(p, g, t, lam, true);
        if (std::abs(rho - 1.0) < 0.01) continue;
        RunOptions opt;
        opt.max_iter = 100000;
        const IterateTrace tr = run(p, manual_plan(g, t, lam, p.svd), randv(rng, p.n()), randv(rng, p.m()), opt);
        if (rho < 1.0) {
          EXPECT_EQ(tr.status, RunStatus::Converged) << name << " g=" << g << " lam=" << lam << " rho=" << rho;
          ++converged;
        } else {
          EXPECT_EQ(tr.status, RunStatus::Diverged) << name << " g=" << g << " lam=" << lam << " rho=" << rho;
          ++diverged;
        }
      }
    }
  }
  EXPECT_GT(converged, 5);
  EXPECT_GT(diverged, 5);
}

TEST(Scan, ParallelMatchesSerial) {
  const Instance inst = builtin("saddle");
  std::vector<std::pair<double, double>> steps;
  for (int i = 1; i <= 12; ++i) {
    const double g = 0.08 * i;
    steps.emplace_back(g, 1.0 / (4 * g));
    steps.emplace_back(g, 0.5 / (4 * g));
  }
  const auto a = scan_tight_lambda(inst.problem, steps, true);
  const auto b = scan_tight_lambda_serial(inst.problem, steps, true);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].gamma, b[i].gamma);
    EXPECT_EQ(a[i].tau, b[i].tau);
    if (std::isnan(b[i].lambda_spectral)) {
      EXPECT_TRUE(std::isnan(a[i].lambda_spectral));
    } else {
      EXPECT_EQ(a[i].lambda_spectral, b[i].lambda_spectral);
    }
  }
}
