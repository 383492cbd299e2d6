#include "nonmono/analysis.hpp"
#include "nonmono/errors.hpp"
#include "nonmono/problems.hpp"
#include "nonmono/rules.hpp"

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

MatrixXd diag(std::initializer_list<double> v) {
  VectorXd d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) d(i++) = x;
  return d.asDiagonal();
}

MatrixXd randn(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> nd(0.0, 1.0);
  MatrixXd a(r, c);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
  return a;
}

GroupedSvd qp_indef_svd() {
  MatrixXd L(2, 3);
  L << 1, 0.25, 0, 0, 1, 0;
  return grouped_svd(L);
}

GroupedSvd qp_rankdef_svd() {
  MatrixXd L(3, 3);
  L << 1, 0, 0, 1, 1, 0, 1, -1, 0;
  return grouped_svd(L);
}

PlanRequest at(double g, std::optional<double> t = std::nullopt, std::optional<double> l = std::nullopt) {
  PlanRequest r;
  r.gamma = g;
  r.tau = t;
  r.lambda = l;
  return r;
}

}  // namespace

TEST(QuadraticWindow, Examples) {
  const QuadWindow mono = quadratic_window(0, 0, 1.0, 1.0);
  EXPECT_TRUE(mono.exists);
  EXPECT_EQ(mono.gamma_min, 0.0);
  EXPECT_EQ(mono.gamma_max, kInf);

  const QuadWindow sp = quadratic_window(-1.0 / 20, -3.0 / 7, 2.0, 2.0);
  EXPECT_TRUE(sp.exists);
  EXPECT_NEAR(sp.gamma_min, 0.055229, 1e-6);
  EXPECT_NEAR(sp.gamma_max, 0.528104, 1e-6);

  const QuadWindow qp = quadratic_window(0, -2, std::sqrt(3.0), std::sqrt(2.0));
  EXPECT_TRUE(qp.exists);
  EXPECT_EQ(qp.gamma_min, 0.0);
  EXPECT_NEAR(qp.gamma_max, 1.0 / 6, 1e-14);

  EXPECT_FALSE(quadratic_window(-1, -1, 1.0, 1.0).exists);
}

TEST(QuadraticWindow, EndpointsAreRootsOfTheQuadratic) {
  std::mt19937_64 rng(60);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double bp = u(rng), bd = u(rng), nl = 0.5 + std::abs(u(rng)) * 2;
    const double sd = nl * (0.2 + 0.8 * std::abs(u(rng)));
    const QuadWindow w = quadratic_window(bp, bd, nl, sd);
    if (!w.exists) continue;
    auto q = [&](double g) { return bd * nl * nl * g * g + w.delta * g + bp; };
    if (bp < 0) EXPECT_NEAR(q(w.gamma_min), 0.0, 1e-10);
    if (bd < 0) EXPECT_NEAR(q(w.gamma_max), 0.0, 1e-10 * std::max(1.0, w.gamma_max * w.gamma_max));
    if (std::isfinite(w.gamma_max)) EXPECT_GT(q(0.5 * (w.gamma_min + w.gamma_max)), 0.0);
  }
}

TEST(TauWindow, Examples) {
  const Interval mono = tau_window(0, 0, 0, 1.0, 2.0, 0.5);
  EXPECT_EQ(mono.lo, 0.0);
  EXPECT_NEAR(mono.hi, 1.0 / (0.5 * 4.0), 1e-15);

  const GroupedSvd si = qp_indef_svd();
  const Interval ti = tau_window(0, -3, kInf, 1.0, std::sqrt(si.norm_sq()), 0.2);
  EXPECT_NEAR(ti.lo, 3.0, 1e-12);
  EXPECT_NEAR(ti.hi * 0.2, 0.779, 5e-4);

  const Interval tr = tau_window(0, -2, 0, 1.0, std::sqrt(3.0), 0.1);
  EXPECT_NEAR(tr.lo, 2.0, 1e-12);
  EXPECT_NEAR(tr.hi, 1.0 / 0.3, 1e-12);

  expect_error(ErrorCode::EmptyWindow, [] { tau_window(0, -2, 0, 1.0, std::sqrt(3.0), 0.2); });
}

TEST(EtaBound, Monotone) {
  const EtaBounds e = eta_bound(ObliqueParams{0, 0, 0, 0}, grouped_svd(MatrixXd::Identity(2, 2)), 1.0, 1.0);
  EXPECT_EQ(e.eta_bar, 1.0);
  EXPECT_TRUE(e.semidefinite);
}

TEST(EtaBound, SingularValueExample) {
  for (double l2 : {0.5, 0.9}) {
    const double l3 = 0.2;
    const GroupedSvd svd = grouped_svd(diag({1.0, l2, l3}));
    const EtaBounds e = eta_bound(ObliqueParams{0.5, kInf, 0.5, kInf}, svd, 1.0, 1.0);
    EXPECT_NEAR(2 * e.eta_bar, 3.0 - l2, 1e-12);
    EXPECT_TRUE(e.semidefinite);
  }
}

TEST(EtaBound, SaddleSemidefinite) {
  MatrixXd L = MatrixXd::Zero(3, 2);
  L(0, 0) = 2;
  L(1, 1) = 2;
  const GroupedSvd svd = grouped_svd(L);
  const ObliqueParams p = scalar_oblique_params(ScalarModuli{1, -1.0 / 25, -0.3, 0.2}, svd);
  for (double g : {0.1, 0.2, 0.4}) {
    const EtaBounds e = eta_bound(p, svd, g, 1.0 / (4 * g));
    EXPECT_NEAR(2 * e.eta_bar, 2 - 1 / (10 * g) - 24 * g / 7, 1e-12);
  }
  expect_error(ErrorCode::StepsizeOutOfRange, [&] { eta_bound(p, svd, 0.2, 1.01 / 0.8); });
}

TEST(PlanFromOblique, MonotoneDefaults) {
  const StepsizePlan pl = plan_from_oblique(ObliqueParams{}, grouped_svd(MatrixXd::Identity(2, 2)));
  EXPECT_DOUBLE_EQ(pl.gamma, 1.0);
  EXPECT_DOUBLE_EQ(pl.tau, 1.0);
  EXPECT_DOUBLE_EQ(pl.lambda, 1.0);
  EXPECT_EQ(pl.source, "oblique");
}

TEST(PlanFromOblique, QpIndefRelaxationWindow) {
  const ObliqueParams p{0, 0.5, -3, kInf};
  const StepsizePlan pl = plan_from_oblique(p, qp_indef_svd(), at(0.2, 3.5));
  EXPECT_NEAR(2 * pl.eta_bar, 2 - 6 / 3.5, 1e-12);
  EXPECT_FALSE(pl.semidefinite);
  expect_error(ErrorCode::RequestedOutOfWindow, [&] { plan_from_oblique(p, qp_indef_svd(), at(0.2, 2.9)); });
  expect_error(ErrorCode::RequestedOutOfWindow,
               [&] { plan_from_oblique(p, qp_indef_svd(), at(0.2, 3.5, 2 * pl.eta_bar)); });
  expect_error(ErrorCode::RequestedOutOfWindow, [&] { plan_from_oblique(p, qp_indef_svd(), at(0.3)); });
}

TEST(PlanFromOblique, SaddleObliqueWindow) {
  const Instance inst = builtin("saddle");
  ASSERT_TRUE(inst.oblique.has_value());
  const StepsizePlan pl = plan_from_oblique(*inst.oblique, inst.problem.svd);
  EXPECT_NEAR(pl.gamma_window.lo, 0.01, 1e-12);
  EXPECT_NEAR(pl.gamma_window.hi, 1.0, 1e-12);
  EXPECT_GT(pl.eta_bar, 0.0);
}

TEST(PlanFromOblique, ExistenceViolated) {
  MatrixXd L(1, 2);
  L << 1, 0;
  expect_error(ErrorCode::ExistenceViolated,
               [&] { plan_from_oblique(ObliqueParams{0, -5, -1, kInf}, grouped_svd(L)); });
  expect_error(ErrorCode::ExistenceViolated,
               [&] { plan_from_oblique(ObliqueParams{-1, kInf, -1, kInf}, grouped_svd(MatrixXd::Identity(2, 2))); });
}

TEST(PlanFromModuli, CaseOneIsClassical) {
  const GroupedSvd svd = grouped_svd(diag({2.0, 1.0}));
  const StepsizePlan pl = plan_from_moduli(ScalarModuli{}, svd, at(0.3));
  EXPECT_NEAR(pl.tau, 1.0 / (0.3 * 4), 1e-15);
  EXPECT_EQ(pl.eta_bar, 1.0);
  EXPECT_EQ(pl.source, "moduli");
}

TEST(PlanFromModuli, QpRankdef) {
  const GroupedSvd svd = qp_rankdef_svd();
  const ScalarModuli mod{-1, 0, 2, 0};
  const StepsizePlan pl = plan_from_moduli(mod, svd, at(0.1, 3.0));
  EXPECT_EQ(pl.gamma_window.lo, 0.0);
  EXPECT_NEAR(pl.gamma_window.hi, 1.0 / 6, 1e-14);
  EXPECT_NEAR(pl.tau_window.lo, 2.0, 1e-12);
  EXPECT_NEAR(pl.tau_window.hi, 1.0 / 0.3, 1e-12);
  EXPECT_NEAR(2 * pl.eta_bar, 2 - 4.0 / 3, 1e-12);
}

TEST(PlanFromModuli, SingularValueExample) {
  const GroupedSvd svd = grouped_svd(diag({1.0, 0.5, 0.2}));
  const StepsizePlan pl = plan_from_moduli(ScalarModuli{0.5, 0.5, 0.5, 0.5}, svd, at(1.0, 1.0));
  EXPECT_NEAR(2 * pl.eta_bar, 2.5 - 0.25, 1e-12);
  EXPECT_TRUE(pl.semidefinite);
}

TEST(PlanFromModuli, CaseViolated) {
  expect_error(ErrorCode::CaseViolated,
               [] { plan_from_moduli(ScalarModuli{-1, 0, 0.5, 0}, grouped_svd(MatrixXd::Identity(2, 2))); });
}

TEST(Consistency, ModuliAndObliquePlansAgree) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int compared = 0;
  for (int k = 0; k < 2000 && compared < 200; ++k) {
    const int m = 2 + k % 3, n = 2 + (k / 3) % 3;
    MatrixXd L = randn(rng, m, n);
    if (k % 4 == 0) L.col(0) = L.col(1);
    const GroupedSvd svd = grouped_svd(L);
    const ScalarModuli mod{u(rng), u(rng), u(rng), u(rng)};
    StepsizePlan a, b;
    try {
      a = plan_from_moduli(mod, svd);
    } catch (const Error&) {
      continue;
    }
    const ObliqueParams p = scalar_oblique_params(mod, svd);
    b = plan_from_oblique(p, svd, at(a.gamma, a.tau));
    auto close = [](double x, double y) {
      if (std::isinf(x) || std::isinf(y)) return x == y;
      return std::abs(x - y) <= 1e-10 * std::max(1.0, std::abs(x));
    };
    EXPECT_TRUE(close(a.gamma_window.lo, b.gamma_window.lo)) << a.gamma_window.lo << " " << b.gamma_window.lo;
    EXPECT_TRUE(close(a.gamma_window.hi, b.gamma_window.hi)) << a.gamma_window.hi << " " << b.gamma_window.hi;
    EXPECT_TRUE(close(a.tau_window.lo, b.tau_window.lo));
    EXPECT_TRUE(close(a.tau_window.hi, b.tau_window.hi));
    EXPECT_TRUE(close(a.eta_bar, b.eta_bar)) << a.eta_bar << " " << b.eta_bar;
    ++compared;
  }
  EXPECT_EQ(compared, 200);
}

TEST(Reductions, Monotone) {
  std::mt19937_64 rng(62);
  for (int k = 0; k < 20; ++k) {
    const GroupedSvd svd = grouped_svd(randn(rng, 3, 4));
    const StepsizePlan pl = plan_from_oblique(ObliqueParams{}, svd, at(0.7));
    EXPECT_EQ(pl.gamma_window.lo, 0.0);
    EXPECT_EQ(pl.gamma_window.hi, kInf);
    EXPECT_EQ(pl.tau_window.lo, 0.0);
    EXPECT_NEAR(pl.tau_window.hi, 1.0 / (0.7 * svd.norm_sq()), 1e-15);
    EXPECT_EQ(2 * pl.eta_bar, 2.0);
  }
}

TEST(Reductions, DouglasRachford) {
  std::mt19937_64 rng(63);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const GroupedSvd svd = grouped_svd(MatrixXd::Identity(3, 3));
  int done = 0;
  for (int k = 0; k < 400; ++k) {
    const double bp = u(rng), bd = u(rng);
    if (bp * bd >= 0.25 || (bp < 0 && bd < 0 && bp * bd >= 0.25)) continue;
    const QuadWindow w = quadratic_window(bp, bd, 1.0, 1.0);
    if (!w.exists) continue;
    const double s = 1 + std::sqrt(1 - 4 * bp * bd);
    const double lo = bp < 0 ? 2 * -bp / s : 0.0;
    const double hi = bd < 0 ? s / (2 * -bd) : kInf;
    EXPECT_NEAR(w.gamma_min, lo, 1e-12);
    if (std::isinf(hi)) {
      EXPECT_EQ(w.gamma_max, kInf);
    } else {
      EXPECT_NEAR(w.gamma_max, hi, 1e-12 * hi);
    }
    if (hi > lo) {
      const double g = std::isinf(hi) ? 2 * lo + 1 : 0.5 * (lo + hi);
      const StepsizePlan pl = plan_from_oblique(ObliqueParams{bp, kInf, bd, kInf}, svd, at(g, 1.0 / g));
      EXPECT_GT(pl.eta_bar, 0.0);
      EXPECT_TRUE(pl.semidefinite);
      ++done;
    }
  }
  EXPECT_GT(done, 50);
}

TEST(Boundary, BuiltinWindowsAreSharp) {
  for (const char* name : {"saddle", "qp-indef", "qp-rankdef"}) {
    const Instance inst = builtin(name);
    const StepsizePlan ref = plan_for(inst);
    const double lo = ref.gamma_window.lo, hi = ref.gamma_window.hi;
    SCOPED_TRACE(name);
    RuleTol loose;
    loose.margin_tol = 0.0;
    auto eta_bar_at = [&](double g) {
      PlanRequest r;
      r.gamma = g;
      r.tau_max = true;
      return plan_for(inst, r, loose).eta_bar;
    };
    if (lo > 0) {
      EXPECT_THROW(eta_bar_at(lo * (1 - 1e-6)), Error);
      EXPECT_GT(eta_bar_at(lo * (1 + 1e-3)), 0.0);
    }
    ASSERT_TRUE(std::isfinite(hi));
    EXPECT_THROW(eta_bar_at(hi * (1 + 1e-6)), Error);
    EXPECT_GT(eta_bar_at(hi * (1 - 1e-3)), 0.0);
    EXPECT_GT(eta_bar_at(std::sqrt(std::max(lo, 1e-3 * hi) * hi)), 0.0);
  }
}

TEST(GammaSet, FormulaMatchesEigenOracle) {
  std::mt19937_64 rng(64);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  int agree = 0, pos = 0, neg = 0;
  for (int k = 0; k < 40; ++k) {
    const int m = 2 + k % 3, n = 2 + (k / 3) % 3;
    MatrixXd L = randn(rng, m, n);
    if (k % 2 == 0) L.col(0) = L.col(1);
    const GroupedSvd svd = grouped_svd(L);
    const ObliqueParams p{u(rng), std::abs(u(rng)), u(rng), std::abs(u(rng))};
    for (int i = 1; i <= 6; ++i) {
      for (int j = 1; j <= 6; ++j) {
        const double g = 0.15 * i;
        double t = (0.17 * j) / (g * svd.norm_sq());
        if (j == 6) t = 1.0 / (g * svd.norm_sq());
        const EtaBounds e = eta_bound(p, svd, g, t);
        const double oracle = eta_bar_eigen(p, svd, L, g, t);
        if (std::abs(e.eta_bar) > 1e-7) {
          const bool same = (e.eta_bar > 0) == (oracle > 0);
          EXPECT_TRUE(same) << "g=" << g << " t=" << t << " formula=" << e.eta_bar << " eig=" << oracle;
          agree += same;
          (e.eta_bar > 0 ? pos : neg) += 1;
        }
        EXPECT_NEAR(e.eta_bar, oracle, 1e-8 * std::max(1.0, std::abs(oracle)))
            << "g=" << g << " t=" << t << " rank=" << svd.rank();
      }
    }
  }
  EXPECT_GT(pos, 50);
  EXPECT_GT(neg, 50);
}
