#include "nonmono/analysis.hpp"
#include "nonmono/errors.hpp"
#include "nonmono/problems.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

using namespace nonmono;
using nlohmann::json;

namespace {

const char* kNames[] = {"saddle", "singvals", "qp-indef", "qp-rankdef"};

void expect_same_operator(const Operator& a, const Operator& b) {
  ASSERT_EQ(a.index(), b.index());
  if (const auto* x = std::get_if<AffineOp>(&a)) {
    const auto& y = std::get<AffineOp>(b);
    EXPECT_TRUE(x->D == y.D);
    EXPECT_TRUE(x->q == y.q);
  } else {
    const auto& x2 = std::get<BoxNormalCone>(a);
    const auto& y2 = std::get<BoxNormalCone>(b);
    EXPECT_TRUE(x2.l == y2.l);
    EXPECT_TRUE(x2.u == y2.u);
  }
}

}  // namespace

TEST(Builtins, ReferenceData) {
  const Instance sp = builtin("saddle");
  EXPECT_NEAR(pd_matrices(sp.problem).T_PD.trace(), -12.0, 1e-12);
  EXPECT_EQ(sp.problem.n(), 2);
  EXPECT_EQ(sp.problem.m(), 3);

  const Instance qi = builtin("qp-indef");
  EXPECT_EQ(*qi.problem.x_star, Eigen::Vector3d(1, 4, 0.5));
  EXPECT_LE((*qi.problem.y_star - Eigen::Vector2d(0, 3)).norm(), 1e-12);

  const Instance qr = builtin("qp-rankdef");
  EXPECT_EQ(*qr.problem.x_star, Eigen::Vector3d(1, 0, 0));
  EXPECT_LE((*qr.problem.y_star - Eigen::Vector3d(1, 0.5, 1.5)).norm(), 1e-12);
  EXPECT_FALSE(qr.certs_verified);

  const Instance sv = builtin("singvals", {{"n", {4}}});
  EXPECT_EQ(sv.problem.n(), 4);
}

TEST(Builtins, ZeroConditions) {
  for (const char* name : kNames) {
    SCOPED_TRACE(name);
    const Instance inst = builtin(name);
    const PdProblem& p = inst.problem;
    ASSERT_TRUE(p.x_star && p.y_star);
    const auto& a = std::get<AffineOp>(p.A);
    const VectorXd ax = a.apply(*p.x_star);
    EXPECT_LE((ax + p.L.transpose() * *p.y_star).norm(), 1e-9);
    if (const auto* box = std::get_if<BoxNormalCone>(&p.B)) {
      EXPECT_TRUE(box->in_graph(p.L * *p.x_star, *p.y_star, 0.0));
    } else {
      const VectorXd r = std::get<AffineOp>(p.B).apply(p.L * *p.x_star) - *p.y_star;
      EXPECT_LE(r.norm(), 1e-9);
    }
  }
}

TEST(Builtins, ShippedCertificatesValidate) {
  for (const char* name : {"saddle", "singvals", "qp-indef"}) {
    SCOPED_TRACE(name);
    const CertReport r = validate_certificates(builtin(name));
    EXPECT_TRUE(r.ok) << r.detail;
  }
  const CertReport bad = validate_certificates(builtin("qp-rankdef"));
  EXPECT_FALSE(bad.ok);
  EXPECT_GE(bad.slack_A, -1e-9);
  EXPECT_LT(bad.slack_B, 0.0);
}

TEST(Builtins, PlanSourcePriority) {
  EXPECT_EQ(plan_for(builtin("saddle")).source, "oblique");
  EXPECT_EQ(plan_for(builtin("qp-rankdef")).source, "moduli");
  const Instance qi = builtin("qp-indef");
  EXPECT_EQ(plan_for(qi).source, "oblique");
  const ObliqueParams p = oblique_for(qi);
  EXPECT_NEAR(p.beta_P, 0.0, 1e-12);
  EXPECT_NEAR(p.beta_Pp, 0.5, 1e-12);
  EXPECT_NEAR(p.beta_D, -3.0, 1e-12);
  EXPECT_EQ(p.beta_Dp, kInf);
}

TEST(Builtins, Errors) {
  try {
    builtin("nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownName);
  }
  EXPECT_THROW(builtin("saddle", {{"z", {1}}}), SchemaError);
  EXPECT_THROW(builtin("singvals", {{"l", {1.5}}}), SchemaError);
  EXPECT_THROW(builtin_from_spec("saddle:a"), SchemaError);
  EXPECT_THROW(builtin_from_spec("saddle:a=x"), SchemaError);
}

TEST(Spec, ParsesParameters) {
  const Instance a = builtin_from_spec("singvals:l=0.5/0.2");
  EXPECT_EQ(a.problem.n(), 3);
  EXPECT_DOUBLE_EQ(a.problem.L(1, 1), 0.5);
  const Instance b = load_problem("builtin:saddle:a=5:l=1");
  EXPECT_DOUBLE_EQ(b.problem.L(0, 0), 1.0);
  EXPECT_FALSE(b.moduli.has_value());
  EXPECT_TRUE(b.oblique.has_value());
}

TEST(Json, RoundTripIsBitIdentical) {
  for (const char* name : kNames) {
    SCOPED_TRACE(name);
    const Instance inst = builtin(name);
    const json j = problem_to_json(inst);
    const Instance back = problem_from_json(json::parse(j.dump()));
    EXPECT_TRUE(back.problem.L == inst.problem.L);
    expect_same_operator(back.problem.A, inst.problem.A);
    expect_same_operator(back.problem.B, inst.problem.B);
    EXPECT_TRUE(*back.problem.x_star == *inst.problem.x_star);
    EXPECT_TRUE(*back.problem.y_star == *inst.problem.y_star);
    EXPECT_EQ(back.certs_verified, inst.certs_verified);
    EXPECT_EQ(problem_to_json(back), j);
    const StepsizePlan p1 = plan_for(inst), p2 = plan_for(back);
    EXPECT_EQ(p1.gamma, p2.gamma);
    EXPECT_EQ(p1.eta_bar, p2.eta_bar);
  }
}

TEST(Json, InfinityAsString) {
  EXPECT_EQ(number_to_json(kInf), "inf");
  EXPECT_EQ(number_to_json(-kInf), "-inf");
  EXPECT_EQ(number_from_json(json("inf"), "x"), kInf);
  EXPECT_EQ(number_from_json(json(0.25), "x"), 0.25);
  EXPECT_THROW(number_from_json(json("abc"), "x"), SchemaError);
}

TEST(Json, SchemaDiagnostics) {
  EXPECT_THROW(problem_from_json(json::parse(R"({"A": {}, "B": {}})")), SchemaError);
  EXPECT_THROW(problem_from_json(json::parse(
                   R"({"L": [[1,0]], "A": {"type":"affine","D":[[1]],"q":[0]}, "B": {"type":"affine","D":[[1]],"q":[0]}})")),
               SchemaError);
  EXPECT_THROW(problem_from_json(json::parse(
                   R"({"L": [[1]], "A": {"type":"weird"}, "B": {"type":"affine","D":[[1]],"q":[0]}})")),
               SchemaError);
  EXPECT_THROW(problem_from_json(json::parse(R"({"L": [[1, 2], [3]], "A": {}, "B": {}})")), SchemaError);
  const Instance ok = problem_from_json(json::parse(
      R"({"L": [[1]], "A": {"type":"affine","D":[[2]],"q":[1]}, "B": {"type":"box_normal_cone","l":[0],"u":[1]},
          "certificates": {"scalar": {"muA": 2, "rhoA": 0, "muB": 0, "rhoB": 0}}})"));
  ASSERT_TRUE(ok.moduli.has_value());
  EXPECT_EQ(ok.moduli->muA, 2.0);
}

TEST(Json, LoadFromFile) {
  const std::string path = testing::TempDir() + "nonmono_problem.json";
  {
    std::ofstream out(path);
    out << problem_to_json(builtin("qp-indef")).dump(2);
  }
  const Instance inst = load_problem(path);
  EXPECT_EQ(inst.problem.m(), 2);
  std::remove(path.c_str());
  EXPECT_THROW(load_problem(path), SchemaError);
}
