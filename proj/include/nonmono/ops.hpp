#pragma once

#include "nonmono/numlin.hpp"

#include <functional>
#include <optional>
#include <variant>

namespace nonmono {

// x -> D x + q
struct AffineOp {
  MatrixXd D;
  VectorXd q;

  Eigen::Index dim() const { return D.rows(); }
  VectorXd apply(const VectorXd& x) const { return D * x + q; }
  VectorXd resolvent(double s, const VectorXd& w) const;
};

// Normal cone of the box {l <= x <= u}.
struct BoxNormalCone {
  VectorXd l;
  VectorXd u;

  Eigen::Index dim() const { return l.size(); }
  VectorXd project(const VectorXd& x) const;
  VectorXd resolvent(double /*s*/, const VectorXd& w) const { return project(w); }
  // v in N_C(x), up to tol on the box membership of x.
  bool in_graph(const VectorXd& x, const VectorXd& v, double tol = 1e-12) const;
};

using Operator = std::variant<AffineOp, BoxNormalCone>;

Eigen::Index op_dim(const Operator& op);
bool is_affine(const Operator& op);

struct ResolventOracle {
  Eigen::Index dim = 0;
  std::function<VectorXd(double, const VectorXd&)> eval;
  bool continuous = true;
  bool full_domain = true;

  VectorXd operator()(double s, const VectorXd& w) const { return eval(s, w); }
};

// J_{sA}
ResolventOracle resolvent_oracle(const Operator& op);
// J_{sA^{-1}}, through the Moreau identity J_{sA^{-1}}(y) = y - s J_{A/s}(y/s).
ResolventOracle inverse_resolvent_oracle(const Operator& op);

VectorXd resolvent_affine(const MatrixXd& D, const VectorXd& q, double s, const VectorXd& w);
VectorXd resolvent_box_inverse(const VectorXd& l, const VectorXd& u, double tau, const VectorXd& y);

struct PdProblem {
  MatrixXd L;
  GroupedSvd svd;
  Operator A;
  Operator B;
  std::optional<VectorXd> x_star;
  std::optional<VectorXd> y_star;

  Eigen::Index n() const { return L.cols(); }
  Eigen::Index m() const { return L.rows(); }
  ResolventOracle res_A() const { return resolvent_oracle(A); }
  ResolventOracle res_Binv() const { return inverse_resolvent_oracle(B); }
};

PdProblem make_problem(const MatrixXd& L, Operator A, Operator B, const LinTol& tol = {});

// Affine form of the primal-dual operator: z -> T z + c.
struct LinearPd {
  MatrixXd T;
  VectorXd c;
};

// Throws NotLinear unless A is affine and B is affine with invertible D.
LinearPd linear_pd(const PdProblem& p);
VectorXd apply_pd_operator(const PdProblem& p, const VectorXd& z);

}  // namespace nonmono
