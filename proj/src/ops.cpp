#include "nonmono/ops.hpp"

#include "nonmono/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nonmono {

VectorXd resolvent_affine(const MatrixXd& D, const VectorXd& q, double s, const VectorXd& w) {
  if (D.rows() != D.cols() || D.rows() != w.size() || q.size() != w.size()) {
    throw Error(ErrorCode::DimensionMismatch, "affine resolvent shapes");
  }
  const MatrixXd K = MatrixXd::Identity(D.rows(), D.cols()) + s * D;
  Eigen::PartialPivLU<MatrixXd> lu(K);
  if (!(lu.rcond() > 1e-12)) {
    throw Error(ErrorCode::SingularResolvent,
                "I + sD is numerically singular at s = " + std::to_string(s));
  }
  return lu.solve(w - s * q);
}

VectorXd resolvent_box_inverse(const VectorXd& l, const VectorXd& u, double tau, const VectorXd& y) {
  if (l.size() != u.size() || l.size() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "box resolvent shapes");
  }
  VectorXd out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double t = y(i) / tau;
    if (t < l(i)) {
      out(i) = y(i) - tau * l(i);
    } else if (t > u(i)) {
      out(i) = y(i) - tau * u(i);
    } else {
      out(i) = 0.0;  // keeps the complementarity pattern exact
    }
  }
  return out;
}

VectorXd AffineOp::resolvent(double s, const VectorXd& w) const {
  return resolvent_affine(D, q, s, w);
}

VectorXd BoxNormalCone::project(const VectorXd& x) const { return x.cwiseMax(l).cwiseMin(u); }

bool BoxNormalCone::in_graph(const VectorXd& x, const VectorXd& v, double tol) const {
  if (x.size() != l.size() || v.size() != l.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double w = tol * std::max(1.0, u(i) - l(i));
    if (x(i) < l(i) - w || x(i) > u(i) + w) return false;
    const bool at_lower = std::abs(x(i) - l(i)) <= w;
    const bool at_upper = std::abs(x(i) - u(i)) <= w;
    if (v(i) > 0.0 && !at_upper) return false;
    if (v(i) < 0.0 && !at_lower) return false;
  }
  return true;
}

Eigen::Index op_dim(const Operator& op) {
  return std::visit([](const auto& o) { return o.dim(); }, op);
}

bool is_affine(const Operator& op) { return std::holds_alternative<AffineOp>(op); }

ResolventOracle resolvent_oracle(const Operator& op) {
  ResolventOracle r;
  r.dim = op_dim(op);
  if (const auto* a = std::get_if<AffineOp>(&op)) {
    r.eval = [a = *a](double s, const VectorXd& w) { return a.resolvent(s, w); };
  } else {
    r.eval = [b = std::get<BoxNormalCone>(op)](double, const VectorXd& w) { return b.project(w); };
  }
  return r;
}

ResolventOracle inverse_resolvent_oracle(const Operator& op) {
  ResolventOracle r;
  r.dim = op_dim(op);
  if (const auto* a = std::get_if<AffineOp>(&op)) {
    r.eval = [a = *a](double s, const VectorXd& y) {
      return VectorXd(y - s * a.resolvent(1.0 / s, y / s));
    };
  } else {
    const auto& b = std::get<BoxNormalCone>(op);
    r.eval = [l = b.l, u = b.u](double s, const VectorXd& y) {
      return resolvent_box_inverse(l, u, s, y);
    };
  }
  return r;
}

PdProblem make_problem(const MatrixXd& L, Operator A, Operator B, const LinTol& tol) {
  if (op_dim(A) != L.cols() || op_dim(B) != L.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "operator dimensions do not match L");
  }
  PdProblem p{L, grouped_svd(L, tol.group_tol, tol.rank_tol), std::move(A), std::move(B), {}, {}};
  return p;
}

LinearPd linear_pd(const PdProblem& p) {
  const auto* a = std::get_if<AffineOp>(&p.A);
  const auto* b = std::get_if<AffineOp>(&p.B);
  if (a == nullptr || b == nullptr) {
    throw Error(ErrorCode::NotLinear, "primal-dual operator needs affine A and B");
  }
  Eigen::FullPivLU<MatrixXd> lu(b->D);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::NotLinear, "B is affine but not invertible, so B^{-1} has no matrix form");
  }
  const MatrixXd Binv = lu.inverse();
  const Eigen::Index n = p.n();
  const Eigen::Index m = p.m();
  LinearPd out;
  out.T.resize(n + m, n + m);
  out.T << a->D, p.L.transpose(), -p.L, Binv;
  out.c.resize(n + m);
  out.c << a->q, -Binv * b->q;
  return out;
}

VectorXd apply_pd_operator(const PdProblem& p, const VectorXd& z) {
  const LinearPd lin = linear_pd(p);
  if (z.size() != lin.T.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "z has the wrong dimension");
  }
  return lin.T * z + lin.c;
}

}  // namespace nonmono
