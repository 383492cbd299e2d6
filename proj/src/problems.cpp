#include "nonmono/problems.hpp"

#include "nonmono/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace nonmono {

using nlohmann::json;

namespace {

std::vector<double> param_or(const BuiltinParams& params, const std::string& key, std::vector<double> fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

double scalar_param(const BuiltinParams& params, const std::string& key, double fallback) {
  const auto v = param_or(params, key, {fallback});
  if (v.size() != 1) throw SchemaError("parameter '" + key + "' takes one value");
  return v.front();
}

void reject_unknown(const BuiltinParams& params, std::initializer_list<const char*> known) {
  for (const auto& [k, v] : params) {
    bool found = false;
    for (const char* name : known) found = found || k == name;
    if (!found) throw SchemaError("unknown parameter '" + k + "'");
  }
}

VectorXd dual_solution(const MatrixXd& L, const VectorXd& grad) { return -pinv(L).transpose() * grad; }

Instance make_saddle(const BuiltinParams& params) {
  reject_unknown(params, {"a", "b", "c", "l"});
  const double a = scalar_param(params, "a", 10.0);
  const double b = scalar_param(params, "b", -0.25);
  const double c = scalar_param(params, "c", -0.25);
  const double l = scalar_param(params, "l", 2.0);
  if (b == 0.0 || c == 0.0 || l == 0.0) throw SchemaError("saddle needs nonzero b, c and l");
  MatrixXd A(2, 2);
  A << 0.0, a, -a, 0.0;
  MatrixXd L = MatrixXd::Zero(3, 2);
  L(0, 0) = l;
  L(1, 1) = l;
  Instance inst{"saddle",
                make_problem(L, AffineOp{A, VectorXd::Zero(2)},
                             AffineOp{VectorXd(Eigen::Vector3d(b, b, c)).asDiagonal(), VectorXd::Zero(3)}),
                {}, {}, {}, true, {}};
  inst.problem.x_star = VectorXd::Zero(2);
  inst.problem.y_star = VectorXd::Zero(3);
  const double den = a * a + b * b * l * l * l * l;
  inst.oblique = ObliqueParams{b * l * l / den, kInf, b * a * a / den, c};
  if (params.empty()) inst.moduli = ScalarModuli{1.0, -1.0 / 25.0, -0.3, 0.2};
  inst.notes = "oblique parameters are the tight weak Minty fit on range(M)";
  return inst;
}

Instance make_singvals(const BuiltinParams& params) {
  reject_unknown(params, {"n", "l"});
  std::vector<double> ls = param_or(params, "l", {0.5, 0.2});
  if (params.count("n") != 0) {
    const double n = scalar_param(params, "n", 3.0);
    if (params.count("l") == 0) {
      ls.clear();
      for (int i = 1; i < static_cast<int>(n); ++i) ls.push_back(1.0 - static_cast<double>(i) / n);
    } else if (static_cast<double>(ls.size() + 1) != n) {
      throw SchemaError("singvals needs n - 1 values for l");
    }
  }
  const auto n = static_cast<Eigen::Index>(ls.size() + 1);
  VectorXd a(n);
  VectorXd ld(n);
  a(0) = 1.0;
  ld(0) = 1.0;
  for (Eigen::Index i = 1; i < n; ++i) {
    const double li = ls[static_cast<size_t>(i - 1)];
    if (!(std::abs(li) <= 1.0) || li == 0.0) throw SchemaError("singvals needs 0 < |l_i| <= 1");
    a(i) = 1.0 + std::sqrt(1.0 - li * li);
    ld(i) = li;
  }
  Instance inst{"singvals",
                make_problem(ld.asDiagonal(), AffineOp{a.asDiagonal(), VectorXd::Zero(n)},
                             AffineOp{a.cwiseInverse().asDiagonal(), VectorXd::Zero(n)}),
                {}, {}, {}, true, {}};
  inst.problem.x_star = VectorXd::Zero(n);
  inst.problem.y_star = VectorXd::Zero(n);
  inst.oblique = ObliqueParams{0.5, kInf, 0.5, kInf};
  inst.moduli = ScalarModuli{0.5, 0.5, 0.5, 0.5};
  return inst;
}

Instance make_qp_indef(const BuiltinParams& params) {
  reject_unknown(params, {});
  MatrixXd L(2, 3);
  L << 1.0, 0.25, 0.0, 0.0, 1.0, 0.0;
  const MatrixXd Q = Eigen::Vector3d(1.0, -1.0, 2.0).asDiagonal();
  const VectorXd q = Eigen::Vector3d(-1.0, 1.0, -1.0);
  Instance inst{"qp-indef",
                make_problem(L, AffineOp{Q, q}, BoxNormalCone{Eigen::Vector2d(2.0, 2.0), Eigen::Vector2d(4.0, 4.0)}),
                {}, {}, {}, true, {}};
  const VectorXd xs = Eigen::Vector3d(1.0, 4.0, 0.5);
  inst.problem.x_star = xs;
  inst.problem.y_star = dual_solution(L, Q * xs + q);
  MatrixXd MA(2, 2);
  MA << 1.0, -0.25, -0.25, -15.0 / 16.0;
  PdCertificates c{SymMatrix(MA),
                   SymMatrix::zero(3),
                   SymMatrix::diag(Eigen::Vector3d(0.0, 0.0, 0.5)),
                   SymMatrix::diag(Eigen::Vector2d(0.0, 1.5)),
                   SymMatrix::zero(2),
                   SymMatrix::zero(3)};
  inst.certs = c;
  inst.notes = "B is certified pointwise at (L x*, y*)";
  return inst;
}

Instance make_qp_rankdef(const BuiltinParams& params) {
  reject_unknown(params, {});
  MatrixXd L(3, 3);
  L << 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, -1.0, 0.0;
  const MatrixXd Q = Eigen::Vector3d(-3.0, -2.0, 1.0).asDiagonal();
  const VectorXd q = Eigen::Vector3d(0.0, 1.0, 0.0);
  Instance inst{"qp-rankdef",
                make_problem(L, AffineOp{Q, q},
                             BoxNormalCone{VectorXd::Constant(3, 0.5), VectorXd::Constant(3, 1.0)}),
                {}, {}, {}, false, {}};
  const VectorXd xs = Eigen::Vector3d(1.0, 0.0, 0.0);
  inst.problem.x_star = xs;
  inst.problem.y_star = dual_solution(L, Q * xs + q);
  inst.moduli = ScalarModuli{-1.0, 0.0, 2.0, 0.0};
  inst.notes =
      "muB = 2 is not certified by the box normal cone at any dual solution; the best pointwise value is 4/3";
  return inst;
}

json cert_block_to_json(const PdCertificates& c) {
  return json{{"MA", matrix_to_json(c.MA)}, {"RA", matrix_to_json(c.RA)}, {"RAp", matrix_to_json(c.RAp)},
              {"MB", matrix_to_json(c.MB)}, {"MBp", matrix_to_json(c.MBp)}, {"RB", matrix_to_json(c.RB)}};
}

json operator_to_json(const Operator& op) {
  if (const auto* a = std::get_if<AffineOp>(&op)) {
    json q = json::array();
    for (Eigen::Index i = 0; i < a->q.size(); ++i) q.push_back(a->q(i));
    return json{{"type", "affine"}, {"D", matrix_to_json(a->D)}, {"q", q}};
  }
  const auto& b = std::get<BoxNormalCone>(op);
  json l = json::array();
  json u = json::array();
  for (Eigen::Index i = 0; i < b.l.size(); ++i) {
    l.push_back(number_to_json(b.l(i)));
    u.push_back(number_to_json(b.u(i)));
  }
  return json{{"type", "box_normal_cone"}, {"l", l}, {"u", u}};
}

Operator operator_from_json(const json& j, const std::string& field) {
  if (!j.is_object() || !j.contains("type")) throw SchemaError("'" + field + "' needs an object with a \"type\"");
  const std::string type = j.at("type").get<std::string>();
  if (type == "affine") {
    const MatrixXd D = matrix_from_json(j.at("D"), field + ".D");
    VectorXd q = j.contains("q") ? vector_from_json(j.at("q"), field + ".q") : VectorXd::Zero(D.rows());
    if (D.rows() != D.cols() || q.size() != D.rows()) throw SchemaError("'" + field + "' has inconsistent D and q");
    return AffineOp{D, q};
  }
  if (type == "box_normal_cone") {
    const VectorXd l = vector_from_json(j.at("l"), field + ".l");
    const VectorXd u = vector_from_json(j.at("u"), field + ".u");
    if (l.size() != u.size()) throw SchemaError("'" + field + "' has l and u of different lengths");
    for (Eigen::Index i = 0; i < l.size(); ++i) {
      if (!(l(i) < u(i))) throw SchemaError("'" + field + "' needs l < u componentwise");
    }
    return BoxNormalCone{l, u};
  }
  throw SchemaError("'" + field + ".type' must be \"affine\" or \"box_normal_cone\"");
}

}  // namespace

json number_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  return json(v);
}

double number_from_json(const json& j, const std::string& field) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  throw SchemaError("'" + field + "' must be a number");
}

json matrix_to_json(const MatrixXd& a) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < a.cols(); ++k) row.push_back(a(i, k));
    rows.push_back(row);
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw SchemaError("'" + field + "' must be a non-empty array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  MatrixXd a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw SchemaError("'" + field + "' has ragged rows");
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      a(i, k) = number_from_json(row[static_cast<size_t>(k)], field);
    }
  }
  return a;
}

VectorXd vector_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) throw SchemaError("'" + field + "' must be an array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number_from_json(j[i], field);
  return v;
}

Instance builtin(const std::string& name, const BuiltinParams& params) {
  if (name == "saddle") return make_saddle(params);
  if (name == "singvals") return make_singvals(params);
  if (name == "qp-indef") return make_qp_indef(params);
  if (name == "qp-rankdef") return make_qp_rankdef(params);
  throw Error(ErrorCode::UnknownName, "no builtin problem named '" + name + "'");
}

Instance builtin_from_spec(const std::string& spec) {
  std::stringstream ss(spec);
  std::string name;
  std::getline(ss, name, ':');
  BuiltinParams params;
  std::string item;
  while (std::getline(ss, item, ':')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw SchemaError("builtin parameter '" + item + "' needs key=value");
    std::vector<double> vals;
    std::stringstream vs(item.substr(eq + 1));
    std::string v;
    while (std::getline(vs, v, '/')) {
      try {
        size_t used = 0;
        vals.push_back(std::stod(v, &used));
        if (used != v.size()) throw std::invalid_argument(v);
      } catch (const std::exception&) {
        throw SchemaError("builtin parameter '" + item + "' has a non-numeric value");
      }
    }
    params[item.substr(0, eq)] = vals;
  }
  return builtin(name, params);
}

Instance load_problem(const std::string& ref) {
  const std::string prefix = "builtin:";
  if (ref.rfind(prefix, 0) == 0) return builtin_from_spec(ref.substr(prefix.size()));
  std::ifstream in(ref);
  if (!in) throw SchemaError("cannot open problem file '" + ref + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("problem file is not valid JSON: ") + e.what());
  }
  return problem_from_json(j);
}

Instance problem_from_json(const json& j) {
  try {
    if (!j.is_object()) throw SchemaError("problem must be a JSON object");
    for (const char* f : {"L", "A", "B"}) {
      if (!j.contains(f)) throw SchemaError(std::string("missing required field '") + f + "'");
    }
    const MatrixXd L = matrix_from_json(j.at("L"), "L");
    Operator A = operator_from_json(j.at("A"), "A");
    Operator B = operator_from_json(j.at("B"), "B");
    if (op_dim(A) != L.cols()) throw SchemaError("A must act on R^n with n = columns of L");
    if (op_dim(B) != L.rows()) throw SchemaError("B must act on R^m with m = rows of L");
    Instance inst{j.value("name", std::string("file")), make_problem(L, std::move(A), std::move(B)),
                  {}, {}, {}, true, {}};
    if (j.contains("solution")) {
      const json& s = j.at("solution");
      inst.problem.x_star = vector_from_json(s.at("x"), "solution.x");
      inst.problem.y_star = vector_from_json(s.at("y"), "solution.y");
      if (inst.problem.x_star->size() != L.cols() || inst.problem.y_star->size() != L.rows()) {
        throw SchemaError("solution dimensions do not match L");
      }
    }
    if (j.contains("certificates")) {
      const json& c = j.at("certificates");
      if (c.contains("scalar")) {
        const json& s = c.at("scalar");
        inst.moduli = ScalarModuli{number_from_json(s.at("muA"), "muA"), number_from_json(s.at("rhoA"), "rhoA"),
                                   number_from_json(s.at("muB"), "muB"), number_from_json(s.at("rhoB"), "rhoB")};
      }
      if (c.contains("matrix")) {
        const json& mj = c.at("matrix");
        const auto blk = [&](const char* f) { return SymMatrix(matrix_from_json(mj.at(f), std::string("matrix.") + f)); };
        inst.certs = PdCertificates{blk("MA"), blk("RA"), blk("RAp"), blk("MB"), blk("MBp"), blk("RB")};
      }
      if (c.contains("oblique")) {
        const json& o = c.at("oblique");
        inst.oblique = ObliqueParams{number_from_json(o.at("beta_P"), "beta_P"), number_from_json(o.at("beta_Pp"), "beta_Pp"),
                                     number_from_json(o.at("beta_D"), "beta_D"), number_from_json(o.at("beta_Dp"), "beta_Dp")};
      }
    }
    inst.certs_verified = j.value("certs_verified", true);
    inst.notes = j.value("notes", std::string());
    return inst;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("problem schema: ") + e.what());
  }
}

json problem_to_json(const Instance& inst) {
  const PdProblem& p = inst.problem;
  json j{{"name", inst.name}, {"L", matrix_to_json(p.L)}, {"A", operator_to_json(p.A)}, {"B", operator_to_json(p.B)}};
  json certs = json::object();
  if (inst.moduli) {
    certs["scalar"] = json{{"muA", inst.moduli->muA}, {"rhoA", inst.moduli->rhoA},
                           {"muB", inst.moduli->muB}, {"rhoB", inst.moduli->rhoB}};
  }
  if (inst.certs) certs["matrix"] = cert_block_to_json(*inst.certs);
  if (inst.oblique) {
    const auto& o = *inst.oblique;
    certs["oblique"] = json{{"beta_P", number_to_json(o.beta_P)}, {"beta_Pp", number_to_json(o.beta_Pp)},
                            {"beta_D", number_to_json(o.beta_D)}, {"beta_Dp", number_to_json(o.beta_Dp)}};
  }
  if (!certs.empty()) j["certificates"] = certs;
  if (p.x_star && p.y_star) {
    json x = json::array();
    json y = json::array();
    for (Eigen::Index i = 0; i < p.x_star->size(); ++i) x.push_back((*p.x_star)(i));
    for (Eigen::Index i = 0; i < p.y_star->size(); ++i) y.push_back((*p.y_star)(i));
    j["solution"] = json{{"x", x}, {"y", y}};
  }
  if (!inst.certs_verified) j["certs_verified"] = false;
  if (!inst.notes.empty()) j["notes"] = inst.notes;
  return j;
}

ObliqueParams oblique_for(const Instance& inst) {
  if (inst.oblique) return *inst.oblique;
  if (inst.moduli) return scalar_oblique_params(*inst.moduli, inst.problem.svd);
  if (inst.certs) return derive_oblique_params(*inst.certs, inst.problem.svd);
  return ObliqueParams{};
}

StepsizePlan plan_for(const Instance& inst, const PlanRequest& req, const RuleTol& tol) {
  if (!inst.oblique && inst.moduli) return plan_from_moduli(*inst.moduli, inst.problem.svd, req, tol);
  return plan_from_oblique(oblique_for(inst), inst.problem.svd, req, tol);
}

CertReport validate_certificates(const Instance& inst, int samples) {
  CertReport rep;
  if (!inst.certs && !inst.moduli) {
    rep.detail = "no certificates shipped";
    return rep;
  }
  const PdProblem& p = inst.problem;
  const PdCertificates c = inst.certs ? *inst.certs : matrix_certificates(*inst.moduli, p.svd);
  std::mt19937_64 rng(seed_from_env());
  const auto check = [&](const Operator& op, const SemiCert& claim, const VectorXd* xs, const VectorXd* vs,
                         const char* who) -> double {
    if (const auto* a = std::get_if<AffineOp>(&op)) return linear_cert_slack(a->D, claim.M, claim.R);
    if (xs == nullptr || vs == nullptr) {
      rep.detail += std::string(who) + ": pointwise check needs a known solution. ";
      return -kInf;
    }
    const auto& box = std::get<BoxNormalCone>(op);
    const SemiCert at = cert_box_normal_cone(box, *xs, *vs);
    SemiCert pointwise = claim;
    pointwise.point = at.point;
    const double dominated = std::min(min_eig_sym(SymMatrix(at.M.mat() - claim.M.mat())),
                                      min_eig_sym(SymMatrix(-claim.R.mat())));
    if (dominated >= -1e-12) return 0.0;
    return std::min(dominated, sampled_slack_at(pointwise, sample_graph(op, samples, rng)));
  };

  std::optional<VectorXd> ux;
  std::optional<VectorXd> uy;
  if (p.x_star && p.y_star) {
    ux = p.L * *p.x_star;
    uy = *p.y_star;
  }
  // A's graph point is (x*, -L^T y*); B's is (L x*, y*).
  std::optional<VectorXd> ax;
  std::optional<VectorXd> av;
  if (p.x_star && p.y_star) {
    ax = *p.x_star;
    av = -p.L.transpose() * *p.y_star;
  }
  rep.slack_A = check(p.A, cert_of_A(c, p.L), ax ? &*ax : nullptr, av ? &*av : nullptr, "A");
  rep.slack_B = check(p.B, cert_of_B(c, p.L), ux ? &*ux : nullptr, uy ? &*uy : nullptr, "B");
  rep.ok = rep.slack_A >= -1e-9 && rep.slack_B >= -1e-9;
  if (!rep.ok) {
    std::ostringstream os;
    os << "certificate slack A = " << rep.slack_A << ", B = " << rep.slack_B;
    rep.detail += os.str();
  }
  return rep;
}

}  // namespace nonmono
