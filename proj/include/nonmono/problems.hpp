#pragma once

#include "nonmono/ops.hpp"
#include "nonmono/rules.hpp"
#include "nonmono/semimono.hpp"

#include "json.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nonmono {

// Malformed problem files and parameter strings.
class SchemaError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Instance {
  std::string name;
  PdProblem problem;
  std::optional<ScalarModuli> moduli;
  std::optional<PdCertificates> certs;
  std::optional<ObliqueParams> oblique;
  bool certs_verified = true;
  std::string notes;
};

using BuiltinParams = std::map<std::string, std::vector<double>>;

// Names: saddle, singvals, qp-indef, qp-rankdef. Throws UnknownName.
Instance builtin(const std::string& name, const BuiltinParams& params = {});
// "name:key=v:key=v1/v2"
Instance builtin_from_spec(const std::string& spec);
// "builtin:<spec>" or a path to a JSON problem file.
Instance load_problem(const std::string& ref);

Instance problem_from_json(const nlohmann::json& j);
nlohmann::json problem_to_json(const Instance& inst);

nlohmann::json matrix_to_json(const MatrixXd& a);
MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& field);
VectorXd vector_from_json(const nlohmann::json& j, const std::string& field);
// Numbers, or the strings "inf" / "-inf".
double number_from_json(const nlohmann::json& j, const std::string& field);
nlohmann::json number_to_json(double v);

// Oblique parameters in priority order: explicit, scalar moduli, matrix certificates, monotone.
ObliqueParams oblique_for(const Instance& inst);
StepsizePlan plan_for(const Instance& inst, const PlanRequest& req = {}, const RuleTol& tol = {});

struct CertReport {
  bool ok = true;
  double slack_A = kInf;
  double slack_B = kInf;
  std::string detail;
};
// Runs the semimono validators on the shipped certificates.
CertReport validate_certificates(const Instance& inst, int samples = 500);

}  // namespace nonmono
