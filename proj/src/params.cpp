#include "seqclock/params.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace seqclock {

namespace {

void require_positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string("parameter '") + field +
                                "' must be strictly positive and finite");
  }
}

using nlohmann::json;

json parse_object(const std::string& text) {
  json j = json::parse(text);
  if (!j.is_object()) {
    throw std::invalid_argument("parameter document must be a JSON object");
  }
  return j;
}

double take_key(json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw std::invalid_argument(std::string("missing parameter key '") + key + "'");
  }
  if (!it->is_number()) {
    throw std::invalid_argument(std::string("parameter key '") + key + "' must be a number");
  }
  double v = it->get<double>();
  j.erase(it);
  return v;
}

void reject_leftover(const json& j) {
  if (!j.empty()) {
    throw std::invalid_argument("unknown parameter key '" + j.begin().key() + "'");
  }
}

}  // namespace

void FullParams::validate() const {
  require_positive(V_R, "V_R");
  require_positive(V_B, "V_B");
  require_positive(V_D, "V_D");
  require_positive(gamma_B, "gamma_B");
  require_positive(gamma_D, "gamma_D");
  require_positive(gamma_R, "gamma_R");
  require_positive(k_R, "k_R");
}

void ReducedParams::validate() const {
  require_positive(alpha, "alpha");
  require_positive(beta, "beta");
  require_positive(gamma, "gamma");
  require_positive(delta, "delta");
  require_positive(epsilon, "epsilon");
}

void GoodwinParams::validate() const {
  require_positive(alpha1, "alpha1");
  require_positive(alpha2, "alpha2");
  require_positive(alpha3, "alpha3");
  require_positive(gamma1, "gamma1");
  require_positive(gamma2, "gamma2");
  require_positive(gamma3, "gamma3");
  require_positive(K, "K");
  require_positive(n, "n");
  if (n < 1.0) {
    throw std::invalid_argument("parameter 'n' must be >= 1");
  }
}

ReducedParams reduce_params(const FullParams& fp) {
  fp.validate();
  ReducedParams rp;
  rp.alpha = fp.V_R * fp.gamma_B;
  rp.beta = fp.gamma_D;
  rp.gamma = fp.V_B * fp.V_D * fp.V_R / fp.k_R;
  rp.delta = fp.gamma_R;
  rp.epsilon = fp.V_B * fp.V_D;
  return rp;
}

std::string to_json(const FullParams& p) {
  json j;
  j["V_R"] = p.V_R;
  j["V_B"] = p.V_B;
  j["V_D"] = p.V_D;
  j["gamma_B"] = p.gamma_B;
  j["gamma_D"] = p.gamma_D;
  j["gamma_R"] = p.gamma_R;
  j["k_R"] = p.k_R;
  return j.dump(2);
}

std::string to_json(const ReducedParams& p) {
  json j;
  j["alpha"] = p.alpha;
  j["beta"] = p.beta;
  j["gamma"] = p.gamma;
  j["delta"] = p.delta;
  j["epsilon"] = p.epsilon;
  return j.dump(2);
}

std::string to_json(const GoodwinParams& p) {
  json j;
  j["alpha1"] = p.alpha1;
  j["alpha2"] = p.alpha2;
  j["alpha3"] = p.alpha3;
  j["gamma1"] = p.gamma1;
  j["gamma2"] = p.gamma2;
  j["gamma3"] = p.gamma3;
  j["K"] = p.K;
  j["n"] = p.n;
  return j.dump(2);
}

FullParams full_params_from_json(const std::string& text) {
  json j = parse_object(text);
  FullParams p;
  p.V_R = take_key(j, "V_R");
  p.V_B = take_key(j, "V_B");
  p.V_D = take_key(j, "V_D");
  p.gamma_B = take_key(j, "gamma_B");
  p.gamma_D = take_key(j, "gamma_D");
  p.gamma_R = take_key(j, "gamma_R");
  p.k_R = take_key(j, "k_R");
  reject_leftover(j);
  p.validate();
  return p;
}

ReducedParams reduced_params_from_json(const std::string& text) {
  json j = parse_object(text);
  ReducedParams p;
  p.alpha = take_key(j, "alpha");
  p.beta = take_key(j, "beta");
  p.gamma = take_key(j, "gamma");
  p.delta = take_key(j, "delta");
  p.epsilon = take_key(j, "epsilon");
  reject_leftover(j);
  p.validate();
  return p;
}

GoodwinParams goodwin_params_from_json(const std::string& text) {
  json j = parse_object(text);
  GoodwinParams p;
  p.alpha1 = take_key(j, "alpha1");
  p.alpha2 = take_key(j, "alpha2");
  p.alpha3 = take_key(j, "alpha3");
  p.gamma1 = take_key(j, "gamma1");
  p.gamma2 = take_key(j, "gamma2");
  p.gamma3 = take_key(j, "gamma3");
  p.K = take_key(j, "K");
  p.n = take_key(j, "n");
  reject_leftover(j);
  p.validate();
  return p;
}

}  // namespace seqclock
