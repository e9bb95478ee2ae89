#pragma once

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "eiv/errors.hpp"
#include "eiv/montecarlo.hpp"

namespace eiv {

enum class ConfigKind { harness, sweep, amse, certify };

// Diagonal-design AMSE analysis request.
struct AmseSpec {
  int p = 572;
  double beta1 = 2.0;
  std::string design = "example2";  // example2 | example3 | explicit
  double sigma_max_sq = 0.0;        // 0 means 1/(1+beta1^2)
  std::pair<double, double> variance_range = {0.02, 0.18};
  std::uint64_t seed = 0;
  Eigen::VectorXd x;         // explicit design only
  Eigen::VectorXd sigma_sq;  // explicit design only
};

// Randomized perturbation-certificate trial suite request.
struct CertifySpec {
  int p = 12;
  int m = 3;
  int trials = 200;
  std::uint64_t seed = 0;
  double delta_hat_lo = 0.05;
  double delta_hat_hi = 0.9;
};

// Dimension sweep with a rule-driven ensemble size.
struct SweepPlan {
  std::vector<int> ps;
  SweepRule rule;
  SimConfig base;
};

struct ParsedConfig {
  ConfigKind kind = ConfigKind::harness;
  std::vector<SimConfig> cells;
  SweepPlan sweep;
  AmseSpec amse;
  CertifySpec certify;
  bool seed_present = false;
  std::uint64_t seed = 0;
};

namespace detail {

using Json = nlohmann::json;

inline void require_keys(const Json& j, const std::set<std::string>& allowed) {
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw ConfigError("config: unknown field \"" + item.key() + "\"");
}

inline double number_field(const Json& j, const std::string& field,
                           double fallback, bool required = false) {
  if (!j.contains(field)) {
    if (required) throw ConfigError("config: missing field \"" + field + "\"");
    return fallback;
  }
  if (!j[field].is_number())
    throw ConfigError("config: field \"" + field + "\" must be a number");
  return j[field].get<double>();
}

inline int int_field(const Json& j, const std::string& field, int fallback,
                     bool required = false) {
  if (!j.contains(field)) {
    if (required) throw ConfigError("config: missing field \"" + field + "\"");
    return fallback;
  }
  if (!j[field].is_number_integer())
    throw ConfigError("config: field \"" + field + "\" must be an integer");
  return j[field].get<int>();
}

inline std::vector<double> number_list(const Json& j,
                                       const std::string& field) {
  std::vector<double> out;
  if (!j.contains(field))
    throw ConfigError("config: missing field \"" + field + "\"");
  const Json& v = j[field];
  if (v.is_number()) {
    out.push_back(v.get<double>());
  } else if (v.is_array() && !v.empty()) {
    for (const Json& e : v) {
      if (!e.is_number())
        throw ConfigError("config: field \"" + field +
                          "\" must hold numbers");
      out.push_back(e.get<double>());
    }
  } else {
    throw ConfigError("config: field \"" + field +
                      "\" must be a number or nonempty list");
  }
  return out;
}

// n entries are positive integers or the string "inf" (sentinel 0).
inline int ensemble_entry(const Json& e, const std::string& field) {
  if (e.is_string()) {
    if (e.get<std::string>() == "inf") return 0;
    throw ConfigError("config: field \"" + field +
                      "\" strings must be \"inf\"");
  }
  if (!e.is_number_integer())
    throw ConfigError("config: field \"" + field +
                      "\" must hold integers or \"inf\"");
  return e.get<int>();
}

inline std::vector<int> ensemble_list(const Json& j,
                                      const std::string& field) {
  std::vector<int> out;
  if (!j.contains(field))
    throw ConfigError("config: missing field \"" + field + "\"");
  const Json& v = j[field];
  if (v.is_array()) {
    if (v.empty())
      throw ConfigError("config: field \"" + field + "\" must be nonempty");
    for (const Json& e : v) out.push_back(ensemble_entry(e, field));
  } else {
    out.push_back(ensemble_entry(v, field));
  }
  return out;
}

inline std::pair<double, double> range_field(const Json& j,
                                             const std::string& field,
                                             std::pair<double, double> fb) {
  if (!j.contains(field)) return fb;
  const Json& v = j[field];
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() ||
      !v[1].is_number())
    throw ConfigError("config: field \"" + field +
                      "\" must be a two-number list");
  return {v[0].get<double>(), v[1].get<double>()};
}

inline std::vector<Variant> variants_field(const Json& j) {
  if (!j.contains("variants"))
    return {Variant::unprewhitened, Variant::prewhitened};
  const Json& v = j["variants"];
  if (!v.is_array() || v.empty())
    throw ConfigError("config: field \"variants\" must be a nonempty list");
  std::vector<Variant> out;
  for (const Json& e : v) {
    const std::string name = e.is_string() ? e.get<std::string>() : "";
    if (name == "unprewhitened") {
      out.push_back(Variant::unprewhitened);
    } else if (name == "prewhitened") {
      out.push_back(Variant::prewhitened);
    } else {
      throw ConfigError(
          "config: variants must be \"unprewhitened\" or \"prewhitened\"");
    }
  }
  return out;
}

inline Eigen::VectorXd vector_field(const Json& j, const std::string& field) {
  const Json& v = j.at(field);
  if (!v.is_array() || v.empty())
    throw ConfigError("config: field \"" + field +
                      "\" must be a nonempty list");
  Eigen::VectorXd out(static_cast<int>(v.size()));
  for (int i = 0; i < out.size(); ++i) {
    if (!v[i].is_number())
      throw ConfigError("config: field \"" + field + "\" must hold numbers");
    out(i) = v[i].get<double>();
  }
  return out;
}

inline std::vector<SimConfig> parse_harness(const Json& j,
                                            std::uint64_t seed) {
  require_keys(j, {"p", "beta1", "rho", "alpha", "n", "reps", "level",
                   "sigma_sq_range", "seed", "variants"});
  SimConfig base;
  base.p = int_field(j, "p", 0, true);
  base.beta1 = number_field(j, "beta1", 2.0);
  base.reps = int_field(j, "reps", 1000);
  base.level = number_field(j, "level", 0.95);
  base.variance_range = range_field(j, "sigma_sq_range", {0.02, 0.18});
  base.seed = seed;
  base.variants = variants_field(j);

  const std::vector<double> rhos = number_list(j, "rho");
  const std::vector<double> alphas = number_list(j, "alpha");
  const std::vector<int> ns = ensemble_list(j, "n");

  std::vector<SimConfig> cells;
  cells.reserve(rhos.size() * alphas.size() * ns.size());
  for (double rho : rhos)
    for (double alpha : alphas)
      for (int n : ns) {
        SimConfig cell = base;
        cell.rho = rho;
        cell.alpha = alpha;
        cell.ensemble_n = n;
        try {
          cell.validate();
        } catch (const InputError& e) {
          throw ConfigError(std::string("config: ") + e.what());
        }
        cells.push_back(cell);
      }
  return cells;
}

inline AmseSpec parse_amse(const Json& j, std::uint64_t seed) {
  require_keys(j, {"analysis", "p", "beta1", "design", "sigma_max_sq",
                   "sigma_sq_range", "seed", "x", "sigma_sq"});
  AmseSpec spec;
  spec.p = int_field(j, "p", spec.p);
  spec.beta1 = number_field(j, "beta1", spec.beta1);
  spec.sigma_max_sq = number_field(j, "sigma_max_sq", 0.0);
  spec.variance_range = range_field(j, "sigma_sq_range", spec.variance_range);
  spec.seed = seed;
  if (j.contains("design")) {
    if (!j["design"].is_string())
      throw ConfigError("config: field \"design\" must be a string");
    spec.design = j["design"].get<std::string>();
  }
  if (spec.design != "example2" && spec.design != "example3" &&
      spec.design != "explicit")
    throw ConfigError(
        "config: design must be example2, example3, or explicit");
  if (spec.design == "explicit") {
    if (!j.contains("x") || !j.contains("sigma_sq"))
      throw ConfigError("config: explicit design needs x and sigma_sq");
    spec.x = vector_field(j, "x");
    spec.sigma_sq = vector_field(j, "sigma_sq");
    if (spec.x.size() != spec.sigma_sq.size())
      throw ConfigError("config: x and sigma_sq lengths differ");
    spec.p = static_cast<int>(spec.x.size());
  } else if (j.contains("x") || j.contains("sigma_sq")) {
    throw ConfigError("config: x and sigma_sq require design=explicit");
  }
  if (spec.p < 1) throw ConfigError("config: p must be positive");
  if (!(spec.variance_range.first > 0.0) ||
      !(spec.variance_range.second >= spec.variance_range.first))
    throw ConfigError("config: bad sigma_sq_range");
  return spec;
}

inline CertifySpec parse_certify(const Json& j, std::uint64_t seed) {
  require_keys(j, {"analysis", "p", "m", "trials", "seed", "delta_hat_lo",
                   "delta_hat_hi"});
  CertifySpec spec;
  spec.p = int_field(j, "p", spec.p);
  spec.m = int_field(j, "m", spec.m);
  spec.trials = int_field(j, "trials", spec.trials);
  spec.seed = seed;
  spec.delta_hat_lo = number_field(j, "delta_hat_lo", spec.delta_hat_lo);
  spec.delta_hat_hi = number_field(j, "delta_hat_hi", spec.delta_hat_hi);
  if (spec.m < 1 || spec.p <= spec.m)
    throw ConfigError("config: need p > m >= 1");
  if (spec.trials < 1) throw ConfigError("config: trials must be positive");
  if (!(spec.delta_hat_lo > 0.0) || !(spec.delta_hat_hi < 1.0) ||
      spec.delta_hat_lo > spec.delta_hat_hi)
    throw ConfigError("config: need 0 < delta_hat_lo <= delta_hat_hi < 1");
  return spec;
}

inline SweepPlan parse_sweep(const Json& j, std::uint64_t seed) {
  require_keys(j, {"sweep", "beta1", "rho", "alpha", "reps", "level",
                   "sigma_sq_range", "seed", "variants"});
  SweepPlan plan;
  plan.base.beta1 = number_field(j, "beta1", 2.0);
  plan.base.reps = int_field(j, "reps", 1000);
  plan.base.level = number_field(j, "level", 0.95);
  plan.base.variance_range = range_field(j, "sigma_sq_range", {0.02, 0.18});
  plan.base.seed = seed;
  plan.base.variants = variants_field(j);

  const std::vector<double> rhos = number_list(j, "rho");
  const std::vector<double> alphas = number_list(j, "alpha");
  if (rhos.size() != 1 || alphas.size() != 1)
    throw ConfigError("config: sweep needs scalar rho and alpha");
  plan.base.rho = rhos[0];
  plan.base.alpha = alphas[0];

  const Json& s = j.at("sweep");
  if (!s.is_object())
    throw ConfigError("config: field \"sweep\" must be an object");
  require_keys(s, {"ps", "kind", "scale", "exponent"});
  if (!s.contains("ps") || !s["ps"].is_array() || s["ps"].empty())
    throw ConfigError("config: sweep.ps must be a nonempty list");
  for (const Json& e : s["ps"]) {
    if (!e.is_number_integer())
      throw ConfigError("config: sweep.ps must hold integers");
    plan.ps.push_back(e.get<int>());
  }
  for (std::size_t i = 1; i < plan.ps.size(); ++i)
    if (plan.ps[i] <= plan.ps[i - 1])
      throw ConfigError("config: sweep.ps must be strictly increasing");

  std::string kind = "logarithmic";
  if (s.contains("kind")) {
    if (!s["kind"].is_string())
      throw ConfigError("config: sweep.kind must be a string");
    kind = s["kind"].get<std::string>();
  }
  if (kind == "logarithmic") {
    plan.rule.kind = SweepRule::Kind::logarithmic;
  } else if (kind == "polynomial") {
    plan.rule.kind = SweepRule::Kind::polynomial;
  } else {
    throw ConfigError("config: sweep.kind must be logarithmic or polynomial");
  }
  plan.rule.scale = number_field(s, "scale", 10.0);
  plan.rule.exponent = number_field(s, "exponent", 1.0);
  if (!(plan.rule.scale > 0.0))
    throw ConfigError("config: sweep.scale must be positive");
  if (!(plan.rule.exponent > 0.0))
    throw ConfigError("config: sweep.exponent must be positive");

  for (int p : plan.ps) {
    SimConfig probe = plan.base;
    probe.p = p;
    probe.ensemble_n = plan.rule.ensemble_size(p);
    try {
      probe.validate();
    } catch (const InputError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  return plan;
}

}  // namespace detail

inline ParsedConfig parse_config_text(const std::string& text) {
  detail::Json j;
  try {
    j = detail::Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  ParsedConfig parsed;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<std::int64_t>() < 0)
      throw ConfigError("config: field \"seed\" must be a nonnegative integer");
    parsed.seed_present = true;
    parsed.seed = j["seed"].get<std::uint64_t>();
  }

  if (j.contains("analysis")) {
    if (!j["analysis"].is_string())
      throw ConfigError("config: field \"analysis\" must be a string");
    const std::string kind = j["analysis"].get<std::string>();
    if (kind == "amse") {
      parsed.kind = ConfigKind::amse;
      parsed.amse = detail::parse_amse(j, parsed.seed);
    } else if (kind == "certify") {
      parsed.kind = ConfigKind::certify;
      parsed.certify = detail::parse_certify(j, parsed.seed);
    } else {
      throw ConfigError("config: analysis must be \"amse\" or \"certify\"");
    }
    return parsed;
  }

  if (j.contains("sweep")) {
    parsed.kind = ConfigKind::sweep;
    parsed.sweep = detail::parse_sweep(j, parsed.seed);
    return parsed;
  }

  parsed.kind = ConfigKind::harness;
  parsed.cells = detail::parse_harness(j, parsed.seed);
  return parsed;
}

inline ParsedConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

// Applies a seed to every cell / analyzer spec after precedence resolution.
inline void override_seed(ParsedConfig& parsed, std::uint64_t seed) {
  parsed.seed = seed;
  parsed.seed_present = true;
  for (SimConfig& cell : parsed.cells) cell.seed = seed;
  parsed.sweep.base.seed = seed;
  parsed.amse.seed = seed;
  parsed.certify.seed = seed;
}

}  // namespace eiv
