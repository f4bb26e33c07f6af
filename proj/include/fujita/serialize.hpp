#pragma once

// JSON views of the library's result types. Doubles are written in their
// shortest round-trip form; infinities as the string "inf".

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fujita/error.hpp"
#include "fujita/evolution.hpp"
#include "fujita/exponents.hpp"
#include "fujita/self_similar.hpp"
#include "fujita/threshold.hpp"

namespace fujita {

using Json = nlohmann::ordered_json;

inline Json json_number(double x) {
  if (std::isinf(x)) return x > 0 ? Json("inf") : Json("-inf");
  if (std::isnan(x)) return Json(nullptr);
  return Json(x);
}

inline Json json_number(const ExtendedReal& x) {
  return x.is_finite() ? Json(x.value()) : Json("inf");
}

inline double number_from_json(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw SchemaError("expected a number, got '" + s + "'");
  }
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw SchemaError("expected a number");
  return j.get<double>();
}

template <class T>
Json json_optional(const std::optional<T>& x) {
  return x ? json_number(*x) : Json(nullptr);
}

inline std::optional<double> optional_from_json(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return number_from_json(j);
}

// ---------------------------------------------------------------------------

inline Json exponents_json(const Params& params) {
  const auto e = compute_exponents(params);
  const auto r = classify_regime(params);
  Json j;
  j["n"] = params.n;
  j["p"] = params.p;
  j["p_F"] = json_number(e.p_F);
  j["p_sg"] = json_number(e.p_sg);
  j["p_S"] = json_number(e.p_S);
  j["p_JL"] = json_number(e.p_JL);
  j["L"] = json_number(e.L);
  j["regime"] = to_string(r.tag);
  j["admissible"] = r.admissible;
  return j;
}

inline Json to_json(const Fate& f) {
  Json j;
  j["tag"] = to_string(f.tag);
  j["T_est"] = json_optional(f.T_est);
  j["beta"] = json_optional(f.beta);
  j["evidence"] = f.evidence;
  return j;
}

inline Fate fate_from_json(const Json& j) {
  Fate f;
  f.tag = fate_tag_from_string(j.at("tag").get<std::string>());
  f.T_est = optional_from_json(j.at("T_est"));
  f.beta = optional_from_json(j.at("beta"));
  f.evidence = j.at("evidence").get<std::string>();
  return f;
}

inline Json to_json(const ThresholdBracket& b) {
  Json j;
  j["lambda_lo"] = b.lambda_lo;
  j["lambda_hi"] = b.lambda_hi;
  j["width"] = b.width();
  j["converged"] = b.converged;
  j["fates_monotone"] = fates_monotone(b);
  Json probes = Json::array();
  for (const auto& pr : b.probes) {
    Json q;
    q["lambda"] = pr.lambda;
    q["horizon"] = pr.horizon;
    q["fate"] = to_json(pr.fate);
    probes.push_back(std::move(q));
  }
  j["probes"] = std::move(probes);
  j["warnings"] = b.warnings;
  return j;
}

inline ThresholdBracket bracket_from_json(const Json& j) {
  try {
    ThresholdBracket b;
    b.lambda_lo = j.at("lambda_lo").get<double>();
    b.lambda_hi = j.at("lambda_hi").get<double>();
    b.converged = j.at("converged").get<bool>();
    for (const auto& q : j.at("probes"))
      b.probes.push_back({q.at("lambda").get<double>(), fate_from_json(q.at("fate")),
                          q.at("horizon").get<double>()});
    b.warnings = j.at("warnings").get<std::vector<std::string>>();
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("bracket: ") + e.what());
  }
}

inline Json to_json(const LStarResult& r) {
  Json j;
  j["L_star"] = r.L_star;
  j["a_star"] = json_number(r.a_star);
  j["bracket_width"] = r.bracket_width;
  j["method"] = to_string(r.method);
  j["kind"] = to_string(r.kind);
  return j;
}

inline Json config_json(const SolverConfig& c) {
  Json j;
  j["r_max"] = c.grid->r_max();
  j["nodes"] = c.grid->size();
  j["min_spacing"] = c.grid->min_spacing();
  j["t_max"] = c.t_max;
  j["dt_init"] = c.dt_init;
  j["dt_min"] = c.dt_min;
  j["dt_max"] = json_number(c.dt_max);
  j["M_blow"] = c.M_blow;
  j["eps_decay"] = c.eps_decay;
  j["far_field"] = to_string(c.far_field);
  j["mode"] = to_string(c.mode);
  j["rtol"] = c.rtol;
  j["atol"] = c.atol;
  j["grow_factor"] = c.grow_factor;
  j["settle_tol"] = c.settle_tol;
  j["balance_from"] = json_optional(c.balance_from);
  if (c.rails) j["rails"] = {c.rails->low, c.rails->high};
  return j;
}

/// Run summary; `snapshot_files[k]` names the CSV holding snapshot k.
inline Json run_json(const EvolutionRun& run, const SolverConfig& cfg,
                     const std::vector<std::string>& snapshot_files) {
  Json j;
  j["n"] = run.params.n;
  j["p"] = run.params.p;
  j["config"] = config_json(cfg);
  j["fate"] = to_json(run.fate);
  j["T_est"] = json_optional(run.fate.T_est);
  j["termination"] = to_string(run.termination);
  j["stop_evidence"] = run.stop_evidence;
  j["steps"] = run.steps;
  j["rejected"] = run.rejected;
  j["times"] = run.times;
  j["center_series"] = run.center_series;
  j["supnorm_series"] = run.supnorm_series;
  Json snaps = Json::array();
  for (std::size_t k = 0; k < run.snapshots.size(); ++k)
    snaps.push_back({{"t", run.snapshots[k].t},
                     {"file", k < snapshot_files.size() ? snapshot_files[k] : ""}});
  j["snapshots"] = std::move(snaps);
  return j;
}

}  // namespace fujita
