#pragma once

// CSV and JSON emission. Numbers in CSV use 17 significant digits so every
// value round-trips; JSON goes through nlohmann::json.

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "steinmix/mc_harness.hpp"
#include "steinmix/stein_bounds.hpp"
#include "steinmix/you_analytic.hpp"

namespace steinmix {

inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr std::size_t kCurveTermColumns = 4;
inline constexpr const char* kCurvesHeader = "model,alpha,n,distance,term1,term2,term3,term4,total,regime";
inline constexpr const char* kEstimatesHeader = "quantity,value,se,r_used";

inline void write_curve_row(std::ostream& os, double alpha, const CurvePoint& pt) {
  os << to_string(pt.model) << ',' << format_real(alpha) << ',' << pt.n << ',' << to_string(pt.report.distance);
  for (std::size_t i = 0; i < kCurveTermColumns; ++i) {
    os << ',';
    if (i < pt.report.terms.size()) os << format_real(pt.report.terms[i].value);
  }
  os << ',' << format_real(pt.report.total) << ',' << to_string(pt.regime);
  if (pt.non_convergent) os << " (non-convergent)";
  os << '\n';
}

inline void write_estimate_row(std::ostream& os, const std::string& quantity, const EstimateWithSE& e) {
  os << quantity << ',' << format_real(e.value) << ',' << format_real(e.se) << ',' << e.r_used << '\n';
}

inline void write_estimate_row(std::ostream& os, const std::string& quantity, double value, std::uint64_t r) {
  os << quantity << ',' << format_real(value) << ",," << r << '\n';
}

inline nlohmann::json to_json(const EstimateWithSE& e) {
  return {{"value", e.value}, {"se", e.se}, {"r_used", e.r_used}};
}

inline nlohmann::json to_json(const BoundReport& r) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : r.terms) terms.push_back({{"label", t.label}, {"value", t.value}});
  return {{"distance", std::string(to_string(r.distance))},
          {"kind", std::string(to_string(r.kind))},
          {"terms", terms},
          {"total", r.total},
          {"notes", r.notes}};
}

inline nlohmann::json to_json(const MomentEstimates& m) {
  return {{"mean", to_json(m.mean)}, {"ev", to_json(m.ev)}, {"vv", to_json(m.vv)}, {"ve", to_json(m.ve)}};
}

/// Configuration echo; the worker count is left out so output is identical
/// for any degree of parallelism.
inline nlohmann::json config_json(const ExperimentConfig& c) {
  nlohmann::json j = {{"model", std::string(to_string(c.model))},
                      {"n", c.n},
                      {"alpha", c.params.alpha},
                      {"sigma_a2", c.params.sigma_a2},
                      {"x0", c.params.x0},
                      {"replicates", c.replicates},
                      {"seed", c.seed}};
  switch (c.schedule.mode()) {
    case JumpSchedule::Mode::none:
      j["jumps"] = {{"mode", "none"}};
      break;
    case JumpSchedule::Mode::constant:
      j["jumps"] = {{"mode", "constant"}, {"p", c.schedule.constant_rate().p},
                    {"sigma_c2", c.schedule.constant_rate().sigma_c2}};
      break;
    case JumpSchedule::Mode::per_event:
      j["jumps"] = {{"mode", "per_event"}, {"events", c.schedule.rates().size()}};
      break;
  }
  return j;
}

/// Everything a simulation run reports.
struct SimulationResult {
  ExperimentConfig config;
  MomentEstimates moments;
  bool analytic_standardization = true;
  double centre = 0.0;
  double scale2 = 1.0;
  double empirical_dk = 0.0;
  double empirical_dw = 0.0;
  double dkw_band = 0.0;
  double bootstrap_se_dw = 0.0;
  std::optional<SandwichReport> sandwich;
  std::vector<std::string> notes;
};

inline SimulationResult run_simulation(const ExperimentConfig& cfg) {
  cfg.validate();
  SimulationResult res;
  res.config = cfg;
  const auto draws = simulate_replicates(cfg);
  res.moments = summarize_moments(draws);

  const bool closed_form = classify_regime(cfg.params.alpha) != Regime::slow &&
                           cfg.schedule.mode() != JumpSchedule::Mode::per_event;
  if (closed_form) {
    SandwichReport s = sandwich_from_draws(cfg, draws);
    res.centre = mu_n(cfg.n, cfg.params);
    res.scale2 = cfg.model == Model::you ? sigma2_n_you(cfg.n, cfg.params)
                                         : sigma2_n_youj(cfg.n, cfg.params, cfg.schedule);
    res.empirical_dk = s.empirical_dk;
    res.empirical_dw = s.empirical_dw;
    res.dkw_band = s.dkw_band;
    res.bootstrap_se_dw = s.bootstrap_se_dw;
    res.sandwich = std::move(s);
    return res;
  }

  // No closed-form mu_n / sigma_n^2: standardize by the Monte Carlo estimates.
  res.analytic_standardization = false;
  res.centre = res.moments.mean.value;
  res.scale2 = res.moments.ev.value;
  if (classify_regime(cfg.params.alpha) == Regime::slow)
    res.notes.emplace_back("alpha < 1/2: no normal limit expected; no bound comparison");
  if (cfg.schedule.mode() == JumpSchedule::Mode::per_event)
    res.notes.emplace_back("per-event jump schedule: no closed-form bounds; no bound comparison");
  std::vector<double> z(draws.size());
  const double s = std::sqrt(res.scale2);
  for (std::size_t i = 0; i < draws.size(); ++i) z[i] = (draws[i].ybar - res.centre) / s;
  res.empirical_dk = empirical_dk(z);
  res.empirical_dw = empirical_dw(z);
  res.dkw_band = dkw_band(draws.size());
  res.bootstrap_se_dw = bootstrap_se_dw(z, cfg.seed, cfg.workers);
  return res;
}

inline nlohmann::json to_json(const SimulationResult& r) {
  nlohmann::json j;
  j["config"] = config_json(r.config);
  j["estimates"] = to_json(r.moments);
  j["standardization"] = {{"source", r.analytic_standardization ? "analytic" : "monte-carlo"},
                          {"mean", r.centre},
                          {"variance", r.scale2}};
  j["empirical"] = {{"dk", r.empirical_dk},
                    {"dw", r.empirical_dw},
                    {"dkw_band_99", r.dkw_band},
                    {"bootstrap_se_dw", r.bootstrap_se_dw}};
  if (r.sandwich) {
    const auto& s = *r.sandwich;
    j["sandwich"] = {{"kappa_mean", to_json(s.kappa_mean)},
                     {"upper_dk", to_json(s.upper_dk)},
                     {"upper_dw", to_json(s.upper_dw)},
                     {"lower_dk", to_json(s.lower_dk)},
                     {"lower_dw", to_json(s.lower_dw)},
                     {"verdict_dk", std::string(to_string(s.verdict_dk))},
                     {"verdict_dw", std::string(to_string(s.verdict_dw))}};
  } else {
    j["sandwich"] = nullptr;
  }
  j["notes"] = r.notes;
  return j;
}

inline void write_estimates_csv(std::ostream& os, const SimulationResult& r) {
  os << kEstimatesHeader << '\n';
  write_estimate_row(os, "mean", r.moments.mean);
  write_estimate_row(os, "ev", r.moments.ev);
  write_estimate_row(os, "vv", r.moments.vv);
  write_estimate_row(os, "ve", r.moments.ve);
  const std::uint64_t rr = r.config.replicates;
  write_estimate_row(os, "empirical_dk", r.empirical_dk, rr);
  write_estimate_row(os, "empirical_dw", {r.empirical_dw, r.bootstrap_se_dw, rr});
  if (r.sandwich) write_estimate_row(os, "kappa_mean", r.sandwich->kappa_mean);
}

}  // namespace steinmix
