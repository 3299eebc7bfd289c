#pragma once

// Command implementations behind the steinmix executable. Each takes merged
// settings and output streams and returns a process exit code.

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "steinmix/mc_harness.hpp"
#include "steinmix/report.hpp"
#include "steinmix/run_config.hpp"
#include "steinmix/verification.hpp"
#include "steinmix/you_analytic.hpp"
#include "steinmix/yule_tree.hpp"

namespace steinmix::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  return f;
}

inline int cmd_bounds(const Settings& s, std::ostream& out) {
  const Model model = s.model();
  const YouParams params = s.params();
  const JumpSchedule schedule = s.schedule();
  const DistanceKind distance = s.distance();
  const std::uint64_t n = s.integer("n", 10'000);
  if (n < 2) throw config_error("n: must be >= 2");

  const CurvePoint pt = bound_at(model, params, schedule, distance, n);
  out << to_string(model) << " " << to_string(distance) << " upper bound at n = " << n << "\n";
  out << "  alpha = " << format_real(params.alpha) << ", sigma_a2 = " << format_real(params.sigma_a2)
      << ", x0 = " << format_real(params.x0);
  if (schedule.is_constant())
    out << ", p = " << format_real(schedule.constant_rate().p)
        << ", sigma_c2 = " << format_real(schedule.constant_rate().sigma_c2);
  out << "\n";
  out << "  E(V) = " << format_real(pt.moments.ev) << ", V(V) = " << format_real(pt.moments.vv)
      << ", V(E) = " << format_real(pt.moments.ve) << "\n";
  for (const auto& t : pt.report.terms) out << "  " << t.label << " = " << format_real(t.value) << "\n";
  out << "  total = " << format_real(pt.report.total) << "\n";
  for (const auto& note : pt.report.notes) out << "  [" << note << "]\n";
  return kExitOk;
}

inline std::vector<std::uint64_t> default_n_grid() {
  std::set<std::uint64_t> grid;
  for (int q = 4; q <= 24; ++q) grid.insert(static_cast<std::uint64_t>(std::llround(std::pow(10.0, q / 4.0))));
  return {grid.begin(), grid.end()};
}

inline const std::vector<double>& default_alphas() {
  static const std::vector<double> a = {0.5, 0.6, 0.75, 1.0, 2.0};
  return a;
}

/// gnuplot command file drawing total against n, one line per alpha.
inline void write_gnuplot(std::ostream& os, const std::string& csv_path, const std::vector<double>& alphas,
                          Model model, DistanceKind distance) {
  os << "# total bound against n, one curve per alpha\n"
     << "set datafile separator ','\n"
     << "set logscale xy\n"
     << "set key top right\n"
     << "set xlabel 'n'\n"
     << "set ylabel '" << to_string(distance) << " bound'\n"
     << "set title '" << to_string(model) << "'\n"
     << "plot \\\n";
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const std::string a = format_real(alphas[i]);
    os << "  '" << csv_path << "' using 3:(abs($2 - " << a << ") < 1e-12 ? $9 : 1/0) with lines title 'alpha = "
       << a << "'" << (i + 1 < alphas.size() ? ", \\\n" : "\n");
  }
}

inline int cmd_curves(const Settings& in, std::ostream& out) {
  SettingMap raw = in.raw();
  const std::string panel = in.text("panel", "left");
  if (panel != "left" && panel != "right") throw config_error("panel: expected left or right");
  if (panel == "right" && !in.has("model")) raw["model"] = "YOUj";
  const Settings s(raw);

  const Model model = s.model();
  const DistanceKind distance = s.distance();
  const JumpSchedule schedule = s.schedule();
  const std::vector<double> alphas = s.has("alphas") ? s.reals("alphas") : default_alphas();
  const std::vector<std::uint64_t> grid = s.has("n_grid") ? s.integers("n_grid") : default_n_grid();
  if (alphas.empty()) throw config_error("alphas: empty list");
  if (grid.empty()) throw config_error("n_grid: empty list");
  for (auto n : grid)
    if (n < 2) throw config_error("n_grid: every n must be >= 2");

  std::ofstream file;
  std::ostream* sink = &out;
  if (s.has("csv")) {
    file = open_output(s.text("csv"));
    sink = &file;
  }
  *sink << kCurvesHeader << '\n';
  for (double a : alphas) {
    SettingMap per = s.raw();
    per["alpha"] = format_real(a);
    const YouParams params = Settings(per).params();
    for (const auto& pt : bound_curve(model, params, schedule, distance, grid)) write_curve_row(*sink, a, pt);
  }
  if (s.has("gnuplot")) {
    if (!s.has("csv")) throw config_error("gnuplot: needs csv so the script has a data file to read");
    auto g = open_output(s.text("gnuplot"));
    write_gnuplot(g, s.text("csv"), alphas, model, distance);
  }
  return kExitOk;
}

inline int cmd_simulate(const Settings& s, std::ostream& out) {
  const ExperimentConfig cfg = s.experiment();
  const SimulationResult res = run_simulation(cfg);
  const std::string doc = to_json(res).dump(2) + "\n";
  if (s.has("json")) {
    auto f = open_output(s.text("json"));
    f << doc;
  } else {
    out << doc;
  }
  if (s.has("csv")) {
    auto f = open_output(s.text("csv"));
    write_estimates_csv(f, res);
  }
  return kExitOk;
}

inline std::string seconds_text(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", s);
  return buf;
}

/// Quick or full self-check. `fault` names a deliberately corrupted
/// component ("b_factor") for a mutation run; the suite must then fail.
inline int cmd_verify(verify::Level level, unsigned workers, const std::string& fault, std::ostream& out) {
  if (!fault.empty()) {
    if (fault != "b_factor") throw config_error("inject-fault: only b_factor is supported");
    steinmix::detail::b_factor_fault_scale = 1.05;
    out << "fault injected: b_factor scaled by 1.05\n";
  }
  bool all = true;
  for (const auto& run : verify::suite(level, workers)) {
    const auto r = verify::timed(run);
    out << "[" << (r.pass ? "PASS" : "FAIL") << "] criterion " << r.id << ": " << r.title << " ("
        << seconds_text(r.seconds) << " s)\n";
    for (const auto& d : r.details) out << "       " << d << "\n";
    all = all && r.pass;
  }
  steinmix::detail::b_factor_fault_scale = 1.0;
  out << (all ? "verify: all criteria passed\n" : "verify: FAILED\n");
  return all ? kExitOk : kExitFailure;
}

/// Samples one tree (and jumps for YOUj) with replicate stream 0 of `seed`
/// and prints it in the debug dump format.
inline int cmd_dump_tree(const Settings& s, std::ostream& out) {
  if (!s.has("seed")) throw config_error("seed: required for dump-tree");
  const std::uint64_t n = s.integer("n", 10);
  if (n < 1) throw config_error("n: must be >= 1");
  auto rng = replicate_stream(s.integer("seed", 0), 0);
  const YuleTree tree = YuleTree::sample(n, rng);
  if (s.model() == Model::youj) {
    const JumpRealization j = sample_jumps(tree, s.schedule(), rng);
    tree.dump(out, &j.jumped);
  } else {
    tree.dump(out);
  }
  return kExitOk;
}

}  // namespace steinmix::cli
