// steinmix: bound curves, Monte Carlo experiments and self-checks for normal
// mixtures arising from Ornstein-Uhlenbeck traits on Yule trees.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "steinmix/commands.hpp"

namespace {

struct FlagSet {
  std::string config_path;
  std::map<std::string, std::string> values;

  steinmix::Settings resolve() const {
    steinmix::SettingMap file;
    if (!config_path.empty()) file = steinmix::read_config_file(config_path);
    steinmix::SettingMap flags;
    for (const auto& [k, v] : values)
      if (!v.empty()) flags[k] = v;
    return steinmix::Settings(steinmix::merge_settings(file, flags));
  }
};

void add_setting_flags(CLI::App* cmd, FlagSet& fs) {
  cmd->add_option("--config", fs.config_path, "key = value settings file (flags override it)");
  for (const auto& key : steinmix::known_keys()) {
    if (key == "level") continue;
    cmd->add_option(steinmix::flag_name(key), fs.values[key], "same as config key '" + key + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stein-method bounds for normal mixtures on Yule trees"};
  app.require_subcommand(1);

  FlagSet bounds_flags, curves_flags, simulate_flags, dump_flags;
  auto* bounds = app.add_subcommand("bounds", "upper bound at a single n");
  add_setting_flags(bounds, bounds_flags);
  auto* curves = app.add_subcommand("curves", "upper-bound curves as CSV (optionally a gnuplot script)");
  add_setting_flags(curves, curves_flags);
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimates, empirical distances and bound check");
  add_setting_flags(simulate, simulate_flags);
  auto* dump = app.add_subcommand("dump-tree", "print one sampled tree in the debug format");
  add_setting_flags(dump, dump_flags);

  auto* verify = app.add_subcommand("verify", "run the self-check suite; exit 1 on any failure");
  std::string level = "quick";
  std::string fault;
  std::string workers_text;
  verify->add_option("level", level, "quick or full")->check(CLI::IsMember({"quick", "full"}));
  verify->add_option("--workers", workers_text, "worker threads for the Monte Carlo criteria");
  verify->add_option("--inject-fault", fault, "corrupt a component on purpose (b_factor)")->group("");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bounds) return steinmix::cli::cmd_bounds(bounds_flags.resolve(), std::cout);
    if (*curves) return steinmix::cli::cmd_curves(curves_flags.resolve(), std::cout);
    if (*simulate) return steinmix::cli::cmd_simulate(simulate_flags.resolve(), std::cout);
    if (*dump) return steinmix::cli::cmd_dump_tree(dump_flags.resolve(), std::cout);
    if (*verify) {
      steinmix::SettingMap m;
      if (!workers_text.empty()) m["workers"] = workers_text;
      const unsigned workers = steinmix::Settings(m).workers();
      return steinmix::cli::cmd_verify(level == "full" ? steinmix::verify::Level::full
                                                       : steinmix::verify::Level::quick,
                                       workers, fault, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return steinmix::cli::kExitUsage;
  }
  return steinmix::cli::kExitUsage;
}
