// hypbridge: batch runner for the named experiments.
//
//   hypbridge run <config.json> [--out DIR] [--threads N] [--plots]
//   hypbridge validate <config.json>
//   hypbridge list-experiments
//
// Exit status: 0 pass, 1 tolerance failure, 2 config error, 3 numeric failure.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hypbridge/errors.hpp"
#include "hypbridge/experiments.hpp"
#include "hypbridge/parallel.hpp"
#include "hypbridge/report.hpp"

namespace ex = hypbridge::experiments;

namespace {

enum Exit { kPass = 0, kTolerance = 1, kConfig = 2, kNumeric = 3 };

void print_summary(const hypbridge::report::ReportBundle& b) {
  for (const auto& r : b.summary) {
    std::cout << (r.checked ? (r.pass ? "  ok    " : "  FAIL  ") : "        ") << r.name << " = "
              << hypbridge::report::fmt(r.value);
    if (r.checked && (r.lower || r.upper))
      std::cout << "  [" << (r.lower ? hypbridge::report::fmt(*r.lower) : "-inf") << ", "
                << (r.upper ? hypbridge::report::fmt(*r.upper) : "inf") << "]";
    if (!r.detail.empty()) std::cout << "  (" << r.detail << ")";
    std::cout << "\n";
  }
}

int cmd_run(const std::string& path, const std::string& out, int threads, bool plots) {
  ex::ExperimentConfig cfg;
  try {
    cfg = ex::load_config(path);
  } catch (const ex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  }
  if (!out.empty()) cfg.output_dir = out;
  if (threads > 0) cfg.threads = threads;
  const auto diags = ex::validate(cfg);
  if (!diags.empty()) {
    for (const auto& d : diags) std::cerr << "config error: " << d << "\n";
    return kConfig;
  }
  hypbridge::report::ReportBundle bundle;
  try {
    bundle = ex::run(cfg);
  } catch (const hypbridge::NumericFailure& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const hypbridge::DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  }
  hypbridge::report::write_bundle(bundle, cfg.output_dir, plots);
  std::cout << bundle.experiment << ": " << (bundle.pass() ? "PASS" : "FAIL") << "  (" << bundle.wall_seconds
            << " s, output in " << cfg.output_dir << ")\n";
  print_summary(bundle);
  return bundle.pass() ? kPass : kTolerance;
}

int cmd_validate(const std::string& path) {
  try {
    const auto diags = ex::validate(ex::load_config(path));
    for (const auto& d : diags) std::cout << d << "\n";
    if (diags.empty()) std::cout << "ok\n";
    return diags.empty() ? kPass : kConfig;
  } catch (const ex::ConfigError& e) {
    std::cout << e.what() << "\n";
    return kConfig;
  }
}

int cmd_list() {
  for (const auto& e : ex::registry()) {
    std::cout << e.name << "\n    " << e.description << "\n    tests: " << e.anchor;
    if (e.default_paths) std::cout << "\n    defaults: n_paths " << e.default_paths << ", h " << e.default_h;
    std::cout << "\n";
  }
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo experiments for Brownian bridges on hyperbolic space"};
  app.set_version_flag("--version", std::string(hypbridge::report::kLibraryVersion));
  app.require_subcommand(1);
  app.footer(std::string("Default thread count comes from ") + hypbridge::parallel::kThreadsEnv +
             ", else the hardware concurrency.");

  std::string config, out;
  int threads = 0;
  bool plots = false;
  auto* run = app.add_subcommand("run", "run one experiment config and write its report");
  run->add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "output directory, overrides output_dir");
  run->add_option("--threads", threads, "worker threads")->check(CLI::NonNegativeNumber);
  run->add_flag("--plots", plots, "also write SVG plots");

  auto* val = app.add_subcommand("validate", "check a config without running it");
  val->add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);

  auto* list = app.add_subcommand("list-experiments", "list registered experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kPass : kConfig;
  }
  if (*run) return cmd_run(config, out, threads, plots);
  if (*val) return cmd_validate(config);
  if (*list) return cmd_list();
  return kConfig;
}
