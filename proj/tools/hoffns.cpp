#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hoffns/hoffns.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string out;
  bool force = false;
  int jobs = 1;
  std::string csv;
  std::string mutate;
};

fs::path output_dir(const Options& o, const hoffns::RunConfig* c) {
  fs::path dir = !o.out.empty() ? fs::path(o.out) : (c ? fs::path(c->output_dir) : fs::path("out"));
  fs::create_directories(dir);
  return dir;
}

hoffns::RunConfig require_config(const Options& o) {
  if (o.config.empty()) throw hoffns::ConfigError("--config", "a config file is required");
  return hoffns::load_config(o.config);
}

int dispatch(const std::string& cmd, const Options& o) {
  if (cmd == "check") {
    auto c = require_config(o);
    return hoffns::cmd_check(c, output_dir(o, &c), std::cout);
  }
  if (cmd == "run") {
    auto c = require_config(o);
    return hoffns::cmd_run(c, output_dir(o, &c), o.force, std::cout);
  }
  if (cmd == "sweep-delta") {
    auto c = require_config(o);
    hoffns::validate_sweep(c);
    return hoffns::cmd_sweep_delta(c, output_dir(o, &c), o.jobs, o.force, std::cout);
  }
  if (cmd == "verify") {
    const auto mut = hoffns::parse_mutation(o.mutate);
    if (!o.config.empty()) {
      auto c = hoffns::load_config(o.config);
      return hoffns::cmd_verify(output_dir(o, &c), mut, std::cout);
    }
    return hoffns::cmd_verify(output_dir(o, nullptr), mut, std::cout);
  }
  // report
  fs::path dir;
  fs::path csv;
  if (!o.config.empty()) {
    auto c = hoffns::load_config(o.config);
    dir = output_dir(o, &c);
  } else {
    dir = output_dir(o, nullptr);
  }
  csv = o.csv.empty() ? dir / "timeseries.csv" : fs::path(o.csv);
  return hoffns::cmd_report(csv, dir, std::cout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anisotropic compressible Navier-Stokes simulator and Hoff-functional diagnostics"};
  app.require_subcommand(1);
  app.fallthrough();  // inherited by subcommands, so global flags may follow them
  Options o;
  app.add_option("--config", o.config, "INI configuration file");
  app.add_option("--out", o.out, "output directory (overrides output.dir)");
  app.add_flag("--force", o.force, "run even if the hypothesis check fails");
  app.add_option("--jobs", o.jobs, "worker threads for sweep-delta")->check(CLI::PositiveNumber);

  app.add_subcommand("check", "check the viscosity tensor hypotheses");
  app.add_subcommand("run", "run one simulation and write timeseries.csv and summary.json");
  app.add_subcommand("sweep-delta", "run every mollifier width in mollifier.deltas and tabulate differences");
  auto* verify = app.add_subcommand("verify", "run the property and identity suite");
  verify->add_option("--mutate", o.mutate, "inject a known defect")->group("");
  auto* report = app.add_subcommand("report", "render a time-series CSV to report.svg");
  report->add_option("csv", o.csv, "CSV to plot (default <out>/timeseries.csv)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? hoffns::exit_code::ok : hoffns::exit_code::validation;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    return dispatch(cmd, o);
  } catch (const hoffns::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return hoffns::exit_code::validation;
  } catch (const hoffns::HypothesisError& e) {
    std::cerr << "hypothesis " << e.hypothesis() << " failed: " << e.what() << "\n";
    return hoffns::exit_code::validation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return hoffns::exit_code::validation;
  } catch (const std::domain_error& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return hoffns::exit_code::validation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return hoffns::exit_code::runtime;
  }
}
