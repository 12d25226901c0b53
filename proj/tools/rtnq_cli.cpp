// Command-line runner for telegraph-noise correlation experiments.
//
//   rtnq ensemble config.json [--seed N] [--out-dir DIR] [--threads T]
//   rtnq sweep    config.json ...
//   rtnq spectrum config.json ...
//   rtnq verify   config.json ...

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rtnq/errors.hpp"
#include "rtnq/experiment.hpp"
#include "rtnq/verify.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("config", args.config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "Override master_seed");
  cmd->add_option("--out-dir", args.out_dir, "Directory for outputs");
  cmd->add_option("--threads", args.threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
}

rtnq::ExperimentConfig resolve(const CommonArgs& args) {
  auto config = rtnq::load_config(args.config_path);
  if (args.seed) config.master_seed = *args.seed;
  if (args.threads) config.threads = *args.threads;
  config.validate();
  return config;
}

fs::path output_path(const CommonArgs& args, const std::string& name) {
  fs::create_directories(args.out_dir);
  return fs::path(args.out_dir) / name;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file '" + path.string() + "'");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
  finish(out, path);
}

void write_manifest(const CommonArgs& args, const rtnq::ExperimentConfig& config, const std::string& command) {
  write_json(output_path(args, config.outputs.manifest), rtnq::run_manifest(config, command));
}

int run_ensemble(const CommonArgs& args) {
  const auto config = resolve(args);
  const auto result = rtnq::run_ensemble(config);
  const auto csv = output_path(args, config.outputs.csv);
  auto out = open_output(csv);
  rtnq::write_curve_csv(out, result.rows);
  finish(out, csv);
  write_json(output_path(args, config.outputs.summary), rtnq::ensemble_summary_json(result));
  write_manifest(args, config, "ensemble");
  std::size_t with_revival = 0;
  for (const auto& c : result.curves) with_revival += c.first_revival.found;
  std::cout << "wrote " << result.rows.size() << " rows to " << csv.string() << " (" << with_revival << "/"
            << result.curves.size() << " curves with a revival)\n";
  return 0;
}

int run_sweep(const CommonArgs& args) {
  const auto config = resolve(args);
  const auto result = rtnq::run_alpha_sweep(config);
  const auto csv = output_path(args, config.outputs.csv);
  auto out = open_output(csv);
  rtnq::write_curve_csv(out, result.rows(config.experiment_id, config.sweep_sample, config.bath_mode));
  finish(out, csv);
  const auto summary = rtnq::sweep_summary_json(result);
  write_json(output_path(args, config.outputs.summary), summary);
  write_manifest(args, config, "sweep");
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int run_spectrum(const CommonArgs& args) {
  const auto config = resolve(args);
  const auto result = rtnq::run_spectrum(config);
  const auto csv = output_path(args, config.outputs.csv);
  auto out = open_output(csv);
  rtnq::write_spectrum_csv(out, result);
  finish(out, csv);
  const auto summary = rtnq::spectrum_summary_json(result);
  write_json(output_path(args, config.outputs.summary), summary);
  write_manifest(args, config, "spectrum");
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int run_verify(const CommonArgs& args) {
  const auto config = resolve(args);
  const auto report = rtnq::verify(config);
  write_json(output_path(args, config.outputs.report), report.to_json());
  write_manifest(args, config, "verify");
  for (const auto& c : report.checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
  }
  if (!report.all_passed()) {
    std::cerr << "verification failed:";
    for (const auto& name : report.failed_checks()) std::cerr << ' ' << name;
    std::cerr << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-qubit correlations under telegraph-fluctuator 1/f^alpha noise"};
  app.require_subcommand(1);
  CommonArgs args;
  auto* ensemble = app.add_subcommand("ensemble", "Correlation curves for many rate samples");
  auto* sweep = app.add_subcommand("sweep", "Negativity/discord grid over alpha and tau");
  auto* spectrum = app.add_subcommand("spectrum", "Ensemble vs analytic noise spectra and slopes");
  auto* verify = app.add_subcommand("verify", "Monte Carlo and quadrature cross-checks");
  for (auto* cmd : {ensemble, sweep, spectrum, verify}) add_common(cmd, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (ensemble->parsed()) return run_ensemble(args);
    if (sweep->parsed()) return run_sweep(args);
    if (spectrum->parsed()) return run_spectrum(args);
    if (verify->parsed()) return run_verify(args);
  } catch (const rtnq::ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
