#pragma once

// Declarative experiments: rate-sample ensembles of correlation curves,
// alpha sweeps and spectrum checks, with CSV/JSON output.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rtnq/dephasing.hpp"
#include "rtnq/noise_model.hpp"

namespace rtnq {

/// Library version recorded in run manifests.
const char* version();

enum class BathMode { SharedSample, IndependentSamples };

std::string to_string(BathMode mode);
BathMode bath_mode_from_string(const std::string& name);

struct TauGridSpec {
  double tau_max = 3.0;
  std::size_t n_points = 3001;

  std::vector<double> points() const { return make_tau_grid(tau_max, n_points); }
};

struct SpectrumSettings {
  double f_min = 1e-2;
  double f_max = 1e2;
  std::size_t n_freqs = 41;
  /// Independent ensembles averaged for the pooled mean (0 disables it).
  std::size_t pooled_ensembles = 0;
};

/// Sample sizes and targets for the `verify` command.
struct VerifySettings {
  std::vector<double> dephasing_rates{0.1, 1.0, 2.0, 4.0, 20.0};
  TauGridSpec dephasing_grid{5.0, 50};
  std::size_t dephasing_trajectories = 20000;
  double dephasing_min_pass_fraction = 0.95;

  std::size_t state_fluctuators = 3;
  double state_alpha = 1.5;
  double state_gamma_min = 0.1;
  double state_gamma_max = 10.0;
  TauGridSpec state_grid{5.0, 26};
  std::size_t state_trajectories = 20000;

  std::size_t negativity_points = 1001;

  std::vector<double> spectrum_alphas{1.0, 1.5, 2.0};
  double spectrum_gamma_min = 1e-4;
  double spectrum_gamma_max = 1e4;
  std::size_t spectrum_fluctuators = 10000;
  SpectrumSettings spectrum{1e-2, 1e2, 21, 200};
  double slope_tolerance = 0.15;
  /// Overrides the expected slope (default -alpha). Used for negative controls.
  std::optional<double> slope_target;

  std::vector<double> ks_alphas{1.0, 1.25, 1.5, 1.75, 2.0};
  std::size_t ks_samples = 1000000;
  double ks_threshold = 0.002;

  std::vector<double> phase_pdf_rates{0.5, 2.0, 4.0};
  std::vector<double> phase_pdf_times{0.5, 1.0, 3.0};
  double mass_tolerance = 1e-6;

  /// Standard errors allowed between Monte Carlo and analytic values.
  double sigma_tolerance = 4.0;
};

struct OutputSpec {
  std::string csv = "curves.csv";
  std::string summary = "summary.json";
  std::string manifest = "manifest.json";
  std::string report = "verify_report.json";
};

struct ExperimentConfig {
  std::string experiment_id = "experiment";
  std::vector<double> alpha_values{1.0, 2.0};
  double gamma_min = 1e-4;
  double gamma_max = 1.0;
  std::size_t n_fluctuators = 100;
  std::size_t n_rate_samples = 30;
  TauGridSpec tau_grid;
  std::uint64_t master_seed = 2013;
  BathMode bath_mode = BathMode::IndependentSamples;
  /// Rate-sample index shared by every alpha of a sweep.
  std::size_t sweep_sample = 0;
  int threads = 0;
  SpectrumSettings spectrum;
  VerifySettings verify;
  OutputSpec outputs;

  /// Throws ParameterError describing the first violated constraint.
  void validate() const;

  NoiseParams noise_params(double alpha) const { return {alpha, gamma_min, gamma_max, n_fluctuators}; }
};

void to_json(nlohmann::json& j, const ExperimentConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

/// Seed of bath `bath` (0 = A, 1 = B) for rate sample `sample` at alpha index `alpha_index`.
std::uint64_t ensemble_seed(std::uint64_t master_seed, std::size_t alpha_index, std::size_t sample, std::size_t bath);

struct CurveRecord {
  std::string experiment_id;
  double alpha = 1.0;
  std::size_t sample = 0;
  BathMode bath_mode = BathMode::IndependentSamples;
  double tau = 0.0;
  double gamma_factor = 1.0;
  double negativity = 1.0;
  double discord = 1.0;
};

/// First revival of a correlation curve: a strict local maximum occurring
/// after the curve first drops below `drop_level`, with topographic
/// prominence of at least `min_prominence`.
struct Revival {
  bool found = false;
  std::size_t index = 0;
  double tau = 0.0;
  double height = 0.0;
  double prominence = 0.0;
};

inline constexpr double kRevivalDropLevel = 0.5;
inline constexpr double kRevivalMinProminence = 1e-3;

Revival find_first_revival(std::span<const double> tau, std::span<const double> values,
                           double drop_level = kRevivalDropLevel, double min_prominence = kRevivalMinProminence);

struct CurveSummary {
  double alpha = 1.0;
  std::size_t sample = 0;
  Revival first_revival;
};

struct EnsembleResult {
  std::vector<CurveRecord> rows;
  std::vector<CurveSummary> curves;
};

/// For each alpha and rate sample: draw both baths, evaluate the gamma
/// factor on the grid and emit negativity and discord rows.
EnsembleResult run_ensemble(const ExperimentConfig& config);

struct SweepResult {
  std::vector<double> alphas;
  std::vector<double> tau;
  /// Row-major alpha x tau grids.
  std::vector<double> gamma_factor;
  std::vector<double> negativity;
  std::vector<double> discord;
  std::vector<Revival> first_revival;  ///< one per alpha
  bool revival_heights_nondecreasing = false;
  std::size_t max_revival_alpha_index = 0;

  std::vector<CurveRecord> rows(const std::string& experiment_id, std::size_t sample, BathMode mode) const;
};

/// One rate sample per alpha, all drawn from the same uniform variates
/// (the sample seed ignores alpha), so rates shrink monotonically with alpha.
SweepResult run_alpha_sweep(const ExperimentConfig& config);

struct SpectrumRow {
  double alpha = 1.0;
  double frequency = 0.0;
  double ensemble = 0.0;
  double ensemble_normalized = 0.0;
  double analytic = 0.0;
  std::optional<double> pooled_mean;
  std::optional<double> pooled_std_error;
};

struct SpectrumSummary {
  double alpha = 1.0;
  double ensemble_slope = 0.0;
  double analytic_slope = 0.0;
};

struct SpectrumResult {
  std::vector<SpectrumRow> rows;
  std::vector<SpectrumSummary> summaries;
};

SpectrumResult run_spectrum(const ExperimentConfig& config);

/// Shortest round-trip decimal form, independent of the C locale.
std::string format_double(double value);

void write_curve_csv(std::ostream& out, const std::vector<CurveRecord>& rows);
void write_spectrum_csv(std::ostream& out, const SpectrumResult& result);

nlohmann::json ensemble_summary_json(const EnsembleResult& result);
nlohmann::json sweep_summary_json(const SweepResult& result);
nlohmann::json spectrum_summary_json(const SpectrumResult& result);
nlohmann::json run_manifest(const ExperimentConfig& config, const std::string& command);

}  // namespace rtnq
