#include "rtnq/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>

#include "rtnq/errors.hpp"
#include "rtnq/quantum_state.hpp"
#include "rtnq/rng.hpp"

#ifndef RTNQ_VERSION
#define RTNQ_VERSION "unknown"
#endif

namespace rtnq {

const char* version() { return RTNQ_VERSION; }

std::string to_string(BathMode mode) {
  return mode == BathMode::SharedSample ? "shared" : "independent";
}

BathMode bath_mode_from_string(const std::string& name) {
  if (name == "shared" || name == "shared-sample") return BathMode::SharedSample;
  if (name == "independent" || name == "independent-samples") return BathMode::IndependentSamples;
  throw ParameterError("unknown bath_mode '" + name + "' (expected 'independent' or 'shared')");
}

// ---------------------------------------------------------------------------
// Config

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError("invalid config: " + what);
}

void validate_grid(const TauGridSpec& g, const std::string& name) {
  require(g.n_points >= 1, name + ".n_points must be >= 1");
  require(g.n_points == 1 || g.tau_max > 0.0, name + ".tau_max must be > 0");
}

void validate_alpha(double a, const std::string& name) {
  require(a >= 1.0 && a <= 2.0, name + " values must lie in [1, 2]");
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ParameterError("invalid config: '" + where + "' must be an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (!keys.contains(item.key())) {
      throw ParameterError("invalid config: unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

void read_grid(const nlohmann::json& j, const char* key, TauGridSpec& g) {
  if (!j.contains(key)) return;
  const auto& o = j.at(key);
  check_keys(o, {"tau_max", "n_points"}, key);
  read(o, "tau_max", g.tau_max);
  read(o, "n_points", g.n_points);
}

nlohmann::json grid_json(const TauGridSpec& g) { return {{"tau_max", g.tau_max}, {"n_points", g.n_points}}; }

void read_spectrum(const nlohmann::json& j, const char* key, SpectrumSettings& s) {
  if (!j.contains(key)) return;
  const auto& o = j.at(key);
  check_keys(o, {"f_min", "f_max", "n_freqs", "pooled_ensembles"}, key);
  read(o, "f_min", s.f_min);
  read(o, "f_max", s.f_max);
  read(o, "n_freqs", s.n_freqs);
  read(o, "pooled_ensembles", s.pooled_ensembles);
}

nlohmann::json spectrum_json(const SpectrumSettings& s) {
  return {{"f_min", s.f_min}, {"f_max", s.f_max}, {"n_freqs", s.n_freqs}, {"pooled_ensembles", s.pooled_ensembles}};
}

void validate_spectrum(const SpectrumSettings& s, const std::string& name) {
  require(s.f_min > 0.0 && s.f_max > s.f_min, name + " needs 0 < f_min < f_max");
  require(s.n_freqs >= 2, name + ".n_freqs must be >= 2");
}

nlohmann::json verify_json(const VerifySettings& v) {
  nlohmann::json j = {{"dephasing_rates", v.dephasing_rates},
                      {"dephasing_grid", grid_json(v.dephasing_grid)},
                      {"dephasing_trajectories", v.dephasing_trajectories},
                      {"dephasing_min_pass_fraction", v.dephasing_min_pass_fraction},
                      {"state_fluctuators", v.state_fluctuators},
                      {"state_alpha", v.state_alpha},
                      {"state_gamma_range", {v.state_gamma_min, v.state_gamma_max}},
                      {"state_grid", grid_json(v.state_grid)},
                      {"state_trajectories", v.state_trajectories},
                      {"negativity_points", v.negativity_points},
                      {"spectrum_alphas", v.spectrum_alphas},
                      {"spectrum_gamma_range", {v.spectrum_gamma_min, v.spectrum_gamma_max}},
                      {"spectrum_fluctuators", v.spectrum_fluctuators},
                      {"spectrum", spectrum_json(v.spectrum)},
                      {"slope_tolerance", v.slope_tolerance},
                      {"ks_alphas", v.ks_alphas},
                      {"ks_samples", v.ks_samples},
                      {"ks_threshold", v.ks_threshold},
                      {"phase_pdf_rates", v.phase_pdf_rates},
                      {"phase_pdf_times", v.phase_pdf_times},
                      {"mass_tolerance", v.mass_tolerance},
                      {"sigma_tolerance", v.sigma_tolerance}};
  j["slope_target"] = v.slope_target ? nlohmann::json(*v.slope_target) : nlohmann::json(nullptr);
  return j;
}

void read_range(const nlohmann::json& j, const char* key, double& lo, double& hi) {
  if (!j.contains(key)) return;
  const auto& r = j.at(key);
  if (!r.is_array() || r.size() != 2) throw ParameterError(std::string("invalid config: ") + key + " must be [min, max]");
  r.at(0).get_to(lo);
  r.at(1).get_to(hi);
}

void read_verify(const nlohmann::json& j, VerifySettings& v) {
  check_keys(j,
             {"dephasing_rates", "dephasing_grid", "dephasing_trajectories", "dephasing_min_pass_fraction",
              "state_fluctuators", "state_alpha", "state_gamma_range", "state_grid", "state_trajectories",
              "negativity_points", "spectrum_alphas", "spectrum_gamma_range", "spectrum_fluctuators", "spectrum",
              "slope_tolerance", "slope_target", "ks_alphas", "ks_samples", "ks_threshold", "phase_pdf_rates",
              "phase_pdf_times", "mass_tolerance", "sigma_tolerance"},
             "verify");
  read(j, "dephasing_rates", v.dephasing_rates);
  read_grid(j, "dephasing_grid", v.dephasing_grid);
  read(j, "dephasing_trajectories", v.dephasing_trajectories);
  read(j, "dephasing_min_pass_fraction", v.dephasing_min_pass_fraction);
  read(j, "state_fluctuators", v.state_fluctuators);
  read(j, "state_alpha", v.state_alpha);
  read_range(j, "state_gamma_range", v.state_gamma_min, v.state_gamma_max);
  read_grid(j, "state_grid", v.state_grid);
  read(j, "state_trajectories", v.state_trajectories);
  read(j, "negativity_points", v.negativity_points);
  read(j, "spectrum_alphas", v.spectrum_alphas);
  read_range(j, "spectrum_gamma_range", v.spectrum_gamma_min, v.spectrum_gamma_max);
  read(j, "spectrum_fluctuators", v.spectrum_fluctuators);
  read_spectrum(j, "spectrum", v.spectrum);
  read(j, "slope_tolerance", v.slope_tolerance);
  if (j.contains("slope_target") && !j.at("slope_target").is_null()) v.slope_target = j.at("slope_target").get<double>();
  read(j, "ks_alphas", v.ks_alphas);
  read(j, "ks_samples", v.ks_samples);
  read(j, "ks_threshold", v.ks_threshold);
  read(j, "phase_pdf_rates", v.phase_pdf_rates);
  read(j, "phase_pdf_times", v.phase_pdf_times);
  read(j, "mass_tolerance", v.mass_tolerance);
  read(j, "sigma_tolerance", v.sigma_tolerance);
}

void validate_verify(const VerifySettings& v) {
  require(!v.dephasing_rates.empty(), "verify.dephasing_rates must not be empty");
  for (double g : v.dephasing_rates) require(g >= 0.0, "verify.dephasing_rates must be non-negative");
  validate_grid(v.dephasing_grid, "verify.dephasing_grid");
  require(v.dephasing_trajectories >= 2, "verify.dephasing_trajectories must be >= 2");
  require(v.dephasing_min_pass_fraction > 0.0 && v.dephasing_min_pass_fraction <= 1.0,
          "verify.dephasing_min_pass_fraction must lie in (0, 1]");
  NoiseParams{v.state_alpha, v.state_gamma_min, v.state_gamma_max, std::max<std::size_t>(v.state_fluctuators, 1)}
      .validate();
  require(v.state_fluctuators >= 1, "verify.state_fluctuators must be >= 1");
  validate_grid(v.state_grid, "verify.state_grid");
  require(v.state_trajectories >= 2, "verify.state_trajectories must be >= 2");
  require(v.negativity_points >= 2, "verify.negativity_points must be >= 2");
  for (double a : v.spectrum_alphas) validate_alpha(a, "verify.spectrum_alphas");
  NoiseParams{1.0, v.spectrum_gamma_min, v.spectrum_gamma_max, std::max<std::size_t>(v.spectrum_fluctuators, 1)}
      .validate();
  require(v.spectrum_fluctuators >= 1, "verify.spectrum_fluctuators must be >= 1");
  validate_spectrum(v.spectrum, "verify.spectrum");
  require(v.slope_tolerance > 0.0, "verify.slope_tolerance must be positive");
  for (double a : v.ks_alphas) validate_alpha(a, "verify.ks_alphas");
  require(v.ks_samples >= 1, "verify.ks_samples must be >= 1");
  for (double g : v.phase_pdf_rates) require(g >= 0.0, "verify.phase_pdf_rates must be non-negative");
  for (double t : v.phase_pdf_times) require(t > 0.0, "verify.phase_pdf_times must be positive");
  require(v.sigma_tolerance > 0.0, "verify.sigma_tolerance must be positive");
}

}  // namespace

void ExperimentConfig::validate() const {
  require(!experiment_id.empty(), "experiment_id must not be empty");
  require(!alpha_values.empty(), "alpha_values must not be empty");
  for (double a : alpha_values) validate_alpha(a, "alpha_values");
  require(gamma_min > 0.0, "gamma_range minimum must be positive");
  require(gamma_max > gamma_min, "gamma_range must satisfy min < max (degenerate or inverted range)");
  require(n_fluctuators >= 1, "n_fluctuators must be >= 1");
  require(n_rate_samples >= 1, "n_rate_samples must be >= 1");
  validate_grid(tau_grid, "tau_grid");
  require(threads >= 0, "threads must be >= 0");
  validate_spectrum(spectrum, "spectrum");
  validate_verify(verify);
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"experiment_id", c.experiment_id},
                     {"alpha_values", c.alpha_values},
                     {"gamma_range", {c.gamma_min, c.gamma_max}},
                     {"n_fluctuators", c.n_fluctuators},
                     {"n_rate_samples", c.n_rate_samples},
                     {"tau_grid", grid_json(c.tau_grid)},
                     {"master_seed", c.master_seed},
                     {"bath_mode", to_string(c.bath_mode)},
                     {"sweep_sample", c.sweep_sample},
                     {"spectrum", spectrum_json(c.spectrum)},
                     {"verify", verify_json(c.verify)},
                     {"outputs",
                      {{"csv", c.outputs.csv},
                       {"summary", c.outputs.summary},
                       {"manifest", c.outputs.manifest},
                       {"report", c.outputs.report}}}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  check_keys(j,
             {"experiment_id", "alpha_values", "gamma_range", "n_fluctuators", "n_rate_samples", "tau_grid",
              "master_seed", "bath_mode", "sweep_sample", "threads", "spectrum", "verify", "outputs"},
             "config");
  read(j, "experiment_id", c.experiment_id);
  read(j, "alpha_values", c.alpha_values);
  read_range(j, "gamma_range", c.gamma_min, c.gamma_max);
  read(j, "n_fluctuators", c.n_fluctuators);
  read(j, "n_rate_samples", c.n_rate_samples);
  read_grid(j, "tau_grid", c.tau_grid);
  read(j, "master_seed", c.master_seed);
  if (j.contains("bath_mode")) c.bath_mode = bath_mode_from_string(j.at("bath_mode").get<std::string>());
  read(j, "sweep_sample", c.sweep_sample);
  read(j, "threads", c.threads);
  read_spectrum(j, "spectrum", c.spectrum);
  if (j.contains("verify")) read_verify(j.at("verify"), c.verify);
  if (j.contains("outputs")) {
    const auto& o = j.at("outputs");
    check_keys(o, {"csv", "summary", "manifest", "report"}, "outputs");
    read(o, "csv", c.outputs.csv);
    read(o, "summary", c.outputs.summary);
    read(o, "manifest", c.outputs.manifest);
    read(o, "report", c.outputs.report);
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  ExperimentConfig config;
  try {
    config = j.get<ExperimentConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError("config file '" + path + "': " + e.what());
  }
  config.validate();
  return config;
}

std::uint64_t ensemble_seed(std::uint64_t master_seed, std::size_t alpha_index, std::size_t sample, std::size_t bath) {
  return derive_key(master_seed, {alpha_index, sample, bath});
}

// ---------------------------------------------------------------------------
// Revival detection

Revival find_first_revival(std::span<const double> tau, std::span<const double> values, double drop_level,
                           double min_prominence) {
  if (tau.size() != values.size()) throw ParameterError("find_first_revival: size mismatch");
  const std::size_t n = values.size();
  Revival out;
  std::size_t start = 0;
  while (start < n && !(values[start] < drop_level)) ++start;
  if (start >= n) return out;

  for (std::size_t i = std::max<std::size_t>(start, 1); i + 1 < n; ++i) {
    const double v = values[i];
    if (!(v > values[i - 1] && v > values[i + 1])) continue;
    double left = v;
    for (std::size_t k = i; k-- > 0 && values[k] <= v;) left = std::min(left, values[k]);
    double right = v;
    for (std::size_t k = i + 1; k < n && values[k] <= v; ++k) right = std::min(right, values[k]);
    const double prominence = v - std::max(left, right);
    if (prominence >= min_prominence) {
      out = {true, i, tau[i], v, prominence};
      return out;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Runs

namespace {

struct BathPair {
  FluctuatorEnsemble a;
  FluctuatorEnsemble b;
};

BathPair draw_baths(const NoiseParams& params, BathMode mode, std::uint64_t seed_a, std::uint64_t seed_b) {
  BathPair pair{sample_switching_rates(params, seed_a), {}};
  pair.b = mode == BathMode::SharedSample ? pair.a : sample_switching_rates(params, seed_b);
  return pair;
}

std::vector<double> absolute(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](double x) { return std::abs(x); });
  return out;
}

}  // namespace

EnsembleResult run_ensemble(const ExperimentConfig& config) {
  config.validate();
  const auto grid = config.tau_grid.points();
  EnsembleResult result;
  result.rows.reserve(config.alpha_values.size() * config.n_rate_samples * grid.size());
  for (std::size_t ai = 0; ai < config.alpha_values.size(); ++ai) {
    const double alpha = config.alpha_values[ai];
    const NoiseParams params = config.noise_params(alpha);
    for (std::size_t s = 0; s < config.n_rate_samples; ++s) {
      const auto baths = draw_baths(params, config.bath_mode, ensemble_seed(config.master_seed, ai, s, 0),
                                    ensemble_seed(config.master_seed, ai, s, 1));
      const auto curve = gamma_curve(baths.a, baths.b, grid, config.threads);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto c = correlations_closed(curve.values[i], grid[i]);
        result.rows.push_back(
            {config.experiment_id, alpha, s, config.bath_mode, grid[i], c.gamma_factor, c.negativity, c.discord});
      }
      result.curves.push_back({alpha, s, find_first_revival(grid, absolute(curve.values))});
    }
  }
  return result;
}

SweepResult run_alpha_sweep(const ExperimentConfig& config) {
  config.validate();
  SweepResult r;
  r.alphas = config.alpha_values;
  r.tau = config.tau_grid.points();
  const std::size_t nt = r.tau.size();
  for (std::size_t ai = 0; ai < r.alphas.size(); ++ai) {
    const NoiseParams params = config.noise_params(r.alphas[ai]);
    const auto baths = draw_baths(params, config.bath_mode, ensemble_seed(config.master_seed, 0, config.sweep_sample, 0),
                                  ensemble_seed(config.master_seed, 0, config.sweep_sample, 1));
    const auto curve = gamma_curve(baths.a, baths.b, r.tau, config.threads);
    std::vector<double> n_row(nt);
    for (std::size_t i = 0; i < nt; ++i) {
      const auto c = correlations_closed(curve.values[i], r.tau[i]);
      r.gamma_factor.push_back(c.gamma_factor);
      r.negativity.push_back(c.negativity);
      r.discord.push_back(c.discord);
      n_row[i] = c.negativity;
    }
    r.first_revival.push_back(find_first_revival(r.tau, n_row));
  }

  std::vector<std::size_t> order(r.alphas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return r.alphas[x] < r.alphas[y]; });
  auto height = [&](std::size_t k) { return r.first_revival[k].found ? r.first_revival[k].height : 0.0; };
  r.revival_heights_nondecreasing = true;
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (height(order[k]) < height(order[k - 1])) r.revival_heights_nondecreasing = false;
  }
  r.max_revival_alpha_index = 0;
  for (std::size_t k = 1; k < r.alphas.size(); ++k) {
    if (height(k) > height(r.max_revival_alpha_index)) r.max_revival_alpha_index = k;
  }
  return r;
}

std::vector<CurveRecord> SweepResult::rows(const std::string& experiment_id, std::size_t sample,
                                           BathMode mode) const {
  std::vector<CurveRecord> out;
  out.reserve(gamma_factor.size());
  for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
    for (std::size_t i = 0; i < tau.size(); ++i) {
      const std::size_t k = ai * tau.size() + i;
      out.push_back({experiment_id, alphas[ai], sample, mode, tau[i], gamma_factor[k], negativity[k], discord[k]});
    }
  }
  return out;
}

SpectrumResult run_spectrum(const ExperimentConfig& config) {
  config.validate();
  const auto freqs = log_space(config.spectrum.f_min, config.spectrum.f_max, config.spectrum.n_freqs);
  SpectrumResult result;
  for (std::size_t ai = 0; ai < config.alpha_values.size(); ++ai) {
    const double alpha = config.alpha_values[ai];
    const NoiseParams params = config.noise_params(alpha);
    const auto ens = sample_switching_rates(params, ensemble_seed(config.master_seed, ai, 0, 0));
    std::optional<PooledSpectrum> pooled;
    if (config.spectrum.pooled_ensembles > 0) {
      pooled = pooled_ensemble_spectrum(params, freqs, config.spectrum.pooled_ensembles,
                                        derive_key(config.master_seed, {ai, 0x5045ULL}), config.threads);
    }
    std::vector<double> ens_values, analytic_values;
    for (std::size_t k = 0; k < freqs.size(); ++k) {
      SpectrumRow row;
      row.alpha = alpha;
      row.frequency = freqs[k];
      row.ensemble = ensemble_spectrum(ens, freqs[k]);
      row.ensemble_normalized = row.ensemble / static_cast<double>(ens.rates.size());
      row.analytic = analytic_spectrum(params, freqs[k]);
      if (pooled) {
        row.pooled_mean = pooled->mean[k];
        row.pooled_std_error = pooled->std_error[k];
      }
      ens_values.push_back(row.ensemble);
      analytic_values.push_back(row.analytic);
      result.rows.push_back(row);
    }
    result.summaries.push_back(
        {alpha, fit_spectral_slope(freqs, ens_values), fit_spectral_slope(freqs, analytic_values)});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Output

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_curve_csv(std::ostream& out, const std::vector<CurveRecord>& rows) {
  out << "experiment_id,alpha,sample,bath_mode,tau,gamma_factor,negativity,discord\n";
  for (const auto& r : rows) {
    out << r.experiment_id << ',' << format_double(r.alpha) << ',' << r.sample << ',' << to_string(r.bath_mode) << ','
        << format_double(r.tau) << ',' << format_double(r.gamma_factor) << ',' << format_double(r.negativity) << ','
        << format_double(r.discord) << '\n';
  }
}

void write_spectrum_csv(std::ostream& out, const SpectrumResult& result) {
  const bool pooled = !result.rows.empty() && result.rows.front().pooled_mean.has_value();
  out << "alpha,frequency,ensemble,ensemble_normalized,analytic";
  if (pooled) out << ",pooled_mean,pooled_std_error";
  out << '\n';
  for (const auto& r : result.rows) {
    out << format_double(r.alpha) << ',' << format_double(r.frequency) << ',' << format_double(r.ensemble) << ','
        << format_double(r.ensemble_normalized) << ',' << format_double(r.analytic);
    if (pooled) out << ',' << format_double(*r.pooled_mean) << ',' << format_double(*r.pooled_std_error);
    out << '\n';
  }
}

namespace {

nlohmann::json revival_json(const Revival& r) {
  if (!r.found) return {{"found", false}};
  return {{"found", true}, {"tau", r.tau}, {"height", r.height}, {"prominence", r.prominence}};
}

}  // namespace

nlohmann::json ensemble_summary_json(const EnsembleResult& result) {
  nlohmann::json curves = nlohmann::json::array();
  for (const auto& c : result.curves) {
    curves.push_back({{"alpha", c.alpha}, {"sample", c.sample}, {"first_revival", revival_json(c.first_revival)}});
  }
  return {{"curves", curves}};
}

nlohmann::json sweep_summary_json(const SweepResult& r) {
  nlohmann::json per_alpha = nlohmann::json::array();
  for (std::size_t k = 0; k < r.alphas.size(); ++k) {
    per_alpha.push_back({{"alpha", r.alphas[k]}, {"first_revival", revival_json(r.first_revival[k])}});
  }
  return {{"first_revival_by_alpha", per_alpha},
          {"revival_heights_nondecreasing", r.revival_heights_nondecreasing},
          {"max_revival_alpha", r.alphas.empty() ? 0.0 : r.alphas[r.max_revival_alpha_index]}};
}

nlohmann::json spectrum_summary_json(const SpectrumResult& result) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : result.summaries) {
    out.push_back({{"alpha", s.alpha}, {"ensemble_slope", s.ensemble_slope}, {"analytic_slope", s.analytic_slope}});
  }
  return {{"slopes", out}};
}

nlohmann::json run_manifest(const ExperimentConfig& config, const std::string& command) {
  return {{"tool", "rtnq"}, {"version", version()}, {"command", command}, {"config", config}};
}

}  // namespace rtnq
