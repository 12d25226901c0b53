#pragma once

// Switching-rate ensembles for 1/f^alpha noise built from random telegraph
// fluctuators. All rates and frequencies are in units of the coupling nu.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

namespace rtnq {

struct NoiseParams {
  double alpha = 1.0;
  double gamma_min = 1.0;
  double gamma_max = 10.0;
  std::size_t n_fluctuators = 1;

  /// Throws ParameterError unless 1 <= alpha <= 2, 0 < gamma_min < gamma_max
  /// and n_fluctuators >= 1.
  void validate() const;
};

struct FluctuatorEnsemble {
  NoiseParams params;
  std::vector<double> rates;
  std::uint64_t sample_seed = 0;
};

/// |alpha - 1| below this selects the logarithmic branch of the rate density.
inline constexpr double kAlphaOneTolerance = 1e-9;

/// Power-law switching-rate density p_alpha(gamma) on [gamma_min, gamma_max].
double switching_rate_pdf(const NoiseParams& params, double gamma);

/// Cumulative distribution of p_alpha.
double switching_rate_cdf(const NoiseParams& params, double gamma);

/// Inverse CDF. u in [0, 1]; u = 0 maps to gamma_min, u = 1 to gamma_max.
double switching_rate_quantile(const NoiseParams& params, double u);

/// Draw n_fluctuators i.i.d. rates by inverse-CDF sampling. Bit-reproducible in
/// (params, seed).
FluctuatorEnsemble sample_switching_rates(const NoiseParams& params, std::uint64_t seed);

/// Lorentzian spectrum of a single telegraph source, 4 gamma / (4 pi^2 f^2 + gamma^2).
double rtn_spectrum(double gamma, double f);

/// Sum of rtn_spectrum over all rates in the ensemble.
double ensemble_spectrum(const FluctuatorEnsemble& ensemble, double f);

/// Spectrum of a power-law distributed rate continuum, integrated over
/// [gamma_min, gamma_max] to relative tolerance 1e-6. Throws NumericError if
/// the quadrature does not converge.
double analytic_spectrum(const NoiseParams& params, double f);

/// Least-squares slope of log S against log f.
double fit_spectral_slope(std::span<const double> freqs, std::span<const double> spectrum);

/// `n` log-spaced points covering [lo, hi] inclusive.
std::vector<double> log_space(double lo, double hi, std::size_t n);

/// Mean and standard error of ensemble_spectrum / n_fluctuators across
/// independently sampled ensembles.
struct PooledSpectrum {
  std::vector<double> mean;
  std::vector<double> std_error;
  std::size_t n_ensembles = 0;
};

/// Ensembles are seeded derive_key(seed, {index}). OpenMP-parallel over
/// ensembles; output does not depend on `threads` (0 = runtime default).
PooledSpectrum pooled_ensemble_spectrum(const NoiseParams& params, std::span<const double> freqs,
                                        std::size_t n_ensembles, std::uint64_t seed, int threads = 0);

namespace reference {
PooledSpectrum pooled_ensemble_spectrum(const NoiseParams& params, std::span<const double> freqs,
                                        std::size_t n_ensembles, std::uint64_t seed);
}  // namespace reference

void to_json(nlohmann::json& j, const NoiseParams& params);
void from_json(const nlohmann::json& j, NoiseParams& params);
void to_json(nlohmann::json& j, const FluctuatorEnsemble& ensemble);
void from_json(const nlohmann::json& j, FluctuatorEnsemble& ensemble);

}  // namespace rtnq
