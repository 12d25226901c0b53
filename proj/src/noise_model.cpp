#include "rtnq/noise_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <omp.h>

#include "rtnq/errors.hpp"
#include "rtnq/rng.hpp"
#include "rtnq/summation.hpp"

namespace rtnq {

namespace {

bool is_log_branch(double alpha) { return std::abs(alpha - 1.0) < kAlphaOneTolerance; }

double log_range(const NoiseParams& p) { return std::log(p.gamma_max / p.gamma_min); }

// gamma_min^{1-alpha} - gamma_max^{1-alpha}, written to stay accurate as
// alpha -> 1 or gamma_max -> gamma_min.
double power_norm(const NoiseParams& p) {
  const double a = 1.0 - p.alpha;
  return -std::pow(p.gamma_min, a) * std::expm1(a * log_range(p));
}

void require_rate_in_range(const NoiseParams& p, double gamma) {
  if (!(gamma >= p.gamma_min && gamma <= p.gamma_max)) {
    std::ostringstream msg;
    msg << "switching rate " << gamma << " outside [" << p.gamma_min << ", " << p.gamma_max << "]";
    throw DomainError(msg.str());
  }
}

}  // namespace

void NoiseParams::validate() const {
  if (!(alpha >= 1.0 && alpha <= 2.0)) {
    throw ParameterError("alpha must lie in [1, 2], got " + std::to_string(alpha));
  }
  if (!(gamma_min > 0.0)) {
    throw ParameterError("gamma_min must be positive");
  }
  if (!(gamma_max > gamma_min) || !std::isfinite(gamma_max)) {
    throw ParameterError("gamma_max must be finite and strictly greater than gamma_min");
  }
  if (n_fluctuators < 1) {
    throw ParameterError("n_fluctuators must be at least 1");
  }
}

double switching_rate_pdf(const NoiseParams& params, double gamma) {
  params.validate();
  require_rate_in_range(params, gamma);
  if (is_log_branch(params.alpha)) {
    return 1.0 / (gamma * log_range(params));
  }
  return (params.alpha - 1.0) * std::pow(gamma, -params.alpha) / power_norm(params);
}

double switching_rate_cdf(const NoiseParams& params, double gamma) {
  params.validate();
  if (gamma <= params.gamma_min) return 0.0;
  if (gamma >= params.gamma_max) return 1.0;
  const double x = std::log(gamma / params.gamma_min);
  if (is_log_branch(params.alpha)) {
    return x / log_range(params);
  }
  const double a = 1.0 - params.alpha;
  return std::expm1(a * x) / std::expm1(a * log_range(params));
}

namespace {

// Inverse CDF with the per-call constants precomputed, for sampling loops.
class QuantileMap {
 public:
  explicit QuantileMap(const NoiseParams& params)
      : gmin_(params.gamma_min),
        gmax_(params.gamma_max),
        log_branch_(is_log_branch(params.alpha)),
        a_(1.0 - params.alpha),
        range_(log_range(params)),
        lo_scale_(std::expm1(a_ * range_)),
        hi_scale_(std::expm1(-a_ * range_)) {}

  double operator()(double u) const {
    double gamma;
    if (log_branch_) {
      gamma = gmin_ * std::exp(u * range_);
    } else if (u <= 0.5) {
      // Factor through the nearer endpoint so the log1p argument never approaches -1.
      gamma = gmin_ * std::exp(std::log1p(u * lo_scale_) / a_);
    } else {
      gamma = gmax_ * std::exp(std::log1p((1.0 - u) * hi_scale_) / a_);
    }
    return std::clamp(gamma, gmin_, gmax_);
  }

 private:
  double gmin_, gmax_;
  bool log_branch_;
  double a_, range_, lo_scale_, hi_scale_;
};

}  // namespace

double switching_rate_quantile(const NoiseParams& params, double u) {
  params.validate();
  if (!(u >= 0.0 && u <= 1.0)) {
    throw DomainError("quantile argument must lie in [0, 1]");
  }
  return QuantileMap(params)(u);
}

FluctuatorEnsemble sample_switching_rates(const NoiseParams& params, std::uint64_t seed) {
  params.validate();
  FluctuatorEnsemble out{params, {}, seed};
  out.rates.resize(params.n_fluctuators);
  const QuantileMap quantile(params);
  RandomStream stream(derive_key(seed, {}));
  for (double& r : out.rates) r = quantile(stream.uniform());
  return out;
}

double rtn_spectrum(double gamma, double f) {
  if (!(gamma > 0.0)) throw ParameterError("rtn_spectrum: gamma must be positive");
  if (!(f >= 0.0)) throw ParameterError("rtn_spectrum: frequency must be non-negative");
  const double w = 2.0 * std::numbers::pi * f;
  return 4.0 * gamma / (w * w + gamma * gamma);
}

double ensemble_spectrum(const FluctuatorEnsemble& ensemble, double f) {
  if (ensemble.rates.empty()) throw ParameterError("ensemble_spectrum: empty ensemble");
  CompensatedSum s;
  for (double g : ensemble.rates) s.add(rtn_spectrum(g, f));
  return s.value();
}

double analytic_spectrum(const NoiseParams& params, double f) {
  params.validate();
  if (!(f > 0.0)) throw ParameterError("analytic_spectrum: frequency must be positive");

  // Integrate in x = ln(gamma / gamma_min) / ln(gamma_max / gamma_min) on [0, 1]; the
  // Lorentzian is a bump of unit width in ln(gamma), and a unit interval keeps the
  // quadrature error estimate meaningful even for very narrow ranges.
  const double lo = std::log(params.gamma_min);
  const double range = log_range(params);
  const bool log_branch = is_log_branch(params.alpha);
  const double norm = log_branch ? 1.0 : range * (params.alpha - 1.0) / power_norm(params);
  auto integrand = [&](double x) {
    const double g = std::exp(lo + x * range);
    const double weight = log_branch ? norm : norm * std::pow(g, 1.0 - params.alpha);
    return rtn_spectrum(g, f) * weight;
  };

  constexpr double kTarget = 1e-6;
  double error = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, 1.0, 20, 1e-10, &error);
  const double rel = value != 0.0 ? error / std::abs(value) : error;
  if (!std::isfinite(value) || rel > kTarget) {
    throw NumericError("analytic_spectrum quadrature did not converge", rel);
  }
  return value;
}

double fit_spectral_slope(std::span<const double> freqs, std::span<const double> spectrum) {
  if (freqs.size() != spectrum.size()) throw ParameterError("fit_spectral_slope: size mismatch");
  if (freqs.size() < 2) throw ParameterError("fit_spectral_slope: need at least two points");
  const auto n = static_cast<double>(freqs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    if (!(freqs[i] > 0.0) || !(spectrum[i] > 0.0)) {
      throw ParameterError("fit_spectral_slope: frequencies and spectra must be positive");
    }
    mx += std::log(freqs[i]);
    my += std::log(spectrum[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    const double dx = std::log(freqs[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(spectrum[i]) - my);
  }
  if (!(sxx > 0.0)) throw ParameterError("fit_spectral_slope: frequencies must not all coincide");
  return sxy / sxx;
}

std::vector<double> log_space(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw ParameterError("log_space: need 0 < lo < hi and n >= 2");
  std::vector<double> out(n);
  const double a = std::log10(lo);
  const double step = (std::log10(hi) - a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::pow(10.0, a + step * static_cast<double>(i));
  out.front() = lo;
  out.back() = hi;
  return out;
}

// Pooled spectra: per-ensemble values are reduced in ensemble order, so the
// serial and parallel paths produce identical bits.

namespace {

void normalized_spectrum(const NoiseParams& params, std::span<const double> freqs, std::uint64_t seed,
                         std::size_t index, std::span<double> out) {
  const auto ens = sample_switching_rates(params, derive_key(seed, {index}));
  const double n = static_cast<double>(ens.rates.size());
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    const double w = 2.0 * std::numbers::pi * freqs[k];
    const double w2 = w * w;
    CompensatedSum sum;
    for (double g : ens.rates) sum.add(4.0 * g / (w2 + g * g));
    out[k] = sum.value() / n;
  }
}

PooledSpectrum reduce_pooled(std::span<const double> per_ensemble, std::size_t n_ensembles, std::size_t n_freqs) {
  PooledSpectrum out;
  out.n_ensembles = n_ensembles;
  out.mean.assign(n_freqs, 0.0);
  out.std_error.assign(n_freqs, 0.0);
  for (std::size_t k = 0; k < n_freqs; ++k) {
    CompensatedSum s, s2;
    for (std::size_t e = 0; e < n_ensembles; ++e) {
      const double v = per_ensemble[e * n_freqs + k];
      s.add(v);
      s2.add(v * v);
    }
    const double n = static_cast<double>(n_ensembles);
    const double mean = s.value() / n;
    out.mean[k] = mean;
    if (n_ensembles > 1) {
      const double var = std::max(0.0, (s2.value() - n * mean * mean) / (n - 1.0));
      out.std_error[k] = std::sqrt(var / n);
    }
  }
  return out;
}

void check_pooled_args(const NoiseParams& params, std::span<const double> freqs, std::size_t n_ensembles) {
  params.validate();
  if (freqs.empty()) throw ParameterError("pooled_ensemble_spectrum: no frequencies");
  if (n_ensembles < 1) throw ParameterError("pooled_ensemble_spectrum: need at least one ensemble");
}

}  // namespace

PooledSpectrum pooled_ensemble_spectrum(const NoiseParams& params, std::span<const double> freqs,
                                        std::size_t n_ensembles, std::uint64_t seed, int threads) {
  check_pooled_args(params, freqs, n_ensembles);
  const std::size_t nf = freqs.size();
  std::vector<double> values(n_ensembles * nf);
  const auto n = static_cast<std::int64_t>(n_ensembles);
  const int nthreads = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 16) num_threads(nthreads)
  for (std::int64_t e = 0; e < n; ++e) {
    const auto idx = static_cast<std::size_t>(e);
    normalized_spectrum(params, freqs, seed, idx, std::span<double>(values).subspan(idx * nf, nf));
  }
  return reduce_pooled(values, n_ensembles, nf);
}

namespace reference {

PooledSpectrum pooled_ensemble_spectrum(const NoiseParams& params, std::span<const double> freqs,
                                        std::size_t n_ensembles, std::uint64_t seed) {
  check_pooled_args(params, freqs, n_ensembles);
  const std::size_t nf = freqs.size();
  std::vector<double> values(n_ensembles * nf);
  for (std::size_t e = 0; e < n_ensembles; ++e) {
    normalized_spectrum(params, freqs, seed, e, std::span<double>(values).subspan(e * nf, nf));
  }
  return reduce_pooled(values, n_ensembles, nf);
}

}  // namespace reference

void to_json(nlohmann::json& j, const NoiseParams& p) {
  j = nlohmann::json{{"alpha", p.alpha},
                     {"gamma_min", p.gamma_min},
                     {"gamma_max", p.gamma_max},
                     {"n_fluctuators", p.n_fluctuators}};
}

void from_json(const nlohmann::json& j, NoiseParams& p) {
  j.at("alpha").get_to(p.alpha);
  j.at("gamma_min").get_to(p.gamma_min);
  j.at("gamma_max").get_to(p.gamma_max);
  j.at("n_fluctuators").get_to(p.n_fluctuators);
}

void to_json(nlohmann::json& j, const FluctuatorEnsemble& e) {
  to_json(j, e.params);
  j["seed"] = e.sample_seed;
  j["rates"] = e.rates;
}

void from_json(const nlohmann::json& j, FluctuatorEnsemble& e) {
  from_json(j, e.params);
  j.at("seed").get_to(e.sample_seed);
  j.at("rates").get_to(e.rates);
  e.params.validate();
  if (e.rates.size() != e.params.n_fluctuators) {
    throw ParameterError("ensemble JSON: rates length does not match n_fluctuators");
  }
}

}  // namespace rtnq
