#include "rtnq/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rtnq/dephasing.hpp"
#include "rtnq/errors.hpp"
#include "rtnq/montecarlo.hpp"
#include "rtnq/quantum_state.hpp"
#include "rtnq/rng.hpp"

namespace rtnq {

bool VerificationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::vector<std::string> VerificationReport::failed_checks() const {
  std::vector<std::string> out;
  for (const auto& c : checks)
    if (!c.passed) out.push_back(c.name);
  return out;
}

nlohmann::json VerificationReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}, {"metrics", c.metrics}});
  }
  return {{"passed", all_passed()}, {"failed", failed_checks()}, {"checks", arr}};
}

double ks_statistic(const NoiseParams& params, std::vector<double>& sample) {
  if (sample.empty()) throw ParameterError("ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = switching_rate_cdf(params, sample[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

double switching_rate_pdf_integral(const NoiseParams& params) {
  params.validate();
  // In s = ln(gamma) the integrand gamma p(gamma) is smooth and bounded.
  auto f = [&](double s) {
    const double g = std::clamp(std::exp(s), params.gamma_min, params.gamma_max);
    return switching_rate_pdf(params, g) * g;
  };
  double error = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, std::log(params.gamma_min), std::log(params.gamma_max), 25, 1e-14, &error);
  if (error > 1e-10) throw NumericError("pdf normalization quadrature did not converge", error);
  return v;
}

namespace {

// Stream tags so each check draws from its own region of seed space.
enum SeedTag : std::uint64_t {
  kDephasingTag = 0xD1,
  kStateTag = 0xD2,
  kSpectrumTag = 0xD3,
  kPooledTag = 0xD4,
  kKsTag = 0xD5,
};

std::string fmt(double v) { return format_double(v); }

CheckResult check_dephasing(const ExperimentConfig& cfg) {
  const auto& v = cfg.verify;
  const auto grid = v.dephasing_grid.points();
  CheckResult r{"dephasing_mc_vs_analytic", true, "", nlohmann::json::array()};
  std::ostringstream detail;
  for (std::size_t k = 0; k < v.dephasing_rates.size(); ++k) {
    const double gamma = v.dephasing_rates[k];
    const McOptions opts{v.dephasing_trajectories, derive_key(cfg.master_seed, {kDephasingTag, k}), cfg.threads,
                         SignSampling::Random};
    const auto est = mc_dephasing(gamma, grid, opts);
    std::size_t ok = 0;
    double max_z = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double diff = std::abs(est[i].mean.real() - rtn_dephasing(gamma, grid[i]));
      const double imag = std::abs(est[i].mean.imag());
      const bool pass = diff <= v.sigma_tolerance * est[i].std_error + 1e-12 &&
                        imag <= v.sigma_tolerance * est[i].std_error_imag + 1e-12;
      ok += pass;
      if (est[i].std_error > 0.0) max_z = std::max(max_z, diff / est[i].std_error);
    }
    const double fraction = static_cast<double>(ok) / static_cast<double>(grid.size());
    const bool pass = fraction >= v.dephasing_min_pass_fraction;
    r.passed = r.passed && pass;
    r.metrics.push_back({{"gamma", gamma}, {"pass_fraction", fraction}, {"max_z", max_z}});
    if (!pass) detail << "gamma=" << fmt(gamma) << " pass fraction " << fmt(fraction) << "; ";
  }
  r.detail = r.passed ? "MC phase factor within tolerance" : detail.str();
  return r;
}

CheckResult check_state(const ExperimentConfig& cfg) {
  const auto& v = cfg.verify;
  const NoiseParams params{v.state_alpha, v.state_gamma_min, v.state_gamma_max, v.state_fluctuators};
  const auto a = sample_switching_rates(params, derive_key(cfg.master_seed, {kStateTag, 0}));
  const auto b = sample_switching_rates(params, derive_key(cfg.master_seed, {kStateTag, 1}));
  const auto grid = v.state_grid.points();
  const McOptions opts{v.state_trajectories, derive_key(cfg.master_seed, {kStateTag, 2}), cfg.threads,
                       SignSampling::Random};
  const auto est = mc_two_qubit_state(a, b, grid, opts);

  std::size_t neg_fail = 0, offx_fail = 0;
  double max_z = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double g = gamma_factor(a, b, grid[i]);
    const double diff = std::abs(negativity_eig(est[i].state) - std::abs(g));
    const double se = est[i].contrast.std_error;
    if (diff > v.sigma_tolerance * se + 1e-10) ++neg_fail;
    if (se > 0.0) max_z = std::max(max_z, diff / se);
    const auto& rho = est[i].state.matrix();
    for (int row = 0; row < 4; ++row) {
      for (int col = 0; col < 4; ++col) {
        if (row == col || row + col == 3) continue;
        const bool ok = std::abs(rho(row, col).real()) <= v.sigma_tolerance * est[i].std_error_real(row, col) + 1e-12 &&
                        std::abs(rho(row, col).imag()) <= v.sigma_tolerance * est[i].std_error_imag(row, col) + 1e-12;
        offx_fail += !ok;
      }
    }
  }
  CheckResult r{"two_qubit_state_mc_vs_closed_form", neg_fail == 0 && offx_fail == 0, "", {}};
  r.metrics = {{"points", grid.size()},
               {"negativity_failures", neg_fail},
               {"off_x_failures", offx_fail},
               {"max_negativity_z", max_z},
               {"rates_a", a.rates},
               {"rates_b", b.rates}};
  r.detail = r.passed ? "MC state negativity matches |Gamma|, off-X entries statistically zero"
                      : "negativity failures " + std::to_string(neg_fail) + ", off-X failures " +
                            std::to_string(offx_fail);
  return r;
}

CheckResult check_negativity(const ExperimentConfig& cfg) {
  const std::size_t n = cfg.verify.negativity_points;
  double max_err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    max_err = std::max(max_err, std::abs(negativity_eig(bell_mixture(g)) - std::abs(g)));
  }
  CheckResult r{"negativity_closed_vs_eigen", max_err <= 1e-10, "", {{"max_abs_error", max_err}, {"points", n}}};
  r.detail = r.passed ? "eigen negativity equals |Gamma|" : "max error " + fmt(max_err) + " exceeds 1e-10";
  return r;
}

std::vector<CheckResult> check_spectrum(const ExperimentConfig& cfg) {
  const auto& v = cfg.verify;
  const auto freqs = log_space(v.spectrum.f_min, v.spectrum.f_max, v.spectrum.n_freqs);
  CheckResult slope{"spectrum_slope", true, "", nlohmann::json::array()};
  CheckResult analytic{"analytic_spectrum_slope", true, "", nlohmann::json::array()};
  CheckResult pooled{"spectrum_quadrature_vs_pooled_mean", true, "", nlohmann::json::array()};
  std::ostringstream slope_detail, pooled_detail;
  for (std::size_t k = 0; k < v.spectrum_alphas.size(); ++k) {
    const double alpha = v.spectrum_alphas[k];
    const NoiseParams params{alpha, v.spectrum_gamma_min, v.spectrum_gamma_max, v.spectrum_fluctuators};
    const auto ens = sample_switching_rates(params, derive_key(cfg.master_seed, {kSpectrumTag, k}));
    std::vector<double> s_ens, s_an;
    for (double f : freqs) {
      s_ens.push_back(ensemble_spectrum(ens, f));
      s_an.push_back(analytic_spectrum(params, f));
    }
    const double target = v.slope_target.value_or(-alpha);
    const double fitted = fit_spectral_slope(freqs, s_ens);
    const bool ok = std::abs(fitted - target) <= v.slope_tolerance;
    slope.passed = slope.passed && ok;
    slope.metrics.push_back({{"alpha", alpha}, {"slope", fitted}, {"target", target}});
    if (!ok) {
      slope_detail << "alpha=" << fmt(alpha) << ": fitted slope " << fmt(fitted) << " vs target " << fmt(target)
                   << " (tolerance " << fmt(v.slope_tolerance) << "); ";
    }

    const double an_slope = fit_spectral_slope(freqs, s_an);
    const bool an_ok = std::abs(an_slope + alpha) <= 0.1;
    analytic.passed = analytic.passed && an_ok;
    analytic.metrics.push_back({{"alpha", alpha}, {"slope", an_slope}});

    if (v.spectrum.pooled_ensembles > 0) {
      const auto pool = pooled_ensemble_spectrum(params, freqs, v.spectrum.pooled_ensembles,
                                                 derive_key(cfg.master_seed, {kPooledTag, k}), cfg.threads);
      double max_z = 0.0;
      for (std::size_t i = 0; i < freqs.size(); ++i) {
        const double diff = std::abs(pool.mean[i] - s_an[i]);
        const double z = pool.std_error[i] > 0.0 ? diff / pool.std_error[i] : (diff == 0.0 ? 0.0 : INFINITY);
        max_z = std::max(max_z, z);
      }
      const bool p_ok = max_z <= v.sigma_tolerance;
      pooled.passed = pooled.passed && p_ok;
      pooled.metrics.push_back({{"alpha", alpha}, {"max_z", max_z}, {"ensembles", pool.n_ensembles}});
      if (!p_ok) pooled_detail << "alpha=" << fmt(alpha) << " max z " << fmt(max_z) << "; ";
    }
  }
  slope.detail = slope.passed ? "fitted slopes within tolerance" : "slope check failed: " + slope_detail.str();
  analytic.detail = analytic.passed ? "quadrature spectrum slopes equal -alpha within 0.1" : "analytic slope off";
  pooled.detail = pooled.passed ? "pooled ensemble mean agrees with quadrature" : pooled_detail.str();
  std::vector<CheckResult> out{slope, analytic};
  if (v.spectrum.pooled_ensembles > 0) out.push_back(pooled);
  return out;
}

std::vector<CheckResult> check_distributions(const ExperimentConfig& cfg) {
  const auto& v = cfg.verify;
  CheckResult norm{"rate_pdf_normalization", true, "", nlohmann::json::array()};
  CheckResult ks{"rate_sampling_ks", true, "", nlohmann::json::array()};
  for (std::size_t k = 0; k < v.ks_alphas.size(); ++k) {
    const double alpha = v.ks_alphas[k];
    NoiseParams params{alpha, v.spectrum_gamma_min, v.spectrum_gamma_max, v.ks_samples};
    const double integral = switching_rate_pdf_integral(params);
    norm.passed = norm.passed && std::abs(integral - 1.0) <= 1e-8;
    norm.metrics.push_back({{"alpha", alpha}, {"integral", integral}});

    auto sample = sample_switching_rates(params, derive_key(cfg.master_seed, {kKsTag, k})).rates;
    const double d = ks_statistic(params, sample);
    ks.passed = ks.passed && d < v.ks_threshold;
    ks.metrics.push_back({{"alpha", alpha}, {"ks_statistic", d}, {"samples", v.ks_samples}});
  }
  norm.detail = norm.passed ? "pdf integrates to 1 within 1e-8" : "pdf normalization off";
  ks.detail = ks.passed ? "KS statistic below " + fmt(v.ks_threshold) : "KS statistic above " + fmt(v.ks_threshold);

  CheckResult mass{"phase_pdf_mass", true, "", nlohmann::json::array()};
  CheckResult factor{"phase_pdf_phase_factor", true, "", nlohmann::json::array()};
  for (double g : v.phase_pdf_rates) {
    for (double t : v.phase_pdf_times) {
      const double m = phase_pdf_total_mass(g, t);
      const double pf = phase_pdf_phase_factor(g, t);
      const double d = rtn_dephasing(g, t);
      mass.passed = mass.passed && std::abs(m - 1.0) <= v.mass_tolerance;
      factor.passed = factor.passed && std::abs(pf - d) <= v.mass_tolerance;
      mass.metrics.push_back({{"gamma", g}, {"tau", t}, {"mass", m}});
      factor.metrics.push_back({{"gamma", g}, {"tau", t}, {"quadrature", pf}, {"closed_form", d}});
    }
  }
  mass.detail = mass.passed ? "total mass 1 within tolerance" : "phase pdf mass off";
  factor.detail = factor.passed ? "<exp(2i phi)> matches D" : "phase factor quadrature disagrees with D";
  return {norm, ks, mass, factor};
}

}  // namespace

VerificationReport verify(const ExperimentConfig& config) {
  config.validate();
  VerificationReport report;
  report.checks.push_back(check_dephasing(config));
  report.checks.push_back(check_state(config));
  report.checks.push_back(check_negativity(config));
  for (auto& c : check_spectrum(config)) report.checks.push_back(std::move(c));
  for (auto& c : check_distributions(config)) report.checks.push_back(std::move(c));
  return report;
}

}  // namespace rtnq
