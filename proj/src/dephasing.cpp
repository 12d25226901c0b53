#include "rtnq/dephasing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <omp.h>

#include "rtnq/errors.hpp"

namespace rtnq {

namespace {

// C(x) = sum x^k/(2k)!, S(x) = sum x^k/(2k+1)! with x = (gamma^2 - 4) tau^2.
// cosh/cos(kappa tau) = C and sinh/sin(kappa tau)/kappa = tau S on either side
// of gamma = 2, so this form has no 0/0 at the boundary.
double dephasing_series(double gamma, double tau, double x) {
  double c = 1.0, s = 1.0;
  double term_c = 1.0, term_s = 1.0;
  for (int k = 1; k < 60; ++k) {
    term_c *= x / static_cast<double>((2 * k - 1) * (2 * k));
    term_s *= x / static_cast<double>((2 * k) * (2 * k + 1));
    c += term_c;
    s += term_s;
    if (std::abs(term_c) < 1e-18 * std::abs(c) && std::abs(term_s) < 1e-18 * std::abs(s)) break;
  }
  return std::exp(-gamma * tau) * (c + gamma * tau * s);
}

// exp(-damp) * I_n(z) without overflowing for large z.
double damped_bessel_i(int n, double z, double damp) {
  if (z < 500.0) {
    return std::cyl_bessel_i(static_cast<double>(n), z) * std::exp(-damp);
  }
  const double mu = 4.0 * n * n;
  const double t = 8.0 * z;
  const double series =
      1.0 - (mu - 1.0) / t + (mu - 1.0) * (mu - 9.0) / (2.0 * t * t) -
      (mu - 1.0) * (mu - 9.0) * (mu - 25.0) / (6.0 * t * t * t);
  return std::exp(z - damp) / std::sqrt(2.0 * std::numbers::pi * z) * series;
}

void check_grid(std::span<const double> tau_grid) {
  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    if (!(tau_grid[i] >= 0.0)) throw ParameterError("tau grid values must be non-negative");
  }
}

void check_baths(const FluctuatorEnsemble& a, const FluctuatorEnsemble& b) {
  if (a.rates.empty() || b.rates.empty()) throw ParameterError("gamma_factor: empty ensemble");
}

double gamma_factor_unchecked(const FluctuatorEnsemble& a, const FluctuatorEnsemble& b, double tau) {
  double log_mag = 0.0;
  bool negative = false;
  for (const auto* bath : {&a, &b}) {
    for (double g : bath->rates) {
      const double d = rtn_dephasing(g, tau);
      if (d == 0.0) return 0.0;
      log_mag += std::log(std::abs(d));
      negative ^= (d < 0.0);
    }
  }
  const double mag = std::exp(log_mag);
  return negative ? -mag : mag;
}

}  // namespace

void CouplingParams::validate() const {
  if (!(nu > 0.0)) throw ParameterError("coupling nu must be positive");
}

std::vector<double> make_tau_grid(double tau_max, std::size_t n_points) {
  if (n_points == 0) throw ParameterError("tau grid needs at least one point");
  if (n_points == 1) return {0.0};
  if (!(tau_max > 0.0)) throw ParameterError("tau_max must be positive");
  std::vector<double> grid(n_points);
  const double step = tau_max / static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n_points; ++i) grid[i] = step * static_cast<double>(i);
  grid.back() = tau_max;
  return grid;
}

double rtn_dephasing(double gamma, double tau) {
  if (!(gamma >= 0.0)) throw ParameterError("rtn_dephasing: gamma must be non-negative");
  if (!(tau >= 0.0)) throw ParameterError("rtn_dephasing: tau must be non-negative");
  if (tau == 0.0) return 1.0;

  const double delta = (gamma - 2.0) * (gamma + 2.0);  // signed kappa^2
  const double x = delta * tau * tau;
  double d;
  if (std::abs(x) < 1.0) {
    d = dephasing_series(gamma, tau, x);
  } else if (delta > 0.0) {
    const double kappa = std::sqrt(delta);
    const double ratio = gamma / kappa;
    // gamma - kappa = 4 / (gamma + kappa), exact rearrangement.
    const double slow = std::exp(-4.0 / (gamma + kappa) * tau);
    const double fast = std::exp(-(gamma + kappa) * tau);
    d = 0.5 * (1.0 + ratio) * slow + 0.5 * (1.0 - ratio) * fast;
  } else {
    const double kappa = std::sqrt(-delta);
    d = std::exp(-gamma * tau) * (std::cos(kappa * tau) + gamma / kappa * std::sin(kappa * tau));
  }
  return std::clamp(d, -1.0, 1.0);
}

double rtn_dephasing(double gamma, double t, const CouplingParams& coupling) {
  coupling.validate();
  return rtn_dephasing(gamma / coupling.nu, coupling.nu * t);
}

double gamma_factor(const FluctuatorEnsemble& bath_a, const FluctuatorEnsemble& bath_b, double tau) {
  check_baths(bath_a, bath_b);
  if (!(tau >= 0.0)) throw ParameterError("gamma_factor: tau must be non-negative");
  return gamma_factor_unchecked(bath_a, bath_b, tau);
}

DephasingCurve gamma_curve(const FluctuatorEnsemble& bath_a, const FluctuatorEnsemble& bath_b,
                           std::span<const double> tau_grid, int threads) {
  check_baths(bath_a, bath_b);
  check_grid(tau_grid);
  DephasingCurve out{{tau_grid.begin(), tau_grid.end()}, std::vector<double>(tau_grid.size())};
  const auto n = static_cast<std::int64_t>(tau_grid.size());
  const int nthreads = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (std::int64_t i = 0; i < n; ++i) {
    out.values[i] = gamma_factor_unchecked(bath_a, bath_b, tau_grid[i]);
  }
  return out;
}

namespace reference {

DephasingCurve gamma_curve(const FluctuatorEnsemble& bath_a, const FluctuatorEnsemble& bath_b,
                           std::span<const double> tau_grid) {
  check_baths(bath_a, bath_b);
  check_grid(tau_grid);
  DephasingCurve out{{tau_grid.begin(), tau_grid.end()}, {}};
  out.values.reserve(tau_grid.size());
  for (double tau : tau_grid) out.values.push_back(gamma_factor_unchecked(bath_a, bath_b, tau));
  return out;
}

}  // namespace reference

DephasingCurve dephasing_curve(double gamma, std::span<const double> tau_grid) {
  DephasingCurve out{{tau_grid.begin(), tau_grid.end()}, {}};
  out.values.reserve(tau_grid.size());
  for (double tau : tau_grid) out.values.push_back(rtn_dephasing(gamma, tau));
  return out;
}

PhaseDensity phase_pdf(double phi, double gamma, double tau) {
  if (!(gamma >= 0.0)) throw ParameterError("phase_pdf: gamma must be non-negative");
  if (!(tau > 0.0)) throw ParameterError("phase_pdf: tau must be positive");
  PhaseDensity out;
  out.delta_weight_plus = 0.5 * std::exp(-gamma * tau);
  out.delta_weight_minus = out.delta_weight_plus;
  if (std::abs(phi) > tau || gamma == 0.0) return out;

  const double r = phi / tau;
  const double gt = gamma * tau;
  const double z = gt * std::sqrt(std::max(0.0, 1.0 - r * r));
  // I1(z)/sqrt(1 - r^2) = gamma tau * I1(z)/z, finite at the support edge.
  const double i1_over_z = z < 1e-8 ? 0.5 * std::exp(-gt) : damped_bessel_i(1, z, gt) / z;
  out.continuous = 0.5 * gamma * (gt * i1_over_z + damped_bessel_i(0, z, gt));
  return out;
}

namespace {

template <class Weight>
double integrate_continuous(double gamma, double tau, Weight weight) {
  auto f = [&](double x) {
    const double phi = tau * x;
    return phase_pdf(phi, gamma, tau).continuous * weight(phi) * tau;
  };
  double error = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -1.0, 1.0, 20, 1e-13, &error);
  if (!std::isfinite(v) || error > 1e-9) {
    throw NumericError("phase_pdf quadrature did not converge", error);
  }
  return v;
}

}  // namespace

double phase_pdf_total_mass(double gamma, double tau) {
  const auto p = phase_pdf(0.0, gamma, tau);
  const double cont = gamma == 0.0 ? 0.0 : integrate_continuous(gamma, tau, [](double) { return 1.0; });
  return cont + p.delta_weight_plus + p.delta_weight_minus;
}

double phase_pdf_phase_factor(double gamma, double tau) {
  const auto p = phase_pdf(0.0, gamma, tau);
  const double cont =
      gamma == 0.0 ? 0.0 : integrate_continuous(gamma, tau, [](double phi) { return std::cos(2.0 * phi); });
  // Point masses at +-tau contribute (e^{2i tau} + e^{-2i tau}) / 2 each weight.
  return cont + (p.delta_weight_plus + p.delta_weight_minus) * std::cos(2.0 * tau);
}

}  // namespace rtnq
