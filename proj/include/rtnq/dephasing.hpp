#pragma once

// Dephasing of a qubit by random telegraph fluctuators. Time is the
// dimensionless tau = nu * t and rates are in units of nu.

#include <cstddef>
#include <span>
#include <vector>

#include "rtnq/noise_model.hpp"

namespace rtnq {

/// Qubit-environment coupling. epsilon only adds a global phase and never
/// enters the dynamics.
struct CouplingParams {
  double nu = 1.0;
  double epsilon = 0.0;

  void validate() const;
};

struct DephasingCurve {
  std::vector<double> tau;
  std::vector<double> values;
};

/// Uniform grid of n_points on [0, tau_max], starting at 0.
std::vector<double> make_tau_grid(double tau_max, std::size_t n_points);

/// Average phase factor <exp(2 i phi)> of one fluctuator with switching rate
/// gamma after time tau. D(0) = 1 and |D| <= 1. Monotone decay above gamma = 2,
/// damped oscillation below; the boundary is evaluated through its series.
double rtn_dephasing(double gamma, double tau);

/// Same in physical units: rate gamma and time t for coupling nu.
double rtn_dephasing(double gamma, double t, const CouplingParams& coupling);

/// Product of rtn_dephasing over every rate of both baths. Accumulated as
/// log-magnitude plus sign, so large ensembles do not underflow early.
double gamma_factor(const FluctuatorEnsemble& bath_a, const FluctuatorEnsemble& bath_b, double tau);

/// gamma_factor on a whole grid; OpenMP-parallel over grid points.
DephasingCurve gamma_curve(const FluctuatorEnsemble& bath_a, const FluctuatorEnsemble& bath_b,
                           std::span<const double> tau_grid, int threads = 0);

/// rtn_dephasing(gamma, .) on a grid.
DephasingCurve dephasing_curve(double gamma, std::span<const double> tau_grid);

/// Distribution of the accumulated phase phi = -int_0^tau c(t') dt'. The
/// two point masses sit at phi = +tau and phi = -tau.
struct PhaseDensity {
  double continuous = 0.0;
  double delta_weight_plus = 0.0;
  double delta_weight_minus = 0.0;
};

PhaseDensity phase_pdf(double phi, double gamma, double tau);

/// Continuous mass plus both point masses; should be 1.
double phase_pdf_total_mass(double gamma, double tau);

/// <exp(2 i phi)> computed by integrating against phase_pdf. Independent of
/// rtn_dephasing; used as a cross-check.
double phase_pdf_phase_factor(double gamma, double tau);

namespace reference {
DephasingCurve gamma_curve(const FluctuatorEnsemble& bath_a, const FluctuatorEnsemble& bath_b,
                           std::span<const double> tau_grid);
}  // namespace reference

}  // namespace rtnq
