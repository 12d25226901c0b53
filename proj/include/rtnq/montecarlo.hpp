#pragma once

// Brute-force trajectory oracle: explicit telegraph signals, exact phase
// integrals and averaged phase factors / two-qubit states.
//
// Every trajectory draws from its own stream keyed (seed, fluctuator,
// trajectory), and trajectories are reduced in fixed-size chunks in index
// order. Results therefore depend only on the inputs, never on the thread
// count, and the OpenMP kernels match the serial reference bit for bit.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rtnq/noise_model.hpp"
#include "rtnq/quantum_state.hpp"
#include "rtnq/rng.hpp"

namespace rtnq {

struct TelegraphTrajectory {
  int initial_sign = 1;
  std::vector<double> flip_times;
  double tau_max = 0.0;
};

/// Exact-event simulation: equiprobable initial sign, exponential waiting
/// times with mean 1/gamma, no flips at all when gamma == 0.
TelegraphTrajectory simulate_telegraph(double gamma, double tau_max, RandomStream& rng);

/// Buffer-reusing overload for hot loops.
void simulate_telegraph(double gamma, double tau_max, RandomStream& rng, TelegraphTrajectory& out);

/// phi(tau) = -int_0^tau c(t') dt' evaluated exactly on a nondecreasing grid
/// inside [0, tau_max].
std::vector<double> accumulate_phase(const TelegraphTrajectory& trajectory, std::span<const double> tau_grid);

/// Adds phi(tau) into `phases` (same length as the grid).
void add_phase(const TelegraphTrajectory& trajectory, std::span<const double> tau_grid, std::span<double> phases);

enum class SignSampling {
  Random,      ///< c(0) = +-1 drawn per trajectory
  Symmetrized  ///< every trajectory is averaged with its sign-mirrored twin
};

struct McOptions {
  std::size_t n_trajectories = 10000;
  std::uint64_t seed = 0;
  int threads = 0;  ///< 0 = OpenMP runtime default
  SignSampling signs = SignSampling::Random;
};

struct McEstimate {
  std::complex<double> mean{};
  double std_error = 0.0;       ///< of the real part
  double std_error_imag = 0.0;  ///< of the imaginary part
  std::size_t n_trajectories = 0;
};

struct McStateEstimate {
  TwoQubitState state;
  Eigen::Matrix4d std_error_real;
  Eigen::Matrix4d std_error_imag;
  /// Trajectory mean of <phi+|rho|phi+> - <psi+|rho|psi+>, i.e. the Monte
  /// Carlo estimate of the gamma factor, with its standard error.
  McEstimate contrast;
};

/// Sample mean of exp(2 i phi(tau)) for a single fluctuator.
std::vector<McEstimate> mc_dephasing(double gamma, std::span<const double> tau_grid, const McOptions& options);

/// Sample mean of exp(2 i sum_j phi_j(tau)) over independent fluctuators with
/// the given rates, simulated jointly.
std::vector<McEstimate> mc_phase_factor(std::span<const double> rates, std::span<const double> tau_grid,
                                        const McOptions& options);

/// Average of (U_A(phi_A) x U_B(phi_B)) |phi+><phi+| (...)^dagger with
/// U(phi) = exp(i phi sigma_x) and phi_{A,B} the summed bath phases.
std::vector<McStateEstimate> mc_two_qubit_state(const FluctuatorEnsemble& bath_a, const FluctuatorEnsemble& bath_b,
                                                std::span<const double> tau_grid, const McOptions& options);

namespace reference {
std::vector<McEstimate> mc_dephasing(double gamma, std::span<const double> tau_grid, const McOptions& options);
std::vector<McEstimate> mc_phase_factor(std::span<const double> rates, std::span<const double> tau_grid,
                                        const McOptions& options);
std::vector<McStateEstimate> mc_two_qubit_state(const FluctuatorEnsemble& bath_a, const FluctuatorEnsemble& bath_b,
                                                std::span<const double> tau_grid, const McOptions& options);
}  // namespace reference

}  // namespace rtnq
