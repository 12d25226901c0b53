#include "rtnq/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <omp.h>

#include "rtnq/errors.hpp"
#include "rtnq/summation.hpp"

namespace rtnq {

TelegraphTrajectory simulate_telegraph(double gamma, double tau_max, RandomStream& rng) {
  TelegraphTrajectory out;
  simulate_telegraph(gamma, tau_max, rng, out);
  return out;
}

void simulate_telegraph(double gamma, double tau_max, RandomStream& rng, TelegraphTrajectory& out) {
  if (!(gamma >= 0.0)) throw ParameterError("simulate_telegraph: gamma must be non-negative");
  if (!(tau_max >= 0.0)) throw ParameterError("simulate_telegraph: tau_max must be non-negative");
  out.initial_sign = rng.sign();
  out.tau_max = tau_max;
  out.flip_times.clear();
  if (gamma == 0.0) return;
  double t = 0.0;
  for (;;) {
    t += -std::log1p(-rng.uniform()) / gamma;
    if (!(t < tau_max)) break;
    out.flip_times.push_back(t);
  }
}

void add_phase(const TelegraphTrajectory& trajectory, std::span<const double> tau_grid, std::span<double> phases) {
  if (phases.size() != tau_grid.size()) throw ParameterError("add_phase: output size mismatch");
  const auto& flips = trajectory.flip_times;
  std::size_t next = 0;
  double t_prev = 0.0;
  double integral = 0.0;  // int_0^t_prev c(t') dt'
  double c = trajectory.initial_sign;
  double last_tau = 0.0;
  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    const double tau = tau_grid[i];
    if (!(tau >= 0.0 && tau <= trajectory.tau_max)) {
      throw ParameterError("accumulate_phase: grid point outside [0, tau_max]");
    }
    if (tau < last_tau) throw ParameterError("accumulate_phase: grid must be nondecreasing");
    last_tau = tau;
    while (next < flips.size() && flips[next] <= tau) {
      integral += c * (flips[next] - t_prev);
      t_prev = flips[next];
      c = -c;
      ++next;
    }
    phases[i] += -(integral + c * (tau - t_prev));
  }
}

std::vector<double> accumulate_phase(const TelegraphTrajectory& trajectory, std::span<const double> tau_grid) {
  std::vector<double> phases(tau_grid.size(), 0.0);
  add_phase(trajectory, tau_grid, phases);
  return phases;
}

namespace {

constexpr std::size_t kChunk = 512;

// Running sums for `width` observables over a block of trajectories.
struct ChunkSums {
  std::vector<CompensatedSum> sum;
  std::vector<CompensatedSum> sum_sq;

  explicit ChunkSums(std::size_t width) : sum(width), sum_sq(width) {}

  void add(std::span<const double> obs) {
    for (std::size_t k = 0; k < obs.size(); ++k) {
      sum[k].add(obs[k]);
      sum_sq[k].add(obs[k] * obs[k]);
    }
  }
};

struct Moments {
  std::vector<double> mean;
  std::vector<double> std_error;
};

Moments finish(const std::vector<ChunkSums>& chunks, std::size_t width, std::size_t n) {
  Moments m{std::vector<double>(width), std::vector<double>(width, 0.0)};
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k < width; ++k) {
    CompensatedSum s, s2;
    for (const auto& c : chunks) {
      s.add(c.sum[k]);
      s2.add(c.sum_sq[k]);
    }
    const double mean = s.value() / nn;
    m.mean[k] = mean;
    if (n > 1) {
      const double var = std::max(0.0, (s2.value() - nn * mean * mean) / (nn - 1.0));
      m.std_error[k] = std::sqrt(var / nn);
    }
  }
  return m;
}

// Per-thread scratch space.
struct Workspace {
  TelegraphTrajectory trajectory;
  std::vector<double> phase_a;
  std::vector<double> phase_b;
  std::vector<double> obs;
};

// Runs `simulate(trajectory_index, workspace)` for every trajectory; the
// callback fills workspace.obs. Chunks are processed in parallel when
// `parallel` is set, then reduced in index order.
template <class Simulate>
Moments run_chunked(std::size_t n_traj, std::size_t width, bool parallel, int threads, Simulate simulate) {
  const std::size_t n_chunks = (n_traj + kChunk - 1) / kChunk;
  std::vector<ChunkSums> chunks(n_chunks, ChunkSums(width));
  auto run_chunk = [&](std::size_t c, Workspace& ws) {
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(n_traj, begin + kChunk);
    for (std::size_t t = begin; t < end; ++t) {
      simulate(t, ws);
      chunks[c].add(ws.obs);
    }
  };
  if (parallel) {
    const int nthreads = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel num_threads(nthreads)
    {
      Workspace ws;
      ws.obs.resize(width);
#pragma omp for schedule(dynamic, 1)
      for (std::int64_t c = 0; c < static_cast<std::int64_t>(n_chunks); ++c) {
        run_chunk(static_cast<std::size_t>(c), ws);
      }
    }
  } else {
    Workspace ws;
    ws.obs.resize(width);
    for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c, ws);
  }
  return finish(chunks, width, n_traj);
}

double horizon(std::span<const double> tau_grid) {
  if (tau_grid.empty()) throw ParameterError("Monte Carlo: empty tau grid");
  double prev = 0.0;
  for (double tau : tau_grid) {
    if (!(tau >= 0.0)) throw ParameterError("Monte Carlo: tau grid values must be non-negative");
    if (tau < prev) throw ParameterError("Monte Carlo: tau grid must be nondecreasing");
    prev = tau;
  }
  return tau_grid.back();
}

void check_options(const McOptions& options) {
  if (options.n_trajectories < 1) throw ParameterError("Monte Carlo: n_trajectories must be >= 1");
}

// Adds the phase of fluctuator `index` (rate gamma) for trajectory `traj`.
void add_fluctuator_phase(double gamma, std::uint64_t seed, std::size_t index, std::size_t traj, double tau_max,
                          std::span<const double> tau_grid, Workspace& ws, std::vector<double>& phases) {
  RandomStream rng = RandomStream::derive(seed, {index, traj});
  simulate_telegraph(gamma, tau_max, rng, ws.trajectory);
  add_phase(ws.trajectory, tau_grid, phases);
}

std::vector<McEstimate> phase_factor_impl(std::span<const double> rates, std::span<const double> tau_grid,
                                          const McOptions& options, bool parallel) {
  check_options(options);
  if (rates.empty()) throw ParameterError("Monte Carlo: no fluctuators");
  for (double g : rates) {
    if (!(g >= 0.0)) throw ParameterError("Monte Carlo: rates must be non-negative");
  }
  const double tau_max = horizon(tau_grid);
  const std::size_t n_tau = tau_grid.size();
  const bool symmetric = options.signs == SignSampling::Symmetrized;

  auto simulate = [&](std::size_t traj, Workspace& ws) {
    ws.phase_a.assign(n_tau, 0.0);
    for (std::size_t j = 0; j < rates.size(); ++j) {
      add_fluctuator_phase(rates[j], options.seed, j, traj, tau_max, tau_grid, ws, ws.phase_a);
    }
    for (std::size_t i = 0; i < n_tau; ++i) {
      const double arg = 2.0 * ws.phase_a[i];
      ws.obs[2 * i] = std::cos(arg);
      ws.obs[2 * i + 1] = symmetric ? 0.0 : std::sin(arg);
    }
  };
  const Moments m = run_chunked(options.n_trajectories, 2 * n_tau, parallel, options.threads, simulate);

  std::vector<McEstimate> out(n_tau);
  for (std::size_t i = 0; i < n_tau; ++i) {
    out[i].mean = {m.mean[2 * i], m.mean[2 * i + 1]};
    out[i].std_error = m.std_error[2 * i];
    out[i].std_error_imag = m.std_error[2 * i + 1];
    out[i].n_trajectories = options.n_trajectories;
  }
  return out;
}

using Vector4c = Eigen::Matrix<std::complex<double>, 4, 1>;

// (U_A(phi_a) x U_B(phi_b)) |phi+>, U(phi) = cos(phi) I + i sin(phi) sigma_x.
Vector4c kicked_bell_state(double phi_a, double phi_b) {
  using C = std::complex<double>;
  const C ua[2][2] = {{std::cos(phi_a), C(0, std::sin(phi_a))}, {C(0, std::sin(phi_a)), std::cos(phi_a)}};
  const C ub[2][2] = {{std::cos(phi_b), C(0, std::sin(phi_b))}, {C(0, std::sin(phi_b)), std::cos(phi_b)}};
  Vector4c psi;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) psi(2 * a + b) = (ua[a][0] * ub[b][0] + ua[a][1] * ub[b][1]) / std::numbers::sqrt2;
  return psi;
}

constexpr std::size_t kStateWidth = 33;  // 16 complex entries + contrast

void write_state_obs(const Matrix4c& rho, std::span<double> obs) {
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      obs[2 * (4 * r + c)] = rho(r, c).real();
      obs[2 * (4 * r + c) + 1] = rho(r, c).imag();
    }
  }
  obs[32] = bell_contrast(rho);
}

std::vector<McStateEstimate> state_impl(const FluctuatorEnsemble& bath_a, const FluctuatorEnsemble& bath_b,
                                        std::span<const double> tau_grid, const McOptions& options, bool parallel) {
  check_options(options);
  if (bath_a.rates.empty() || bath_b.rates.empty()) throw ParameterError("Monte Carlo: empty ensemble");
  const double tau_max = horizon(tau_grid);
  const std::size_t n_tau = tau_grid.size();
  const std::size_t n_a = bath_a.rates.size();
  const bool symmetric = options.signs == SignSampling::Symmetrized;

  auto simulate = [&](std::size_t traj, Workspace& ws) {
    ws.phase_a.assign(n_tau, 0.0);
    ws.phase_b.assign(n_tau, 0.0);
    for (std::size_t j = 0; j < n_a; ++j) {
      add_fluctuator_phase(bath_a.rates[j], options.seed, j, traj, tau_max, tau_grid, ws, ws.phase_a);
    }
    for (std::size_t j = 0; j < bath_b.rates.size(); ++j) {
      add_fluctuator_phase(bath_b.rates[j], options.seed, n_a + j, traj, tau_max, tau_grid, ws, ws.phase_b);
    }
    for (std::size_t i = 0; i < n_tau; ++i) {
      const Vector4c psi = kicked_bell_state(ws.phase_a[i], ws.phase_b[i]);
      Matrix4c rho = psi * psi.adjoint();
      if (symmetric) {
        const Vector4c mirror = kicked_bell_state(-ws.phase_a[i], -ws.phase_b[i]);
        rho = 0.5 * (rho + mirror * mirror.adjoint());
      }
      write_state_obs(rho, std::span<double>(ws.obs).subspan(i * kStateWidth, kStateWidth));
    }
  };
  const Moments m = run_chunked(options.n_trajectories, kStateWidth * n_tau, parallel, options.threads, simulate);

  std::vector<McStateEstimate> out;
  out.reserve(n_tau);
  for (std::size_t i = 0; i < n_tau; ++i) {
    const std::size_t base = i * kStateWidth;
    Matrix4c rho;
    Eigen::Matrix4d se_re, se_im;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) {
        const std::size_t k = base + 2 * (4 * r + c);
        rho(r, c) = {m.mean[k], m.mean[k + 1]};
        se_re(r, c) = m.std_error[k];
        se_im(r, c) = m.std_error[k + 1];
      }
    }
    McEstimate contrast{{m.mean[base + 32], 0.0}, m.std_error[base + 32], 0.0, options.n_trajectories};
    out.push_back({TwoQubitState::from_matrix(rho, 1e-10), se_re, se_im, contrast});
  }
  return out;
}

}  // namespace

std::vector<McEstimate> mc_dephasing(double gamma, std::span<const double> tau_grid, const McOptions& options) {
  const double rates[] = {gamma};
  return phase_factor_impl(rates, tau_grid, options, true);
}

std::vector<McEstimate> mc_phase_factor(std::span<const double> rates, std::span<const double> tau_grid,
                                        const McOptions& options) {
  return phase_factor_impl(rates, tau_grid, options, true);
}

std::vector<McStateEstimate> mc_two_qubit_state(const FluctuatorEnsemble& bath_a, const FluctuatorEnsemble& bath_b,
                                                std::span<const double> tau_grid, const McOptions& options) {
  return state_impl(bath_a, bath_b, tau_grid, options, true);
}

namespace reference {

std::vector<McEstimate> mc_dephasing(double gamma, std::span<const double> tau_grid, const McOptions& options) {
  const double rates[] = {gamma};
  return phase_factor_impl(rates, tau_grid, options, false);
}

std::vector<McEstimate> mc_phase_factor(std::span<const double> rates, std::span<const double> tau_grid,
                                        const McOptions& options) {
  return phase_factor_impl(rates, tau_grid, options, false);
}

std::vector<McStateEstimate> mc_two_qubit_state(const FluctuatorEnsemble& bath_a, const FluctuatorEnsemble& bath_b,
                                                std::span<const double> tau_grid, const McOptions& options) {
  return state_impl(bath_a, bath_b, tau_grid, options, false);
}

}  // namespace reference

}  // namespace rtnq
