#pragma once

// Two-qubit states in the computational basis {|00>, |01>, |10>, |11>}
// and the correlation measures evaluated on them.

#include <complex>

#include <Eigen/Core>

namespace rtnq {

using Matrix4c = Eigen::Matrix<std::complex<double>, 4, 4>;

/// A validated density matrix: Hermitian, unit trace and positive
/// semidefinite, each to within `tolerance`.
class TwoQubitState {
 public:
  static constexpr double kDefaultTolerance = 1e-12;

  static TwoQubitState from_matrix(const Matrix4c& rho, double tolerance = kDefaultTolerance);

  const Matrix4c& matrix() const noexcept { return rho_; }
  std::complex<double> operator()(int row, int col) const { return rho_(row, col); }

 private:
  explicit TwoQubitState(const Matrix4c& rho) : rho_(rho) {}
  Matrix4c rho_;
};

struct CorrelationSample {
  double tau = 0.0;
  double gamma_factor = 1.0;
  double negativity = 1.0;
  double discord = 1.0;
};

/// (|00> + |11>)/sqrt 2 and (|01> + |10>)/sqrt 2 as projectors.
Matrix4c phi_plus_projector();
Matrix4c psi_plus_projector();

/// 1/2 [(1 + G) |phi+><phi+| + (1 - G) |psi+><psi+|], an X-shaped Bell mixture.
TwoQubitState bell_mixture(double gamma_factor);

/// Transpose over the indices of qubit B. Involutive.
Matrix4c partial_transpose(const Matrix4c& rho);
Matrix4c partial_transpose(const TwoQubitState& state);

/// 2 |sum of negative eigenvalues of the partial transpose|, by full
/// Hermitian eigendecomposition. Sums within 1e-12 of zero report 0.
double negativity_eig(const TwoQubitState& state);

/// h(x) = [(1+x) log2(1+x) + (1-x) log2(1-x)] / 2 with 0 log 0 = 0.
double binary_h(double x);

/// Closed forms for a Bell mixture: negativity |G|, discord h(G).
CorrelationSample correlations_closed(double gamma_factor, double tau = 0.0);

/// Largest |entry| outside the main and anti-diagonal.
double max_off_x(const Matrix4c& rho);

/// <phi+|rho|phi+> - <psi+|rho|psi+>; equals G for a Bell mixture.
double bell_contrast(const Matrix4c& rho);

}  // namespace rtnq
