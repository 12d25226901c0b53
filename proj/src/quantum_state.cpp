#include "rtnq/quantum_state.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "rtnq/errors.hpp"

namespace rtnq {

namespace {

constexpr double kNegativityClamp = 1e-12;

bool on_x(int r, int c) { return r == c || r + c == 3; }

}  // namespace

TwoQubitState TwoQubitState::from_matrix(const Matrix4c& rho, double tolerance) {
  if (!rho.allFinite()) throw ParameterError("density matrix has non-finite entries");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tolerance) {
    throw ParameterError("density matrix is not Hermitian");
  }
  if (std::abs(rho.trace() - 1.0) > tolerance) {
    throw ParameterError("density matrix trace differs from 1");
  }
  const Matrix4c herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix4c> solver(herm, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("eigensolver failed", 0.0);
  if (solver.eigenvalues().minCoeff() < -tolerance) {
    throw ParameterError("density matrix is not positive semidefinite");
  }
  return TwoQubitState(rho);
}

Matrix4c phi_plus_projector() {
  Matrix4c p = Matrix4c::Zero();
  p(0, 0) = p(0, 3) = p(3, 0) = p(3, 3) = 0.5;
  return p;
}

Matrix4c psi_plus_projector() {
  Matrix4c p = Matrix4c::Zero();
  p(1, 1) = p(1, 2) = p(2, 1) = p(2, 2) = 0.5;
  return p;
}

TwoQubitState bell_mixture(double gamma_factor) {
  if (!(std::abs(gamma_factor) <= 1.0)) throw ParameterError("bell_mixture: |gamma_factor| must be <= 1");
  const Matrix4c rho = 0.5 * ((1.0 + gamma_factor) * phi_plus_projector() + (1.0 - gamma_factor) * psi_plus_projector());
  return TwoQubitState::from_matrix(rho);
}

Matrix4c partial_transpose(const Matrix4c& rho) {
  Matrix4c out;
  // Row index 2a + b, column 2a' + b'; swap b <-> b'.
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int ap = 0; ap < 2; ++ap)
        for (int bp = 0; bp < 2; ++bp) out(2 * a + b, 2 * ap + bp) = rho(2 * a + bp, 2 * ap + b);
  return out;
}

Matrix4c partial_transpose(const TwoQubitState& state) { return partial_transpose(state.matrix()); }

double negativity_eig(const TwoQubitState& state) {
  const Matrix4c pt = partial_transpose(state);
  Eigen::SelfAdjointEigenSolver<Matrix4c> solver(pt, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("negativity_eig: eigensolver failed", 0.0);
  double negative_sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double lambda = solver.eigenvalues()(i);
    if (lambda < 0.0) negative_sum += lambda;
  }
  const double n = 2.0 * std::abs(negative_sum);
  return n < kNegativityClamp ? 0.0 : n;
}

double binary_h(double x) {
  if (!(std::abs(x) <= 1.0)) throw ParameterError("binary_h: |x| must be <= 1");
  // (1 +- x) log(1 +- x) through log1p so small |x| keeps full relative accuracy.
  auto term = [](double v) { return v > -1.0 ? (1.0 + v) * std::log1p(v) : 0.0; };
  return 0.5 * (term(x) + term(-x)) / std::numbers::ln2;
}

CorrelationSample correlations_closed(double gamma_factor, double tau) {
  return {tau, gamma_factor, std::abs(gamma_factor), binary_h(gamma_factor)};
}

double max_off_x(const Matrix4c& rho) {
  double m = 0.0;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      if (!on_x(r, c)) m = std::max(m, std::abs(rho(r, c)));
  return m;
}

double bell_contrast(const Matrix4c& rho) {
  const double phi = 0.5 * (rho(0, 0) + rho(0, 3) + rho(3, 0) + rho(3, 3)).real();
  const double psi = 0.5 * (rho(1, 1) + rho(1, 2) + rho(2, 1) + rho(2, 2)).real();
  return phi - psi;
}

}  // namespace rtnq
