#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "snsim/cavity.hpp"
#include "snsim/device.hpp"

// Five-level model of the charged dot: hole ground states (up, down), trion
// states (trion_up, trion_down) and the uncharged state (empty). One frozen
// environment realization per SystemModel: the Overhauser field is constant
// within a correlation window and the slow QD energy shift enters as a static
// detuning offset.

namespace snsim {

inline constexpr int kUp = 0;
inline constexpr int kDown = 1;
inline constexpr int kTrionUp = 2;
inline constexpr int kTrionDown = 3;
inline constexpr int kEmpty = 4;
inline constexpr int kLevels = 5;

using Matrix5cd = Eigen::Matrix<Complex, 5, 5>;
using Vector5cd = Eigen::Matrix<Complex, 5, 1>;

// One frozen environment realization with its quadrature / Monte Carlo weight.
struct NoiseSample {
  Eigen::Vector3d overhauser = Eigen::Vector3d::Zero();  // ueV, on the electron
  double qd_offset = 0.0;                                // ueV
  double weight = 1.0;
};

// Hamiltonian in ueV (rotating frame at omega_laser) plus collapse operators
// with rates folded in, entries in sqrt(1/ns). The empty state couples to
// nothing.
struct SystemModel {
  Matrix5cd hamiltonian = Matrix5cd::Zero();
  std::vector<Matrix5cd> collapse_ops;
};

namespace detail {

// Pauli vector on a two-state block {a, b} embedded in the 5-level space.
inline Matrix5cd pauli_on(int a, int b, int axis) {
  Matrix5cd m = Matrix5cd::Zero();
  switch (axis) {
    case 0: m(a, b) = 1; m(b, a) = 1; break;
    case 1: m(a, b) = Complex(0, -1); m(b, a) = Complex(0, 1); break;
    default: m(a, a) = 1; m(b, b) = -1; break;
  }
  return m;
}

}  // namespace detail

inline SystemModel build_model(const DeviceParams& p, double omega_laser,
                               double alpha_in, const NoiseSample& sample) {
  const double hbar = DeviceParams::hbar;
  SystemModel model;
  Matrix5cd& h = model.hamiltonian;

  // Hole ground splitting.
  h(kUp, kUp) = -0.5 * p.delta_h();
  h(kDown, kDown) = 0.5 * p.delta_h();
  if (p.hole_hyperfine_ratio > 0) {
    const Eigen::Vector3d bh = p.hole_hyperfine_ratio * sample.overhauser;
    h += 0.5 * bh.x() * detail::pauli_on(kUp, kDown, 0);
    h += 0.5 * bh.y() * detail::pauli_on(kUp, kDown, 1);
    h += 0.5 * bh.z() * detail::pauli_on(kUp, kDown, 2);
  }

  // Trion block: optical detuning plus the electron spin in the combined
  // external + Overhauser field.
  const double base = p.omega_qd_mean + sample.qd_offset - omega_laser;
  h(kTrionUp, kTrionUp) += base;
  h(kTrionDown, kTrionDown) += base;
  const Eigen::Vector3d be =
      sample.overhauser + Eigen::Vector3d(0, 0, p.delta_e());
  h += 0.5 * be.x() * detail::pauli_on(kTrionUp, kTrionDown, 0);
  h += 0.5 * be.y() * detail::pauli_on(kTrionUp, kTrionDown, 1);
  h += 0.5 * be.z() * detail::pauli_on(kTrionUp, kTrionDown, 2);

  // Optical drive through the cavity field.
  const PurcellDrive pd = purcell_and_drive(p, omega_laser, alpha_in);
  h(kTrionUp, kUp) = pd.rabi_up;
  h(kUp, kTrionUp) = std::conj(pd.rabi_up);
  h(kTrionDown, kDown) = pd.rabi_down;
  h(kDown, kTrionDown) = std::conj(pd.rabi_down);

  // Radiative decay (Purcell-enhanced + free-space), per circular branch.
  const double gamma_rad = pd.total_decay / hbar;
  Matrix5cd c = Matrix5cd::Zero();
  c(kUp, kTrionUp) = std::sqrt(gamma_rad);
  model.collapse_ops.push_back(c);
  c.setZero();
  c(kDown, kTrionDown) = std::sqrt(gamma_rad);
  model.collapse_ops.push_back(c);

  // Pure dephasing of the optical transition: sqrt(2 gamma*/hbar) P_trion
  // gives the optical coherences an extra decay of exactly gamma*/hbar.
  if (p.gamma_star > 0) {
    c.setZero();
    c(kTrionUp, kTrionUp) = c(kTrionDown, kTrionDown) =
        std::sqrt(2.0 * p.gamma_star / hbar);
    model.collapse_ops.push_back(c);
  }

  // Isotropic electron spin relaxation: three equal channels at 1/(4 tau_e)
  // so every Bloch component of the electron decays at 1/tau_e.
  const double rate_e = 1.0 / (4.0 * p.tau_e);
  for (int axis = 0; axis < 3; ++axis)
    model.collapse_ops.push_back(std::sqrt(rate_e) *
                                 detail::pauli_on(kTrionUp, kTrionDown, axis));

  if (p.tau_h > 0) {
    const double rate_h = 1.0 / (4.0 * p.tau_h);
    for (int axis = 0; axis < 3; ++axis)
      model.collapse_ops.push_back(std::sqrt(rate_h) *
                                   detail::pauli_on(kUp, kDown, axis));
  }
  return model;
}

// Gauss-Hermite nodes and weights for N(0,1), via the Golub-Welsch symmetric
// tridiagonal eigenproblem; weights sum to one exactly.
inline void gauss_hermite_normal(int n, std::vector<double>& nodes,
                                 std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("gauss_hermite_normal: n < 1");
  nodes.assign(n, 0.0);
  weights.assign(n, 1.0);
  if (n == 1) return;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub);
  for (int k = 0; k < n; ++k) {
    nodes[k] = std::sqrt(2.0) * solver.eigenvalues()(k);  // physicists' -> N(0,1)
    const double v0 = solver.eigenvectors()(0, k);
    weights[k] = v0 * v0;
  }
}

// Tensor product of Monte Carlo Overhauser draws (i.i.d. Gaussian per axis)
// with a Gauss-Hermite grid for the spectral-wandering offset. Weights sum to
// one. Deterministic for a fixed seed.
inline std::vector<NoiseSample> sample_noise(const DeviceParams& p, int n_overhauser,
                                             int n_wandering, std::uint64_t seed) {
  if (n_overhauser < 1 || n_wandering < 1)
    throw std::invalid_argument("sample_noise: counts must be >= 1");
  if (p.gamma_e == 0) n_overhauser = 1;
  if (p.sigma_sw == 0) n_wandering = 1;

  std::vector<Eigen::Vector3d> fields;
  fields.reserve(n_overhauser);
  if (p.gamma_e == 0) {
    fields.push_back(Eigen::Vector3d::Zero());
  } else {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, p.gamma_e);
    for (int i = 0; i < n_overhauser; ++i) {
      const double x = gauss(rng), y = gauss(rng), z = gauss(rng);
      fields.push_back({x, y, z});
    }
  }

  std::vector<double> nodes, weights;
  gauss_hermite_normal(n_wandering, nodes, weights);

  std::vector<NoiseSample> samples;
  samples.reserve(fields.size() * nodes.size());
  const double w_mc = 1.0 / static_cast<double>(fields.size());
  for (const auto& field : fields)
    for (std::size_t q = 0; q < nodes.size(); ++q)
      samples.push_back({field, p.sigma_sw * nodes[q], w_mc * weights[q]});
  return samples;
}

// p * rho_charged  (+)  (1-p) |empty><empty|
inline Matrix5cd stationary_mixture(const Eigen::Matrix4cd& rho_charged,
                                    double p_charged) {
  if (p_charged < 0 || p_charged > 1)
    throw std::invalid_argument("stationary_mixture: p_charged outside [0,1]");
  const double herm = (rho_charged - rho_charged.adjoint()).norm();
  if (herm > 1e-10 || std::abs(rho_charged.trace().real() - 1.0) > 1e-10 ||
      std::abs(rho_charged.trace().imag()) > 1e-10)
    throw std::invalid_argument("stationary_mixture: invalid charged state");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(rho_charged);
  if (es.eigenvalues().minCoeff() < -1e-8)
    throw std::invalid_argument("stationary_mixture: charged state not positive");
  Matrix5cd out = Matrix5cd::Zero();
  out.topLeftCorner<4, 4>() = p_charged * rho_charged;
  out(kEmpty, kEmpty) = 1.0 - p_charged;
  return out;
}

}  // namespace snsim
