#pragma once

#include <Eigen/Dense>
#include <complex>

#include "snsim/device.hpp"
#include "snsim/polarization.hpp"

// Linear input-output response of the two-mode birefringent cavity coupled to
// the spin-selective circular trion dipoles, for a horizontally polarized
// probe. Single-sided cavity: the top mirror collects a fraction eta_top of
// kappa, the remainder is internal/bottom loss.
//
// Circular dipole decomposition: the up-trion transition couples to
// L = (H + iV)/sqrt(2), the down-trion to R = (H - iV)/sqrt(2), i.e. per-mode
// couplings g/sqrt(2) on H and +-i g/sqrt(2) on V. Swapping the assignment
// relabels the spin states globally.

namespace snsim {

using Complex = std::complex<double>;

enum class CavityMode { h, v };
enum class SpinState { up, down, empty };

namespace detail {

inline double mode_energy(const DeviceParams& p, CavityMode m) {
  return m == CavityMode::h ? p.omega_cav_h : p.omega_cav_v;
}
inline double mode_kappa(const DeviceParams& p, CavityMode m) {
  return m == CavityMode::h ? p.kappa_h : p.kappa_v;
}

// Jones pattern of the circular dipole for each trion branch.
inline Eigen::Vector2cd dipole_pattern(SpinState s) {
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  if (s == SpinState::up) return {Complex(inv_sqrt2, 0), Complex(0, inv_sqrt2)};
  return {Complex(inv_sqrt2, 0), Complex(0, -inv_sqrt2)};
}

// Optical transition energy of the spin-selected branch (zero Overhauser).
inline double transition_energy(const DeviceParams& p, SpinState s, double offset) {
  const double zeeman = (s == SpinState::up ? 0.5 : -0.5) * p.delta_z;
  return p.omega_qd_mean + offset + zeeman;
}

}  // namespace detail

// r_M = 1 - eta_top kappa_M / (i (omega_cav_M - omega_laser) + kappa_M / 2)
inline Complex empty_cavity_reflection(const DeviceParams& p, double omega_laser,
                                       CavityMode m) {
  const double detuning = detail::mode_energy(p, m) - omega_laser;
  const double kappa = detail::mode_kappa(p, m);
  return 1.0 - p.eta_top * kappa / (Complex(kappa / 2.0, detuning));
}

// Dimensionless intracavity amplitude of mode M for a unit-flux H drive scaled
// by alpha_in (sqrt(1/ns)); used as the classical drive of the trion dipoles.
inline Complex intracavity_amplitude(const DeviceParams& p, double omega_laser,
                                     CavityMode m, double alpha_in) {
  const double detuning = detail::mode_energy(p, m) - omega_laser;
  const double kappa = detail::mode_kappa(p, m);
  return std::sqrt(p.eta_top * kappa * DeviceParams::hbar) * alpha_in /
         Complex(kappa / 2.0, detuning);
}

struct PurcellDrive {
  double gamma_purcell = 0;    // cavity-mediated emission rate, ueV
  double gamma_purcell_h = 0;  // per-mode contributions
  double gamma_purcell_v = 0;
  double total_decay = 0;      // gamma_purcell + gamma_sp, ueV
  Complex rabi_up{0, 0};       // drive amplitude on |trion_up><up|, ueV
  Complex rabi_down{0, 0};
};

inline PurcellDrive purcell_and_drive(const DeviceParams& p, double omega_laser,
                                      double alpha_in) {
  PurcellDrive out;
  const double g2_mode = 0.5 * p.g * p.g;  // |g/sqrt(2)|^2 per linear mode
  auto mode_term = [&](CavityMode m) {
    const double d = p.omega_qd_mean - detail::mode_energy(p, m);
    const double k = detail::mode_kappa(p, m);
    return g2_mode * k / (d * d + 0.25 * k * k);
  };
  out.gamma_purcell_h = mode_term(CavityMode::h);
  out.gamma_purcell_v = mode_term(CavityMode::v);
  out.gamma_purcell = out.gamma_purcell_h + out.gamma_purcell_v;
  out.total_decay = out.gamma_purcell + p.gamma_sp;

  // H-polarized input only drives a_H; the dipole absorbs with the conjugate
  // of its emission pattern.
  const Complex a_h = intracavity_amplitude(p, omega_laser, CavityMode::h, alpha_in);
  const Complex a_v = 0.0;
  const double gm = p.g / std::sqrt(2.0);
  out.rabi_up = gm * (a_h - Complex(0, 1) * a_v);
  out.rabi_down = gm * (a_h + Complex(0, 1) * a_v);
  return out;
}

// Output Jones vector for unit H-polarized input with the QD frozen in one
// spin state: steady state of the coupled (a_H, a_V, sigma) linear system,
// then b_out = b_in - sqrt(eta kappa) a. The dipole linewidth here contains
// only the non-cavity channels (gamma_sp + 2 gamma_star); the cavity-induced
// broadening emerges from the solve itself.
inline Jones<double> conditional_jones(const DeviceParams& p, double omega_laser,
                                       SpinState spin,
                                       double trion_detuning_offset = 0.0) {
  const double hbar = DeviceParams::hbar;
  if (spin == SpinState::empty) {
    return {empty_cavity_reflection(p, omega_laser, CavityMode::h), Complex(0, 0)};
  }
  const Eigen::Vector2cd pattern = detail::dipole_pattern(spin);
  const Complex g_h = p.g * pattern(0);
  const Complex g_v = p.g * pattern(1);
  const double gamma_t = p.gamma_sp + 2.0 * p.gamma_star;
  const double delta_d =
      detail::transition_energy(p, spin, trion_detuning_offset) - omega_laser;

  // Rate units (1/ns) throughout the solve.
  const Complex i(0, 1);
  const double dh = (p.omega_cav_h - omega_laser) / hbar;
  const double dv = (p.omega_cav_v - omega_laser) / hbar;
  const double kh = p.kappa_h / hbar;
  const double kv = p.kappa_v / hbar;

  Eigen::Matrix3cd m = Eigen::Matrix3cd::Zero();
  m(0, 0) = Complex(kh / 2.0, dh);
  m(1, 1) = Complex(kv / 2.0, dv);
  m(2, 2) = Complex(gamma_t / (2.0 * hbar), delta_d / hbar);
  m(0, 2) = i * g_h / hbar;
  m(1, 2) = i * g_v / hbar;
  m(2, 0) = i * std::conj(g_h) / hbar;
  m(2, 1) = i * std::conj(g_v) / hbar;

  Eigen::Vector3cd rhs;
  rhs << std::sqrt(p.eta_top * kh), 0.0, 0.0;
  const Eigen::Vector3cd x = m.partialPivLu().solve(rhs);

  Jones<double> out;
  out.e_h = 1.0 - std::sqrt(p.eta_top * kh) * x(0);
  out.e_v = -std::sqrt(p.eta_top * kv) * x(1);
  return out;
}

// Coefficients of the output-field operator: coherent background t_bg
// (dimensionless reflection matrix, diagonal for this cavity) and the
// collected emission pattern c_+- of each circular dipole, flux-normalized so
// |amplitude|^2 is a count rate in 1/ns. c_plus belongs to the down-trion (R)
// dipole, c_minus to the up-trion (L) one.
struct LinearResponse {
  Eigen::Matrix2cd t_bg = Eigen::Matrix2cd::Zero();
  Eigen::Vector2cd c_plus = Eigen::Vector2cd::Zero();
  Eigen::Vector2cd c_minus = Eigen::Vector2cd::Zero();
  double omega_laser = 0;
  double alpha_in = 0;
};

inline LinearResponse detection_coefficients(const DeviceParams& p,
                                             double omega_laser, double alpha_in) {
  if (alpha_in < 0) throw std::invalid_argument("detection_coefficients: alpha_in < 0");
  LinearResponse lr;
  lr.omega_laser = omega_laser;
  lr.alpha_in = alpha_in;
  lr.t_bg(0, 0) = empty_cavity_reflection(p, omega_laser, CavityMode::h);
  lr.t_bg(1, 1) = empty_cavity_reflection(p, omega_laser, CavityMode::v);

  const Complex i(0, 1);
  auto collected = [&](SpinState s) {
    const Eigen::Vector2cd pattern = detail::dipole_pattern(s);
    Eigen::Vector2cd c;
    for (int m = 0; m < 2; ++m) {
      const CavityMode mode = m == 0 ? CavityMode::h : CavityMode::v;
      const double detuning = detail::mode_energy(p, mode) - omega_laser;
      const double kappa = detail::mode_kappa(p, mode);
      c(m) = i * std::sqrt(p.eta_top * kappa / DeviceParams::hbar) * p.g * pattern(m) /
             Complex(kappa / 2.0, detuning);
    }
    return c;
  };
  lr.c_minus = collected(SpinState::up);
  lr.c_plus = collected(SpinState::down);
  return lr;
}

}  // namespace snsim
