#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include "snsim/units.hpp"

// Jones/Stokes algebra in the {H, V} linear basis of the cavity eigenaxes.
//
// Sign and handedness conventions, fixed here once and used everywhere:
//   s_hv = (|e_h|^2 - |e_v|^2) / I
//   s_da = 2 Re(e_h^* e_v) / I      with D = (H + V)/sqrt(2) at s_da = +1
//   s_rl = 2 Im(e_h^* e_v) / I      with L = (H + i V)/sqrt(2) at s_rl = +1
//                                   and  R = (H - i V)/sqrt(2) at s_rl = -1
// Intensity tomography therefore forms s_rl as (I_L - I_R)/(I_L + I_R).
// Flipping the handedness mirrors s_rl everywhere and nothing else.

namespace snsim {

template <typename Scalar = double>
struct Jones {
  std::complex<Scalar> e_h{0, 0};
  std::complex<Scalar> e_v{0, 0};

  Scalar intensity() const { return std::norm(e_h) + std::norm(e_v); }

  Jones normalized() const {
    const Scalar n = std::sqrt(intensity());
    if (n <= Scalar(0)) throw std::invalid_argument("Jones: cannot normalize zero field");
    return {e_h / n, e_v / n};
  }

  static Jones h() { return {Scalar(1), Scalar(0)}; }
  static Jones v() { return {Scalar(0), Scalar(1)}; }
  static Jones d() { const Scalar s = Scalar(1) / std::sqrt(Scalar(2)); return {s, s}; }
  static Jones a() { const Scalar s = Scalar(1) / std::sqrt(Scalar(2)); return {s, -s}; }
  static Jones l() {
    const Scalar s = Scalar(1) / std::sqrt(Scalar(2));
    return {{s, 0}, {0, s}};
  }
  static Jones r() {
    const Scalar s = Scalar(1) / std::sqrt(Scalar(2));
    return {{s, 0}, {0, -s}};
  }
};

template <typename Scalar = double>
struct Stokes {
  Scalar s_hv{0};
  Scalar s_da{0};
  Scalar s_rl{0};
  Scalar intensity{0};

  Scalar polarized_norm() const {
    return std::sqrt(s_hv * s_hv + s_da * s_da + s_rl * s_rl);
  }
};

template <typename Scalar>
Stokes<Scalar> stokes_from_jones(const Jones<Scalar>& j) {
  const Scalar i = j.intensity();
  if (i <= Scalar(0)) return {};  // zero field: fully undefined polarization
  const std::complex<Scalar> cross = std::conj(j.e_h) * j.e_v;
  Stokes<Scalar> s;
  s.s_hv = (std::norm(j.e_h) - std::norm(j.e_v)) / i;
  s.s_da = Scalar(2) * cross.real() / i;
  s.s_rl = Scalar(2) * cross.imag() / i;
  s.intensity = i;
  return s;
}

// (i_x - i_xbar)/(i_x + i_xbar) for a pair of analyzer intensities.
inline double stokes_from_intensities(double i_x, double i_xbar) {
  if (i_x < 0 || i_xbar < 0)
    throw std::invalid_argument("stokes_from_intensities: negative intensity");
  const double total = i_x + i_xbar;
  if (total <= 0) throw std::invalid_argument("stokes_from_intensities: no signal");
  return (i_x - i_xbar) / total;
}

// <analyzer|state>; |result|^2 is the transmitted intensity fraction.
template <typename Scalar>
std::complex<Scalar> project(const Jones<Scalar>& state, const Jones<Scalar>& analyzer) {
  return std::conj(analyzer.e_h) * state.e_h + std::conj(analyzer.e_v) * state.e_v;
}

// Orthogonal analyzer pair (|H> +- e^{i(theta+theta0)}|V>)/sqrt(2): both Stokes
// vectors lie in the s_da-s_rl plane (perpendicular to H on the Poincare
// sphere) at azimuth theta+theta0 and its antipode.
template <typename Scalar = double>
struct AnalyzerBasis {
  Scalar theta{0};
  Scalar theta0{0};
  Jones<Scalar> jones_x;
  Jones<Scalar> jones_xbar;
};

template <typename Scalar = double>
AnalyzerBasis<Scalar> analyzer_basis(Scalar theta, Scalar theta0) {
  const Scalar inv_sqrt2 = Scalar(1) / std::sqrt(Scalar(2));
  const std::complex<Scalar> phase = std::polar(Scalar(1), theta + theta0);
  AnalyzerBasis<Scalar> basis;
  basis.theta = theta;
  basis.theta0 = theta0;
  basis.jones_x = {inv_sqrt2, phase * inv_sqrt2};
  basis.jones_xbar = {inv_sqrt2, -phase * inv_sqrt2};
  return basis;
}

// Angle between the normalized polarized parts of two Stokes vectors, in [0, pi].
template <typename Scalar>
Scalar poincare_angle_between(const Stokes<Scalar>& a, const Stokes<Scalar>& b) {
  const Scalar na = a.polarized_norm();
  const Scalar nb = b.polarized_norm();
  if (na <= Scalar(0) || nb <= Scalar(0))
    throw std::invalid_argument("poincare_angle_between: zero polarized part");
  Scalar dot = (a.s_hv * b.s_hv + a.s_da * b.s_da + a.s_rl * b.s_rl) / (na * nb);
  dot = std::max(Scalar(-1), std::min(Scalar(1), dot));
  return std::acos(dot);
}

}  // namespace snsim
