#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <unsupported/Eigen/FFT>
#include <vector>

#include "snsim/experiments.hpp"

// Spin-noise spectral density and Lorentzian rate extraction.
//
// Convention (pinned by the Parseval identity below): C is even in tau and
//   S(f) = 2 Integral_0^inf C(tau) cos(2 pi f tau) dtau,
// so Integral_0^inf S(f) df = C(0)/2. The frozen-charge floor of the
// correlator does not decay and is subtracted before transforming; c0_used
// records the corresponding C(0) reference.

namespace snsim {

struct LorentzFit {
  double amplitude = 0;   // 1/MHz
  double fwhm_mhz = 0;
  double offset = 0;      // 1/MHz
  double residual = 0;    // rms of fit residuals
  bool reliable = false;
  int iterations = 0;
};

struct NoiseSpectrum {
  std::vector<double> freq;  // MHz
  std::vector<double> s;     // 1/MHz, one-sided
  LorentzFit fit;
  double gamma_eff = 0;      // 1/s, pi * FWHM; filled by fit_lorentzian
  double c0_used = 0;        // floor-subtracted C(0) entering the transform
  double floor_subtracted = 0;
};

// FFT of the evenly resampled, floor-subtracted correlator with symmetric
// extension and zero padding. dt_ns = 0 picks tau_max/2048.
inline NoiseSpectrum spectrum_from_correlator(const CorrelatorTrace& trace,
                                              double dt_ns = 0.0, int pad_factor = 8) {
  const std::size_t n_in = trace.tau.size();
  if (n_in < 4) throw std::invalid_argument("spectrum_from_correlator: trace too short");
  for (std::size_t i = 1; i < n_in; ++i)
    if (trace.tau[i] <= trace.tau[i - 1])
      throw std::invalid_argument("spectrum_from_correlator: non-monotone tau");
  if (trace.tau.front() != 0.0)
    throw std::invalid_argument("spectrum_from_correlator: tau grid must start at 0");

  const double tau_max = trace.tau.back();
  if (dt_ns <= 0) dt_ns = tau_max / 2048.0;
  const std::size_t n = static_cast<std::size_t>(std::floor(tau_max / dt_ns)) + 1;

  // linear resampling onto the uniform grid, floor removed
  std::vector<double> c(n);
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = i * dt_ns;
    while (j + 2 < n_in && trace.tau[j + 1] < t) ++j;
    const double t0 = trace.tau[j], t1 = trace.tau[j + 1];
    const double w = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
    c[i] = (1 - w) * trace.c[j] + w * trace.c[j + 1] - trace.c_floor;
  }

  // zero-padded even extension: [c_0 .. c_{P-1}, c_{P-2} .. c_1]
  const std::size_t padded = n * std::max(1, pad_factor);
  std::vector<std::complex<double>> ext(2 * (padded - 1), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    ext[i] = c[i];
    if (i > 0) ext[ext.size() - i] = c[i];
  }
  std::vector<std::complex<double>> dft;
  Eigen::FFT<double> fft;
  fft.fwd(dft, ext);

  NoiseSpectrum spec;
  spec.c0_used = c[0];
  spec.floor_subtracted = trace.c_floor;
  const double df_per_ns = 1.0 / (static_cast<double>(ext.size()) * dt_ns);
  spec.freq.reserve(padded);
  spec.s.reserve(padded);
  for (std::size_t m = 0; m < padded; ++m) {
    spec.freq.push_back(df_per_ns * static_cast<double>(m) * 1e3);  // 1/ns -> MHz
    spec.s.push_back(dt_ns * dft[m].real() * 1e-3);                 // ns -> 1/MHz
  }
  return spec;
}

// Least-squares fit of A / (1 + (2 f / FWHM)^2) + b by Levenberg-Marquardt;
// gamma_eff = pi * FWHM converted to 1/s.
inline NoiseSpectrum fit_lorentzian(NoiseSpectrum spec) {
  const std::size_t n = spec.freq.size();
  if (n < 16) throw std::invalid_argument("fit_lorentzian: too few frequency points");

  // initial guess: offset from the high-frequency tail, width from the
  // half-maximum crossing
  double b = 0;
  for (std::size_t i = n - n / 5; i < n; ++i) b += spec.s[i];
  b /= static_cast<double>(n / 5);
  double a = spec.s.front() - b;
  double fwhm = 2.0 * spec.freq.back();
  for (std::size_t i = 1; i < n; ++i) {
    if (spec.s[i] - b <= 0.5 * a) {
      fwhm = 2.0 * spec.freq[i];
      break;
    }
  }
  const double s_scale = std::max(std::abs(a), 1e-300);
  if (std::abs(a) < 1e-6 * std::max(std::abs(b), 1e-30) || a <= 0) {
    // amplitude indistinguishable from the floor: flag and return
    spec.fit = {a, fwhm, b, 0.0, false, 0};
    spec.gamma_eff = pi * fwhm * 1e6;
    return spec;
  }

  Eigen::Vector3d params(a, fwhm, b);
  double lambda = 1e-3;
  auto chi2 = [&](const Eigen::Vector3d& q) {
    double acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = 2.0 * spec.freq[i] / q(1);
      const double r = q(0) / (1 + u * u) + q(2) - spec.s[i];
      acc += r * r;
    }
    return acc;
  };
  double best = chi2(params);
  int it = 0;
  for (; it < 200; ++it) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const double u = 2.0 * spec.freq[i] / params(1);
      const double den = 1 + u * u;
      const double r = params(0) / den + params(2) - spec.s[i];
      Eigen::Vector3d grad;
      grad(0) = 1.0 / den;
      grad(1) = params(0) * 2.0 * u * u / (den * den * params(1));
      grad(2) = 1.0;
      jtj += grad * grad.transpose();
      jtr += grad * r;
    }
    Eigen::Matrix3d damped = jtj;
    damped.diagonal() += lambda * jtj.diagonal();
    const Eigen::Vector3d step = damped.ldlt().solve(-jtr);
    Eigen::Vector3d trial = params + step;
    if (trial(1) <= 0) trial(1) = 0.5 * params(1);
    const double trial_chi2 = chi2(trial);
    if (trial_chi2 < best) {
      const bool converged = (best - trial_chi2) < 1e-14 * (best + 1e-300) ||
                             step.cwiseAbs().maxCoeff() <
                                 1e-12 * params.cwiseAbs().maxCoeff();
      params = trial;
      best = trial_chi2;
      lambda = std::max(lambda * 0.3, 1e-12);
      if (converged) break;
    } else {
      lambda *= 10;
      if (lambda > 1e12) break;
    }
  }
  if (!(params(1) > 0) || !std::isfinite(best))
    throw std::runtime_error("fit_lorentzian: no convergence, residual " +
                             std::to_string(best));
  spec.fit.amplitude = params(0);
  spec.fit.fwhm_mhz = params(1);
  spec.fit.offset = params(2);
  spec.fit.residual = std::sqrt(best / static_cast<double>(n));
  spec.fit.reliable = params(0) > 10.0 * spec.fit.residual && params(0) > 0;
  spec.fit.iterations = it;
  spec.gamma_eff = pi * spec.fit.fwhm_mhz * 1e6;
  (void)s_scale;
  return spec;
}

struct PowerLaw {
  double slope = 0;      // (1/s) per pW
  double intercept = 0;  // 1/s
  double r2 = 0;
};

// Ordinary least squares of gamma_eff against power.
inline PowerLaw gamma_vs_power(const std::vector<std::pair<double, NoiseSpectrum>>& specs) {
  const std::size_t n = specs.size();
  if (n < 3) throw std::invalid_argument("gamma_vs_power: need at least 3 powers");
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto& [power, spec] : specs) {
    sx += power;
    sy += spec.gamma_eff;
    sxx += power * power;
    sxy += power * spec.gamma_eff;
    syy += spec.gamma_eff * spec.gamma_eff;
  }
  const double nd = static_cast<double>(n);
  const double denom = nd * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) throw std::invalid_argument("gamma_vs_power: degenerate powers");
  PowerLaw law;
  law.slope = (nd * sxy - sx * sy) / denom;
  law.intercept = (sy - law.slope * sx) / nd;
  double ss_res = 0;
  const double mean_y = sy / nd;
  double ss_tot = 0;
  for (const auto& [power, spec] : specs) {
    const double fit = law.slope * power + law.intercept;
    ss_res += (spec.gamma_eff - fit) * (spec.gamma_eff - fit);
    ss_tot += (spec.gamma_eff - mean_y) * (spec.gamma_eff - mean_y);
  }
  law.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return law;
}

// Trapezoid integral of the one-sided spectrum, for the Parseval check.
inline double integrate_spectrum(const NoiseSpectrum& spec) {
  double acc = 0;
  for (std::size_t i = 1; i < spec.freq.size(); ++i)
    acc += 0.5 * (spec.s[i] + spec.s[i - 1]) * (spec.freq[i] - spec.freq[i - 1]);
  return acc;
}

}  // namespace snsim
