#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include "snsim/evolution.hpp"
#include "snsim/parallel.hpp"

// Noise-averaged observables: reflectivity/tomography sweeps, conditional
// output loci and their symmetry axis, cross-correlators C_theta(tau) and the
// basis-angle / power sweeps.
//
// Averaging rule for correlators: the experiment integrates counts over times
// much longer than the environment correlation time, but each coincidence
// happens within one frozen realization. Coincidence numerators and singles
// rates are therefore averaged separately over samples,
//   g2_avg(tau) = <numerator> / (<rate_x> <rate_xbar>).

namespace snsim {

struct CorrelatorTrace {
  double theta = 0;
  double theta0 = 0;
  double power_pW = 0;
  double omega_laser = 0;
  std::vector<double> tau;  // ns
  std::vector<double> c;    // 1 - g2
  std::vector<double> g2;
  double rate_x = 0;        // sample-averaged singles, 1/ns
  double rate_xbar = 0;
  double c_floor = 0;       // frozen-charge correlation floor, C(tau -> inf)
  std::uint64_t seed = 0;

  // Short-delay spin-noise strength: the correlator settles to a plateau once
  // the optical transient (a few trion lifetimes) has passed; spin relaxation
  // only degrades it orders of magnitude later. Reported as C at the first
  // grid point past tau_settle.
  double c0(double tau_settle = 2.0) const {
    for (std::size_t i = 0; i < tau.size(); ++i)
      if (tau[i] >= tau_settle) return c[i];
    return c.empty() ? 0.0 : c.back();
  }
};

struct TomographySweep {
  std::vector<double> omega_laser;  // ueV, relative to the mean QD energy
  std::vector<double> i_h, i_v;     // input-normalized intensities
  std::vector<double> s_hv, s_da, s_rl;
  std::vector<double> polarized_norm;
};

struct Loci {
  std::vector<double> omega_laser;
  std::vector<Stokes<double>> up, down, empty;
};

// --- tomography ------------------------------------------------------------

inline TomographySweep tomography_sweep(const DeviceParams& p,
                                        const std::vector<double>& omega_grid,
                                        double alpha_in,
                                        const std::vector<NoiseSample>& samples,
                                        int threads = 0) {
  if (omega_grid.empty() || samples.empty())
    throw std::invalid_argument("tomography_sweep: empty grid or sample set");
  const double flux = alpha_in * alpha_in;
  if (flux <= 0) throw std::invalid_argument("tomography_sweep: zero input flux");

  // six analyzers: H, V, D, A, L, R
  const Jones<double> analyzers[6] = {Jones<double>::h(), Jones<double>::v(),
                                      Jones<double>::d(), Jones<double>::a(),
                                      Jones<double>::l(), Jones<double>::r()};

  std::vector<std::array<double, 6>> rates(omega_grid.size());
  parallel_for_index(omega_grid.size(), threads, [&](std::size_t k) {
    const double w = omega_grid[k];
    const LinearResponse lr = detection_coefficients(p, w, alpha_in);
    DetectionOperator ops[6];
    for (int a = 0; a < 6; ++a) ops[a] = detection_operator(lr, analyzers[a]);
    std::array<double, 6> acc{};
    for (const NoiseSample& s : samples) {
      const SystemModel model = build_model(p, w, alpha_in, s);
      const Matrix5cd rho = steady_state(liouvillian(model), p.p_charged);
      for (int a = 0; a < 6; ++a)
        acc[a] += s.weight *
                  (ops[a].matrix * rho * ops[a].matrix.adjoint()).trace().real();
    }
    rates[k] = acc;
  });

  TomographySweep sweep;
  sweep.omega_laser = omega_grid;
  for (std::size_t k = 0; k < omega_grid.size(); ++k) {
    const auto& r = rates[k];
    sweep.i_h.push_back(r[0] / flux);
    sweep.i_v.push_back(r[1] / flux);
    const double shv = stokes_from_intensities(r[0], r[1]);
    const double sda = stokes_from_intensities(r[2], r[3]);
    const double srl = stokes_from_intensities(r[4], r[5]);
    sweep.s_hv.push_back(shv);
    sweep.s_da.push_back(sda);
    sweep.s_rl.push_back(srl);
    sweep.polarized_norm.push_back(std::sqrt(shv * shv + sda * sda + srl * srl));
  }
  return sweep;
}

// --- conditional loci and symmetry axis -------------------------------------

// Noise-free conditional output states (pure-state limit: the Overhauser
// field, spectral wandering and pure dephasing are all switched off here).
inline Loci conditional_stokes_loci(const DeviceParams& p,
                                    const std::vector<double>& omega_grid) {
  DeviceParams q = p;
  q.gamma_star = 0;
  Loci loci;
  loci.omega_laser = omega_grid;
  for (double w : omega_grid) {
    loci.up.push_back(stokes_from_jones(conditional_jones(q, w, SpinState::up)));
    loci.down.push_back(stokes_from_jones(conditional_jones(q, w, SpinState::down)));
    loci.empty.push_back(stokes_from_jones(conditional_jones(q, w, SpinState::empty)));
  }
  return loci;
}

namespace detail {

inline double point_segment_dist2(double px, double py, double ax, double ay,
                                  double bx, double by) {
  const double vx = bx - ax, vy = by - ay;
  const double vv = vx * vx + vy * vy;
  double t = vv > 0 ? ((px - ax) * vx + (py - ay) * vy) / vv : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (ax + t * vx), dy = py - (ay + t * vy);
  return dx * dx + dy * dy;
}

// Mean squared distance between the up polyline and the down polyline
// reflected about the axis at azimuth phi, symmetrized.
inline double mirror_residual(const std::vector<std::pair<double, double>>& up,
                              const std::vector<std::pair<double, double>>& down,
                              double phi) {
  const double c = std::cos(2 * phi), s = std::sin(2 * phi);
  std::vector<std::pair<double, double>> rdown(down.size());
  for (std::size_t i = 0; i < down.size(); ++i)
    rdown[i] = {c * down[i].first + s * down[i].second,
                s * down[i].first - c * down[i].second};
  auto to_poly = [](const std::pair<double, double>& pt,
                    const std::vector<std::pair<double, double>>& poly) {
    double best = 1e300;
    for (std::size_t k = 0; k + 1 < poly.size(); ++k)
      best = std::min(best, point_segment_dist2(pt.first, pt.second, poly[k].first,
                                                poly[k].second, poly[k + 1].first,
                                                poly[k + 1].second));
    return best;
  };
  double total = 0;
  for (const auto& pt : up) total += to_poly(pt, rdown);
  for (const auto& pt : rdown) total += to_poly(pt, up);
  return total / static_cast<double>(up.size() + rdown.size());
}

}  // namespace detail

// Least-squares mirror axis of the up/down loci projected on the s_da-s_rl
// plane. Both orthogonal symmetry axes mirror the pair (the loci are close to
// antipodal at equal detuning); the returned azimuth is the axis the
// conditional states straddle near resonance, i.e. the analyzer axis that
// maximizes the spin signal. Range (-pi/2, pi/2].
inline double find_symmetry_axes(const Loci& loci, double* residual_out = nullptr) {
  std::vector<std::pair<double, double>> up, down;
  double max_radius = 0;
  for (const auto& s : loci.up) {
    up.push_back({s.s_da, s.s_rl});
    max_radius = std::max(max_radius, std::hypot(s.s_da, s.s_rl));
  }
  for (const auto& s : loci.down) down.push_back({s.s_da, s.s_rl});
  if (up.size() < 2 || down.size() < 2 || max_radius < 1e-9)
    throw std::invalid_argument("find_symmetry_axes: degenerate loci");

  // Axis angle is pi-periodic and reflections about phi and phi+pi/2 both map
  // the near-antipodal pair onto itself; scan a half period and refine.
  const int steps = 720;
  double best_phi = 0, best_val = 1e300;
  for (int k = 0; k < steps; ++k) {
    const double phi = -0.5 * pi + pi * k / steps;
    const double v = detail::mirror_residual(up, down, phi);
    if (v < best_val) {
      best_val = v;
      best_phi = phi;
    }
  }
  // parabolic refinement
  const double h = pi / steps;
  const double vm = detail::mirror_residual(up, down, best_phi - h);
  const double vp = detail::mirror_residual(up, down, best_phi + h);
  const double denom = vm - 2 * best_val + vp;
  double phi = best_phi;
  if (std::abs(denom) > 1e-300) phi += 0.5 * h * (vm - vp) / denom;

  // Disambiguate the two orthogonal mirror axes: pick the one the conditional
  // states cluster around near resonance (largest projected radius).
  double cluster = 0;
  {
    double wx = 0, wy = 0;
    for (const auto& s : loci.up) {
      const double r2 = s.s_da * s.s_da + s.s_rl * s.s_rl;
      // axis direction doubled-angle average, weighted by radius^2
      wx += r2 * (s.s_da * s.s_da - s.s_rl * s.s_rl);
      wy += r2 * (2 * s.s_da * s.s_rl);
    }
    for (const auto& s : loci.down) {
      const double r2 = s.s_da * s.s_da + s.s_rl * s.s_rl;
      wx += r2 * (s.s_da * s.s_da - s.s_rl * s.s_rl);
      wy += r2 * (2 * s.s_da * s.s_rl);
    }
    cluster = 0.5 * std::atan2(wy, wx);
  }
  auto axis_dist = [](double a, double b) {
    double d = std::fmod(std::abs(a - b), pi);
    return std::min(d, pi - d);
  };
  if (axis_dist(phi, cluster) > axis_dist(phi + 0.5 * pi, cluster)) phi += 0.5 * pi;
  while (phi > 0.5 * pi) phi -= pi;
  while (phi <= -0.5 * pi) phi += pi;

  if (residual_out) *residual_out = best_val;
  return phi;
}

// --- correlators -------------------------------------------------------------

inline CorrelatorTrace correlator(const DeviceParams& p, double omega_laser,
                                  double alpha_in, double theta, double theta0,
                                  const std::vector<double>& tau_grid,
                                  const std::vector<NoiseSample>& samples,
                                  int threads = 0) {
  if (samples.empty()) throw std::invalid_argument("correlator: empty sample set");
  if (alpha_in <= 0) {
    std::fprintf(stderr, "snsim: correlator at zero power, returning empty trace\n");
    CorrelatorTrace empty;
    empty.theta = theta;
    empty.theta0 = theta0;
    empty.omega_laser = omega_laser;
    return empty;
  }
  const AnalyzerBasis<double> basis = analyzer_basis(theta, theta0);
  const LinearResponse lr = detection_coefficients(p, omega_laser, alpha_in);
  const DetectionOperator dx = detection_operator(lr, basis.jones_x, "x");
  const DetectionOperator dxb = detection_operator(lr, basis.jones_xbar, "xbar");

  struct PerSample {
    std::vector<double> numerator;
    double num_floor = 0;
    double rate_x = 0, rate_xbar = 0;
  };
  std::vector<PerSample> parts(samples.size());
  parallel_for_index(samples.size(), threads, [&](std::size_t k) {
    const SystemModel model = build_model(p, omega_laser, alpha_in, samples[k]);
    const Liouvillian liou = liouvillian(model);
    const Matrix5cd rho = steady_state(liou, p.p_charged);
    const Evolver evolver(liou);
    G2Result g2 = g2_cross(evolver, rho, dx, dxb, tau_grid);
    PerSample& out = parts[k];
    out.numerator = std::move(g2.numerator);
    out.rate_x = g2.rate_x;
    out.rate_xbar = g2.rate_xbar;
    // Stationary-subspace part of the numerator: the charge sector is frozen,
    // so the correlator relaxes to this floor instead of zero.
    const double horizon = 50.0 / evolver.slowest_rate();
    out.num_floor =
        g2_cross(evolver, rho, dx, dxb, {horizon}).numerator.front();
  });

  CorrelatorTrace trace;
  trace.theta = theta;
  trace.theta0 = theta0;
  trace.omega_laser = omega_laser;
  trace.power_pW = p.power_from_alpha(alpha_in);
  trace.tau = tau_grid;
  std::vector<double> num(tau_grid.size(), 0.0);
  double num_floor = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const double w = samples[k].weight;
    for (std::size_t i = 0; i < tau_grid.size(); ++i) num[i] += w * parts[k].numerator[i];
    num_floor += w * parts[k].num_floor;
    trace.rate_x += w * parts[k].rate_x;
    trace.rate_xbar += w * parts[k].rate_xbar;
  }
  const double norm = trace.rate_x * trace.rate_xbar;
  trace.g2.reserve(num.size());
  trace.c.reserve(num.size());
  for (double n : num) {
    trace.g2.push_back(n / norm);
    trace.c.push_back(1.0 - n / norm);
  }
  trace.c_floor = 1.0 - num_floor / norm;
  return trace;
}

// Logarithmic tau grid starting at zero.
inline std::vector<double> log_tau_grid(double tau_min, double tau_max, int n) {
  if (n < 2 || tau_min <= 0 || tau_max <= tau_min)
    throw std::invalid_argument("log_tau_grid: bad parameters");
  std::vector<double> grid;
  grid.reserve(n);
  grid.push_back(0.0);
  const double ratio = std::log(tau_max / tau_min) / (n - 2);
  for (int k = 0; k < n - 1; ++k) grid.push_back(tau_min * std::exp(ratio * k));
  return grid;
}

// C_theta(0) (short-delay plateau) for a set of basis angles; the steady state
// and propagator per sample are reused across angles.
inline std::vector<double> theta_sweep_c0(const DeviceParams& p, double omega_laser,
                                          double alpha_in,
                                          const std::vector<double>& thetas,
                                          double theta0,
                                          const std::vector<NoiseSample>& samples,
                                          double tau_settle = 2.0, int threads = 0) {
  const LinearResponse lr = detection_coefficients(p, omega_laser, alpha_in);
  std::vector<DetectionOperator> dx, dxb;
  for (double theta : thetas) {
    const AnalyzerBasis<double> b = analyzer_basis(theta, theta0);
    dx.push_back(detection_operator(lr, b.jones_x));
    dxb.push_back(detection_operator(lr, b.jones_xbar));
  }
  struct Row {
    std::vector<double> num;
    std::vector<double> rx, rxb;
  };
  std::vector<Row> rows(samples.size());
  parallel_for_index(samples.size(), threads, [&](std::size_t k) {
    const SystemModel model = build_model(p, omega_laser, alpha_in, samples[k]);
    const Liouvillian liou = liouvillian(model);
    const Matrix5cd rho = steady_state(liou, p.p_charged);
    const Evolver evolver(liou);
    Row& row = rows[k];
    for (std::size_t a = 0; a < thetas.size(); ++a) {
      const G2Result g2 = g2_cross(evolver, rho, dx[a], dxb[a], {tau_settle});
      row.num.push_back(g2.numerator.front());
      row.rx.push_back(g2.rate_x);
      row.rxb.push_back(g2.rate_xbar);
    }
  });
  std::vector<double> c0(thetas.size(), 0.0);
  for (std::size_t a = 0; a < thetas.size(); ++a) {
    double num = 0, rx = 0, rxb = 0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
      num += samples[k].weight * rows[k].num[a];
      rx += samples[k].weight * rows[k].rx[a];
      rxb += samples[k].weight * rows[k].rxb[a];
    }
    c0[a] = 1.0 - num / (rx * rxb);
  }
  return c0;
}

inline std::vector<CorrelatorTrace> power_sweep(
    const DeviceParams& p, double omega_laser, const std::vector<double>& powers_pW,
    double theta, double theta0, const std::vector<double>& tau_grid,
    const std::vector<NoiseSample>& samples, int threads = 0) {
  std::vector<CorrelatorTrace> traces;
  traces.reserve(powers_pW.size());
  for (double power : powers_pW) {
    CorrelatorTrace t = correlator(p, omega_laser, p.alpha_in_from_power(power), theta,
                                   theta0, tau_grid, samples, threads);
    t.power_pW = power;
    traces.push_back(std::move(t));
  }
  return traces;
}

}  // namespace snsim
