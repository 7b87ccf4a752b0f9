#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "snsim/evolution.hpp"
#include "snsim/experiments.hpp"
#include "snsim/parallel.hpp"

// Monte Carlo wave-function photon counting: the brute-force oracle for the
// quantum-regression pipeline. The two click channels are the full displaced
// detection operators (coherent background plus dipole terms); the remaining
// radiative weight, dephasing and spin-relaxation channels are unmonitored
// losses. The displaced jumps come with the standard compensating Hamiltonian
// term so the trajectory ensemble reproduces the same master equation.

namespace snsim {

struct ClickStream {
  std::vector<double> channel_x;     // sorted times, ns
  std::vector<double> channel_xbar;
  double duration = 0;               // ns
  std::uint64_t seed = 0;
  NoiseSample sample;
};

struct UnravelOptions {
  double max_step_ns = 50.0;
  double jump_time_tol_ns = 1e-4;
  // Test hook: multiplies the dipole part of the x click operator. |factor|
  // must stay <= 1 so the unmonitored remainder stays positive; a pure phase
  // scrambles the background-dipole interference without touching any rate.
  Complex corruption = 1.0;
  std::vector<double> snapshot_times;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Jump channels of the unraveling. Channels 0 and 1 are the click channels.
struct JumpSet {
  std::vector<Matrix5cd> ops;
  Matrix5cd k = Matrix5cd::Zero();  // no-jump generator, 1/ns
};

inline JumpSet assemble_jumps(const SystemModel& model, const DetectionOperator& dx,
                              const DetectionOperator& dxbar, Complex corruption) {
  JumpSet set;
  Matrix5cd jx = dx.matrix;
  if (corruption != 1.0) {
    const Complex beta = jx(kEmpty, kEmpty);
    jx = beta * Matrix5cd::Identity() + corruption * (jx - beta * Matrix5cd::Identity());
  }
  const Matrix5cd jxb = dxbar.matrix;
  set.ops.push_back(jx);
  set.ops.push_back(jxb);

  // Radiative rates from the model's collapse operators; everything else is
  // kept as an unmonitored loss channel.
  double rate_up = -1, rate_down = -1;
  for (const Matrix5cd& c : model.collapse_ops) {
    const double up = std::norm(c(kUp, kTrionUp));
    const double down = std::norm(c(kDown, kTrionDown));
    if (up > 0 && c.cwiseAbs().sum() == std::abs(c(kUp, kTrionUp))) {
      rate_up = up;
    } else if (down > 0 && c.cwiseAbs().sum() == std::abs(c(kDown, kTrionDown))) {
      rate_down = down;
    } else {
      set.ops.push_back(c);
    }
  }
  if (rate_up < 0 || rate_down < 0)
    throw std::invalid_argument("assemble_jumps: model lacks radiative channels");

  // The dipole parts of the click channels monitor part of the radiative
  // decay, with interference between the two branches. The unmonitored
  // remainder is the PSD completion of the 2x2 dissipator Gram matrix.
  Eigen::Matrix2cd gram = Eigen::Matrix2cd::Zero();
  gram(0, 0) = rate_up;
  gram(1, 1) = rate_down;
  for (int ch = 0; ch < 2; ++ch) {
    Eigen::Vector2cd v;
    v << set.ops[ch](kUp, kTrionUp), set.ops[ch](kDown, kTrionDown);
    gram -= v * v.adjoint();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(gram);
  for (int k = 0; k < 2; ++k) {
    double mu = es.eigenvalues()(k);
    if (mu < -1e-9 * std::max(rate_up, rate_down))
      throw std::runtime_error("assemble_jumps: click channels exceed radiative weight");
    if (mu <= 0) continue;
    Matrix5cd loss = Matrix5cd::Zero();
    loss(kUp, kTrionUp) = std::sqrt(mu) * es.eigenvectors()(0, k);
    loss(kDown, kTrionDown) = std::sqrt(mu) * es.eigenvectors()(1, k);
    set.ops.push_back(loss);
  }

  // Compensating Hamiltonian for the displaced click jumps, then the no-jump
  // generator K = -i H'/hbar - 1/2 sum J^+ J.
  Matrix5cd h = model.hamiltonian;
  for (int ch = 0; ch < 2; ++ch) {
    const Complex beta = set.ops[ch](kEmpty, kEmpty);
    const Matrix5cd dip = set.ops[ch] - beta * Matrix5cd::Identity();
    h -= Complex(0, 0.5 * DeviceParams::hbar) *
         (std::conj(beta) * dip - beta * dip.adjoint());
  }
  set.k = Complex(0, -1.0 / DeviceParams::hbar) * h;
  for (const Matrix5cd& j : set.ops) set.k -= 0.5 * j.adjoint() * j;
  return set;
}

// exp(K t) through the cached eigendecomposition of the 5x5 generator.
struct Propagator {
  Matrix5cd w, winv;
  Vector5cd lambda;

  explicit Propagator(const Matrix5cd& k) {
    Eigen::ComplexEigenSolver<Matrix5cd> es(k);
    w = es.eigenvectors();
    lambda = es.eigenvalues();
    winv = w.partialPivLu().inverse();
  }
  Vector5cd apply(const Vector5cd& psi, double t) const {
    Vector5cd y = winv * psi;
    for (int i = 0; i < 5; ++i) y(i) *= std::exp(lambda(i) * t);
    return w * y;
  }
};

// Pure-state ensemble decomposition of a density operator for trajectory
// initial conditions.
struct InitialEnsemble {
  std::vector<Vector5cd> states;
  std::vector<double> cumulative;

  explicit InitialEnsemble(const Matrix5cd& rho) {
    Eigen::SelfAdjointEigenSolver<Matrix5cd> es(0.5 * (rho + rho.adjoint()));
    double acc = 0;
    for (int k = 0; k < 5; ++k) {
      const double w = std::max(es.eigenvalues()(k), 0.0);
      if (w < 1e-12) continue;
      states.push_back(es.eigenvectors().col(k));
      acc += w;
      cumulative.push_back(acc);
    }
    if (states.empty()) throw std::invalid_argument("InitialEnsemble: zero state");
    for (double& c : cumulative) c /= acc;
  }
  const Vector5cd& draw(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double u = uni(rng);
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    return states[std::min<std::size_t>(it - cumulative.begin(), states.size() - 1)];
  }
};

}  // namespace detail

// One stochastic trajectory of length `duration`, recording click times on
// both analyzer channels. Initial states are drawn from rho0. Snapshot times
// (if any) receive the normalized pure-state projector for ensemble checks.
inline ClickStream simulate_clicks(const SystemModel& model, const DetectionOperator& dx,
                                   const DetectionOperator& dxbar, double duration,
                                   std::uint64_t seed, const Matrix5cd& rho0,
                                   const UnravelOptions& opts = {},
                                   std::vector<Matrix5cd>* snapshots = nullptr) {
  if (duration <= 0) throw std::invalid_argument("simulate_clicks: duration <= 0");
  const detail::JumpSet jumps = detail::assemble_jumps(model, dx, dxbar, opts.corruption);
  const detail::Propagator prop(jumps.k);
  const detail::InitialEnsemble ensemble(rho0);

  std::mt19937_64 rng(detail::splitmix64(seed));
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  ClickStream stream;
  stream.duration = duration;
  stream.seed = seed;
  if (snapshots) snapshots->assign(opts.snapshot_times.size(), Matrix5cd::Zero());

  Vector5cd psi = ensemble.draw(rng);
  double t = 0;
  double target = uni(rng);
  std::size_t snap_idx = 0;

  auto total_jump_rate = [&](const Vector5cd& v) {
    double rate = 0;
    for (const Matrix5cd& j : jumps.ops) rate += (j * v).squaredNorm();
    const double n2 = v.squaredNorm();
    return n2 > 0 ? rate / n2 : 0.0;
  };
  auto record_snapshots_until = [&](double t_stop, const Vector5cd& base, double t_base) {
    if (!snapshots) return;
    while (snap_idx < opts.snapshot_times.size() && opts.snapshot_times[snap_idx] <= t_stop) {
      const Vector5cd s = prop.apply(base, opts.snapshot_times[snap_idx] - t_base);
      (*snapshots)[snap_idx] = s * s.adjoint() / s.squaredNorm();
      ++snap_idx;
    }
  };

  while (t < duration) {
    const double rate = total_jump_rate(psi);
    if (rate < 1e-15) {
      record_snapshots_until(duration, psi, t);
      break;
    }
    const double dt = std::min({opts.max_step_ns, 0.5 / rate, duration - t});
    const Vector5cd next = prop.apply(psi, dt);
    if (next.squaredNorm() > target) {
      record_snapshots_until(t + dt, psi, t);
      psi = next;
      t += dt;
      continue;
    }
    // jump inside (t, t+dt]: bisect on the norm
    double lo = 0, hi = dt;
    while (hi - lo > opts.jump_time_tol_ns) {
      const double mid = 0.5 * (lo + hi);
      if (prop.apply(psi, mid).squaredNorm() > target)
        lo = mid;
      else
        hi = mid;
    }
    const double t_jump = t + hi;
    record_snapshots_until(t_jump, psi, t);
    Vector5cd at_jump = prop.apply(psi, hi);

    double total = 0;
    std::vector<double> weights(jumps.ops.size());
    for (std::size_t k = 0; k < jumps.ops.size(); ++k) {
      weights[k] = (jumps.ops[k] * at_jump).squaredNorm();
      total += weights[k];
    }
    double u = uni(rng) * total;
    std::size_t channel = 0;
    for (; channel + 1 < weights.size(); ++channel) {
      if (u < weights[channel]) break;
      u -= weights[channel];
    }
    if (channel == 0) stream.channel_x.push_back(t_jump);
    if (channel == 1) stream.channel_xbar.push_back(t_jump);

    psi = jumps.ops[channel] * at_jump;
    psi /= psi.norm();
    t = t_jump;
    target = uni(rng);
  }
  return stream;
}

// Trajectory-ensemble mean state at the requested times, all trajectories
// starting from rho0. Validates the unraveling against exp(L t).
inline std::vector<Matrix5cd> ensemble_mean_states(
    const SystemModel& model, const DetectionOperator& dx, const DetectionOperator& dxbar,
    const Matrix5cd& rho0, const std::vector<double>& times, int n_trajectories,
    std::uint64_t seed, int threads = 0) {
  UnravelOptions opts;
  opts.snapshot_times = times;
  const double duration = times.empty() ? 1.0 : times.back() + 1e-9;
  std::vector<std::vector<Matrix5cd>> snaps(n_trajectories);
  parallel_for_index(n_trajectories, threads, [&](std::size_t k) {
    std::vector<Matrix5cd> local;
    simulate_clicks(model, dx, dxbar, duration, seed + 977 * k, rho0, opts, &local);
    snaps[k] = std::move(local);
  });
  std::vector<Matrix5cd> mean(times.size(), Matrix5cd::Zero());
  for (int k = 0; k < n_trajectories; ++k)
    for (std::size_t i = 0; i < times.size(); ++i) mean[i] += snaps[k][i];
  for (auto& m : mean) m /= static_cast<double>(n_trajectories);
  return mean;
}

// --- coincidence histogram ---------------------------------------------------

struct G2Histogram {
  std::vector<double> tau_center;  // ns
  std::vector<double> g2;
  std::vector<double> stderr_g2;
  std::vector<double> counts;
  double rate_x = 0, rate_xbar = 0;
};

// Normalized start-stop-free coincidence histogram between the two channels.
// For bin [e_i, e_{i+1}): counts of pairs (x at t, xbar at t+tau) divided by
// N_x,eff * rate_xbar * bin_width; x clicks within tau_max of the end of the
// window are excluded so every bin sees a full window.
inline G2Histogram estimate_g2(const ClickStream& stream,
                               const std::vector<double>& bin_edges) {
  if (bin_edges.size() < 2) throw std::invalid_argument("estimate_g2: need bins");
  if (stream.channel_x.empty() || stream.channel_xbar.empty())
    throw std::invalid_argument("estimate_g2: empty channel");
  const double tau_max = bin_edges.back();
  const double t_cut = stream.duration - tau_max;
  const std::size_t nbins = bin_edges.size() - 1;

  std::vector<double> counts(nbins, 0.0);
  double n_x_eff = 0;
  const auto& xs = stream.channel_x;
  const auto& xbs = stream.channel_xbar;
  for (double t : xs) {
    if (t > t_cut) continue;
    n_x_eff += 1;
    const auto lo = std::lower_bound(xbs.begin(), xbs.end(), t + bin_edges.front());
    for (auto it = lo; it != xbs.end() && *it < t + tau_max; ++it) {
      const double tau = *it - t;
      const auto bin =
          std::upper_bound(bin_edges.begin(), bin_edges.end(), tau) - bin_edges.begin() - 1;
      if (bin >= 0 && static_cast<std::size_t>(bin) < nbins) counts[bin] += 1;
    }
  }
  if (n_x_eff == 0) throw std::invalid_argument("estimate_g2: no usable start clicks");

  G2Histogram hist;
  hist.rate_x = static_cast<double>(xs.size()) / stream.duration;
  hist.rate_xbar = static_cast<double>(xbs.size()) / stream.duration;
  for (std::size_t b = 0; b < nbins; ++b) {
    const double width = bin_edges[b + 1] - bin_edges[b];
    const double norm = n_x_eff * hist.rate_xbar * width;
    hist.tau_center.push_back(0.5 * (bin_edges[b] + bin_edges[b + 1]));
    hist.counts.push_back(counts[b]);
    hist.g2.push_back(counts[b] / norm);
    hist.stderr_g2.push_back(std::sqrt(std::max(counts[b], 1.0)) / norm);
  }
  return hist;
}

// --- sample-averaged oracle ---------------------------------------------------

struct OracleSettings {
  double omega_laser = 0;
  double power_pW = 4.0;
  double theta = 0;
  double theta0 = deg_to_rad(23.0);
  int n_overhauser = 8;
  int n_wandering = 3;
  double duration_ns = 8e5;    // total simulated time per sample
  int chunks_per_sample = 4;   // charged-sector chunks (parallel units)
  double bin_width_ns = 4.0;
  double tau_max_ns = 64.0;
  std::uint64_t seed = 1;
  Complex corruption = 1.0;
  int threads = 0;
};

struct OracleResult {
  std::vector<double> tau_center;
  std::vector<double> c_trajectory;
  std::vector<double> stderr_c;
  std::vector<double> c_regression;
  std::vector<double> z;             // (c_traj - c_reg) / stderr
  double clicks_x = 0, clicks_xbar = 0;
  double max_abs_z = 0;
  bool pass = false;
  std::string warning;
};

// Runs the photon-counting estimator and the quantum-regression pipeline on
// the same frozen samples; per-sample coincidence densities and singles rates
// are combined with the same separate-averaging rule on both sides, so the
// comparison is limited by trajectory shot noise alone.
//
// The charge sector is frozen within a window, so a single trajectory never
// samples the charged/empty mixture. Each sample is therefore stratified
// exactly: charged-sector chunks carry a fraction p_charged of the simulated
// time, one empty-sector chunk carries the rest.
inline OracleResult averaged_oracle(const DeviceParams& p, const OracleSettings& s) {
  const double alpha = p.alpha_in_from_power(s.power_pW);
  const auto samples = sample_noise(p, s.n_overhauser, s.n_wandering, s.seed);
  const AnalyzerBasis<double> basis = analyzer_basis(s.theta, s.theta0);
  const LinearResponse lr = detection_coefficients(p, s.omega_laser, alpha);
  const DetectionOperator dx = detection_operator(lr, basis.jones_x, "x");
  const DetectionOperator dxb = detection_operator(lr, basis.jones_xbar, "xbar");

  std::vector<double> edges;
  for (double e = 0; e <= s.tau_max_ns + 1e-9; e += s.bin_width_ns) edges.push_back(e);
  const std::size_t nbins = edges.size() - 1;

  struct PerSample {
    std::vector<double> counts;
    double n_x_eff = 0, n_x = 0, n_xb = 0, duration = 0;
    std::vector<double> reg_num;  // bin-averaged regression numerator
    double reg_rate_x = 0, reg_rate_xb = 0;
  };
  std::vector<PerSample> parts(samples.size());

  const int chunks = std::max(1, s.chunks_per_sample);
  const int units_per_sample = chunks + 1;  // last unit is the empty sector
  const std::size_t total_units = samples.size() * units_per_sample;
  std::vector<ClickStream> streams(total_units);
  parallel_for_index(total_units, s.threads, [&](std::size_t unit) {
    const std::size_t si = unit / units_per_sample;
    const int chunk = static_cast<int>(unit % units_per_sample);
    const bool empty_sector = chunk == chunks;
    const double duration = empty_sector
                                ? s.duration_ns * (1.0 - p.p_charged)
                                : s.duration_ns * p.p_charged / chunks;
    if (duration <= 0) return;
    const SystemModel model = build_model(p, s.omega_laser, alpha, samples[si]);
    Matrix5cd rho0;
    if (empty_sector) {
      rho0 = Matrix5cd::Zero();
      rho0(kEmpty, kEmpty) = 1.0;
    } else {
      rho0 = steady_state(liouvillian(model), 1.0);  // charged-sector stationary state
    }
    UnravelOptions opts;
    opts.corruption = s.corruption;
    streams[unit] = simulate_clicks(model, dx, dxb, duration,
                                    detail::splitmix64(s.seed ^ (0xC0FFEEull + unit)),
                                    rho0, opts);
  });

  // regression side, bin-averaged over 8 sub-points per bin
  parallel_for_index(samples.size(), s.threads, [&](std::size_t si) {
    const SystemModel model = build_model(p, s.omega_laser, alpha, samples[si]);
    const Liouvillian liou = liouvillian(model);
    const Matrix5cd rho = steady_state(liou, p.p_charged);
    const Evolver evolver(liou);
    std::vector<double> taus;
    const int sub = 8;
    for (std::size_t b = 0; b < nbins; ++b)
      for (int q = 0; q < sub; ++q)
        taus.push_back(edges[b] + (q + 0.5) * (edges[b + 1] - edges[b]) / sub);
    const G2Result g2 = g2_cross(evolver, rho, dx, dxb, taus);
    PerSample& out = parts[si];
    out.reg_num.assign(nbins, 0.0);
    for (std::size_t b = 0; b < nbins; ++b) {
      for (int q = 0; q < sub; ++q) out.reg_num[b] += g2.numerator[b * sub + q];
      out.reg_num[b] /= sub;
    }
    out.reg_rate_x = g2.rate_x;
    out.reg_rate_xb = g2.rate_xbar;
  });

  for (std::size_t unit = 0; unit < total_units; ++unit) {
    const std::size_t si = unit / units_per_sample;
    PerSample& ps = parts[si];
    const ClickStream& st = streams[unit];
    if (ps.counts.empty()) ps.counts.assign(nbins, 0.0);
    if (st.duration <= 0) continue;
    const double t_cut = st.duration - s.tau_max_ns;
    for (double t : st.channel_x) {
      if (t > t_cut) continue;
      ps.n_x_eff += 1;
      const auto lo = std::lower_bound(st.channel_xbar.begin(), st.channel_xbar.end(), t);
      for (auto it = lo; it != st.channel_xbar.end() && *it < t + s.tau_max_ns; ++it) {
        const auto b = static_cast<std::size_t>((*it - t) / s.bin_width_ns);
        if (b < nbins) ps.counts[b] += 1;
      }
    }
    ps.n_x += static_cast<double>(st.channel_x.size());
    ps.n_xb += static_cast<double>(st.channel_xbar.size());
    ps.duration += st.duration;
  }

  // separate averaging on both sides
  OracleResult res;
  std::vector<double> traj_num(nbins, 0.0), traj_var(nbins, 0.0), reg_num(nbins, 0.0);
  double traj_rx = 0, traj_rxb = 0, reg_rx = 0, reg_rxb = 0;
  for (std::size_t si = 0; si < samples.size(); ++si) {
    const PerSample& ps = parts[si];
    const double w = samples[si].weight;
    // counts/(N_x_eff * bin) is the conditional xbar rate after an x click;
    // times the x rate it becomes the unconditional pair density in 1/ns^2,
    // the direct estimate of the regression numerator.
    const double rate_x_s = ps.n_x / ps.duration;
    for (std::size_t b = 0; b < nbins; ++b) {
      const double num = ps.counts[b] / (ps.n_x_eff * s.bin_width_ns) * rate_x_s;
      traj_num[b] += w * num;
      const double dnum = std::sqrt(std::max(ps.counts[b], 1.0)) /
                          (ps.n_x_eff * s.bin_width_ns) * rate_x_s;
      traj_var[b] += w * w * dnum * dnum;
      reg_num[b] += w * parts[si].reg_num[b];
    }
    traj_rx += w * ps.n_x / ps.duration;
    traj_rxb += w * ps.n_xb / ps.duration;
    reg_rx += w * ps.reg_rate_x;
    reg_rxb += w * ps.reg_rate_xb;
    res.clicks_x += ps.n_x;
    res.clicks_xbar += ps.n_xb;
  }

  const double traj_norm = traj_rx * traj_rxb;
  const double reg_norm = reg_rx * reg_rxb;
  for (std::size_t b = 0; b < nbins; ++b) {
    res.tau_center.push_back(0.5 * (edges[b] + edges[b + 1]));
    const double c_traj = 1.0 - traj_num[b] / traj_norm;
    const double se = std::sqrt(traj_var[b]) / traj_norm;
    const double c_reg = 1.0 - reg_num[b] / reg_norm;
    res.c_trajectory.push_back(c_traj);
    res.stderr_c.push_back(se);
    res.c_regression.push_back(c_reg);
    res.z.push_back((c_traj - c_reg) / se);
    res.max_abs_z = std::max(res.max_abs_z, std::abs(res.z.back()));
  }
  res.pass = res.max_abs_z < 3.0;
  if (res.clicks_x < 1e3 || res.clicks_xbar < 1e3) {
    const double scale = 1e3 / std::max(1.0, std::min(res.clicks_x, res.clicks_xbar));
    res.warning = "insufficient statistics; scale duration by >= " +
                  std::to_string(scale);
  }
  return res;
}

// --- stream serialization and detector transforms ----------------------------

inline void save_click_stream_csv(const ClickStream& s, const std::string& path);
inline ClickStream load_click_stream_csv(const std::string& path);
inline void save_click_stream_binary(const ClickStream& s, const std::string& path);
inline ClickStream load_click_stream_binary(const std::string& path);

// Gaussian timing jitter; clicks are re-sorted and clamped to the window.
inline ClickStream apply_jitter(const ClickStream& s, double sigma_ns, std::uint64_t seed) {
  ClickStream out = s;
  std::mt19937_64 rng(detail::splitmix64(seed));
  std::normal_distribution<double> noise(0.0, sigma_ns);
  for (auto* ch : {&out.channel_x, &out.channel_xbar}) {
    for (double& t : *ch) t = std::clamp(t + noise(rng), 0.0, s.duration);
    std::sort(ch->begin(), ch->end());
  }
  return out;
}

// Non-paralyzable dead time per channel.
inline ClickStream apply_dead_time(const ClickStream& s, double dead_ns) {
  ClickStream out = s;
  for (auto* ch : {&out.channel_x, &out.channel_xbar}) {
    std::vector<double> kept;
    double last = -1e300;
    for (double t : *ch) {
      if (t - last >= dead_ns) {
        kept.push_back(t);
        last = t;
      }
    }
    *ch = std::move(kept);
  }
  return out;
}

inline ClickStream add_dark_counts(const ClickStream& s, double rate_per_ns,
                                   std::uint64_t seed) {
  ClickStream out = s;
  std::mt19937_64 rng(detail::splitmix64(seed ^ 0xDA51Cull));
  std::exponential_distribution<double> gap(rate_per_ns);
  for (auto* ch : {&out.channel_x, &out.channel_xbar}) {
    double t = gap(rng);
    while (t < s.duration) {
      ch->push_back(t);
      t += gap(rng);
    }
    std::sort(ch->begin(), ch->end());
  }
  return out;
}

}  // namespace snsim

#include "snsim/click_stream_io.hpp"
