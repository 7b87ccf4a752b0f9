#pragma once

#include <Eigen/Dense>
#include <string>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "snsim/cavity.hpp"
#include "snsim/spin_system.hpp"

// Vectorized Lindblad generator for one frozen model, its steady state, the
// photon-detection back-action map and quantum-regression two-time
// correlators. Column-stacking convention: vec(A X B) = (B^T kron A) vec(X).

namespace snsim {

using Matrix25cd = Eigen::Matrix<Complex, 25, 25>;
using Vector25cd = Eigen::Matrix<Complex, 25, 1>;

inline Vector25cd vectorize(const Matrix5cd& m) {
  return Eigen::Map<const Vector25cd>(m.data());
}
inline Matrix5cd unvectorize(const Vector25cd& v) {
  return Eigen::Map<const Matrix5cd>(v.data());
}

struct Liouvillian {
  Matrix25cd matrix = Matrix25cd::Zero();  // 1/ns
};

// L(rho) = -(i/hbar)[H, rho] + sum_k ( C_k rho C_k^+ - 1/2 {C_k^+ C_k, rho} )
inline Liouvillian liouvillian(const SystemModel& model) {
  const Matrix5cd id = Matrix5cd::Identity();
  const Complex i_over_hbar(0, 1.0 / DeviceParams::hbar);
  Liouvillian out;
  out.matrix = -i_over_hbar * (Eigen::kroneckerProduct(id, model.hamiltonian) -
                               Eigen::kroneckerProduct(model.hamiltonian.transpose(), id));
  for (const Matrix5cd& c : model.collapse_ops) {
    const Matrix5cd cdc = c.adjoint() * c;
    out.matrix += Eigen::kroneckerProduct(c.conjugate(), c);
    out.matrix -= 0.5 * Eigen::kroneckerProduct(id, cdc);
    out.matrix -= 0.5 * Eigen::kroneckerProduct(cdc.transpose(), id);
  }
  return out;
}

// Output-field operator projected on one analyzer polarization: coherent
// background on every sector plus the collected dipole emission terms.
// |entries|^2 are count rates in 1/ns.
struct DetectionOperator {
  Matrix5cd matrix = Matrix5cd::Zero();
  std::string label;
};

inline DetectionOperator detection_operator(const LinearResponse& lr,
                                            const Jones<double>& analyzer,
                                            std::string label = {}) {
  DetectionOperator d;
  d.label = std::move(label);
  const Eigen::Vector2cd t_col = lr.t_bg.col(0) * lr.alpha_in;  // H-polarized drive
  const Complex background =
      std::conj(analyzer.e_h) * t_col(0) + std::conj(analyzer.e_v) * t_col(1);
  d.matrix = background * Matrix5cd::Identity();
  d.matrix(kUp, kTrionUp) +=
      std::conj(analyzer.e_h) * lr.c_minus(0) + std::conj(analyzer.e_v) * lr.c_minus(1);
  d.matrix(kDown, kTrionDown) +=
      std::conj(analyzer.e_h) * lr.c_plus(0) + std::conj(analyzer.e_v) * lr.c_plus(1);
  return d;
}

// Measurement back-action: rho -> D rho D^+ / rate, rate = Tr[D rho D^+].
inline std::pair<Matrix5cd, double> conditional_state(const Matrix5cd& rho,
                                                      const DetectionOperator& d) {
  const Matrix5cd num = d.matrix * rho * d.matrix.adjoint();
  const double rate = num.trace().real();
  if (rate <= 1e-15) throw std::runtime_error("conditional_state: dark analyzer");
  return {num / rate, rate};
}

namespace detail {

// vec index of |row><col| in the column-stacking convention.
inline int vec_index(int row, int col) { return col * kLevels + row; }

inline bool model_is_driven(const Matrix25cd& liou) {
  // Drive is the only term connecting ground populations to optical
  // coherences; checking the Hamiltonian is simpler, but the Liouvillian is
  // what steady_state receives. Probe the columns of the ground populations.
  for (int gpop : {vec_index(kUp, kUp), vec_index(kDown, kDown)}) {
    for (int trion : {kTrionUp, kTrionDown}) {
      if (std::abs(liou(vec_index(trion, kUp), gpop)) > 1e-14) return true;
      if (std::abs(liou(vec_index(trion, kDown), gpop)) > 1e-14) return true;
    }
  }
  return false;
}

}  // namespace detail

// Stationary state with the empty-state weight pinned to 1 - p_charged (the
// empty sector is dynamically decoupled; its weight is a boundary condition).
// The charged 4x4 block is the null vector of the charged-restricted
// generator. At zero drive the ground mixture is not unique; the convention
// is the state reached from the maximally mixed charged state, i.e. the
// symmetric ground mixture.
inline Matrix5cd steady_state(const Liouvillian& liou, double p_charged) {
  constexpr int n = 16;
  Eigen::MatrixXcd lc(n, n);
  std::vector<int> idx;
  idx.reserve(n);
  for (int col = 0; col < 4; ++col)
    for (int row = 0; row < 4; ++row) idx.push_back(detail::vec_index(row, col));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) lc(a, b) = liou.matrix(idx[a], idx[b]);

  Eigen::Matrix4cd rho_c = Eigen::Matrix4cd::Zero();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(lc);
  qr.setThreshold(1e-9);
  const int rank = qr.rank();
  if (rank == n - 1) {
    // Unique null vector: solve the trace-augmented least-squares problem.
    Eigen::MatrixXcd augmented(n + 1, n);
    augmented.topRows(n) = lc * (1.0 / lc.norm());
    augmented.row(n).setZero();
    for (int d = 0; d < 4; ++d) augmented(n, 5 * d) = 1.0;
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n + 1);
    rhs(n) = 1.0;
    const Eigen::VectorXcd x = augmented.colPivHouseholderQr().solve(rhs);
    rho_c = Eigen::Map<const Eigen::Matrix4cd>(x.data());
  } else {
    if (detail::model_is_driven(liou.matrix))
      throw std::runtime_error("steady_state: non-unique steady state");
    // Spectral projection of the maximally mixed charged state onto the
    // stationary subspace.
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(lc);
    const double scale = lc.cwiseAbs().maxCoeff();
    const Eigen::Matrix4cd mixed = Eigen::Matrix4cd::Identity() / 4.0;
    const Eigen::VectorXcd mixed_vec = Eigen::Map<const Eigen::VectorXcd>(mixed.data(), n);
    const Eigen::VectorXcd w = es.eigenvectors().partialPivLu().solve(mixed_vec);
    Eigen::VectorXcd projected = Eigen::VectorXcd::Zero(n);
    for (int k = 0; k < n; ++k)
      if (std::abs(es.eigenvalues()(k)) < 1e-10 * std::max(1.0, scale))
        projected += w(k) * es.eigenvectors().col(k);
    rho_c = Eigen::Map<const Eigen::Matrix4cd>(projected.data());
  }

  rho_c = 0.5 * (rho_c + rho_c.adjoint()).eval();
  const double trace = rho_c.trace().real();
  if (std::abs(trace) < 1e-12) throw std::runtime_error("steady_state: zero-trace null vector");
  rho_c /= trace;

  Matrix5cd rho = Matrix5cd::Zero();
  rho.topLeftCorner<4, 4>() = p_charged * rho_c;
  rho(kEmpty, kEmpty) = 1.0 - p_charged;
  return rho;
}

// Cached spectral form of exp(L tau). One eigendecomposition serves a whole
// tau grid; an ill-conditioned eigenbasis falls back to scaling-and-squaring
// per tau.
class Evolver {
 public:
  explicit Evolver(const Liouvillian& liou, double cond_limit = 1e12) : l_(liou.matrix) {
    Eigen::ComplexEigenSolver<Matrix25cd> es(l_);
    eigvals_ = es.eigenvalues();
    v_ = es.eigenvectors();
    Eigen::FullPivLU<Matrix25cd> lu(v_);
    if (lu.isInvertible()) {
      vinv_ = lu.inverse();
      const double cond = v_.cwiseAbs().colwise().sum().maxCoeff() *
                          vinv_.cwiseAbs().colwise().sum().maxCoeff();
      spectral_ok_ = cond < cond_limit;
    } else {
      spectral_ok_ = false;
    }
  }

  bool spectral() const { return spectral_ok_; }
  const char* method() const { return spectral_ok_ ? "eigendecomposition" : "expm"; }
  const Eigen::Matrix<Complex, 25, 1>& eigenvalues() const { return eigvals_; }

  // Slowest nonzero relaxation rate, for choosing horizon times.
  double slowest_rate(double tol = 1e-9) const {
    double slowest = 1e300;
    for (int k = 0; k < 25; ++k) {
      const double re = -eigvals_(k).real();
      if (re > tol) slowest = std::min(slowest, re);
    }
    return slowest;
  }

  Vector25cd weights(const Matrix5cd& rho) const { return vinv_ * vectorize(rho); }

  Matrix5cd at(double tau, const Vector25cd& w) const {
    Vector25cd scaled = w;
    for (int k = 0; k < 25; ++k) scaled(k) *= std::exp(eigvals_(k) * tau);
    return unvectorize(v_ * scaled);
  }

  // Row functional r such that Tr[F exp(L tau) rho] = sum_k r_k e^{lambda_k tau} w_k.
  Eigen::Matrix<Complex, 1, 25> functional(const Matrix5cd& f) const {
    return vectorize(f.transpose().eval()).transpose() * v_;
  }

  Matrix5cd propagate(const Matrix5cd& rho, double tau) const {
    if (spectral_ok_) return at(tau, weights(rho));
    const Matrix25cd expm = (l_ * tau).exp();
    return unvectorize(expm * vectorize(rho));
  }

 private:
  Matrix25cd l_;
  Eigen::Matrix<Complex, 25, 1> eigvals_;
  Matrix25cd v_;
  Matrix25cd vinv_ = Matrix25cd::Zero();
  bool spectral_ok_ = false;
};

struct G2Result {
  std::vector<double> g2;
  std::vector<double> numerator;  // Tr[Dxb^+ Dxb exp(L tau)(Dx rho Dx^+)], 1/ns^2
  double rate_x = 0;              // 1/ns
  double rate_xbar = 0;
  std::string method;
};

// Quantum regression: g2(tau) = Tr[Dxb^+ Dxb e^{L tau}(Dx rho_ss Dx^+)]
//                               / (Tr[Dx rho_ss Dx^+] Tr[Dxb rho_ss Dxb^+]).
inline G2Result g2_cross(const Evolver& evolver, const Matrix5cd& rho_ss,
                         const DetectionOperator& dx, const DetectionOperator& dxbar,
                         const std::vector<double>& tau_grid) {
  G2Result out;
  out.method = evolver.method();
  const Matrix5cd jumped = dx.matrix * rho_ss * dx.matrix.adjoint();
  out.rate_x = jumped.trace().real();
  out.rate_xbar = (dxbar.matrix * rho_ss * dxbar.matrix.adjoint()).trace().real();
  if (out.rate_x <= 0 || out.rate_xbar <= 0)
    throw std::runtime_error("g2_cross: vanishing singles rate");
  const Matrix5cd f = dxbar.matrix.adjoint() * dxbar.matrix;

  out.g2.reserve(tau_grid.size());
  out.numerator.reserve(tau_grid.size());
  if (evolver.spectral()) {
    const Vector25cd w = evolver.weights(jumped);
    const Eigen::Matrix<Complex, 1, 25> r = evolver.functional(f);
    for (double tau : tau_grid) {
      Complex num = 0;
      for (int k = 0; k < 25; ++k) num += r(k) * std::exp(evolver.eigenvalues()(k) * tau) * w(k);
      out.numerator.push_back(num.real());
      out.g2.push_back(num.real() / (out.rate_x * out.rate_xbar));
    }
  } else {
    for (double tau : tau_grid) {
      const double num = (f * evolver.propagate(jumped, tau)).trace().real();
      out.numerator.push_back(num);
      out.g2.push_back(num / (out.rate_x * out.rate_xbar));
    }
  }
  return out;
}

inline std::vector<Matrix5cd> relax_to_steady(const Evolver& evolver, const Matrix5cd& rho0,
                                              const std::vector<double>& tau_grid) {
  std::vector<Matrix5cd> out;
  out.reserve(tau_grid.size());
  for (double tau : tau_grid) out.push_back(evolver.propagate(rho0, tau));
  return out;
}

// Density-operator sanity: hermiticity, unit trace, positivity.
inline void validate_density(const Matrix5cd& rho, double herm_tol = 1e-10,
                             double trace_tol = 1e-10, double eig_tol = -1e-8) {
  if ((rho - rho.adjoint()).norm() > herm_tol)
    throw std::runtime_error("density operator not Hermitian");
  if (std::abs(rho.trace().real() - 1.0) > trace_tol || std::abs(rho.trace().imag()) > trace_tol)
    throw std::runtime_error("density operator trace != 1");
  Eigen::SelfAdjointEigenSolver<Matrix5cd> es(0.5 * (rho + rho.adjoint()));
  if (es.eigenvalues().minCoeff() < eig_tol)
    throw std::runtime_error("density operator not positive semidefinite");
}

}  // namespace snsim
