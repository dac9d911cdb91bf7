#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the solver; the oracles rebuild their answers from first principles.

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "qcompat/compat.hpp"
#include "qcompat/lab.hpp"

namespace testing {

using qcompat::HermitianMatrixd;
using qcompat::MatrixXc;
using qcompat::Povm;
using cd = std::complex<double>;

inline const cd I1{0.0, 1.0};

inline MatrixXc sigma_x() { return (MatrixXc(2, 2) << 0, 1, 1, 0).finished(); }
inline MatrixXc sigma_y() { return (MatrixXc(2, 2) << 0, -I1, I1, 0).finished(); }
inline MatrixXc sigma_z() { return (MatrixXc(2, 2) << 1, 0, 0, -1).finished(); }

inline HermitianMatrixd herm(const MatrixXc& m) { return HermitianMatrixd(m); }

/// Eigenvalues of a complex Hermitian matrix through the real symmetric
/// embedding [[Re, -Im], [Im, Re]]: each eigenvalue appears twice.
inline Eigen::VectorXd embedded_eigenvalues(const MatrixXc& h) {
  const auto d = h.rows();
  Eigen::MatrixXd big(2 * d, 2 * d);
  big << h.real(), -h.imag(), h.imag(), h.real();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(big, Eigen::EigenvaluesOnly);
  Eigen::VectorXd out(d);
  for (Eigen::Index i = 0; i < d; ++i) out(i) = 0.5 * (es.eigenvalues()(2 * i) + es.eigenvalues()(2 * i + 1));
  return out;
}

inline MatrixXc random_matrix(Eigen::Index d, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  MatrixXc m(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index k = 0; k < d; ++k) m(i, k) = {g(rng), g(rng)};
  return m;
}

inline HermitianMatrixd random_hermitian(Eigen::Index d, std::mt19937_64& rng, double scale = 1.0) {
  const MatrixXc m = random_matrix(d, rng, scale);
  return HermitianMatrixd(MatrixXc(0.5 * (m + m.adjoint())));
}

inline HermitianMatrixd random_psd(Eigen::Index d, std::mt19937_64& rng, Eigen::Index rank = 0) {
  std::normal_distribution<double> g;
  MatrixXc m(d, rank > 0 ? rank : d);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) m(i, k) = {g(rng), g(rng)};
  return HermitianMatrixd(MatrixXc(m * m.adjoint()));
}

/// Binary qubit POVM (1 +- a.sigma)/2.
inline Povm unbiased_qubit(const Eigen::Vector3d& a) {
  const MatrixXc s = a(0) * sigma_x() + a(1) * sigma_y() + a(2) * sigma_z();
  const MatrixXc id = MatrixXc::Identity(2, 2);
  return qcompat::validate_povm(std::vector<HermitianMatrixd>{herm(0.5 * (id + s)), herm(0.5 * (id - s))});
}

/// Bloch vector a of an unbiased binary qubit effect E = (1 + a.sigma)/2.
inline Eigen::Vector3d bloch(const HermitianMatrixd& e) {
  const MatrixXc s = 2.0 * e.matrix() - MatrixXc::Identity(2, 2);
  return {0.5 * (s * sigma_x()).trace().real(), 0.5 * (s * sigma_y()).trace().real(),
          0.5 * (s * sigma_z()).trace().real()};
}

/// Joint measurability of two unbiased binary qubit observables:
/// |a + b| + |a - b| <= 2. Returns the slack 2 - (|a + b| + |a - b|).
inline double qubit_jm_slack(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return 2.0 - ((a + b).norm() + (a - b).norm());
}

/// Closed-form threshold of the smeared pair (1 +- l a.sigma)/2, (1 +- l b.sigma)/2.
inline double qubit_threshold(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return 2.0 / ((a + b).norm() + (a - b).norm());
}

inline double max_entry_diff(const MatrixXc& a, const MatrixXc& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// The coexistent pair on C^3, rebuilt here from its definition.
struct ReferencePair {
  Povm a, b, m;
  Eigen::VectorXcd psi;
};

inline ReferencePair reference_pair() {
  const MatrixXc id = MatrixXc::Identity(3, 3);
  Eigen::VectorXcd psi = Eigen::VectorXcd::Constant(3, 1.0 / std::sqrt(3.0));
  auto ket = [&](int i) { return MatrixXc(id.col(i) * id.col(i).adjoint()); };
  std::vector<HermitianMatrixd> a, b, m;
  for (int i = 0; i < 3; ++i) a.push_back(herm(0.5 * (id - ket(i))));
  const MatrixXc b1 = 0.5 * psi * psi.adjoint();
  b = {herm(b1), herm(id - b1)};
  for (int i = 0; i < 3; ++i) m.push_back(herm(0.5 * ket(i)));
  m.push_back(herm(b1));
  m.push_back(herm(0.5 * id - b1));
  return {qcompat::validate_povm(a), qcompat::validate_povm(b), qcompat::validate_povm(m), psi};
}

/// Threshold of joint measurability along the segment towards the trivial
/// pair, cross-checked offline with three independent SDP solvers
/// (interior-point and first-order), which agree to 1e-8.
constexpr double kSegmentJmThreshold = 0.936416;

inline Eigen::MatrixXd transport_coeff(int n, int m) {
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n + m, n * m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      k(i, i * m + j) = 1;
      k(n + j, i * m + j) = 1;
    }
  return k;
}

inline std::vector<HermitianMatrixd> targets_of(const Eigen::MatrixXd& k, const std::vector<HermitianMatrixd>& x) {
  std::vector<HermitianMatrixd> t;
  for (Eigen::Index c = 0; c < k.rows(); ++c) {
    HermitianMatrixd s = HermitianMatrixd::zero(x.front().dim());
    for (Eigen::Index b = 0; b < k.cols(); ++b) s += k(c, b) * x[b];
    t.push_back(s);
  }
  return t;
}

// A random feasible instance: random PSD blocks of the given rank (full rank
// when 0), targets taken as their images. Full-rank blocks give a strictly
// feasible point; rank-one blocks usually sit on the boundary of the cone.
struct Instance {
  qcompat::AffinePsdProblem problem;
  std::vector<HermitianMatrixd> planted;
};

inline Instance constructed_instance(int t, Eigen::Index rank = 0) {
  std::mt19937_64 rng(1000 + t);
  const Eigen::Index d = 2 + t % 2;
  Eigen::MatrixXd k;
  if (t % 3 == 0) {
    k = transport_coeff(2 + t % 2, 2 + (t / 2) % 2);
  } else {
    std::uniform_int_distribution<int> size(2, 5);
    const int c = size(rng), v = size(rng);
    std::uniform_real_distribution<double> unit(0, 1);
    k = Eigen::MatrixXd::Zero(c, v);
    for (int i = 0; i < c; ++i)
      for (int j = 0; j < v; ++j) k(i, j) = unit(rng) < 0.6 ? unit(rng) : 0.0;
    for (int j = 0; j < v; ++j) k(j % c, j) += 0.5;
  }
  std::vector<HermitianMatrixd> x;
  for (Eigen::Index b = 0; b < k.cols(); ++b) x.push_back(random_psd(d, rng, rank > 0 ? std::min(rank, d) : d));
  double tau = 0;
  for (const auto& b : x) tau = std::max(tau, b.trace());
  auto problem = qcompat::AffinePsdProblem::marginal(k, targets_of(k, x), 2 * tau);
  return {std::move(problem), std::move(x)};
}

inline qcompat::AffinePsdProblem jm_problem(const Povm& a, const Povm& b) { return build_jm_problem(a, b); }

}  // namespace testing
