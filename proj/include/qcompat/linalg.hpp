#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qcompat {

/// Raised for malformed numeric input (non-finite entries, shape mismatch).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Real>
using ComplexMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using ComplexVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using RealVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

using MatrixXc = ComplexMatrix<double>;
using VectorXc = ComplexVector<double>;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const auto z = m(i, j);
      if (!std::isfinite(std::real(z)) || !std::isfinite(std::imag(z))) return false;
    }
  return true;
}

/// Dense complex Hermitian matrix. Construction stores (M + M^dagger)/2 and
/// keeps the Frobenius norm of the discarded anti-Hermitian part.
template <typename Real>
class HermitianMatrix {
 public:
  using Scalar = std::complex<Real>;
  using Matrix = ComplexMatrix<Real>;

  static constexpr Real kDefaultRejectTol = Real(1e-8);

  HermitianMatrix() : m_(Matrix::Zero(1, 1)) {}

  /// Throws InvalidInput if `m` is not square, has non-finite entries, or its
  /// anti-Hermitian part exceeds reject_tol * max(1, |m|_F).
  explicit HermitianMatrix(const Matrix& m, Real reject_tol = kDefaultRejectTol) {
    if (m.rows() != m.cols() || m.rows() < 1)
      throw InvalidInput("hermitian matrix must be square with dim >= 1, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    if (!all_finite(m)) throw InvalidInput("hermitian matrix has non-finite entries");
    m_ = (m + m.adjoint()) * Real(0.5);
    discarded_ = (m - m.adjoint()).norm() * Real(0.5);
    if (discarded_ > reject_tol * std::max(Real(1), m.norm()))
      throw InvalidInput("matrix is not Hermitian: anti-Hermitian norm " + std::to_string(discarded_));
  }

  static HermitianMatrix zero(Eigen::Index d) { return trusted(Matrix::Zero(d, d)); }
  static HermitianMatrix identity(Eigen::Index d) { return trusted(Matrix::Identity(d, d)); }
  static HermitianMatrix diagonal(const RealVector<Real>& diag) {
    return trusted(diag.template cast<Scalar>().asDiagonal());
  }
  /// |v><v|
  static HermitianMatrix projector(const ComplexVector<Real>& v) {
    return HermitianMatrix(Matrix(v * v.adjoint()));
  }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  Real discarded_antihermitian_norm() const { return discarded_; }
  Real norm() const { return m_.norm(); }
  Real trace() const { return m_.trace().real(); }

  // Sums and real multiples of exactly Hermitian matrices stay exactly Hermitian.
  friend HermitianMatrix operator+(const HermitianMatrix& a, const HermitianMatrix& b) {
    check_same_dim(a, b);
    return trusted(a.m_ + b.m_);
  }
  friend HermitianMatrix operator-(const HermitianMatrix& a, const HermitianMatrix& b) {
    check_same_dim(a, b);
    return trusted(a.m_ - b.m_);
  }
  friend HermitianMatrix operator*(Real s, const HermitianMatrix& a) { return trusted(s * a.m_); }
  friend HermitianMatrix operator*(const HermitianMatrix& a, Real s) { return trusted(s * a.m_); }
  HermitianMatrix& operator+=(const HermitianMatrix& b) {
    check_same_dim(*this, b);
    m_ += b.m_;
    return *this;
  }
  HermitianMatrix& operator-=(const HermitianMatrix& b) {
    check_same_dim(*this, b);
    m_ -= b.m_;
    return *this;
  }

  friend bool operator==(const HermitianMatrix& a, const HermitianMatrix& b) {
    return a.dim() == b.dim() && a.m_ == b.m_;
  }

 private:
  static HermitianMatrix trusted(Matrix m) {
    HermitianMatrix h;
    h.m_ = std::move(m);
    return h;
  }
  static void check_same_dim(const HermitianMatrix& a, const HermitianMatrix& b) {
    if (a.dim() != b.dim())
      throw InvalidInput("dimension mismatch: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }

  Matrix m_;
  Real discarded_ = 0;
};

using HermitianMatrixd = HermitianMatrix<double>;

template <typename Real>
struct EigenDecomposition {
  RealVector<Real> eigenvalues;       // ascending
  ComplexMatrix<Real> eigenvectors;   // unitary, columns
};

template <typename Real>
EigenDecomposition<Real> herm_eig(const HermitianMatrix<Real>& h) {
  if (!all_finite(h.matrix())) throw InvalidInput("herm_eig: non-finite entries");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<Real>> solver(h.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw InvalidInput("herm_eig: eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Spectral clipping V max(lambda, 0) V^dagger: the Frobenius-nearest PSD matrix.
template <typename Real>
HermitianMatrix<Real> project_psd(const HermitianMatrix<Real>& h) {
  const auto eig = herm_eig(h);
  if (eig.eigenvalues(0) >= Real(0)) return h;
  const RealVector<Real> clipped = eig.eigenvalues.cwiseMax(Real(0));
  const ComplexMatrix<Real> p =
      eig.eigenvectors * clipped.template cast<std::complex<Real>>().asDiagonal() * eig.eigenvectors.adjoint();
  return HermitianMatrix<Real>(p, Real(1e-6));
}

/// Tr[A B]. Throws if the imaginary residue is not negligible.
template <typename Real>
Real frobenius_inner(const HermitianMatrix<Real>& a, const HermitianMatrix<Real>& b) {
  if (a.dim() != b.dim())
    throw InvalidInput("frobenius_inner: dimension mismatch " + std::to_string(a.dim()) + " vs " +
                       std::to_string(b.dim()));
  const std::complex<Real> t = a.matrix().cwiseProduct(b.matrix().transpose()).sum();
  if (std::abs(t.imag()) >= Real(1e-12) * std::max(Real(1), a.norm() * b.norm()))
    throw InvalidInput("frobenius_inner: non-real trace");
  return t.real();
}

template <typename Real>
Real min_eigenvalue(const HermitianMatrix<Real>& h) {
  if (!all_finite(h.matrix())) throw InvalidInput("min_eigenvalue: non-finite entries");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<Real>> solver(h.matrix(), Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

template <typename Real>
Real max_eigenvalue(const HermitianMatrix<Real>& h) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<Real>> solver(h.matrix(), Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(h.dim() - 1);
}

template <typename Real>
Real frobenius_distance(const HermitianMatrix<Real>& a, const HermitianMatrix<Real>& b) {
  return (a.matrix() - b.matrix()).norm();
}

/// Standard basis ket |k> (zero-based) in C^d.
inline VectorXc basis_ket(Eigen::Index d, Eigen::Index k) {
  VectorXc v = VectorXc::Zero(d);
  v(k) = 1.0;
  return v;
}

}  // namespace qcompat

namespace qcompat {

/// Isometric real coordinates of a Hermitian d x d matrix (length d^2):
/// diagonal entries, then sqrt(2) Re and sqrt(2) Im of the strict upper triangle.
/// Frobenius inner products of Hermitian matrices become Euclidean dot products.
template <typename Derived>
RealVector<double> hvec(const Eigen::MatrixBase<Derived>& h) {
  const Eigen::Index d = h.rows();
  RealVector<double> v(d * d);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i) v(k++) = std::real(h(i, i));
  const double s = std::sqrt(2.0);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j) {
      v(k++) = s * std::real(h(i, j));
      v(k++) = s * std::imag(h(i, j));
    }
  return v;
}

template <typename Derived>
MatrixXc hunvec(const Eigen::MatrixBase<Derived>& v, Eigen::Index d) {
  MatrixXc h(d, d);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i) h(i, i) = v(k++);
  const double s = 1.0 / std::sqrt(2.0);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j) {
      const std::complex<double> z(s * v(k), s * v(k + 1));
      k += 2;
      h(i, j) = z;
      h(j, i) = std::conj(z);
    }
  return h;
}

}  // namespace qcompat
