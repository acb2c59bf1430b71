#pragma once

// Dense complex kernel shared by every other module. Matrices are plain
// Eigen::MatrixXcd values; the helpers below add the norms, projections and
// random generators the multiplier code is written against.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "opmult/errors.hpp"

namespace opmult {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Rng = std::mt19937_64;

inline bool all_finite(const CMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

inline void check_finite(const CMatrix& m, const std::string& what) {
  require(all_finite(m), ErrorKind::NonFinite, what + " has a NaN or infinite entry");
}

/// Singular values in decreasing order.
inline RVector singular_values(const CMatrix& m) {
  if (m.size() == 0) return RVector();
  Eigen::BDCSVD<CMatrix> svd(m);
  return svd.singularValues();
}

/// Largest singular value; 0 for an empty matrix.
inline double op_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m)(0);
}

/// Frobenius norm sqrt(sum |m_ij|^2).
inline double hs_norm(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.norm(); }

/// Sum of singular values.
inline double trace_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m).sum();
}

inline double hermitian_defect(const CMatrix& m) {
  if (m.rows() != m.cols()) return INFINITY;
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const CMatrix& m, double tol = 1e-12) {
  const double scale = std::max(1.0, m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff());
  return hermitian_defect(m) <= tol * scale;
}

inline CMatrix hermitian_part(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

/// Eigen-decomposition of the Hermitian part of m (eigenvalues ascending).
inline Eigen::SelfAdjointEigenSolver<CMatrix> hermitian_eig(const CMatrix& m) {
  return Eigen::SelfAdjointEigenSolver<CMatrix>(hermitian_part(m));
}

inline double lambda_min(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  return hermitian_eig(m).eigenvalues()(0);
}

inline double lambda_max(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  const auto ev = hermitian_eig(m).eigenvalues();
  return ev(ev.size() - 1);
}

/// Nearest positive semidefinite matrix in Frobenius norm: clip the spectrum at 0.
inline CMatrix psd_project(const CMatrix& m) {
  require(m.rows() == m.cols(), ErrorKind::NonSquare, "psd_project expects a square matrix");
  require(is_hermitian(m, 1e-12), ErrorKind::NonHermitian,
          "psd_project input deviates from its adjoint beyond 1e-12");
  if (m.size() == 0) return m;
  const auto eig = hermitian_eig(m);
  const RVector clipped = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * clipped.cast<cplx>().asDiagonal() * eig.eigenvectors().adjoint();
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline CMatrix identity(Eigen::Index n) { return CMatrix::Identity(n, n); }

inline CMatrix matrix_unit(Eigen::Index rows, Eigen::Index cols, Eigen::Index i, Eigen::Index j) {
  CMatrix e = CMatrix::Zero(rows, cols);
  e(i, j) = 1.0;
  return e;
}

inline CMatrix diag(const std::vector<cplx>& entries) {
  CMatrix d = CMatrix::Zero(static_cast<Eigen::Index>(entries.size()),
                            static_cast<Eigen::Index>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) d(i, i) = entries[i];
  return d;
}

/// Unitary (partial isometry for rectangular input) part of the polar decomposition.
/// Maximizes Re <k, x> over contractions x.
inline CMatrix polar_factor(const CMatrix& k) {
  if (k.size() == 0) return k;
  Eigen::BDCSVD<CMatrix> svd(k, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

struct SingularTriple {
  double value = 0.0;
  CVector left;
  CVector right;
};

inline SingularTriple top_singular(const CMatrix& m) {
  SingularTriple t;
  if (m.size() == 0) return t;
  Eigen::BDCSVD<CMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  t.value = svd.singularValues()(0);
  t.left = svd.matrixU().col(0);
  t.right = svd.matrixV().col(0);
  return t;
}

/// Trace over the first tensor leg of m acting on C^outer ⊗ C^inner.
inline CMatrix partial_trace_outer(const CMatrix& m, Eigen::Index outer, Eigen::Index inner) {
  require(m.rows() == outer * inner && m.cols() == outer * inner, ErrorKind::DimensionMismatch,
          "partial trace dimensions");
  CMatrix out = CMatrix::Zero(inner, inner);
  for (Eigen::Index s = 0; s < outer; ++s) out += m.block(s * inner, s * inner, inner, inner);
  return out;
}

inline CMatrix random_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  CMatrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = cplx(nd(rng), nd(rng));
  return m;
}

inline CVector random_unit_vector(Eigen::Index n, Rng& rng) {
  CVector v = random_gaussian(n, 1, rng);
  return v / v.norm();
}

/// Haar-random unitary via QR with phase correction.
inline CMatrix random_unitary(Eigen::Index n, Rng& rng) {
  const CMatrix g = random_gaussian(n, n, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ();
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx d = r(i, i);
    if (std::abs(d) > 0) q.col(i) *= d / std::abs(d);
  }
  return q;
}

/// Dense tensor with last-index-fastest storage.
class CTensor {
 public:
  CTensor() = default;

  explicit CTensor(std::vector<std::size_t> dims)
      : dims_(std::move(dims)), data_(product(dims_), cplx(0.0)) {}

  CTensor(std::vector<std::size_t> dims, std::vector<cplx> data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    require(data_.size() == product(dims_), ErrorKind::DimensionMismatch,
            "tensor payload length differs from the product of its dims");
    for (const auto& z : data_)
      require(std::isfinite(z.real()) && std::isfinite(z.imag()), ErrorKind::NonFinite,
              "tensor entry is NaN or infinite");
  }

  /// Two-index tensor from a matrix.
  static CTensor from_matrix(const CMatrix& m) {
    CTensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) t.at({std::size_t(i), std::size_t(j)}) = m(i, j);
    return t;
  }

  static CTensor generate(std::vector<std::size_t> dims,
                          const std::function<cplx(const std::vector<std::size_t>&)>& f) {
    CTensor t(std::move(dims));
    std::vector<std::size_t> idx(t.rank(), 0);
    for (std::size_t flat = 0; flat < t.size(); ++flat) {
      t.data_[flat] = f(idx);
      t.advance(idx);
    }
    return t;
  }

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t size() const { return data_.size(); }
  const std::vector<cplx>& data() const { return data_; }
  std::vector<cplx>& data() { return data_; }

  std::size_t offset(const std::vector<std::size_t>& idx) const {
    require(idx.size() == dims_.size(), ErrorKind::DimensionMismatch, "tensor index arity");
    std::size_t off = 0;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      require(idx[k] < dims_[k], ErrorKind::DimensionMismatch, "tensor index out of range");
      off = off * dims_[k] + idx[k];
    }
    return off;
  }

  cplx& at(const std::vector<std::size_t>& idx) { return data_[offset(idx)]; }
  cplx at(const std::vector<std::size_t>& idx) const { return data_[offset(idx)]; }

  /// Matrix view of a two-index tensor.
  CMatrix to_matrix() const {
    require(rank() == 2, ErrorKind::DimensionMismatch, "to_matrix needs a 2-index tensor");
    CMatrix m(static_cast<Eigen::Index>(dims_[0]), static_cast<Eigen::Index>(dims_[1]));
    for (std::size_t i = 0; i < dims_[0]; ++i)
      for (std::size_t j = 0; j < dims_[1]; ++j) m(i, j) = data_[i * dims_[1] + j];
    return m;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& z : data_) m = std::max(m, std::abs(z));
    return m;
  }

  /// Odometer step in last-index-fastest order; returns false after the last index.
  bool advance(std::vector<std::size_t>& idx) const {
    for (std::size_t k = dims_.size(); k-- > 0;) {
      if (++idx[k] < dims_[k]) return true;
      idx[k] = 0;
    }
    return false;
  }

 private:
  static std::size_t product(const std::vector<std::size_t>& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  }

  std::vector<std::size_t> dims_;
  std::vector<cplx> data_;
};

}  // namespace opmult
