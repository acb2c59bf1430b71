#pragma once

// Evaluation of multiplier maps.
//
// Kernel convention: T_i is stored as a d_i x d_{i+1} matrix (rows indexed by
// the basis of H_i^d, columns by H_{i+1}). The operator theta(xi): H_i^d -> H_{i+1}
// it represents is T_i^T. Tuples are always passed in S-order (T_1, ..., T_{n-1});
// the reversal into the argument order of Phi happens internally.
//
// phi_apply and gamma_apply return operators (d_n x d_1); schur_apply_nd returns
// the kernel (d_1 x d_n). For a diagonal multiplier the two are transposes.

#include <string>
#include <vector>

#include "opmult/errors.hpp"
#include "opmult/linalg.hpp"
#include "opmult/tensorrep.hpp"

namespace opmult {

struct KernelTuple {
  std::vector<CMatrix> kernels;

  std::size_t size() const { return kernels.size(); }
  const CMatrix& operator[](std::size_t i) const { return kernels[i]; }
};

/// Checks T_i is (scale*d_i) x (scale*d_{i+1}); names the first failing leg.
inline void check_kernel_chain(const Dims& dims, const KernelTuple& ts, Eigen::Index scale = 1) {
  require(ts.size() + 1 == dims.size(), ErrorKind::DimensionMismatch,
          "expected " + std::to_string(dims.size() - 1) + " kernels, got " +
              std::to_string(ts.size()));
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto& t = ts[i];
    require(t.rows() == scale * dims[i] && t.cols() == scale * dims[i + 1],
            ErrorKind::DimensionMismatch,
            "kernel leg " + std::to_string(i + 1) + " must be " + std::to_string(scale * dims[i]) +
                "x" + std::to_string(scale * dims[i + 1]) + ", got " + std::to_string(t.rows()) +
                "x" + std::to_string(t.cols()));
    check_finite(t, "kernel leg " + std::to_string(i + 1));
  }
}

inline Dims tensor_dims(const CTensor& phi) {
  return Dims(phi.dims().begin(), phi.dims().end());
}

/// Classical Schur product (phi(i,j) T_ij).
inline CMatrix schur_apply_2d(const CTensor& phi, const CMatrix& t) {
  require(phi.rank() == 2, ErrorKind::DimensionMismatch, "schur_apply_2d needs a 2-index symbol");
  require(t.rows() == Eigen::Index(phi.dims()[0]) && t.cols() == Eigen::Index(phi.dims()[1]),
          ErrorKind::DimensionMismatch, "matrix shape differs from symbol dims");
  return phi.to_matrix().cwiseProduct(t);
}

/// S_phi(T_1 ⊗ ... ⊗ T_{n-1})(x_1, x_n)
///   = sum_{x_2..x_{n-1}} phi(x) T_1(x_1,x_2) ... T_{n-1}(x_{n-1},x_n),
/// contracted left to right.
inline CMatrix schur_apply_nd(const CTensor& phi, const KernelTuple& ts) {
  require(phi.rank() >= 2, ErrorKind::DimensionMismatch, "symbol needs at least 2 indices");
  const Dims dims = tensor_dims(phi);
  check_kernel_chain(dims, ts);
  const std::size_t n = dims.size();
  const Eigen::Index d1 = dims[0];

  // v holds V(x_1, x_k, x_{k+1}, ..., x_n) flattened row-major.
  auto tail = [&](std::size_t from) {
    Eigen::Index p = 1;
    for (std::size_t j = from; j < n; ++j) p *= dims[j];
    return p;
  };
  std::vector<cplx> v(phi.data());
  {
    const Eigen::Index d2 = dims[1];
    const Eigen::Index rest = tail(2);
    for (Eigen::Index x1 = 0; x1 < d1; ++x1)
      for (Eigen::Index x2 = 0; x2 < d2; ++x2) {
        const cplx w = ts[0](x1, x2);
        cplx* row = v.data() + (x1 * d2 + x2) * rest;
        for (Eigen::Index r = 0; r < rest; ++r) row[r] *= w;
      }
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    // contract x_{k+1} (0-based leg k) against T_{k+1}
    const Eigen::Index dk = dims[k];
    const Eigen::Index dn = dims[k + 1];
    const Eigen::Index rest = tail(k + 2);
    std::vector<cplx> next(static_cast<std::size_t>(d1 * dn * rest), cplx(0.0));
    const CMatrix& t = ts[k];
    for (Eigen::Index x1 = 0; x1 < d1; ++x1)
      for (Eigen::Index a = 0; a < dk; ++a)
        for (Eigen::Index b = 0; b < dn; ++b) {
          const cplx w = t(a, b);
          if (w == cplx(0.0)) continue;
          const cplx* src = v.data() + ((x1 * dk + a) * dn + b) * rest;
          cplx* dst = next.data() + (x1 * dn + b) * rest;
          for (Eigen::Index r = 0; r < rest; ++r) dst[r] += w * src[r];
        }
    v.swap(next);
  }
  const Eigen::Index dn = dims[n - 1];
  CMatrix out(d1, dn);
  for (Eigen::Index i = 0; i < d1; ++i)
    for (Eigen::Index j = 0; j < dn; ++j) out(i, j) = v[i * dn + j];
  return out;
}

namespace detail {

/// Factor a_i enters Phi transposed iff n - i is odd (1-based i).
inline bool factor_transposed(std::size_t leg0, std::size_t arity) {
  return ((arity - (leg0 + 1)) % 2) == 1;
}

/// Phi evaluated on operators X_i : H_i -> H_{i+1} (X_i is d_{i+1} x d_i), given in S-order.
inline CMatrix phi_apply_ops(const ElementaryTensorSum& phi, const std::vector<CMatrix>& xs) {
  const std::size_t n = phi.arity();
  const auto& dims = phi.dims();
  CMatrix out = CMatrix::Zero(dims[n - 1], dims[0]);
  for (const auto& term : phi.terms()) {
    CMatrix acc = factor_transposed(0, n) ? CMatrix(term[0].transpose()) : term[0];
    for (std::size_t i = 1; i < n; ++i) {
      const CMatrix& a = term[i];
      acc = xs[i - 1] * acc;
      acc = factor_transposed(i, n) ? CMatrix(a.transpose() * acc) : CMatrix(a * acc);
    }
    out += acc;
  }
  return out;
}

inline std::vector<CMatrix> kernels_to_ops(const KernelTuple& ts) {
  std::vector<CMatrix> xs;
  xs.reserve(ts.size());
  for (const auto& t : ts.kernels) xs.push_back(t.transpose());
  return xs;
}

/// a * (I_J ⊗ y) for a with J column blocks of width y.rows().
inline CMatrix times_blockdiag(const CMatrix& a, const CMatrix& y, Eigen::Index j) {
  CMatrix out(a.rows(), j * y.cols());
  for (Eigen::Index t = 0; t < j; ++t)
    out.middleCols(t * y.cols(), y.cols()) = a.middleCols(t * y.rows(), y.rows()) * y;
  return out;
}

}  // namespace detail

/// Phi_phi(T_{n-1} ⊗ ... ⊗ T_1) = S_phi(T_1 ⊗ ... ⊗ T_{n-1}) as an operator H_1^(d) -> H_n.
/// n = 2, phi = sum a ⊗ b:  sum b X a^T;  n = 3, phi = sum a ⊗ b ⊗ c:  sum c X_2 b^T X_1 a.
inline CMatrix phi_apply(const ElementaryTensorSum& phi, const KernelTuple& ts) {
  check_kernel_chain(phi.dims(), ts);
  return detail::phi_apply_ops(phi, detail::kernels_to_ops(ts));
}

/// gamma(u)(Y_1, ..., Y_{n-1}) = A_1 (Y_1 ⊗ I) A_2 ... A_{n-1} (Y_{n-1} ⊗ I) A_n,
/// with Y_j = X_{n-j} = T_{n-j}^T. u lives on the reversed legs (d_n, ..., d_1).
inline CMatrix gamma_apply(const BlockFactorization& u, const KernelTuple& ts) {
  const std::size_t n = u.arity();
  const Dims sdims(u.dims().rbegin(), u.dims().rend());
  check_kernel_chain(sdims, ts);
  CMatrix acc = u.factor(0);
  for (std::size_t j = 1; j < n; ++j) {
    const CMatrix y = ts[n - 1 - j].transpose();
    acc = detail::times_blockdiag(acc, y, u.inner()[j - 1]);
    acc = acc * u.factor(j);
  }
  return acc;
}

/// (id^(m) ⊗ ... ⊗ id^(m))(phi): every factor a replaced by I_m ⊗ a (block-outer layout).
inline ElementaryTensorSum inflate(const ElementaryTensorSum& phi, Eigen::Index m) {
  require(m >= 1, ErrorKind::InvalidArgument, "amplification level must be positive");
  Dims dims;
  for (auto d : phi.dims()) dims.push_back(d * m);
  ElementaryTensorSum out(dims);
  const CMatrix im = identity(m);
  for (const auto& term : phi.terms()) {
    ElementaryTensorSum::Term t;
    for (const auto& a : term) t.push_back(kron(im, a));
    out.add_term(std::move(t));
  }
  return out;
}

/// Phi_phi^(m) on block kernels, computed from the definition of the multilinear
/// amplification: output block (p,q) = sum over inner block indices of Phi applied
/// to matching blocks. A block kernel T_i is the (m d_i) x (m d_{i+1}) storage of the
/// inflated operator X_i : (H_i^d)^(m) -> H_{i+1}^(m); its operator block (p,q) is
/// the transpose of storage block (q,p).
inline CMatrix amplify_apply(const ElementaryTensorSum& phi, Eigen::Index m, const KernelTuple& ts) {
  require(m >= 1, ErrorKind::InvalidArgument, "amplification level must be positive");
  const auto& dims = phi.dims();
  check_kernel_chain(dims, ts, m);
  const std::size_t n = phi.arity();

  // op_blocks[i][p][q] : operator block (p,q) of X_{i+1}
  std::vector<std::vector<std::vector<CMatrix>>> op_blocks(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto di = dims[i];
    const auto dj = dims[i + 1];
    op_blocks[i].assign(m, std::vector<CMatrix>(m));
    for (Eigen::Index p = 0; p < m; ++p)
      for (Eigen::Index q = 0; q < m; ++q)
        op_blocks[i][p][q] = ts[i].block(q * di, p * dj, di, dj).transpose();
  }

  const auto dn = dims[n - 1];
  const auto d1 = dims[0];
  CMatrix out = CMatrix::Zero(m * dn, m * d1);
  // path[0] = q (input side of X_1), path[n-1] = p (output side of X_{n-1})
  std::vector<Eigen::Index> path(n, 0);
  std::vector<CMatrix> xs(n - 1);
  std::function<void(std::size_t)> rec = [&](std::size_t leg) {
    if (leg == n - 1) {
      for (std::size_t i = 0; i + 1 < n; ++i) xs[i] = op_blocks[i][path[i + 1]][path[i]];
      out.block(path[n - 1] * dn, path[0] * d1, dn, d1) += detail::phi_apply_ops(phi, xs);
      return;
    }
    for (Eigen::Index k = 0; k < m; ++k) {
      path[leg + 1] = k;
      rec(leg + 1);
    }
  };
  for (Eigen::Index q = 0; q < m; ++q) {
    path[0] = q;
    rec(0);
  }
  return out;
}

}  // namespace opmult
