#pragma once

// Finite-dimensional representations of multipliers: sums of elementary
// tensors, block factorizations u = A_1 ⊙ ... ⊙ A_n, symbols, and the
// vector-functional pairings and slice maps used to test them.

#include <cstddef>
#include <utility>
#include <vector>

#include "opmult/errors.hpp"
#include "opmult/linalg.hpp"

namespace opmult {

using Dims = std::vector<Eigen::Index>;

/// phi = sum_r a_1^(r) ⊗ ... ⊗ a_n^(r) with a_i^(r) in M_{d_i}.
class ElementaryTensorSum {
 public:
  using Term = std::vector<CMatrix>;

  ElementaryTensorSum() = default;

  explicit ElementaryTensorSum(Dims dims, std::vector<Term> terms = {}) : dims_(std::move(dims)) {
    require(dims_.size() >= 2, ErrorKind::InvalidArgument, "arity must be at least 2");
    for (auto d : dims_) require(d >= 1, ErrorKind::InvalidArgument, "leg dimension must be positive");
    terms_.reserve(terms.size());
    for (auto& t : terms) add_term(std::move(t));
  }

  static ElementaryTensorSum zero(Dims dims) { return ElementaryTensorSum(std::move(dims)); }

  void add_term(Term term) {
    require(term.size() == dims_.size(), ErrorKind::DimensionMismatch,
            "term has " + std::to_string(term.size()) + " factors, arity is " +
                std::to_string(dims_.size()));
    for (std::size_t i = 0; i < term.size(); ++i) {
      require(term[i].rows() == dims_[i] && term[i].cols() == dims_[i],
              ErrorKind::DimensionMismatch,
              "factor " + std::to_string(i) + " must be " + std::to_string(dims_[i]) + "x" +
                  std::to_string(dims_[i]));
      check_finite(term[i], "factor " + std::to_string(i));
    }
    terms_.push_back(std::move(term));
  }

  std::size_t arity() const { return dims_.size(); }
  const Dims& dims() const { return dims_; }
  const std::vector<Term>& terms() const { return terms_; }
  std::size_t num_terms() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  ElementaryTensorSum scaled(cplx s) const {
    ElementaryTensorSum out(dims_);
    for (auto t : terms_) {
      t[0] *= s;
      out.terms_.push_back(std::move(t));
    }
    return out;
  }

  friend ElementaryTensorSum operator+(const ElementaryTensorSum& a, const ElementaryTensorSum& b) {
    require(a.dims_ == b.dims_, ErrorKind::DimensionMismatch, "adding tensors of different dims");
    ElementaryTensorSum out = a;
    out.terms_.insert(out.terms_.end(), b.terms_.begin(), b.terms_.end());
    return out;
  }

  friend ElementaryTensorSum operator-(const ElementaryTensorSum& a, const ElementaryTensorSum& b) {
    return a + b.scaled(-1.0);
  }

  /// Dense Kronecker matrix of phi on C^{d_1} ⊗ ... ⊗ C^{d_n}.
  CMatrix kron_matrix() const {
    Eigen::Index total = 1;
    for (auto d : dims_) total *= d;
    CMatrix out = CMatrix::Zero(total, total);
    for (const auto& t : terms_) {
      CMatrix k = t[0];
      for (std::size_t i = 1; i < t.size(); ++i) k = kron(k, t[i]);
      out += k;
    }
    return out;
  }

 private:
  Dims dims_;
  std::vector<Term> terms_;
};

/// Matrix of a^d in the conjugate basis: the transpose.
inline CMatrix opposite(const CMatrix& a) {
  require(a.rows() == a.cols(), ErrorKind::NonSquare, "opposite expects a square matrix");
  return a.transpose();
}

/// u_phi: legs reversed, slot s (1-based) carries an opposite-algebra factor iff s is even.
struct Symbol {
  ElementaryTensorSum tensor;
  std::vector<bool> opposite_slots;
};

inline std::vector<bool> symbol_opposite_slots(std::size_t arity) {
  std::vector<bool> slots(arity);
  for (std::size_t s = 0; s < arity; ++s) slots[s] = (s % 2 == 1);
  return slots;
}

inline Symbol symbol_of(const ElementaryTensorSum& phi) {
  const std::size_t n = phi.arity();
  const auto slots = symbol_opposite_slots(n);
  Dims rdims(phi.dims().rbegin(), phi.dims().rend());
  ElementaryTensorSum u(rdims);
  for (const auto& term : phi.terms()) {
    ElementaryTensorSum::Term t(n);
    for (std::size_t s = 0; s < n; ++s) {
      const CMatrix& a = term[n - 1 - s];
      t[s] = slots[s] ? opposite(a) : a;
    }
    u.add_term(std::move(t));
  }
  return {std::move(u), slots};
}

/// Inverse of symbol_of.
inline ElementaryTensorSum from_symbol(const Symbol& u) {
  const std::size_t n = u.tensor.arity();
  require(u.opposite_slots.size() == n, ErrorKind::DimensionMismatch, "symbol slot flags");
  Dims dims(u.tensor.dims().rbegin(), u.tensor.dims().rend());
  ElementaryTensorSum phi(dims);
  for (const auto& term : u.tensor.terms()) {
    ElementaryTensorSum::Term t(n);
    for (std::size_t s = 0; s < n; ++s)
      t[n - 1 - s] = u.opposite_slots[s] ? opposite(term[s]) : term[s];
    phi.add_term(std::move(t));
  }
  return phi;
}

/// omega_{xi,eta}(a) = (a xi, eta).
struct VectorFunctional {
  CVector xi;
  CVector eta;

  Eigen::Index dim() const { return xi.size(); }

  cplx operator()(const CMatrix& a) const {
    require(a.rows() == eta.size() && a.cols() == xi.size(), ErrorKind::DimensionMismatch,
            "vector functional applied to a matrix of the wrong size");
    return eta.dot(a * xi);
  }

  /// The functional on the opposite algebra with tilde-omega(a^d) = omega(a).
  VectorFunctional conjugated() const { return {eta.conjugate(), xi.conjugate()}; }

  static VectorFunctional zero(Eigen::Index d) {
    return {CVector::Zero(d), CVector::Zero(d)};
  }
};

inline cplx eh_pair(const ElementaryTensorSum& u, const std::vector<VectorFunctional>& fs) {
  require(fs.size() == u.arity(), ErrorKind::DimensionMismatch,
          "need one functional per tensor leg");
  for (std::size_t i = 0; i < fs.size(); ++i)
    require(fs[i].xi.size() == u.dims()[i] && fs[i].eta.size() == u.dims()[i],
            ErrorKind::DimensionMismatch, "functional " + std::to_string(i) + " dimension");
  cplx total = 0.0;
  for (const auto& term : u.terms()) {
    cplx p = 1.0;
    for (std::size_t i = 0; i < fs.size(); ++i) p *= fs[i](term[i]);
    total += p;
  }
  return total;
}

/// L_omega(u) = sum_r omega(v_r) w_r for u = sum_r v_r ⊗ w_r.
inline CMatrix left_slice(const ElementaryTensorSum& u, const VectorFunctional& omega) {
  require(u.arity() == 2, ErrorKind::InvalidArgument, "slice maps act on 2-leg tensors");
  require(omega.dim() == u.dims()[0] && omega.eta.size() == u.dims()[0],
          ErrorKind::DimensionMismatch, "left slice functional dimension");
  CMatrix out = CMatrix::Zero(u.dims()[1], u.dims()[1]);
  for (const auto& t : u.terms()) out += omega(t[0]) * t[1];
  return out;
}

/// R_omega(u) = sum_r omega(w_r) v_r.
inline CMatrix right_slice(const ElementaryTensorSum& u, const VectorFunctional& omega) {
  require(u.arity() == 2, ErrorKind::InvalidArgument, "slice maps act on 2-leg tensors");
  require(omega.dim() == u.dims()[1] && omega.eta.size() == u.dims()[1],
          ErrorKind::DimensionMismatch, "right slice functional dimension");
  CMatrix out = CMatrix::Zero(u.dims()[0], u.dims()[0]);
  for (const auto& t : u.terms()) out += omega(t[1]) * t[0];
  return out;
}

/// u = A_1 ⊙ A_2 ⊙ ... ⊙ A_n. Factor i is stored densely as a
/// (J_{i-1} d_i) x (J_i d_i) matrix whose (s,t) block of size d_i x d_i is the
/// block entry; J_0 = J_n = 1.
class BlockFactorization {
 public:
  BlockFactorization() = default;

  BlockFactorization(Dims dims, std::vector<CMatrix> factors)
      : dims_(std::move(dims)), factors_(std::move(factors)) {
    const std::size_t n = dims_.size();
    require(n >= 2, ErrorKind::InvalidArgument, "factorization arity must be at least 2");
    require(factors_.size() == n, ErrorKind::DimensionMismatch, "one factor per leg");
    inner_.assign(n - 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto d = dims_[i];
      const auto& f = factors_[i];
      require(f.rows() % d == 0 && f.cols() % d == 0, ErrorKind::DimensionMismatch,
              "factor " + std::to_string(i) + " is not a block matrix over M_d");
      const Eigen::Index jr = f.rows() / d;
      const Eigen::Index jc = f.cols() / d;
      if (i == 0) require(jr == 1, ErrorKind::DimensionMismatch, "first factor must be a block row");
      if (i + 1 == n) require(jc == 1, ErrorKind::DimensionMismatch, "last factor must be a block column");
      if (i > 0)
        require(jr == inner_[i - 1], ErrorKind::DimensionMismatch,
                "block index sets of factors " + std::to_string(i - 1) + " and " +
                    std::to_string(i) + " do not match");
      if (i + 1 < n) inner_[i] = jc;
      check_finite(f, "factor " + std::to_string(i));
    }
  }

  std::size_t arity() const { return dims_.size(); }
  const Dims& dims() const { return dims_; }
  const std::vector<Eigen::Index>& inner() const { return inner_; }
  const std::vector<CMatrix>& factors() const { return factors_; }
  const CMatrix& factor(std::size_t i) const { return factors_[i]; }

  CMatrix block(std::size_t i, Eigen::Index s, Eigen::Index t) const {
    const auto d = dims_[i];
    return factors_[i].block(s * d, t * d, d, d);
  }

  std::vector<double> factor_norms() const {
    std::vector<double> out;
    out.reserve(factors_.size());
    for (const auto& f : factors_) out.push_back(op_norm(f));
    return out;
  }

  /// ||A_1|| ... ||A_n||: an upper bound on the Haagerup norm of the element.
  double norm_bound() const {
    double p = 1.0;
    for (double v : factor_norms()) p *= v;
    return p;
  }

  /// Expand into an elementary sum (one term per index path).
  ElementaryTensorSum expand() const {
    const std::size_t n = arity();
    ElementaryTensorSum out(dims_);
    std::vector<Eigen::Index> path(n + 1, 0);  // path[0] = path[n] = 0
    std::function<void(std::size_t)> rec = [&](std::size_t level) {
      if (level == n) {
        ElementaryTensorSum::Term term(n);
        for (std::size_t i = 0; i < n; ++i) term[i] = block(i, path[i], path[i + 1]);
        out.add_term(std::move(term));
        return;
      }
      const Eigen::Index count = (level + 1 == n) ? 1 : inner_[level];
      for (Eigen::Index t = 0; t < count; ++t) {
        path[level + 1] = t;
        rec(level + 1);
      }
    };
    rec(0);
    return out;
  }

 private:
  Dims dims_;
  std::vector<Eigen::Index> inner_;
  std::vector<CMatrix> factors_;
};

/// <u, f_1 ⊗ ... ⊗ f_n> evaluated as the product of scalar matrices (f_i(A_i[s,t])).
inline cplx factorization_pair(const BlockFactorization& u, const std::vector<VectorFunctional>& fs) {
  require(fs.size() == u.arity(), ErrorKind::DimensionMismatch, "need one functional per leg");
  CMatrix acc = CMatrix::Identity(1, 1);
  for (std::size_t i = 0; i < u.arity(); ++i) {
    const Eigen::Index jr = u.factor(i).rows() / u.dims()[i];
    const Eigen::Index jc = u.factor(i).cols() / u.dims()[i];
    CMatrix scalars(jr, jc);
    for (Eigen::Index s = 0; s < jr; ++s)
      for (Eigen::Index t = 0; t < jc; ++t) scalars(s, t) = fs[i](u.block(i, s, t));
    acc = acc * scalars;
  }
  return acc(0, 0);
}

/// Canonical factorization with J_i = number of terms and diagonal middle factors.
inline BlockFactorization to_factorization(const ElementaryTensorSum& phi) {
  const std::size_t n = phi.arity();
  const auto r = static_cast<Eigen::Index>(phi.num_terms());
  std::vector<CMatrix> factors(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = phi.dims()[i];
    const Eigen::Index jr = (i == 0) ? 1 : r;
    const Eigen::Index jc = (i + 1 == n) ? 1 : r;
    CMatrix f = CMatrix::Zero(jr * d, jc * d);
    for (Eigen::Index k = 0; k < r; ++k) {
      const Eigen::Index s = (i == 0) ? 0 : k;
      const Eigen::Index t = (i + 1 == n) ? 0 : k;
      f.block(s * d, t * d, d, d) = phi.terms()[k][i];
    }
    factors[i] = std::move(f);
  }
  return BlockFactorization(phi.dims(), std::move(factors));
}

/// phi = scale * sum_{ij} e_ij ⊗ e_ji on M_k ⊗ M_k. Phi_phi(x) = scale * x^T and the
/// symbol is scale * sum_{ij} e_ij ⊗ e_ij.
inline ElementaryTensorSum transposition_multiplier(Eigen::Index k, double scale = 1.0) {
  ElementaryTensorSum phi({k, k});
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      phi.add_term({scale * matrix_unit(k, k, i, j), matrix_unit(k, k, j, i)});
  return phi;
}

/// sum_r diag(x_r) ⊗ diag(y_r): the operator-multiplier form of the Schur multiplier
/// psi(i,j) = sum_r x_r(i) y_r(j).
inline ElementaryTensorSum diagonal_multiplier(const std::vector<std::vector<cplx>>& xs,
                                               const std::vector<std::vector<cplx>>& ys) {
  require(xs.size() == ys.size() && !xs.empty(), ErrorKind::InvalidArgument,
          "diagonal multiplier needs matching non-empty factor lists");
  ElementaryTensorSum phi({static_cast<Eigen::Index>(xs[0].size()),
                           static_cast<Eigen::Index>(ys[0].size())});
  for (std::size_t r = 0; r < xs.size(); ++r) phi.add_term({diag(xs[r]), diag(ys[r])});
  return phi;
}

}  // namespace opmult
