#pragma once

// Certified norm brackets.
//
// Every reported bound is recomputed from an explicit object: upper bounds from a
// factorization (Kraus-type family, Gram vectors, block factorization) whose norm
// product is evaluated directly, lower bounds from a contraction witness or a
// dual density pair. Solver output only steers the search.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "opmult/errors.hpp"
#include "opmult/linalg.hpp"
#include "opmult/parallel.hpp"
#include "opmult/schur.hpp"
#include "opmult/sdp.hpp"
#include "opmult/tensorrep.hpp"

namespace opmult {

struct NormBracket {
  double lower = 0.0;
  double upper = INFINITY;
  std::string lower_method;
  std::string upper_method;
  double tolerance = 1e-6;

  double width() const { return upper - lower; }
  double midpoint() const { return 0.5 * (lower + upper); }
  /// Width within tolerance relative to the upper bound.
  bool closed() const { return upper <= 0.0 || width() <= tolerance * upper; }
  bool contains(double v, double slack = 0.0) const { return lower - slack <= v && v <= upper + slack; }

  void raise_lower(double v, const std::string& method) {
    if (v > lower) {
      lower = v;
      lower_method = method;
    }
  }
  void lower_upper(double v, const std::string& method) {
    if (v < upper) {
      upper = v;
      upper_method = method;
    }
  }
};

class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, NormBracket best)
      : Error(ErrorKind::SolverFailed, what), bracket_(std::move(best)) {}
  const NormBracket& bracket() const { return bracket_; }

 private:
  NormBracket bracket_;
};

struct NormOptions {
  std::uint64_t seed = 0;
  int restarts = 25;
  int max_sweeps = 1000;
  double sdp_tol = 1e-9;
  Eigen::Index choi_sdp_limit = 48;    // largest Choi side (ac or be) sent to the IPM
  Eigen::Index schur_ipm_limit = 40;   // largest d1 + d2 sent to the IPM
  int fixed_point_iterations = 3000;
  int als_sweeps = 30;
};

// ---------------------------------------------------------------------------
// Row-major vectorization: vec(A X B) = (A ⊗ B^T) vec(X).

inline CVector vec_rm(const CMatrix& m) {
  CVector v(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  return v;
}

inline CMatrix unvec_rm(const CVector& v, Eigen::Index rows, Eigen::Index cols) {
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v(i * cols + j);
  return m;
}

/// A linear map M_{a x b} -> M_{c x e}, stored as its natural matrix L
/// (vec(Phi(X)) = L vec(X), row-major vec).
class ChoiForm {
 public:
  ChoiForm() = default;

  ChoiForm(Eigen::Index in_rows, Eigen::Index in_cols, Eigen::Index out_rows, Eigen::Index out_cols,
           CMatrix natural)
      : a_(in_rows), b_(in_cols), c_(out_rows), e_(out_cols), l_(std::move(natural)) {
    require(a_ >= 1 && b_ >= 1 && c_ >= 1 && e_ >= 1, ErrorKind::InvalidArgument,
            "map dimensions must be positive");
    require(l_.rows() == c_ * e_ && l_.cols() == a_ * b_, ErrorKind::DimensionMismatch,
            "natural matrix must be (out_rows*out_cols) x (in_rows*in_cols)");
    check_finite(l_, "natural matrix");
  }

  static ChoiForm from_map(Eigen::Index in_rows, Eigen::Index in_cols, Eigen::Index out_rows,
                           Eigen::Index out_cols, const std::function<CMatrix(const CMatrix&)>& f) {
    CMatrix l(out_rows * out_cols, in_rows * in_cols);
    for (Eigen::Index i = 0; i < in_rows; ++i)
      for (Eigen::Index j = 0; j < in_cols; ++j) {
        const CMatrix y = f(matrix_unit(in_rows, in_cols, i, j));
        require(y.rows() == out_rows && y.cols() == out_cols, ErrorKind::DimensionMismatch,
                "map output has the wrong shape");
        l.col(i * in_cols + j) = vec_rm(y);
      }
    return ChoiForm(in_rows, in_cols, out_rows, out_cols, std::move(l));
  }

  /// Phi_phi for a two-leg multiplier: X (d_2 x d_1) -> sum b X a^T.
  static ChoiForm from_multiplier(const ElementaryTensorSum& phi) {
    require(phi.arity() == 2, ErrorKind::InvalidArgument, "a ChoiForm needs a two-leg multiplier");
    const auto d1 = phi.dims()[0];
    const auto d2 = phi.dims()[1];
    CMatrix l = CMatrix::Zero(d2 * d1, d2 * d1);
    for (const auto& t : phi.terms()) l += kron(t[1], t[0]);
    return ChoiForm(d2, d1, d2, d1, std::move(l));
  }

  /// gamma_0(u) for u = sum v ⊗ w: X (d_1 x d_2) -> sum v X w.
  static ChoiForm from_elementary_operator(const ElementaryTensorSum& u) {
    require(u.arity() == 2, ErrorKind::InvalidArgument, "elementary operators need a two-leg tensor");
    const auto d1 = u.dims()[0];
    const auto d2 = u.dims()[1];
    CMatrix l = CMatrix::Zero(d1 * d2, d1 * d2);
    for (const auto& t : u.terms()) l += kron(t[0], CMatrix(t[1].transpose()));
    return ChoiForm(d1, d2, d1, d2, std::move(l));
  }

  static ChoiForm transposition(Eigen::Index k, double scale = 1.0) {
    return from_map(k, k, k, k, [&](const CMatrix& x) { return CMatrix(scale * x.transpose()); });
  }

  static ChoiForm identity_map(Eigen::Index rows, Eigen::Index cols) {
    return ChoiForm(rows, cols, rows, cols, identity(rows * cols));
  }

  Eigen::Index in_rows() const { return a_; }
  Eigen::Index in_cols() const { return b_; }
  Eigen::Index out_rows() const { return c_; }
  Eigen::Index out_cols() const { return e_; }
  const CMatrix& natural() const { return l_; }

  CMatrix apply(const CMatrix& x) const {
    require(x.rows() == a_ && x.cols() == b_, ErrorKind::DimensionMismatch, "map input shape");
    return unvec_rm(l_ * vec_rm(x), c_, e_);
  }

  /// Hilbert-Schmidt adjoint.
  CMatrix adjoint_apply(const CMatrix& y) const {
    require(y.rows() == c_ && y.cols() == e_, ErrorKind::DimensionMismatch, "adjoint input shape");
    return unvec_rm(l_.adjoint() * vec_rm(y), a_, b_);
  }

  /// second ∘ first
  static ChoiForm compose(const ChoiForm& second, const ChoiForm& first) {
    require(second.a_ == first.c_ && second.b_ == first.e_, ErrorKind::DimensionMismatch,
            "composed maps do not chain");
    return ChoiForm(first.a_, first.b_, second.c_, second.e_, second.l_ * first.l_);
  }

  ChoiForm scaled(cplx s) const { return ChoiForm(a_, b_, c_, e_, s * l_); }

  /// sum_{ij} E_ij ⊗ Phi(E_ij), (a c) x (b e).
  CMatrix choi() const {
    CMatrix out = CMatrix::Zero(a_ * c_, b_ * e_);
    for (Eigen::Index i = 0; i < a_; ++i)
      for (Eigen::Index j = 0; j < b_; ++j)
        out.block(i * c_, j * e_, c_, e_) = unvec_rm(l_.col(i * b_ + j), c_, e_);
    return out;
  }

  /// Minimal family with Phi(X) = sum_r B_r X A_r (B_r: c x a, A_r: b x e),
  /// from the SVD of the realigned natural matrix.
  std::pair<std::vector<CMatrix>, std::vector<CMatrix>> kraus_pairs(double rel_cut = 1e-13) const {
    // R((p,i),(j,q)) = L(p e + q, i b + j) = sum_r B_r(p,i) A_r(j,q)
    CMatrix r(c_ * a_, b_ * e_);
    for (Eigen::Index p = 0; p < c_; ++p)
      for (Eigen::Index i = 0; i < a_; ++i)
        for (Eigen::Index j = 0; j < b_; ++j)
          for (Eigen::Index q = 0; q < e_; ++q) r(p * a_ + i, j * e_ + q) = l_(p * e_ + q, i * b_ + j);
    std::vector<CMatrix> bs, as;
    if (r.norm() == 0.0) return {bs, as};
    Eigen::BDCSVD<CMatrix> svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector s = svd.singularValues();
    for (Eigen::Index k = 0; k < s.size(); ++k) {
      if (s(k) <= rel_cut * s(0)) break;
      const double w = std::sqrt(s(k));
      bs.push_back(w * unvec_rm(svd.matrixU().col(k), c_, a_));
      as.push_back(w * unvec_rm(svd.matrixV().col(k).conjugate(), b_, e_));
    }
    return {bs, as};
  }

 private:
  Eigen::Index a_ = 0, b_ = 0, c_ = 0, e_ = 0;
  CMatrix l_;
};

// ---------------------------------------------------------------------------
// Amplification lower bounds.

namespace detail {

inline Rng seeded_rng(std::uint64_t seed, std::uint64_t level, std::uint64_t restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(level), static_cast<std::uint32_t>(restart)};
  return Rng(seq);
}

inline CMatrix random_contraction(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  return polar_factor(random_gaussian(rows, cols, rng));
}

inline CMatrix normalized(const CMatrix& x) {
  const double n = op_norm(x);
  return n > 0 ? CMatrix(x / n) : x;
}

/// Phi^(m) for a ChoiForm; X is (m a) x (m b) with block (p,q) of size a x b.
class ChoiAmplifier {
 public:
  ChoiAmplifier(const ChoiForm& f, Eigen::Index m) : f_(f), m_(m) {}

  CMatrix apply(const CMatrix& x) const {
    const auto a = f_.in_rows(), b = f_.in_cols(), c = f_.out_rows(), e = f_.out_cols();
    CMatrix vin(a * b, m_ * m_);
    for (Eigen::Index p = 0; p < m_; ++p)
      for (Eigen::Index q = 0; q < m_; ++q) vin.col(p * m_ + q) = vec_rm(x.block(p * a, q * b, a, b));
    const CMatrix vout = f_.natural() * vin;
    CMatrix y(m_ * c, m_ * e);
    for (Eigen::Index p = 0; p < m_; ++p)
      for (Eigen::Index q = 0; q < m_; ++q) y.block(p * c, q * e, c, e) = unvec_rm(vout.col(p * m_ + q), c, e);
    return y;
  }

  /// K with <K, X> = xi^* Phi^(m)(X) eta.
  CMatrix gradient(const CVector& xi, const CVector& eta) const {
    const auto a = f_.in_rows(), b = f_.in_cols(), c = f_.out_rows(), e = f_.out_cols();
    CMatrix vin(c * e, m_ * m_);
    for (Eigen::Index p = 0; p < m_; ++p)
      for (Eigen::Index q = 0; q < m_; ++q)
        vin.col(p * m_ + q) = vec_rm(xi.segment(p * c, c) * eta.segment(q * e, e).adjoint());
    const CMatrix vout = f_.natural().adjoint() * vin;
    CMatrix k(m_ * a, m_ * b);
    for (Eigen::Index p = 0; p < m_; ++p)
      for (Eigen::Index q = 0; q < m_; ++q) k.block(p * a, q * b, a, b) = unvec_rm(vout.col(p * m_ + q), a, b);
    return k;
  }

  Eigen::Index in_rows() const { return m_ * f_.in_rows(); }
  Eigen::Index in_cols() const { return m_ * f_.in_cols(); }

 private:
  const ChoiForm& f_;
  Eigen::Index m_;
};

struct ClimbResult {
  double value = 0.0;
  CMatrix x;
};

template <class Amp>
ClimbResult climb(const Amp& amp, CMatrix x, int max_sweeps) {
  ClimbResult best;
  x = normalized(x);
  if (op_norm(x) == 0.0) x = CMatrix::Zero(x.rows(), x.cols());
  SingularTriple t = top_singular(amp.apply(x));
  best.value = t.value;
  best.x = x;
  int flat = 0;
  for (int sweep = 0; sweep < max_sweeps && t.value > 0.0; ++sweep) {
    x = polar_factor(amp.gradient(t.left, t.right));
    t = top_singular(amp.apply(x));
    if (t.value > best.value * (1.0 + 1e-9)) {
      flat = 0;
    } else if (++flat >= 3) {
      if (t.value > best.value) best = {t.value, x};
      break;
    }
    if (t.value > best.value) best = {t.value, x};
  }
  return best;
}

/// Embeds a level-(m-1) witness in the top-left blocks at level m.
inline CMatrix embed_witness(const CMatrix& x, Eigen::Index rows, Eigen::Index cols) {
  CMatrix out = CMatrix::Zero(rows, cols);
  out.topLeftCorner(x.rows(), x.cols()) = x;
  return out;
}

/// X_pq = E_qp where defined: the transpose-type witness.
inline CMatrix swap_witness(Eigen::Index m, Eigen::Index a, Eigen::Index b) {
  CMatrix x = CMatrix::Zero(m * a, m * b);
  for (Eigen::Index p = 0; p < m; ++p)
    for (Eigen::Index q = 0; q < m; ++q)
      if (q < a && p < b) x(p * a + q, q * b + p) = 1.0;
  return x;
}

}  // namespace detail

struct AmplificationResult {
  double value = 0.0;
  Eigen::Index level = 0;
  CMatrix witness;  // contraction at the reported level
};

/// max over levels 1..m of ||Phi^(j)(X)|| over contractions X, by alternating
/// maximization. Each level is seeded with the previous level's best witness, the
/// swap witness and `restarts` random contractions drawn from (seed, level), so the
/// result is nondecreasing in m. With a finite `target` (a known upper bound) the
/// search stops as soon as a witness reaches it, trying the level-m swap witness first.
inline AmplificationResult amplification_search(const ChoiForm& f, Eigen::Index m, int restarts,
                                                std::uint64_t seed = 0, int max_sweeps = 1000,
                                                double target = INFINITY) {
  require(m >= 1, ErrorKind::InvalidArgument, "amplification level must be at least 1");
  require(restarts >= 0, ErrorKind::InvalidArgument, "restart count must be nonnegative");
  if (std::isfinite(target)) {
    detail::ChoiAmplifier amp(f, m);
    auto r = detail::climb(amp, detail::swap_witness(m, f.in_rows(), f.in_cols()), max_sweeps);
    if (r.value >= target) return {r.value, m, r.x};
  }
  AmplificationResult best;
  CMatrix carry;
  for (Eigen::Index level = 1; level <= m; ++level) {
    detail::ChoiAmplifier amp(f, level);
    const auto rows = amp.in_rows(), cols = amp.in_cols();
    std::vector<CMatrix> seeds;
    if (carry.size() > 0) seeds.push_back(detail::embed_witness(carry, rows, cols));
    seeds.push_back(detail::swap_witness(level, f.in_rows(), f.in_cols()));
    if (level == 1) {
      // top right-singular vector of L: the Hilbert-Schmidt maximizer
      Eigen::BDCSVD<CMatrix> svd(f.natural(), Eigen::ComputeThinV);
      seeds.push_back(unvec_rm(svd.matrixV().col(0), f.in_rows(), f.in_cols()));
    }
    const std::size_t fixed = seeds.size();
    for (int r = 0; r < restarts; ++r) {
      Rng rng = detail::seeded_rng(seed, static_cast<std::uint64_t>(level), static_cast<std::uint64_t>(r));
      seeds.push_back(detail::random_contraction(rows, cols, rng));
    }
    auto run = [&](std::size_t from, std::size_t to) {
      return parallel_map<detail::ClimbResult>(
          to - from, [&](std::size_t i) { return detail::climb(amp, seeds[from + i], max_sweeps); });
    };
    auto results = run(0, fixed);
    double lvl_best = 0.0;
    for (const auto& r : results) lvl_best = std::max(lvl_best, r.value);
    if (lvl_best < target) {
      auto more = run(fixed, seeds.size());
      results.insert(results.end(), more.begin(), more.end());
    }
    detail::ClimbResult lvl;
    for (const auto& r : results)
      if (r.value > lvl.value) lvl = r;
    if (lvl.x.size() == 0) lvl.x = CMatrix::Zero(rows, cols);
    carry = lvl.x;
    if (lvl.value > best.value || best.witness.size() == 0) best = {std::max(lvl.value, best.value), level, lvl.x};
    if (best.value >= target) break;
  }
  return best;
}

inline double cb_lower_amplification(const ChoiForm& f, Eigen::Index m, int restarts = 25,
                                     std::uint64_t seed = 0) {
  return amplification_search(f, m, restarts, seed).value;
}

namespace detail {

/// Phi_psi in operator form for psi = inflate(phi, m), with the per-leg gradient.
class MultilinearAmplifier {
 public:
  MultilinearAmplifier(const ElementaryTensorSum& phi, Eigen::Index m) {
    const std::size_t n = phi.arity();
    n_ = n;
    for (auto d : phi.dims()) dims_.push_back(d * m);
    const CMatrix im = identity(m);
    for (const auto& term : phi.terms()) {
      std::vector<CMatrix> fs(n);
      for (std::size_t i = 0; i < n; ++i)
        fs[i] = kron(im, factor_transposed(i, n) ? CMatrix(term[i].transpose()) : term[i]);
      factors_.push_back(std::move(fs));
    }
  }

  std::size_t legs() const { return n_ - 1; }
  Eigen::Index rows(std::size_t leg) const { return dims_[leg + 1]; }
  Eigen::Index cols(std::size_t leg) const { return dims_[leg]; }

  CMatrix apply(const std::vector<CMatrix>& xs) const {
    CMatrix out = CMatrix::Zero(dims_[n_ - 1], dims_[0]);
    for (const auto& fs : factors_) {
      CMatrix acc = fs[0];
      for (std::size_t i = 1; i < n_; ++i) acc = fs[i] * (xs[i - 1] * acc);
      out += acc;
    }
    return out;
  }

  /// K with <K, X_leg> = xi^* Phi(xs) eta, all other legs fixed.
  CMatrix gradient(const std::vector<CMatrix>& xs, std::size_t leg, const CVector& xi,
                   const CVector& eta) const {
    CMatrix k = CMatrix::Zero(rows(leg), cols(leg));
    for (const auto& fs : factors_) {
      CVector rv = fs[0] * eta;
      for (std::size_t i = 1; i <= leg; ++i) rv = fs[i] * (xs[i - 1] * rv);
      CVector lv = xi;
      for (std::size_t i = n_ - 1; i > leg; --i) {
        lv = fs[i].adjoint() * lv;
        if (i - 1 > leg) lv = xs[i - 1].adjoint() * lv;
      }
      k += lv * rv.adjoint();
    }
    return k;
  }

 private:
  std::size_t n_ = 0;
  Dims dims_;
  std::vector<std::vector<CMatrix>> factors_;
};

struct MultiClimb {
  double value = 0.0;
  std::vector<CMatrix> xs;
};

inline MultiClimb climb_multilinear(const MultilinearAmplifier& amp, std::vector<CMatrix> xs,
                                    int max_sweeps) {
  for (auto& x : xs) x = normalized(x);
  SingularTriple t = top_singular(amp.apply(xs));
  MultiClimb best{t.value, xs};
  int flat = 0;
  for (int sweep = 0; sweep < max_sweeps && t.value > 0.0; ++sweep) {
    for (std::size_t leg = 0; leg < amp.legs(); ++leg) {
      xs[leg] = polar_factor(amp.gradient(xs, leg, t.left, t.right));
      t = top_singular(amp.apply(xs));
    }
    if (t.value > best.value * (1.0 + 1e-9)) {
      flat = 0;
    } else if (++flat >= 3) {
      if (t.value > best.value) best = {t.value, xs};
      break;
    }
    if (t.value > best.value) best = {t.value, xs};
  }
  return best;
}

}  // namespace detail

/// Lower bound on ||phi||_m = ||Phi_phi||_cb from contractions at levels 1..m.
inline double cb_lower_amplification(const ElementaryTensorSum& phi, Eigen::Index m, int restarts = 25,
                                     std::uint64_t seed = 0) {
  require(m >= 1, ErrorKind::InvalidArgument, "amplification level must be at least 1");
  if (phi.empty()) return 0.0;
  if (phi.arity() == 2) return cb_lower_amplification(ChoiForm::from_multiplier(phi), m, restarts, seed);
  double best = 0.0;
  std::vector<CMatrix> carry;
  for (Eigen::Index level = 1; level <= m; ++level) {
    detail::MultilinearAmplifier amp(phi, level);
    std::vector<std::vector<CMatrix>> seeds;
    if (!carry.empty()) {
      std::vector<CMatrix> s;
      for (std::size_t leg = 0; leg < amp.legs(); ++leg)
        s.push_back(detail::embed_witness(carry[leg], amp.rows(leg), amp.cols(leg)));
      seeds.push_back(std::move(s));
    }
    {
      std::vector<CMatrix> s;
      for (std::size_t leg = 0; leg < amp.legs(); ++leg)
        s.push_back(detail::swap_witness(level, amp.rows(leg) / level, amp.cols(leg) / level));
      seeds.push_back(std::move(s));
    }
    for (int r = 0; r < restarts; ++r) {
      Rng rng = detail::seeded_rng(seed, static_cast<std::uint64_t>(level), static_cast<std::uint64_t>(r));
      std::vector<CMatrix> s;
      for (std::size_t leg = 0; leg < amp.legs(); ++leg)
        s.push_back(detail::random_contraction(amp.rows(leg), amp.cols(leg), rng));
      seeds.push_back(std::move(s));
    }
    const auto results = parallel_map<detail::MultiClimb>(seeds.size(), [&](std::size_t i) {
      return detail::climb_multilinear(amp, seeds[i], 1000);
    });
    detail::MultiClimb lvl;
    for (const auto& r : results)
      if (r.value > lvl.value || lvl.xs.empty()) lvl = r;
    carry = lvl.xs;
    best = std::max(best, lvl.value);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Factorization upper bounds.

namespace detail {

/// ||sum_r B_r B_r^*||^{1/2} ||sum_r A_r^* A_r||^{1/2} for Phi(X) = sum B_r X A_r.
inline double kraus_bound(const std::vector<CMatrix>& bs, const std::vector<CMatrix>& as) {
  if (bs.empty()) return 0.0;
  CMatrix bb = CMatrix::Zero(bs[0].rows(), bs[0].rows());
  CMatrix aa = CMatrix::Zero(as[0].cols(), as[0].cols());
  for (std::size_t r = 0; r < bs.size(); ++r) {
    bb += bs[r] * bs[r].adjoint();
    aa += as[r].adjoint() * as[r];
  }
  return std::sqrt(std::max(0.0, lambda_max(bb))) * std::sqrt(std::max(0.0, lambda_max(aa)));
}

/// Hermitian basis of J x J matrices as SDP entries (row <= col). Real data only
/// needs the symmetric part.
inline std::vector<std::pair<Eigen::Index, std::pair<Eigen::Index, cplx>>> hermitian_basis(
    Eigen::Index j, bool real_only) {
  std::vector<std::pair<Eigen::Index, std::pair<Eigen::Index, cplx>>> out;
  for (Eigen::Index r = 0; r < j; ++r)
    for (Eigen::Index s = r; s < j; ++s) {
      out.push_back({r, {s, cplx(1.0)}});
      if (s != r && !real_only) out.push_back({r, {s, cplx(0.0, 1.0)}});
    }
  return out;
}

inline bool is_real(const CMatrix& m) { return m.size() == 0 || m.imag().cwiseAbs().maxCoeff() == 0.0; }

inline void push_dense(std::vector<SDPEntry>& es, std::size_t block, const CMatrix& h, double sign = 1.0) {
  for (Eigen::Index r = 0; r < h.rows(); ++r)
    for (Eigen::Index c = r; c < h.cols(); ++c)
      if (h(r, c) != cplx(0.0)) es.push_back({block, r, c, sign * (r == c ? cplx(h(r, c).real()) : h(r, c))});
}

/// G minimizing ||V (G^{-1} ⊗ I) V^*|| * ||W^* (G ⊗ I) W|| over G ≻ 0, where V is
/// p x (J dv) and W is (J dw) x q (block index outer). Solved as
/// min t  s.t.  [[I, V], [V^*, G ⊗ I]] ⪰ 0,  W^* (G ⊗ I) W ⪯ t I.
inline std::optional<CMatrix> interface_gram(const CMatrix& v, const CMatrix& w, Eigen::Index j,
                                             Eigen::Index dv, Eigen::Index dw, double tol) {
  const bool real = is_real(v) && is_real(w);
  const auto basis = hermitian_basis(j, real);
  const Eigen::Index p = v.rows();
  const Eigen::Index q = w.cols();

  SDPProblem sdp;
  const auto b0 = sdp.add_block(p + j * dv);
  const auto b1 = sdp.add_block(q);
  CMatrix c0 = CMatrix::Zero(p + j * dv, p + j * dv);
  c0.topLeftCorner(p, p) = identity(p);
  c0.topRightCorner(p, j * dv) = v;
  c0.bottomLeftCorner(j * dv, p) = v.adjoint();
  sdp.set_cost(b0, c0);

  for (const auto& [r, sv] : basis) {
    const auto [s, val] = sv;
    std::vector<SDPEntry> es;
    for (Eigen::Index l = 0; l < dv; ++l) es.push_back({b0, p + r * dv + l, p + s * dv + l, -val});
    const CMatrix wr = w.middleRows(r * dw, dw);
    const CMatrix ws = w.middleRows(s * dw, dw);
    CMatrix h = val * (wr.adjoint() * ws);
    if (r != s) h += std::conj(val) * (ws.adjoint() * wr);
    push_dense(es, b1, h);
    sdp.add_constraint(std::move(es), 0.0);
  }
  std::vector<SDPEntry> et;
  for (Eigen::Index l = 0; l < q; ++l) et.push_back({b1, l, l, -1.0});
  sdp.add_constraint(std::move(et), -1.0);

  const auto sol = solve(sdp, tol);
  if (sol.status == SDPStatus::Infeasible) return std::nullopt;
  CMatrix g = CMatrix::Zero(j, j);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const auto& [r, sv] = basis[k];
    const auto [s, val] = sv;
    g(r, s) += sol.y(k) * val;
    if (r != s) g(s, r) += sol.y(k) * std::conj(val);
  }
  if (!all_finite(g)) return std::nullopt;
  return g;
}

/// S with S^* S = G (after shifting G to be positive definite).
inline std::optional<std::pair<CMatrix, CMatrix>> gram_root(CMatrix g) {
  g = hermitian_part(g);
  const auto eig = hermitian_eig(g);
  const double top = eig.eigenvalues().maxCoeff();
  if (!(top > 0)) return std::nullopt;
  const RVector ev = eig.eigenvalues().cwiseMax(1e-12 * top);
  const CMatrix s = ev.cwiseSqrt().cast<cplx>().asDiagonal() * eig.eigenvectors().adjoint();
  const CMatrix sinv = eig.eigenvectors() * ev.cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal();
  return std::make_pair(s, sinv);
}

/// Replace (V, W) by (V (S^{-1} ⊗ I), (S ⊗ I) W) when that lowers ||V|| ||W||.
inline bool rebalance_interface(CMatrix& v, CMatrix& w, Eigen::Index j, Eigen::Index dv, Eigen::Index dw,
                                double tol) {
  const double before = op_norm(v) * op_norm(w);
  if (before == 0.0) return false;
  const auto g = interface_gram(v, w, j, dv, dw, tol);
  if (!g) return false;
  const auto roots = gram_root(*g);
  if (!roots) return false;
  const CMatrix nv = v * kron(roots->second, identity(dv));
  const CMatrix nw = kron(roots->first, identity(dw)) * w;
  if (!all_finite(nv) || !all_finite(nw)) return false;
  const double after = op_norm(nv) * op_norm(nw);
  if (!(after < before)) return false;
  // keep the two norms balanced
  const double sv = std::sqrt(op_norm(nw) / op_norm(nv));
  v = nv * sv;
  w = nw / sv;
  return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// cb norm of a map between matrix spaces.

namespace detail {

inline CMatrix partial_trace_first(const CMatrix& m, Eigen::Index outer, Eigen::Index inner) {
  return partial_trace_outer(m, outer, inner);
}

inline CMatrix psd_sqrt(const CMatrix& m) {
  const auto eig = hermitian_eig(m);
  const RVector ev = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * ev.cast<cplx>().asDiagonal() * eig.eigenvectors().adjoint();
}

inline CMatrix density(CMatrix s, Eigen::Index d) {
  s = hermitian_part(s);
  const auto eig = hermitian_eig(s);
  const RVector ev = eig.eigenvalues().cwiseMax(0.0);
  const double tr = ev.sum();
  if (!(tr > 0)) return identity(d) / double(d);
  return eig.eigenvectors() * (ev / tr).cast<cplx>().asDiagonal() * eig.eigenvectors().adjoint();
}

/// Certified cb-norm upper bound from P, Q with [[P, C], [C^*, Q]]: shift to PSD, then
/// sqrt(lambda_max(Tr_in P) lambda_max(Tr_in Q)).
inline double choi_upper(const CMatrix& choi, CMatrix p, CMatrix q, Eigen::Index a, Eigen::Index c,
                         Eigen::Index b, Eigen::Index e) {
  const Eigen::Index n1 = p.rows(), n2 = q.rows();
  CMatrix big(n1 + n2, n1 + n2);
  big << hermitian_part(p), choi, choi.adjoint(), hermitian_part(q);
  const double lmin = lambda_min(big);
  const double scale = std::max(1.0, big.cwiseAbs().maxCoeff());
  const double shift = (lmin < 0 ? -lmin : 0.0) + 1e-13 * scale;
  p = hermitian_part(p) + shift * identity(n1);
  q = hermitian_part(q) + shift * identity(n2);
  const double tp = lambda_max(partial_trace_first(p, a, c));
  const double tq = lambda_max(partial_trace_first(q, b, e));
  return std::sqrt(std::max(0.0, tp) * std::max(0.0, tq));
}

struct FixedPoint {
  double lower = 0.0;
  double upper = INFINITY;
  CMatrix s1, s2;
};

/// Alternating update of the dual densities: K = (I ⊗ sqrt s1) C (I ⊗ sqrt s2) = U S V^*,
/// s1 <- Tr_in(U S U^*) / tr S. tr S is a lower bound at every step; the primal pair
/// P = (I ⊗ s1^{-1/2}) U S U^* (I ⊗ s1^{-1/2}) (and Q likewise) gives the upper bound.
inline FixedPoint choi_fixed_point(const CMatrix& choi, Eigen::Index a, Eigen::Index c, Eigen::Index b,
                                   Eigen::Index e, CMatrix s1, CMatrix s2, int iterations, double tol) {
  FixedPoint fp;
  const double mix = 1e-9;
  for (int it = 0; it < iterations; ++it) {
    s1 = (1 - mix) * density(s1, c) + mix * identity(c) / double(c);
    s2 = (1 - mix) * density(s2, e) + mix * identity(e) / double(e);
    const CMatrix r1 = psd_sqrt(s1), r2 = psd_sqrt(s2);
    const CMatrix k = kron(identity(a), r1) * choi * kron(identity(b), r2);
    Eigen::BDCSVD<CMatrix> svd(k, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector s = svd.singularValues();
    const double trs = s.sum();
    if (trs > fp.lower) {
      fp.lower = trs;
      fp.s1 = s1;
      fp.s2 = s2;
    }
    if (!(trs > 0)) break;
    const CMatrix usu = svd.matrixU() * s.cast<cplx>().asDiagonal() * svd.matrixU().adjoint();
    const CMatrix vsv = svd.matrixV() * s.cast<cplx>().asDiagonal() * svd.matrixV().adjoint();
    if (it % 10 == 0 || it + 1 == iterations) {
      const auto e1 = hermitian_eig(s1), e2 = hermitian_eig(s2);
      const CMatrix i1 = e1.eigenvectors() * e1.eigenvalues().cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal() *
                         e1.eigenvectors().adjoint();
      const CMatrix i2 = e2.eigenvectors() * e2.eigenvalues().cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal() *
                         e2.eigenvectors().adjoint();
      const CMatrix j1 = kron(identity(a), i1), j2 = kron(identity(b), i2);
      const double up = choi_upper(choi, j1 * usu * j1, j2 * vsv * j2, a, c, b, e);
      if (std::isfinite(up)) fp.upper = std::min(fp.upper, up);
      if (fp.upper - fp.lower <= 0.25 * tol * fp.upper) break;
    }
    s1 = partial_trace_first(usu, a, c) / trs;
    s2 = partial_trace_first(vsv, b, e) / trs;
  }
  return fp;
}

struct ChoiSdpResult {
  double upper = INFINITY;
  double lower = 0.0;
  SDPStatus status = SDPStatus::MaxIter;
  CMatrix s1, s2;
};

/// min t s.t. [[P, C], [C^*, Q]] ⪰ 0, Tr_in P ⪯ t I_c, Tr_in Q ⪯ t I_e.
inline ChoiSdpResult choi_sdp(const ChoiForm& f, double tol) {
  const auto a = f.in_rows(), b = f.in_cols(), c = f.out_rows(), e = f.out_cols();
  const CMatrix choi = f.choi();
  const bool real = is_real(choi);
  const Eigen::Index n1 = a * c, n2 = b * e;

  SDPProblem sdp;
  const auto b0 = sdp.add_block(n1 + n2);
  const auto b1 = sdp.add_block(c);
  const auto b2 = sdp.add_block(e);
  CMatrix c0 = CMatrix::Zero(n1 + n2, n1 + n2);
  c0.topRightCorner(n1, n2) = choi;
  c0.bottomLeftCorner(n2, n1) = choi.adjoint();
  sdp.set_cost(b0, c0);

  struct Param {
    int side;  // 0: P, 1: Q
    Eigen::Index r, s;
    cplx val;
  };
  std::vector<Param> params;
  auto add_side = [&](int side, Eigen::Index outer, Eigen::Index inner, std::size_t trace_block,
                      Eigen::Index offset) {
    for (const auto& [r, sv] : hermitian_basis(outer * inner, real)) {
      const auto [s, val] = sv;
      std::vector<SDPEntry> es{{b0, offset + r, offset + s, -val}};
      if (r / inner == s / inner) es.push_back({trace_block, r % inner, s % inner, val});
      sdp.add_constraint(std::move(es), 0.0);
      params.push_back({side, r, s, val});
    }
  };
  add_side(0, a, c, b1, 0);
  add_side(1, b, e, b2, n1);
  std::vector<SDPEntry> et;
  for (Eigen::Index l = 0; l < c; ++l) et.push_back({b1, l, l, -1.0});
  for (Eigen::Index l = 0; l < e; ++l) et.push_back({b2, l, l, -1.0});
  sdp.add_constraint(std::move(et), -1.0);

  const auto sol = solve(sdp, tol);
  ChoiSdpResult out;
  out.status = sol.status;
  if (sol.status == SDPStatus::Infeasible) return out;
  CMatrix p = CMatrix::Zero(n1, n1), q = CMatrix::Zero(n2, n2);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& pr = params[k];
    CMatrix& m = pr.side == 0 ? p : q;
    m(pr.r, pr.s) += sol.y(k) * pr.val;
    if (pr.r != pr.s) m(pr.s, pr.r) += sol.y(k) * std::conj(pr.val);
  }
  if (all_finite(p) && all_finite(q)) out.upper = choi_upper(choi, p, q, a, c, b, e);
  out.s1 = density(sol.X[b1], c);
  out.s2 = density(sol.X[b2], e);
  const CMatrix k = kron(identity(a), psd_sqrt(out.s1)) * choi * kron(identity(b), psd_sqrt(out.s2));
  out.lower = trace_norm(k);
  return out;
}

inline Eigen::Index ladder_level(const ChoiForm& f) {
  return std::min(std::max(f.in_rows(), f.in_cols()), std::max(f.out_rows(), f.out_cols()));
}

}  // namespace detail

/// ||Phi||_cb bracket. Cheap certified bounds first (amplification witness,
/// Kraus-family factorization); the Choi SDP, or the density fixed point for large
/// maps, only when those do not meet within tol.
inline NormBracket cb_norm(const ChoiForm& f, double tol = 1e-6, const NormOptions& opt = {}) {
  require(tol > 0 && std::isfinite(tol), ErrorKind::InvalidArgument, "tolerance must be positive");
  NormBracket br;
  br.tolerance = tol;
  if (f.natural().norm() == 0.0) {
    br.lower = br.upper = 0.0;
    br.lower_method = br.upper_method = "zero map";
    return br;
  }
  const auto [bs, as] = f.kraus_pairs();
  br.upper = detail::kraus_bound(bs, as);
  br.upper_method = "Kraus family";
  const auto amp = amplification_search(f, detail::ladder_level(f), opt.restarts, opt.seed, opt.max_sweeps,
                                        br.upper * (1.0 - 0.5 * tol));
  br.lower = amp.value;
  br.lower_method = "amplification level " + std::to_string(amp.level);
  if (br.closed()) return br;

  const auto a = f.in_rows(), b = f.in_cols(), c = f.out_rows(), e = f.out_cols();
  const CMatrix choi = f.choi();
  CMatrix s1 = identity(c) / double(c), s2 = identity(e) / double(e);
  SDPStatus status = SDPStatus::Optimal;
  if (std::max(a * c, b * e) <= opt.choi_sdp_limit) {
    const auto res = detail::choi_sdp(f, std::min(opt.sdp_tol, tol * 1e-2));
    status = res.status;
    br.lower_upper(res.upper, "Choi SDP (shifted primal)");
    br.raise_lower(res.lower, "Choi SDP dual densities");
    if (res.s1.size() > 0) {
      s1 = res.s1;
      s2 = res.s2;
    }
    if (br.closed()) return br;
  }
  const auto fp = detail::choi_fixed_point(choi, a, c, b, e, s1, s2, opt.fixed_point_iterations, tol);
  br.raise_lower(fp.lower, "density fixed point");
  br.lower_upper(fp.upper, "density fixed point");
  if (!br.closed() && status != SDPStatus::Optimal)
    throw SolverFailure("cb-norm SDP ended with status " + std::string(to_string(status)), br);
  return br;
}

// ---------------------------------------------------------------------------
// Schur multipliers.

struct SchurNormResult {
  NormBracket bracket;
  CMatrix a;  // rows a_i
  CMatrix b;  // rows b_j, phi(i,j) = <a_i, b_j> = sum_k a_ik conj(b_jk)
};

namespace detail {

/// max_i ||a_i|| max_j ||b_j|| plus the Schur norm bound of the factorization residual.
inline double gram_upper(const CMatrix& phi, const CMatrix& a, const CMatrix& b) {
  const CMatrix resid = phi - a * b.adjoint();
  double rmax = 0.0;
  for (Eigen::Index i = 0; i < resid.rows(); ++i) rmax = std::max(rmax, resid.row(i).norm());
  return a.rowwise().norm().maxCoeff() * b.rowwise().norm().maxCoeff() + rmax;
}

inline double schur_dual_value(const CMatrix& phi, const RVector& alpha, const RVector& beta) {
  return trace_norm(alpha.cwiseSqrt().cast<cplx>().asDiagonal() * phi * beta.cwiseSqrt().cast<cplx>().asDiagonal());
}

struct SchurAscent {
  double lower = 0.0;
  double upper = INFINITY;
  CMatrix a, b;
};

inline SchurAscent schur_dual_ascent(const CMatrix& phi, RVector alpha, RVector beta, int iterations,
                                     double tol) {
  SchurAscent out;
  const auto d1 = phi.rows(), d2 = phi.cols();
  const double mix = 1e-12;
  for (int it = 0; it < iterations; ++it) {
    alpha = (1 - mix) * alpha / alpha.sum() + RVector::Constant(d1, mix / double(d1));
    beta = (1 - mix) * beta / beta.sum() + RVector::Constant(d2, mix / double(d2));
    const CMatrix da = alpha.cwiseSqrt().cast<cplx>().asDiagonal();
    const CMatrix db = beta.cwiseSqrt().cast<cplx>().asDiagonal();
    const CMatrix k = da * phi * db;
    Eigen::BDCSVD<CMatrix> svd(k, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector s = svd.singularValues();
    const double trs = s.sum();
    out.lower = std::max(out.lower, trs);
    if (!(trs > 0)) break;
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > 1e-14 * s(0)) ++rank;
    const CMatrix u = svd.matrixU().leftCols(rank), v = svd.matrixV().leftCols(rank);
    const RVector sr = s.head(rank);
    if (it % 5 == 0 || it + 1 == iterations) {
      const CMatrix isq = sr.cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal();
      const CMatrix a = phi * db * v * isq;
      const CMatrix b = phi.adjoint() * da * u * isq;
      const double up = gram_upper(phi, a, b);
      if (up < out.upper) {
        out.upper = up;
        out.a = a;
        out.b = b;
      }
      if (out.upper - out.lower <= 0.25 * tol * out.upper) break;
    }
    const CMatrix us = u * sr.cast<cplx>().asDiagonal();
    const CMatrix vs = v * sr.cast<cplx>().asDiagonal();
    for (Eigen::Index i = 0; i < d1; ++i) alpha(i) = (us.row(i).dot(u.row(i))).real() / trs;
    for (Eigen::Index j = 0; j < d2; ++j) beta(j) = (vs.row(j).dot(v.row(j))).real() / trs;
    alpha = alpha.cwiseMax(0.0);
    beta = beta.cwiseMax(0.0);
  }
  return out;
}

struct SchurIpm {
  double lower = 0.0;
  double upper = INFINITY;
  CMatrix a, b;
  RVector alpha, beta;
  SDPStatus status = SDPStatus::MaxIter;
};

/// min t s.t. [[P, phi], [phi^*, Q]] ⪰ 0, P_ii <= t, Q_jj <= t.
inline SchurIpm schur_ipm(const CMatrix& phi, double tol) {
  const auto d1 = phi.rows(), d2 = phi.cols();
  const bool real = is_real(phi);
  SDPProblem sdp;
  const auto b0 = sdp.add_block(d1 + d2);
  CMatrix c0 = CMatrix::Zero(d1 + d2, d1 + d2);
  c0.topRightCorner(d1, d2) = phi;
  c0.bottomLeftCorner(d2, d1) = phi.adjoint();
  sdp.set_cost(b0, c0);
  std::vector<std::size_t> diag_blocks;
  for (Eigen::Index i = 0; i < d1 + d2; ++i) diag_blocks.push_back(sdp.add_block(1));

  struct Param {
    Eigen::Index r, s;
    cplx val;
  };
  std::vector<Param> params;
  auto add_side = [&](Eigen::Index n, Eigen::Index offset) {
    for (const auto& [r, sv] : hermitian_basis(n, real)) {
      const auto [s, val] = sv;
      std::vector<SDPEntry> es{{b0, offset + r, offset + s, -val}};
      if (r == s) es.push_back({diag_blocks[offset + r], 0, 0, val});
      sdp.add_constraint(std::move(es), 0.0);
      params.push_back({offset + r, offset + s, val});
    }
  };
  add_side(d1, 0);
  add_side(d2, d1);
  std::vector<SDPEntry> et;
  for (auto blk : diag_blocks) et.push_back({blk, 0, 0, -1.0});
  sdp.add_constraint(std::move(et), -1.0);

  const auto sol = solve(sdp, tol);
  SchurIpm out;
  out.status = sol.status;
  if (sol.status == SDPStatus::Infeasible) return out;
  CMatrix m = c0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& pr = params[k];
    m(pr.r, pr.s) += sol.y(k) * pr.val;
    if (pr.r != pr.s) m(pr.s, pr.r) += sol.y(k) * std::conj(pr.val);
  }
  out.alpha = RVector(d1);
  out.beta = RVector(d2);
  for (Eigen::Index i = 0; i < d1; ++i) out.alpha(i) = std::max(0.0, sol.X[diag_blocks[i]](0, 0).real());
  for (Eigen::Index j = 0; j < d2; ++j) out.beta(j) = std::max(0.0, sol.X[diag_blocks[d1 + j]](0, 0).real());
  if (out.alpha.sum() > 0 && out.beta.sum() > 0)
    out.lower = schur_dual_value(phi, out.alpha / out.alpha.sum(), out.beta / out.beta.sum());
  if (!all_finite(m)) return out;
  // Gram vectors of the PSD-shifted block matrix
  m = hermitian_part(m);
  const auto eig = hermitian_eig(m);
  const double lmin = eig.eigenvalues()(0);
  const double shift = (lmin < 0 ? -lmin : 0.0);
  const RVector ev = (eig.eigenvalues().array() + shift).cwiseMax(0.0).sqrt();
  const CMatrix g = eig.eigenvectors() * ev.cast<cplx>().asDiagonal();
  out.a = g.topRows(d1);
  out.b = g.bottomRows(d2);
  out.upper = gram_upper(phi, out.a, out.b);
  return out;
}

}  // namespace detail

/// ||S_phi|| (= ||S_phi||_cb) for a two-index symbol, with Gram vectors a_i, b_j.
inline SchurNormResult schur_norm(const CTensor& symbol, double tol = 1e-6, const NormOptions& opt = {}) {
  require(symbol.rank() == 2, ErrorKind::DimensionMismatch, "schur_norm needs a 2-index symbol");
  require(tol > 0 && std::isfinite(tol), ErrorKind::InvalidArgument, "tolerance must be positive");
  const CMatrix raw = symbol.to_matrix();
  const auto d1 = raw.rows(), d2 = raw.cols();
  SchurNormResult res;
  res.bracket.tolerance = tol;
  const double scale = raw.cwiseAbs().maxCoeff();
  if (scale == 0.0) {
    res.bracket.lower = res.bracket.upper = 0.0;
    res.bracket.lower_method = res.bracket.upper_method = "zero symbol";
    res.a = CMatrix::Zero(d1, 1);
    res.b = CMatrix::Zero(d2, 1);
    return res;
  }
  const CMatrix phi = raw / scale;
  NormBracket& br = res.bracket;
  br.lower = 1.0;
  br.lower_method = "largest entry";
  // trivial factorization a_i = row i, b_j = e_j
  {
    const CMatrix a = phi;
    const CMatrix b = identity(d2);
    br.upper = detail::gram_upper(phi, a, b);
    br.upper_method = "row factorization";
    res.a = a;
    res.b = b;
  }
  {
    const CMatrix a = identity(d1);
    const CMatrix b = phi.adjoint();
    const double up = detail::gram_upper(phi, a, b);
    if (up < br.upper) {
      br.upper = up;
      br.upper_method = "column factorization";
      res.a = a;
      res.b = b;
    }
  }

  RVector alpha = RVector::Constant(d1, 1.0 / double(d1));
  RVector beta = RVector::Constant(d2, 1.0 / double(d2));
  SDPStatus status = SDPStatus::Optimal;
  if (!br.closed() && d1 + d2 <= opt.schur_ipm_limit) {
    const auto ipm = detail::schur_ipm(phi, std::min(opt.sdp_tol, tol * 1e-2));
    status = ipm.status;
    if (ipm.upper < br.upper) {
      br.upper = ipm.upper;
      br.upper_method = "factorization SDP (Gram vectors)";
      res.a = ipm.a;
      res.b = ipm.b;
    }
    br.raise_lower(ipm.lower, "factorization SDP dual weights");
    if (ipm.alpha.size() > 0 && ipm.alpha.sum() > 0 && ipm.beta.sum() > 0) {
      alpha = ipm.alpha;
      beta = ipm.beta;
    }
  }
  if (!br.closed()) {
    const auto asc = detail::schur_dual_ascent(phi, alpha, beta, opt.fixed_point_iterations, tol);
    br.raise_lower(asc.lower, "dual weight ascent");
    if (asc.upper < br.upper) {
      br.upper = asc.upper;
      br.upper_method = "dual weight ascent (Gram vectors)";
      res.a = asc.a;
      res.b = asc.b;
    }
  }
  br.lower *= scale;
  br.upper *= scale;
  res.a *= std::sqrt(scale);
  res.b *= std::sqrt(scale);
  if (!br.closed() && status != SDPStatus::Optimal)
    throw SolverFailure("Schur-norm SDP ended with status " + std::string(to_string(status)), br);
  return res;
}

// ---------------------------------------------------------------------------
// Haagerup norm and multiplier norm.

namespace detail {

/// Minimal-length representation u = sum_k v_k ⊗ w_k from the realigned SVD.
inline std::pair<std::vector<CMatrix>, std::vector<CMatrix>> minimal_two_leg(const ElementaryTensorSum& u) {
  const auto d1 = u.dims()[0], d2 = u.dims()[1];
  CMatrix r = CMatrix::Zero(d1 * d1, d2 * d2);
  for (const auto& t : u.terms()) r += vec_rm(t[0]) * vec_rm(t[1]).transpose();
  std::vector<CMatrix> vs, ws;
  if (r.norm() == 0.0) return {vs, ws};
  Eigen::BDCSVD<CMatrix> svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector s = svd.singularValues();
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s(k) <= 1e-13 * s(0)) break;
    const double w = std::sqrt(s(k));
    vs.push_back(w * unvec_rm(svd.matrixU().col(k), d1, d1));
    ws.push_back(w * unvec_rm(svd.matrixV().col(k).conjugate(), d2, d2));
  }
  return {vs, ws};
}

inline CMatrix block_row(const std::vector<CMatrix>& vs) {
  CMatrix out(vs[0].rows(), vs[0].cols() * Eigen::Index(vs.size()));
  for (std::size_t k = 0; k < vs.size(); ++k) out.middleCols(Eigen::Index(k) * vs[0].cols(), vs[0].cols()) = vs[k];
  return out;
}

inline CMatrix block_col(const std::vector<CMatrix>& ws) {
  CMatrix out(ws[0].rows() * Eigen::Index(ws.size()), ws[0].cols());
  for (std::size_t k = 0; k < ws.size(); ++k) out.middleRows(Eigen::Index(k) * ws[0].rows(), ws[0].rows()) = ws[k];
  return out;
}

/// Verifies that the factorization still represents u (guards the upper bound).
inline bool represents(const BlockFactorization& f, const CMatrix& kron_target) {
  const CMatrix got = f.expand().kron_matrix();
  return (got - kron_target).norm() <= 1e-9 * std::max(1.0, kron_target.norm());
}

}  // namespace detail

/// ||u||_h for a two-leg tensor: the infimum over factorizations (minimal representation,
/// GL-reparametrized through the interface SDP) against the amplification lower bound
/// of X -> sum v X w.
inline NormBracket haagerup_norm(const ElementaryTensorSum& u, double tol = 1e-6, const NormOptions& opt = {}) {
  require(u.arity() == 2, ErrorKind::InvalidArgument, "haagerup_norm takes a two-leg tensor");
  require(tol > 0 && std::isfinite(tol), ErrorKind::InvalidArgument, "tolerance must be positive");
  NormBracket br;
  br.tolerance = tol;
  const auto [vs, ws] = detail::minimal_two_leg(u);
  if (vs.empty()) {
    br.lower = br.upper = 0.0;
    br.lower_method = br.upper_method = "zero tensor";
    return br;
  }
  const auto d1 = u.dims()[0], d2 = u.dims()[1];
  CMatrix v = detail::block_row(vs);
  CMatrix w = detail::block_col(ws);
  br.upper = op_norm(v) * op_norm(w);
  br.upper_method = "minimal representation";

  const ChoiForm g0 = ChoiForm::from_elementary_operator(u);
  const auto amp = amplification_search(g0, detail::ladder_level(g0), opt.restarts, opt.seed, opt.max_sweeps,
                                        br.upper * (1.0 - 0.5 * tol));
  br.lower = amp.value;
  br.lower_method = "amplification level " + std::to_string(amp.level);
  if (br.closed()) return br;

  const auto j = static_cast<Eigen::Index>(vs.size());
  if (detail::rebalance_interface(v, w, j, d1, d2, std::min(opt.sdp_tol, tol * 1e-2))) {
    const BlockFactorization f({d1, d2}, {v, w});
    if (detail::represents(f, u.kron_matrix())) br.lower_upper(f.norm_bound(), "interface SDP factorization");
  }
  if (br.closed()) return br;
  const auto cb = cb_norm(g0, tol, opt);
  br.raise_lower(cb.lower, cb.lower_method);
  br.lower_upper(cb.upper, cb.upper_method);
  return br;
}

/// ||phi||_m. Two legs: ||Phi_phi||_cb via cb_norm. Three or more: bracket from an
/// alternating interface rescaling of the symbol's block factorization (upper) and
/// multilinear amplification (lower).
inline NormBracket multiplier_norm(const ElementaryTensorSum& phi, double tol = 1e-6,
                                   const NormOptions& opt = {}) {
  require(tol > 0 && std::isfinite(tol), ErrorKind::InvalidArgument, "tolerance must be positive");
  if (phi.arity() == 2) {
    if (phi.empty()) {
      NormBracket br;
      br.tolerance = tol;
      br.lower = br.upper = 0.0;
      br.lower_method = br.upper_method = "zero multiplier";
      return br;
    }
    return cb_norm(ChoiForm::from_multiplier(phi), tol, opt);
  }
  NormBracket br;
  br.tolerance = tol;
  const std::size_t n = phi.arity();
  const auto u = symbol_of(phi).tensor;
  const CMatrix target = phi.empty() ? CMatrix() : u.kron_matrix();
  if (phi.empty() || target.norm() == 0.0) {
    br.lower = br.upper = 0.0;
    br.lower_method = br.upper_method = "zero multiplier";
    return br;
  }
  BlockFactorization f = to_factorization(u);
  br.upper = f.norm_bound();
  br.upper_method = "canonical factorization";

  const Eigen::Index m = std::min(phi.dims().front(), phi.dims().back());
  br.lower = cb_lower_amplification(phi, m, opt.restarts, opt.seed);
  br.lower_method = "multilinear amplification level " + std::to_string(m);
  if (br.closed()) return br;

  std::vector<CMatrix> factors = f.factors();
  const auto& dims = u.dims();
  const double sdp_tol = std::min(opt.sdp_tol, tol * 1e-2);
  for (int sweep = 0; sweep < opt.als_sweeps; ++sweep) {
    const double before = br.upper;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const Eigen::Index j = factors[i].cols() / dims[i];
      CMatrix v = factors[i], w = factors[i + 1];
      if (!detail::rebalance_interface(v, w, j, dims[i], dims[i + 1], sdp_tol)) continue;
      auto trial = factors;
      trial[i] = v;
      trial[i + 1] = w;
      const BlockFactorization cand(dims, trial);
      if (cand.norm_bound() < br.upper && detail::represents(cand, target)) {
        factors = std::move(trial);
        br.lower_upper(cand.norm_bound(), "interface-rescaled factorization");
      }
    }
    if (br.closed() || before - br.upper <= 1e-7 * before) break;
  }
  return br;
}

}  // namespace opmult
