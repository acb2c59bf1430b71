#pragma once

// Small dense SDP solver.
//
//   (P)  minimize  <C, X>            s.t. <A_i, X> = b_i,  X ⪰ 0
//   (D)  maximize  b^T y             s.t. Z = C - sum_i y_i A_i ⪰ 0
//
// X, Z, C and the A_i are block-diagonal with complex Hermitian blocks. Internally
// each block is real symmetric: blocks whose data is real are kept at their size,
// the others go through the embedding H -> [[Re H, -Im H], [Im H, Re H]].
// Infeasible-start HKM primal-dual path following with Mehrotra's
// predictor-corrector; the Schur complement is assembled from sparse A_i.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "opmult/errors.hpp"
#include "opmult/linalg.hpp"

namespace opmult {

struct SDPEntry {
  std::size_t block;
  Eigen::Index row;
  Eigen::Index col;
  cplx value;  // also placed at (col,row) conjugated when row != col
};

class SDPProblem {
 public:
  std::size_t add_block(Eigen::Index dim) {
    require(dim >= 1, ErrorKind::InvalidArgument, "SDP block dimension must be positive");
    dims_.push_back(dim);
    cost_.push_back(CMatrix::Zero(dim, dim));
    return dims_.size() - 1;
  }

  void set_cost(std::size_t block, const CMatrix& c) {
    require(block < dims_.size(), ErrorKind::InvalidArgument, "cost block index");
    require(c.rows() == dims_[block] && c.cols() == dims_[block], ErrorKind::DimensionMismatch,
            "cost block size");
    require(is_hermitian(c, 1e-12), ErrorKind::NonHermitian, "cost block is not Hermitian");
    check_finite(c, "cost block");
    cost_[block] = hermitian_part(c);
  }

  std::size_t add_constraint(std::vector<SDPEntry> entries, double rhs) {
    for (const auto& e : entries) {
      require(e.block < dims_.size(), ErrorKind::InvalidArgument, "constraint block index");
      require(e.row >= 0 && e.col >= 0 && e.row < dims_[e.block] && e.col < dims_[e.block],
              ErrorKind::DimensionMismatch, "constraint entry outside its block");
      require(e.row != e.col || std::abs(e.value.imag()) == 0.0, ErrorKind::NonHermitian,
              "diagonal constraint entry must be real");
      require(std::isfinite(e.value.real()) && std::isfinite(e.value.imag()), ErrorKind::NonFinite,
              "constraint entry is NaN or infinite");
    }
    require(std::isfinite(rhs), ErrorKind::NonFinite, "constraint rhs is NaN or infinite");
    constraints_.push_back(std::move(entries));
    rhs_.push_back(rhs);
    return constraints_.size() - 1;
  }

  /// tr X_block <= bound, via a 1x1 slack block.
  std::size_t add_trace_bound(std::size_t block, double bound) {
    require(block < dims_.size(), ErrorKind::InvalidArgument, "trace bound block index");
    const std::size_t slack = add_block(1);
    std::vector<SDPEntry> es;
    for (Eigen::Index i = 0; i < dims_[block]; ++i) es.push_back({block, i, i, 1.0});
    es.push_back({slack, 0, 0, 1.0});
    return add_constraint(std::move(es), bound);
  }

  const std::vector<Eigen::Index>& dims() const { return dims_; }
  const std::vector<CMatrix>& cost() const { return cost_; }
  const std::vector<std::vector<SDPEntry>>& constraints() const { return constraints_; }
  const std::vector<double>& rhs() const { return rhs_; }
  std::size_t num_constraints() const { return constraints_.size(); }

  /// Dense Hermitian matrix of A_i restricted to one block.
  CMatrix constraint_block(std::size_t i, std::size_t block) const {
    CMatrix a = CMatrix::Zero(dims_[block], dims_[block]);
    for (const auto& e : constraints_[i]) {
      if (e.block != block) continue;
      a(e.row, e.col) += e.value;
      if (e.row != e.col) a(e.col, e.row) += std::conj(e.value);
    }
    return a;
  }

  /// C - sum_i y_i A_i, blockwise.
  std::vector<CMatrix> slack(const RVector& y) const {
    std::vector<CMatrix> z = cost_;
    for (std::size_t i = 0; i < constraints_.size(); ++i)
      for (const auto& e : constraints_[i]) {
        z[e.block](e.row, e.col) -= y(i) * e.value;
        if (e.row != e.col) z[e.block](e.col, e.row) -= y(i) * std::conj(e.value);
      }
    return z;
  }

 private:
  std::vector<Eigen::Index> dims_;
  std::vector<CMatrix> cost_;
  std::vector<std::vector<SDPEntry>> constraints_;
  std::vector<double> rhs_;
};

enum class SDPStatus { Optimal, MaxIter, Infeasible };

inline const char* to_string(SDPStatus s) {
  switch (s) {
    case SDPStatus::Optimal: return "Optimal";
    case SDPStatus::MaxIter: return "MaxIter";
    case SDPStatus::Infeasible: return "Infeasible";
  }
  return "?";
}

struct SDPSolution {
  SDPStatus status = SDPStatus::MaxIter;
  std::vector<CMatrix> X;
  std::vector<CMatrix> Z;
  RVector y;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = INFINITY;  // relative duality gap
  double primal_residual = INFINITY;
  double dual_residual = INFINITY;
  int iterations = 0;
};

struct SDPOptions {
  int max_iterations = 500;
  double feasibility_tol = 1e-9;
  int stall_window = 25;
};

namespace detail {

struct RealEntry {
  Eigen::Index con;
  Eigen::Index row;
  Eigen::Index col;
  double value;
};

struct RealSDP {
  std::vector<Eigen::Index> dims;
  std::vector<RMatrix> cost;
  std::vector<std::vector<RealEntry>> entries;  // per block; row <= col after canonicalization
  RVector b;
  Eigen::Index m = 0;
};

// <A_i, K> for every i (K need not be symmetric).
inline RVector apply_a(const RealSDP& p, const std::vector<RMatrix>& k) {
  RVector out = RVector::Zero(p.m);
  for (std::size_t b = 0; b < p.dims.size(); ++b)
    for (const auto& e : p.entries[b]) {
      const double s = (e.row == e.col) ? k[b](e.row, e.row) : k[b](e.row, e.col) + k[b](e.col, e.row);
      out(e.con) += e.value * s;
    }
  return out;
}

inline std::vector<RMatrix> apply_at(const RealSDP& p, const RVector& y) {
  std::vector<RMatrix> out;
  for (auto d : p.dims) out.push_back(RMatrix::Zero(d, d));
  for (std::size_t b = 0; b < p.dims.size(); ++b)
    for (const auto& e : p.entries[b]) {
      out[b](e.row, e.col) += y(e.con) * e.value;
      if (e.row != e.col) out[b](e.col, e.row) += y(e.con) * e.value;
    }
  return out;
}

inline double inner(const std::vector<RMatrix>& a, const std::vector<RMatrix>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].cwiseProduct(b[i]).sum();
  return s;
}

inline double frob(const std::vector<RMatrix>& a) { return std::sqrt(inner(a, a)); }

// Largest alpha in (0, cap] with x + alpha*dx ⪰ 0, given the Cholesky factor of x.
inline double max_step(const Eigen::LLT<RMatrix>& chol, const RMatrix& dx) {
  const RMatrix l = chol.matrixL();
  RMatrix w = l.triangularView<Eigen::Lower>().solve(dx);
  w = l.triangularView<Eigen::Lower>().solve(RMatrix(w.transpose()));
  const RMatrix ws = 0.5 * (w + w.transpose());
  const double lmin = Eigen::SelfAdjointEigenSolver<RMatrix>(ws, Eigen::EigenvaluesOnly).eigenvalues()(0);
  return lmin >= 0 ? INFINITY : -1.0 / lmin;
}

inline RMatrix symmetrize(const RMatrix& m) { return 0.5 * (m + m.transpose()); }

// Schur complement M_ij = tr(A_i X A_j Zinv).
inline RMatrix schur_complement(const RealSDP& p, const std::vector<RMatrix>& x,
                                const std::vector<RMatrix>& zinv) {
  RMatrix m = RMatrix::Zero(p.m, p.m);
  for (std::size_t b = 0; b < p.dims.size(); ++b) {
    // directed entries: (con, r, c, v) meaning v at (r, c)
    std::vector<RealEntry> dir;
    dir.reserve(p.entries[b].size() * 2);
    for (const auto& e : p.entries[b]) {
      dir.push_back(e);
      if (e.row != e.col) dir.push_back({e.con, e.col, e.row, e.value});
    }
    const RMatrix& xb = x[b];
    const RMatrix& zb = zinv[b];
    for (const auto& e : dir)
      for (const auto& f : dir) {
        if (f.con < e.con) continue;
        m(e.con, f.con) += e.value * f.value * xb(e.col, f.row) * zb(f.col, e.row);
      }
  }
  for (Eigen::Index i = 0; i < p.m; ++i)
    for (Eigen::Index j = 0; j < i; ++j) m(i, j) = m(j, i);
  return m;
}

inline bool cholesky_all(const std::vector<RMatrix>& mats, std::vector<Eigen::LLT<RMatrix>>& out) {
  out.clear();
  for (const auto& m : mats) {
    out.emplace_back(m);
    if (out.back().info() != Eigen::Success) return false;
  }
  return true;
}

struct RealResult {
  SDPStatus status = SDPStatus::MaxIter;
  std::vector<RMatrix> x, z;
  RVector y;
  double pobj = 0, dobj = 0, gap = INFINITY, pres = INFINITY, dres = INFINITY;
  int iters = 0;
};

inline RealResult solve_real(const RealSDP& p, double tol, const SDPOptions& opt) {
  const std::size_t nb = p.dims.size();
  Eigen::Index ntot = 0;
  for (auto d : p.dims) ntot += d;

  // Per-constraint Frobenius norms for the starting point.
  RVector anorm = RVector::Zero(p.m);
  for (std::size_t b = 0; b < nb; ++b)
    for (const auto& e : p.entries[b]) anorm(e.con) += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
  anorm = anorm.cwiseSqrt();
  double cnorm = 0.0;
  for (const auto& c : p.cost) cnorm += c.squaredNorm();
  cnorm = std::sqrt(cnorm);
  const double bnorm = p.b.norm();

  double xi = std::max(10.0, std::sqrt(double(ntot)));
  double eta = std::max(10.0, std::sqrt(double(ntot)));
  for (Eigen::Index i = 0; i < p.m; ++i) {
    xi = std::max(xi, double(ntot) * (1.0 + std::abs(p.b(i))) / (1.0 + anorm(i)));
    eta = std::max(eta, (1.0 + std::max(anorm(i), cnorm)) / std::sqrt(double(ntot)));
  }

  RealResult r;
  std::vector<RMatrix> x, z;
  for (auto d : p.dims) {
    x.push_back(xi * RMatrix::Identity(d, d));
    z.push_back(eta * RMatrix::Identity(d, d));
  }
  RVector y = RVector::Zero(p.m);

  double best_merit = INFINITY;
  int since_best = 0;
  auto record = [&](SDPStatus s, int it) {
    r.status = s;
    r.x = x;
    r.z = z;
    r.y = y;
    r.iters = it;
  };

  std::vector<Eigen::LLT<RMatrix>> cx, cz;
  for (int it = 0; it <= opt.max_iterations; ++it) {
    const RVector rp = p.b - apply_a(p, x);
    std::vector<RMatrix> rd = p.cost;
    {
      const auto aty = apply_at(p, y);
      for (std::size_t b = 0; b < nb; ++b) rd[b] -= z[b] + aty[b];
    }
    const double pobj = inner(p.cost, x);
    const double dobj = p.b.dot(y);
    const double mu = inner(x, z) / double(ntot);
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double pres = rp.norm() / (1.0 + bnorm);
    const double dres = frob(rd) / (1.0 + cnorm);
    r.pobj = pobj;
    r.dobj = dobj;
    r.gap = gap;
    r.pres = pres;
    r.dres = dres;

    if (gap <= tol && pres <= opt.feasibility_tol && dres <= opt.feasibility_tol) {
      record(SDPStatus::Optimal, it);
      return r;
    }

    // Farkas rays. Primal infeasible: y with -A^T y ⪰ 0 and b^T y > 0 (Z grows along it).
    if (dobj > 1e8 * (1.0 + cnorm)) {
      const RVector yh = y / dobj;
      const auto aty = apply_at(p, yh);
      double lmin = INFINITY;
      for (std::size_t b = 0; b < nb; ++b)
        lmin = std::min(lmin, Eigen::SelfAdjointEigenSolver<RMatrix>(-aty[b], Eigen::EigenvaluesOnly)
                                  .eigenvalues()(0));
      if (lmin > -1e-6) {
        record(SDPStatus::Infeasible, it);
        return r;
      }
    }
    // Dual infeasible: X with A(X) = 0, X ⪰ 0 and <C, X> < 0.
    if (pobj < -1e8 * (1.0 + bnorm)) {
      std::vector<RMatrix> xh = x;
      for (auto& m : xh) m /= -pobj;
      if (apply_a(p, xh).norm() < 1e-6) {
        record(SDPStatus::Infeasible, it);
        return r;
      }
    }

    const double merit = std::max({gap, pres, dres});
    if (merit < best_merit * 0.999) {
      best_merit = merit;
      since_best = 0;
    } else if (++since_best > opt.stall_window) {
      record(SDPStatus::MaxIter, it);
      return r;
    }
    if (it == opt.max_iterations) break;

    if (!cholesky_all(x, cx) || !cholesky_all(z, cz)) {
      record(SDPStatus::MaxIter, it);
      return r;
    }
    std::vector<RMatrix> zinv;
    for (std::size_t b = 0; b < nb; ++b) zinv.push_back(cz[b].solve(RMatrix::Identity(p.dims[b], p.dims[b])));

    RMatrix m = schur_complement(p, x, zinv);
    Eigen::LLT<RMatrix> cm(m);
    double reg = 0.0;
    const double mscale = std::max(1e-300, m.diagonal().cwiseAbs().maxCoeff());
    while (cm.info() != Eigen::Success && reg < 1e-2 * mscale) {
      reg = (reg == 0.0) ? 1e-14 * mscale : reg * 100.0;
      cm.compute(m + reg * RMatrix::Identity(p.m, p.m));
    }
    if (cm.info() != Eigen::Success) {
      record(SDPStatus::MaxIter, it);
      return r;
    }

    // X Rd Zinv is shared by predictor and corrector.
    std::vector<RMatrix> xrdz(nb);
    for (std::size_t b = 0; b < nb; ++b) xrdz[b] = x[b] * rd[b] * zinv[b];
    const RVector a_xrdz = apply_a(p, xrdz);

    // rc: the (nonsymmetric) complementarity right-hand side. dX = rc Zinv - X dZ Zinv.
    auto direction = [&](const std::vector<RMatrix>& rc, std::vector<RMatrix>& dx,
                         std::vector<RMatrix>& dz, RVector& dy) {
      std::vector<RMatrix> rcz(nb);
      for (std::size_t b = 0; b < nb; ++b) rcz[b] = rc[b] * zinv[b];
      const RVector rhs = rp - apply_a(p, rcz) + a_xrdz;
      dy = cm.solve(rhs);
      const auto atdy = apply_at(p, dy);
      dz.resize(nb);
      dx.resize(nb);
      for (std::size_t b = 0; b < nb; ++b) {
        dz[b] = rd[b] - atdy[b];
        dx[b] = symmetrize(rcz[b] - x[b] * dz[b] * zinv[b]);
      }
    };
    auto steps = [&](const std::vector<RMatrix>& dx, const std::vector<RMatrix>& dz) {
      double ap = INFINITY, ad = INFINITY;
      for (std::size_t b = 0; b < nb; ++b) {
        ap = std::min(ap, max_step(cx[b], dx[b]));
        ad = std::min(ad, max_step(cz[b], dz[b]));
      }
      return std::make_pair(ap, ad);
    };

    std::vector<RMatrix> rc(nb), dxa, dza;
    RVector dya;
    for (std::size_t b = 0; b < nb; ++b) rc[b] = -x[b] * z[b];
    direction(rc, dxa, dza, dya);
    auto [apa, ada] = steps(dxa, dza);
    apa = std::min(1.0, apa);
    ada = std::min(1.0, ada);
    double mu_aff = 0.0;
    for (std::size_t b = 0; b < nb; ++b)
      mu_aff += (x[b] + apa * dxa[b]).cwiseProduct(z[b] + ada * dza[b]).sum();
    mu_aff /= double(ntot);
    const double ratio = std::clamp(mu_aff / mu, 0.0, 1.0);
    const double sigma = std::clamp(ratio * ratio * ratio, 0.0, 1.0);

    for (std::size_t b = 0; b < nb; ++b)
      rc[b] = sigma * mu * RMatrix::Identity(p.dims[b], p.dims[b]) - x[b] * z[b] - dxa[b] * dza[b];
    std::vector<RMatrix> dx, dz;
    RVector dy;
    direction(rc, dx, dz, dy);
    auto [ap, ad] = steps(dx, dz);
    const double gamma = 0.95;
    ap = std::min(1.0, gamma * ap);
    ad = std::min(1.0, gamma * ad);
    for (std::size_t b = 0; b < nb; ++b) {
      x[b] = symmetrize(x[b] + ap * dx[b]);
      z[b] = symmetrize(z[b] + ad * dz[b]);
    }
    y += ad * dy;
  }
  record(SDPStatus::MaxIter, opt.max_iterations);
  return r;
}

}  // namespace detail

inline SDPSolution solve(const SDPProblem& p, double tol = 1e-8, SDPOptions opt = {}) {
  require(tol > 0 && std::isfinite(tol), ErrorKind::InvalidArgument, "SDP tolerance must be positive");
  const std::size_t nb = p.dims().size();
  require(nb > 0, ErrorKind::InvalidArgument, "SDP has no blocks");

  // A block stays real when its cost and every constraint entry touching it are real.
  std::vector<bool> real(nb, true);
  for (std::size_t b = 0; b < nb; ++b)
    if (p.cost()[b].imag().cwiseAbs().maxCoeff() > 0) real[b] = false;
  for (const auto& con : p.constraints())
    for (const auto& e : con)
      if (e.value.imag() != 0.0) real[e.block] = false;

  detail::RealSDP rs;
  rs.m = static_cast<Eigen::Index>(p.num_constraints());
  rs.b = RVector(rs.m);
  for (Eigen::Index i = 0; i < rs.m; ++i) rs.b(i) = p.rhs()[i];
  rs.entries.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const auto n = p.dims()[b];
    const CMatrix& c = p.cost()[b];
    if (real[b]) {
      rs.dims.push_back(n);
      rs.cost.push_back(c.real());
    } else {
      rs.dims.push_back(2 * n);
      RMatrix e(2 * n, 2 * n);
      e << c.real(), -c.imag(), c.imag(), c.real();
      rs.cost.push_back(e);
    }
  }
  // Embedded blocks carry twice the trace pairing; constraints touching them are
  // expressed with halved coefficients so every constraint keeps its rhs.
  for (std::size_t i = 0; i < p.num_constraints(); ++i)
    for (const auto& e : p.constraints()[i]) {
      auto& out = rs.entries[e.block];
      const auto con = static_cast<Eigen::Index>(i);
      auto push = [&](Eigen::Index r, Eigen::Index c, double v) {
        if (v == 0.0) return;
        if (r > c) std::swap(r, c);
        out.push_back({con, r, c, v});
      };
      if (real[e.block]) {
        push(e.row, e.col, e.value.real());
      } else {
        const auto n = p.dims()[e.block];
        const double re = 0.5 * e.value.real();
        const double im = 0.5 * e.value.imag();
        push(e.row, e.col, re);
        push(e.row + n, e.col + n, re);
        if (e.row != e.col) {
          push(e.row, e.col + n, -im);
          push(e.col, e.row + n, im);
        }
      }
    }
  for (std::size_t b = 0; b < nb; ++b)
    if (!real[b]) rs.cost[b] *= 0.5;
  // Merge duplicate positions per constraint.
  for (auto& list : rs.entries) {
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
      return std::tie(a.con, a.row, a.col) < std::tie(b.con, b.row, b.col);
    });
    std::vector<detail::RealEntry> merged;
    for (const auto& e : list) {
      if (!merged.empty() && merged.back().con == e.con && merged.back().row == e.row &&
          merged.back().col == e.col)
        merged.back().value += e.value;
      else
        merged.push_back(e);
    }
    list.swap(merged);
  }

  const auto rr = detail::solve_real(rs, tol, opt);

  SDPSolution s;
  s.status = rr.status;
  s.y = rr.y;
  s.iterations = rr.iters;
  s.primal_objective = rr.pobj;
  s.dual_objective = rr.dobj;
  s.gap = rr.gap;
  s.primal_residual = rr.pres;
  s.dual_residual = rr.dres;
  for (std::size_t b = 0; b < nb; ++b) {
    const auto n = p.dims()[b];
    if (real[b]) {
      s.X.push_back(rr.x[b].cast<cplx>());
    } else {
      // average over the embedding's symmetry to read off X
      const RMatrix& t = rr.x[b];
      const RMatrix re = t.topLeftCorner(n, n) + t.bottomRightCorner(n, n);
      const RMatrix im = t.bottomLeftCorner(n, n) - t.topRightCorner(n, n);
      CMatrix xc(n, n);
      xc.real() = 0.5 * re;
      xc.imag() = 0.5 * im;
      s.X.push_back(hermitian_part(xc));
    }
  }
  s.Z = p.slack(s.y);
  return s;
}

}  // namespace opmult
