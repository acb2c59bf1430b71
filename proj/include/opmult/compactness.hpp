#pragma once

// Finite-dimensional compactness diagnostics: corner compressions, tail norms
// along a truncation schedule, and the level-m / level-1 witness ratio.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "opmult/errors.hpp"
#include "opmult/linalg.hpp"
#include "opmult/norms.hpp"
#include "opmult/parallel.hpp"
#include "opmult/tensorrep.hpp"

namespace opmult {

class TruncationSchedule {
 public:
  TruncationSchedule() = default;
  explicit TruncationSchedule(std::vector<Eigen::Index> cutoffs) : cutoffs_(std::move(cutoffs)) {
    require(!cutoffs_.empty(), ErrorKind::InvalidArgument, "truncation schedule is empty");
    require(cutoffs_.front() >= 0, ErrorKind::InvalidArgument, "cutoffs must be nonnegative");
    for (std::size_t i = 1; i < cutoffs_.size(); ++i)
      require(cutoffs_[i] > cutoffs_[i - 1], ErrorKind::InvalidArgument,
              "cutoffs must be strictly increasing (" + std::to_string(cutoffs_[i - 1]) + " then " +
                  std::to_string(cutoffs_[i]) + ")");
  }

  /// 1, 2, ..., n
  static TruncationSchedule range(Eigen::Index first, Eigen::Index last) {
    std::vector<Eigen::Index> c;
    for (Eigen::Index r = first; r <= last; ++r) c.push_back(r);
    return TruncationSchedule(std::move(c));
  }

  void check_ambient(Eigen::Index ambient) const {
    require(!cutoffs_.empty() && cutoffs_.back() <= ambient, ErrorKind::InvalidArgument,
            "schedule cutoff " + std::to_string(cutoffs_.empty() ? 0 : cutoffs_.back()) +
                " exceeds the ambient dimension " + std::to_string(ambient));
  }

  const std::vector<Eigen::Index>& cutoffs() const { return cutoffs_; }
  std::size_t size() const { return cutoffs_.size(); }

 private:
  std::vector<Eigen::Index> cutoffs_;
};

enum class Verdict { CompactEvidence, NonCompactEvidence, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::CompactEvidence: return "CompactEvidence";
    case Verdict::NonCompactEvidence: return "NonCompactEvidence";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

struct CompactnessReport {
  TruncationSchedule schedule;
  std::vector<NormBracket> tails;  // ||phi - phi_r|| per cutoff
  Verdict verdict = Verdict::Inconclusive;
  std::optional<double> decay_exponent;  // -d log(upper)/dr
  double tolerance = 1e-6;
};

namespace detail {

inline void check_projection(const CMatrix& p, Eigen::Index d, const char* name) {
  require(p.rows() == d && p.cols() == d, ErrorKind::DimensionMismatch,
          std::string(name) + " must be " + std::to_string(d) + "x" + std::to_string(d));
  check_finite(p, name);
  const double scale = std::max(1.0, p.norm());
  require((p * p - p).norm() <= 1e-12 * scale && (p - p.adjoint()).norm() <= 1e-12 * scale,
          ErrorKind::NotProjection, std::string(name) + " is not an orthogonal projection");
}

inline CMatrix coordinate_projection(Eigen::Index d, Eigen::Index r) {
  CMatrix p = CMatrix::Zero(d, d);
  for (Eigen::Index i = 0; i < std::min(d, r); ++i) p(i, i) = 1.0;
  return p;
}

/// Verdict and decay fit from tail brackets.
inline void classify(CompactnessReport& rep) {
  const auto& tails = rep.tails;
  const double tol = rep.tolerance;
  const double floor = 10.0 * tol;
  if (tails.empty()) return;
  if (tails.back().upper < tol) {
    rep.verdict = Verdict::CompactEvidence;
  } else {
    bool stays = true;
    for (std::size_t i = tails.size() / 2; i < tails.size(); ++i) stays = stays && tails[i].lower > floor;
    rep.verdict = stays ? Verdict::NonCompactEvidence : Verdict::Inconclusive;
  }
  // least squares of log(upper) on the cutoff, over points not yet stalled
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < tails.size(); ++i)
    if (tails[i].upper > floor && std::isfinite(tails[i].upper))
      pts.push_back({double(rep.schedule.cutoffs()[i]), std::log(tails[i].upper)});
  if (pts.size() < 4) return;
  double mx = 0, my = 0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= double(pts.size());
  my /= double(pts.size());
  double sxy = 0, sxx = 0;
  for (const auto& [x, y] : pts) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  if (sxx > 0) rep.decay_exponent = -sxy / sxx;
}

}  // namespace detail

/// psi = (p ⊗ I ⊗ ... ⊗ q) phi termwise, arranged so that
/// phi_apply(psi, Ts) = q phi_apply(phi, Ts) p^T (even n) or q phi_apply(phi, Ts) p (odd n).
inline ElementaryTensorSum corner_multiplier(const ElementaryTensorSum& phi, const CMatrix& p, const CMatrix& q) {
  const std::size_t n = phi.arity();
  detail::check_projection(p, phi.dims().front(), "p");
  detail::check_projection(q, phi.dims().back(), "q");
  ElementaryTensorSum psi(phi.dims());
  for (auto t : phi.terms()) {
    t[0] = (n % 2 == 0) ? CMatrix(p * t[0]) : CMatrix(t[0] * p);
    t[n - 1] = q * t[n - 1];
    psi.add_term(std::move(t));
  }
  return psi;
}

/// phi - corner_multiplier(phi, P_r, Q_r) for the leading-r coordinate projections, split
/// termwise as (a_1 - a_1')⊗...⊗a_n + a_1'⊗...⊗(a_n - q a_n) so that parts already inside
/// the corner vanish exactly.
inline ElementaryTensorSum corner_tail(const ElementaryTensorSum& phi, Eigen::Index r) {
  const std::size_t n = phi.arity();
  const CMatrix p = detail::coordinate_projection(phi.dims().front(), r);
  const CMatrix q = detail::coordinate_projection(phi.dims().back(), r);
  ElementaryTensorSum tail(phi.dims());
  for (const auto& t : phi.terms()) {
    const CMatrix first = (n % 2 == 0) ? CMatrix(p * t[0]) : CMatrix(t[0] * p);
    auto head = t;
    head[0] = t[0] - first;
    if (head[0].cwiseAbs().maxCoeff() > 0.0) tail.add_term(std::move(head));
    auto rest = t;
    rest[0] = first;
    rest[n - 1] = t[n - 1] - q * t[n - 1];
    if (rest[0].cwiseAbs().maxCoeff() > 0.0 && rest[n - 1].cwiseAbs().maxCoeff() > 0.0) tail.add_term(std::move(rest));
  }
  return tail;
}

/// Multiplier-norm brackets of phi - phi_r along the schedule.
inline std::vector<std::pair<Eigen::Index, NormBracket>> finite_rank_approx(const ElementaryTensorSum& phi,
                                                                           const TruncationSchedule& schedule,
                                                                           double tol = 1e-6,
                                                                           const NormOptions& opt = {}) {
  schedule.check_ambient(std::min(phi.dims().front(), phi.dims().back()));
  const auto& cs = schedule.cutoffs();
  const auto brackets = parallel_map<NormBracket>(
      cs.size(), [&](std::size_t i) { return multiplier_norm(corner_tail(phi, cs[i]), tol, opt); });
  std::vector<std::pair<Eigen::Index, NormBracket>> out;
  for (std::size_t i = 0; i < cs.size(); ++i) out.push_back({cs[i], brackets[i]});
  return out;
}

inline CompactnessReport tail_norm_profile(const ElementaryTensorSum& phi, const TruncationSchedule& schedule,
                                           double tol = 1e-6, const NormOptions& opt = {}) {
  CompactnessReport rep;
  rep.schedule = schedule;
  rep.tolerance = tol;
  for (auto& [r, br] : finite_rank_approx(phi, schedule, tol, opt)) rep.tails.push_back(std::move(br));
  detail::classify(rep);
  return rep;
}

/// Two-index Schur symbol with its top-left r x r corner removed.
inline CTensor schur_tail(const CTensor& phi, Eigen::Index r) {
  require(phi.rank() == 2, ErrorKind::DimensionMismatch, "Schur tails need a 2-index symbol");
  return CTensor::generate(phi.dims(), [&](const std::vector<std::size_t>& ix) {
    return (Eigen::Index(ix[0]) < r && Eigen::Index(ix[1]) < r) ? cplx(0.0) : phi.at(ix);
  });
}

/// Schur-multiplier tails ||S_phi - S_{phi_r}||, phi_r the leading r x r corner.
inline CompactnessReport tail_norm_profile(const CTensor& phi, const TruncationSchedule& schedule, double tol = 1e-6,
                                           const NormOptions& opt = {}) {
  require(phi.rank() == 2, ErrorKind::DimensionMismatch, "Schur tail profiles need a 2-index symbol");
  schedule.check_ambient(Eigen::Index(std::min(phi.dims()[0], phi.dims()[1])));
  CompactnessReport rep;
  rep.schedule = schedule;
  rep.tolerance = tol;
  const auto& cs = schedule.cutoffs();
  rep.tails = parallel_map<NormBracket>(
      cs.size(), [&](std::size_t i) { return schur_norm(schur_tail(phi, cs[i]), tol, opt).bracket; });
  detail::classify(rep);
  return rep;
}

/// Level-m over level-1 amplification witness ratio (1 for the zero multiplier).
inline double cc_vs_c_gap_ratio(const ElementaryTensorSum& phi, Eigen::Index m, int restarts = 25,
                                std::uint64_t seed = 0) {
  require(m >= 1, ErrorKind::InvalidArgument, "amplification level must be at least 1");
  const double base = cb_lower_amplification(phi, 1, restarts, seed);
  if (base == 0.0) return 1.0;
  return cb_lower_amplification(phi, m, restarts, seed) / base;
}

}  // namespace opmult
