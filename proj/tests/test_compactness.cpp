#include <gtest/gtest.h>

#include "opmult/compactness.hpp"

using namespace opmult;

namespace {

NormOptions quick() {
  NormOptions o;
  o.restarts = 4;
  return o;
}

ElementaryTensorSum random_multiplier(Dims dims, int terms, Rng& rng) {
  ElementaryTensorSum phi(dims);
  for (int r = 0; r < terms; ++r) {
    ElementaryTensorSum::Term t;
    for (auto d : dims) t.push_back(random_gaussian(d, d, rng));
    phi.add_term(std::move(t));
  }
  return phi;
}

CMatrix random_projection(Eigen::Index d, Eigen::Index rank, Rng& rng) {
  const CMatrix u = random_unitary(d, rng).leftCols(rank);
  return u * u.adjoint();
}

KernelTuple random_kernels(const Dims& dims, Rng& rng) {
  KernelTuple ts;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) ts.kernels.push_back(random_gaussian(dims[i], dims[i + 1], rng));
  return ts;
}

CTensor ones(std::size_t d) {
  return CTensor::generate({d, d}, [](const auto&) { return cplx(1.0); });
}

}  // namespace

TEST(CornerMultiplier, IntertwiningBothParities) {
  Rng rng(1);
  for (const Dims& dims : {Dims{3, 4}, Dims{3, 2, 4}, Dims{2, 3, 2, 3}, Dims{3, 2, 2, 2, 4}}) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto phi = random_multiplier(dims, 3, rng);
      const CMatrix p = random_projection(dims.front(), 1 + trial % dims.front(), rng);
      const CMatrix q = random_projection(dims.back(), 1 + trial % dims.back(), rng);
      const auto psi = corner_multiplier(phi, p, q);
      const auto ts = random_kernels(dims, rng);
      const CMatrix base = phi_apply(phi, ts);
      const CMatrix expect = (dims.size() % 2 == 0) ? CMatrix(q * base * p.transpose()) : CMatrix(q * base * p);
      EXPECT_LT((phi_apply(psi, ts) - expect).norm(), 1e-12 * (1 + base.norm())) << dims.size();
    }
  }
}

TEST(CornerMultiplier, Examples) {
  Rng rng(2);
  const auto phi = random_multiplier({3, 3}, 2, rng);
  EXPECT_LT((corner_multiplier(phi, identity(3), identity(3)).kron_matrix() - phi.kron_matrix()).norm(), 1e-14);
  EXPECT_EQ(corner_multiplier(phi, CMatrix::Zero(3, 3), identity(3)).kron_matrix().norm(), 0.0);

  // rank-one p, q on a ⊗ b give (pa) ⊗ (qb), whose map has rank-one outputs
  const CMatrix a = random_gaussian(3, 3, rng), b = random_gaussian(3, 3, rng);
  const CMatrix p = matrix_unit(3, 3, 0, 0), q = matrix_unit(3, 3, 2, 2);
  const auto psi = corner_multiplier(ElementaryTensorSum({3, 3}, {{a, b}}), p, q);
  EXPECT_LT((psi.terms()[0][0] - p * a).norm(), 1e-15);
  EXPECT_LT((psi.terms()[0][1] - q * b).norm(), 1e-15);
  EXPECT_LE(singular_values(phi_apply(psi, random_kernels({3, 3}, rng)))(1), 1e-13);
}

TEST(CornerMultiplier, RejectsNonProjection) {
  const ElementaryTensorSum phi({2, 2}, {{identity(2), identity(2)}});
  CMatrix bad = identity(2);
  bad(0, 1) = 0.5;
  try {
    corner_multiplier(phi, bad, identity(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotProjection);
  }
  EXPECT_THROW(corner_multiplier(phi, 2.0 * identity(2), identity(2)), Error);
  EXPECT_THROW(corner_multiplier(phi, identity(3), identity(2)), Error);
}

TEST(CornerTail, EqualsDifference) {
  Rng rng(9);
  for (const Dims& dims : {Dims{4, 3}, Dims{3, 2, 4}}) {
    const auto phi = random_multiplier(dims, 2, rng);
    for (Eigen::Index r = 0; r <= 3; ++r) {
      const auto corner = corner_multiplier(phi, detail::coordinate_projection(dims.front(), r),
                                            detail::coordinate_projection(dims.back(), r));
      const CMatrix diff = phi.kron_matrix() - corner.kron_matrix();
      const auto tail = corner_tail(phi, r);
      const CMatrix got = tail.empty() ? CMatrix::Zero(diff.rows(), diff.cols()) : tail.kron_matrix();
      EXPECT_LT((got - diff).norm(), 1e-12 * (1 + diff.norm()));
    }
  }
}

TEST(TruncationSchedule, Validation) {
  EXPECT_THROW(TruncationSchedule({3, 2}), Error);
  EXPECT_THROW(TruncationSchedule({1, 1}), Error);
  EXPECT_THROW(TruncationSchedule(std::vector<Eigen::Index>{}), Error);
  EXPECT_THROW(TruncationSchedule::range(1, 5).check_ambient(4), Error);
  EXPECT_NO_THROW(TruncationSchedule::range(1, 4).check_ambient(4));
}

TEST(FiniteRankApprox, SupportedInCornerGivesZero) {
  Rng rng(3);
  // factors supported in the top-left 2 x 2 of M_4
  ElementaryTensorSum phi({4, 4});
  for (int r = 0; r < 2; ++r) {
    CMatrix a = CMatrix::Zero(4, 4), b = CMatrix::Zero(4, 4);
    a.topLeftCorner(2, 2) = random_gaussian(2, 2, rng);
    b.topLeftCorner(2, 2) = random_gaussian(2, 2, rng);
    phi.add_term({a, b});
  }
  const auto errs = finite_rank_approx(phi, TruncationSchedule({0, 1, 2, 3, 4}), 1e-6, quick());
  EXPECT_GT(errs[0].second.lower, 0.0);
  for (std::size_t i = 2; i < errs.size(); ++i) {
    EXPECT_EQ(errs[i].second.upper, 0.0);
    EXPECT_EQ(errs[i].second.lower, 0.0);
  }
}

TEST(FiniteRankApprox, GeometricDiagonalTail) {
  // a = diag(1, 1/2, 1/4, ...), b supported on row 0 so that q_r b = b: the tail is
  // the elementary (a - p_r a) ⊗ b with norm 2^{-r} ||b||
  Rng rng(4);
  const Eigen::Index d = 6;
  CMatrix a = CMatrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) a(i, i) = std::pow(0.5, double(i));
  CMatrix b = CMatrix::Zero(d, d);
  b.row(0) = random_gaussian(1, d, rng);
  const auto errs = finite_rank_approx(ElementaryTensorSum({d, d}, {{a, b}}), TruncationSchedule({1, 2, 3, 4, 5}),
                                       1e-6, quick());
  for (const auto& [r, br] : errs) {
    const double expect = std::pow(0.5, double(r)) * op_norm(b);
    EXPECT_NEAR(br.lower, expect, 1e-6 * expect) << r;
    EXPECT_NEAR(br.upper, expect, 1e-6 * expect) << r;
  }
}

TEST(FiniteRankApprox, NestedScheduleIsMonotone) {
  Rng rng(5);
  const auto phi = random_multiplier({4, 4}, 2, rng);
  const auto errs = finite_rank_approx(phi, TruncationSchedule({0, 1, 2, 3, 4}), 1e-6, quick());
  for (std::size_t i = 1; i < errs.size(); ++i)
    EXPECT_LE(errs[i].second.lower, errs[i - 1].second.upper * (1 + 1e-6));
  EXPECT_EQ(errs.back().second.upper, 0.0);
}

TEST(TailNormProfile, AllOnesIsNonCompact) {
  const auto rep = tail_norm_profile(ones(16), TruncationSchedule({1, 2, 4, 8, 12, 15}), 1e-6);
  EXPECT_EQ(rep.verdict, Verdict::NonCompactEvidence);
  for (const auto& br : rep.tails) {
    EXPECT_GE(br.lower, 0.999);
    EXPECT_LE(br.lower, br.upper * (1 + 1e-9));
  }
}

TEST(TailNormProfile, AllOnesTailOracle) {
  // the tail of the all-ones symbol contains the all-ones block on rows >= r, whose
  // Schur norm is 1, so every tail is at least 1; the L-shaped 0/1 pattern is larger
  const auto rep = tail_norm_profile(ones(6), TruncationSchedule({1, 3, 5}), 1e-7);
  for (std::size_t i = 0; i < rep.tails.size(); ++i) {
    const Eigen::Index r = rep.schedule.cutoffs()[i];
    const auto block = schur_norm(CTensor::generate({std::size_t(6 - r), 6}, [](const auto&) { return cplx(1.0); }), 1e-8);
    EXPECT_NEAR(block.bracket.upper, 1.0, 1e-8);
    EXPECT_GE(rep.tails[i].upper, 1.0 - 1e-8);
  }
  // 2x2 pattern [[0,1],[1,1]]: value 2/sqrt(3) from the dual weights (1/2, 1/2)
  // attains the factorization bound with unit vectors at 60 degrees
  EXPECT_NEAR(rep.tails.back().lower, 2.0 / std::sqrt(3.0), 1e-6);
}

TEST(TailNormProfile, GeometricSymbolIsCompact) {
  const std::size_t d = 24;
  const auto phi = CTensor::generate({d, d}, [](const auto& i) { return cplx(std::pow(2.0, -double(i[0] + i[1]))); });
  const auto rep = tail_norm_profile(phi, TruncationSchedule::range(1, 23), 1e-6);
  EXPECT_EQ(rep.verdict, Verdict::CompactEvidence);
  ASSERT_TRUE(rep.decay_exponent.has_value());
  EXPECT_NEAR(*rep.decay_exponent, std::log(2.0), 0.1 * std::log(2.0));
  // oracle: the tail contains entry 2^{-r} and splits into two rank-one pieces of norm 2^{-r}
  for (std::size_t i = 0; i < rep.tails.size(); ++i) {
    const double t = std::pow(2.0, -double(rep.schedule.cutoffs()[i]));
    EXPECT_GE(rep.tails[i].upper, t * (1 - 1e-9));
    EXPECT_LE(rep.tails[i].lower, 2.0 * t * (1 + 1e-9));
  }
}

TEST(TailNormProfile, FiniteSupportReachesZero) {
  Rng rng(6);
  const CMatrix m = random_gaussian(3, 3, rng);
  const auto phi = CTensor::generate({8, 8}, [&](const auto& i) {
    return (i[0] < 3 && i[1] < 3) ? m(i[0], i[1]) : cplx(0.0);
  });
  const auto rep = tail_norm_profile(phi, TruncationSchedule({1, 2, 3, 4, 6}), 1e-6);
  EXPECT_EQ(rep.verdict, Verdict::CompactEvidence);
  for (std::size_t i = 2; i < rep.tails.size(); ++i) EXPECT_EQ(rep.tails[i].upper, 0.0);

  // the same through the multiplier path
  ElementaryTensorSum ets({4, 4});
  CMatrix a = CMatrix::Zero(4, 4);
  a.topLeftCorner(2, 2) = random_gaussian(2, 2, rng);
  ets.add_term({a, a});
  const auto rep2 = tail_norm_profile(ets, TruncationSchedule({1, 2, 3, 4}), 1e-6, quick());
  EXPECT_EQ(rep2.verdict, Verdict::CompactEvidence);
  EXPECT_EQ(rep2.tails[1].upper, 0.0);
}

TEST(TailNormProfile, RejectsOversizedSchedule) {
  EXPECT_THROW(tail_norm_profile(ones(4), TruncationSchedule({2, 5})), Error);
  EXPECT_THROW(tail_norm_profile(CTensor({2, 2, 2}), TruncationSchedule({1})), Error);
}

TEST(GapRatio, Examples) {
  Rng rng(7);
  // diagonal factors: Schur-type, no gap
  std::normal_distribution<double> nd;
  std::vector<std::vector<cplx>> xs(2, std::vector<cplx>(3)), ys(2, std::vector<cplx>(3));
  for (auto* v : {&xs, &ys})
    for (auto& row : *v)
      for (auto& z : row) z = nd(rng);
  EXPECT_NEAR(cc_vs_c_gap_ratio(diagonal_multiplier(xs, ys), 3, 6), 1.0, 1e-6);
  // scaled transposition: ratio k
  for (Eigen::Index k = 2; k <= 4; ++k)
    EXPECT_NEAR(cc_vs_c_gap_ratio(transposition_multiplier(k, 1.0 / double(k)), k, 4), double(k), 1e-9);
  // elementary
  const ElementaryTensorSum el({3, 2}, {{random_gaussian(3, 3, rng), random_gaussian(2, 2, rng)}});
  EXPECT_NEAR(cc_vs_c_gap_ratio(el, 2, 4), 1.0, 1e-9);
}

TEST(GapRatio, NeverBelowOne) {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto phi = random_multiplier({2, 3}, 1 + trial % 3, rng);
    EXPECT_GE(cc_vs_c_gap_ratio(phi, 2, 3, std::uint64_t(trial)), 1.0 - 1e-9);
  }
  EXPECT_EQ(cc_vs_c_gap_ratio(ElementaryTensorSum::zero({2, 2}), 2), 1.0);
}
