#include <gtest/gtest.h>

#include "opmult/saar.hpp"
#include "opmult/sdp.hpp"

using namespace opmult;

namespace {

NormOptions quick() {
  NormOptions o;
  o.restarts = 4;
  return o;
}

// min ||c|| over Hermitian c subject to c ⊗ 1 ⪰ w (c acting inside the k x k blocks),
// as the LMI: max -t s.t. tI - c ⪰ 0, c ⊗ 1 - w ⪰ 0.
double min_dominating_norm(const CMatrix& w, Eigen::Index k) {
  SDPProblem p;
  const auto b0 = p.add_block(k);
  const auto b1 = p.add_block(k * k);
  CMatrix c1 = -hermitian_part(w);
  p.set_cost(b1, c1);
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index s = r; s < k; ++s)
      for (cplx val : {cplx(1.0), cplx(0.0, 1.0)}) {
        if (r == s && val.imag() != 0.0) continue;
        std::vector<SDPEntry> es{{b0, r, s, val}};
        for (Eigen::Index l = 0; l < k; ++l) es.push_back({b1, l * k + r, l * k + s, -val});
        p.add_constraint(es, 0.0);
      }
  std::vector<SDPEntry> et;
  for (Eigen::Index l = 0; l < k; ++l) et.push_back({b0, l, l, -1.0});
  p.add_constraint(et, -1.0);
  const auto sol = solve(p, 1e-10);
  EXPECT_EQ(sol.status, SDPStatus::Optimal);
  return -sol.dual_objective;
}

}  // namespace

TEST(BuildSaar, KTwo) {
  const auto s = build_saar(2, 1e-6, quick());
  ASSERT_EQ(s.blocks.size(), 2u);
  EXPECT_NEAR(s.blocks[0].level1_norm, 1.0, 1e-12);
  EXPECT_NEAR(s.blocks[1].level1_norm, 0.5, 1e-12);
  for (const auto& b : s.blocks) {
    EXPECT_NEAR(b.cb.lower, 1.0, 1e-6);
    EXPECT_NEAR(b.cb.upper, 1.0, 1e-6);
  }
}

TEST(BuildSaar, BlockDataAndHsSums) {
  const auto s = build_saar(6, 1e-6, quick());
  double partial = 0.0;
  for (const auto& b : s.blocks) {
    EXPECT_NEAR(b.level1_norm, 1.0 / double(b.k), 1e-12);
    EXPECT_NEAR(b.hs_norm, 1.0 / double(b.k), 1e-12);
    EXPECT_NEAR(b.scale * double(b.k), 1.0, 1e-15);
    EXPECT_LE(b.cb.width(), 1e-3);
    EXPECT_TRUE(b.cb.contains(1.0, 1e-9));
    partial += 1.0 / double(b.k * b.k);
  }
  EXPECT_NEAR(s.hs_partial_sum(), partial, 1e-12);
  EXPECT_LT(s.hs_partial_sum(), 1.65);
}

TEST(BuildSaar, RejectsRange) {
  EXPECT_THROW(build_saar(1), Error);
  EXPECT_THROW(build_saar(13), Error);
}

TEST(SaarApply, Examples) {
  const auto s = build_saar(4, 1e-6, quick());
  const Eigen::Index n = s.dim();
  ASSERT_EQ(n, 10);

  CMatrix eye = identity(n);
  CMatrix expect = CMatrix::Zero(n, n);
  for (Eigen::Index k = 1; k <= 4; ++k) expect.block(s.offset(k), s.offset(k), k, k) = identity(k) / double(k);
  EXPECT_LT((saar_apply(s, eye) - expect).norm(), 1e-15);

  Rng rng(1);
  CMatrix off = random_gaussian(n, n, rng);
  for (Eigen::Index k = 1; k <= 4; ++k) off.block(s.offset(k), s.offset(k), k, k).setZero();
  EXPECT_EQ(saar_apply(s, off).norm(), 0.0);

  const CMatrix x = random_gaussian(n, n, rng);
  const CMatrix y = saar_apply(s, x);
  for (Eigen::Index k = 1; k <= 4; ++k) {
    const auto o = s.offset(k);
    const CMatrix want = x.block(o, o, k, k).transpose() / double(k);
    EXPECT_LT((y.block(o, o, k, k) - want).norm(), 1e-14);
  }
  EXPECT_THROW(saar_apply(s, identity(9)), Error);
}

TEST(SaarApply, MultiplierReproducesMap) {
  const auto s = build_saar(3, 1e-6, quick());
  const auto phi = saar_multiplier(s);
  Rng rng(2);
  const CMatrix x = random_gaussian(s.dim(), s.dim(), rng);
  // kernels are stored transposed relative to operator form
  EXPECT_LT((phi_apply(phi, {{CMatrix(x.transpose())}}) - saar_apply(s, x)).norm(), 1e-13);
  EXPECT_LT((ChoiForm::from_multiplier(phi).apply(x) - saar_apply(s, x)).norm(), 1e-13);
}

TEST(SaarProfile, TailFormula) {
  const auto s5 = build_saar(5, 1e-6, quick());
  for (const auto& [n, tail] : saar_compactness_profile(s5)) {
    double direct = 0.0;
    for (Eigen::Index k = n + 1; k <= 5; ++k) direct = std::max(direct, 1.0 / double(k));
    EXPECT_NEAR(tail, direct, 1e-12);
  }
  const auto s8 = build_saar(8, 1e-6, quick());
  const auto prof = saar_compactness_profile(s8);
  EXPECT_NEAR(prof[0].second, 1.0, 1e-12);
  EXPECT_NEAR(prof[3].second, 0.25, 1e-12);
  EXPECT_EQ(prof[8].second, 0.0);
  for (std::size_t i = 1; i < prof.size(); ++i) EXPECT_LT(prof[i].second, prof[i - 1].second);
}

TEST(SaarObstruction, Certificates) {
  const auto s = build_saar(6, 1e-6, quick());
  const auto c1 = saar_obstruction(s, 1);
  EXPECT_NEAR(c1.witness(0, 0).real(), 1.0, 0.0);
  EXPECT_NEAR(c1.bound, 1.0, 1e-12);
  for (Eigen::Index k = 1; k <= 6; ++k) {
    const auto c = saar_obstruction(s, k);
    EXPECT_LE(c.witness_norm, 1.0 + 1e-12);
    EXPECT_TRUE(is_hermitian(c.witness));
    EXPECT_NEAR(c.achieved, 1.0, 1e-10);
    EXPECT_GE(c.bound, 1.0 - 1e-9);
    EXPECT_LE(c.achieved, 1.0 + 1e-9);
  }
  try {
    saar_obstruction(s, 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BlockOutOfRange);
  }
}

TEST(SaarObstruction, MinimalDominatingNormOracle) {
  const auto s = build_saar(4, 1e-6, quick());
  for (Eigen::Index k = 1; k <= 4; ++k) {
    const auto c = saar_obstruction(s, k);
    const CMatrix w = detail::ChoiAmplifier(saar_block_map(k, s.scale(k)), k).apply(c.witness);
    EXPECT_NEAR(min_dominating_norm(w, k), c.bound, 1e-6);
  }
}

TEST(SaarObstruction, DecayingCandidatesFail) {
  const auto s = build_saar(5, 1e-6, quick());
  std::vector<CMatrix> flat, decaying, dented;
  for (Eigen::Index k = 1; k <= 5; ++k) {
    flat.push_back(identity(k));
    decaying.push_back(identity(k) / double(k));
    dented.push_back(k == 3 ? CMatrix(0.99 * identity(k)) : identity(k));
  }
  EXPECT_TRUE(saar_dominates(s, flat));
  EXPECT_FALSE(saar_dominates(s, decaying));
  EXPECT_FALSE(saar_dominates(s, dented));
}
