#include <gtest/gtest.h>

#include "opmult/sdp.hpp"

using namespace opmult;

namespace {

double residual(const SDPProblem& p, const SDPSolution& s) {
  double r = 0.0;
  for (std::size_t i = 0; i < p.num_constraints(); ++i) {
    cplx v = 0.0;
    for (std::size_t b = 0; b < p.dims().size(); ++b) v += (p.constraint_block(i, b) * s.X[b]).trace();
    r = std::max(r, std::abs(v - p.rhs()[i]));
  }
  return r;
}

// max <C, X> over density matrices, written as min <-C, X>.
SDPProblem max_eig_problem(const CMatrix& c) {
  SDPProblem p;
  const auto b = p.add_block(c.rows());
  p.set_cost(b, -c);
  std::vector<SDPEntry> tr;
  for (Eigen::Index i = 0; i < c.rows(); ++i) tr.push_back({b, i, i, 1.0});
  p.add_constraint(tr, 1.0);
  return p;
}

}  // namespace

TEST(Solve, TraceWithFixedCorner) {
  SDPProblem p;
  const auto b = p.add_block(3);
  p.set_cost(b, identity(3));
  p.add_constraint({{b, 0, 0, 1.0}}, 1.0);
  const auto s = solve(p, 1e-8);
  ASSERT_EQ(s.status, SDPStatus::Optimal);
  EXPECT_NEAR(s.primal_objective, 1.0, 1e-7);
  EXPECT_NEAR(s.dual_objective, 1.0, 1e-7);
  EXPECT_LT(residual(p, s), 1e-8);
}

TEST(Solve, MaxEigenvalueRealAndComplex) {
  Rng rng(1);
  for (int trial = 0; trial < 6; ++trial) {
    CMatrix g = random_gaussian(5, 5, rng);
    if (trial % 2 == 0) g = g.real().cast<cplx>();
    const CMatrix c = hermitian_part(g);
    const auto s = solve(max_eig_problem(c), 1e-9);
    ASSERT_EQ(s.status, SDPStatus::Optimal);
    EXPECT_NEAR(-s.primal_objective, lambda_max(c), 1e-7 * (1 + std::abs(lambda_max(c))));
    EXPECT_NEAR(-s.dual_objective, lambda_max(c), 1e-7 * (1 + std::abs(lambda_max(c))));
    EXPECT_GE(lambda_min(s.X[0]), -1e-9);
    EXPECT_GE(lambda_min(s.Z[0]), -1e-7);
  }
}

TEST(Solve, InfeasibleCorner) {
  SDPProblem p;
  const auto b = p.add_block(2);
  p.set_cost(b, identity(2));
  p.add_constraint({{b, 0, 0, 1.0}}, -1.0);
  EXPECT_EQ(solve(p, 1e-8).status, SDPStatus::Infeasible);
}

TEST(Solve, DualUnbounded) {
  // min -X_11 subject to X_22 = 1 has no lower bound.
  SDPProblem p;
  const auto b = p.add_block(2);
  CMatrix c = CMatrix::Zero(2, 2);
  c(0, 0) = -1.0;
  p.set_cost(b, c);
  p.add_constraint({{b, 1, 1, 1.0}}, 1.0);
  EXPECT_EQ(solve(p, 1e-8).status, SDPStatus::Infeasible);
}

TEST(Solve, TraceBoundSlack) {
  // max <C, X> with tr X <= 2 and X_11 = 0.5 on a 3x3 block.
  Rng rng(2);
  const CMatrix c = hermitian_part(random_gaussian(3, 3, rng)) + 5.0 * identity(3);
  SDPProblem p;
  const auto b = p.add_block(3);
  p.set_cost(b, -c);
  p.add_trace_bound(b, 2.0);
  const auto s = solve(p, 1e-9);
  ASSERT_EQ(s.status, SDPStatus::Optimal);
  EXPECT_NEAR(-s.primal_objective, 2.0 * lambda_max(c), 1e-6);
  EXPECT_NEAR(s.X[b].trace().real(), 2.0, 1e-7);
}

TEST(Solve, ComplexOffDiagonalConstraint) {
  // Operator norm of a complex 2x3 matrix K as min t s.t. [[tI, K],[K*, tI]] ⪰ 0 (dual form):
  // variable y_1 = -t, cost block [[0, K],[K*, 0]], constraint matrix -I.
  Rng rng(3);
  const CMatrix k = random_gaussian(2, 3, rng);
  SDPProblem p;
  const auto b = p.add_block(5);
  CMatrix c = CMatrix::Zero(5, 5);
  c.topRightCorner(2, 3) = k;
  c.bottomLeftCorner(3, 2) = k.adjoint();
  p.set_cost(b, c);
  std::vector<SDPEntry> es;
  for (Eigen::Index i = 0; i < 5; ++i) es.push_back({b, i, i, -1.0});
  p.add_constraint(es, -1.0);
  const auto s = solve(p, 1e-10);
  ASSERT_EQ(s.status, SDPStatus::Optimal);
  EXPECT_NEAR(s.y(0), op_norm(k), 1e-7);
}

TEST(Properties, WeakDualityAndFeasibility) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 4;
    SDPProblem p;
    const auto b = p.add_block(n);
    const CMatrix g = random_gaussian(n, n, rng);
    p.set_cost(b, g * g.adjoint() + identity(n));
    // random Hermitian equality constraints satisfied by X = I
    for (int i = 0; i < 3; ++i) {
      const CMatrix h = hermitian_part(random_gaussian(n, n, rng));
      std::vector<SDPEntry> es;
      for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index cc = r; cc < n; ++cc) es.push_back({b, r, cc, h(r, cc)});
      p.add_constraint(es, h.trace().real());
    }
    const auto s = solve(p, 1e-8);
    ASSERT_EQ(s.status, SDPStatus::Optimal);
    EXPECT_GE(s.primal_objective - s.dual_objective, -s.gap * (1 + std::abs(s.primal_objective)) - 1e-9);
    EXPECT_LT(residual(p, s), 1e-8);
    EXPECT_GE(lambda_min(s.X[b]), -1e-9);
  }
}

TEST(SDPProblem, Validation) {
  SDPProblem p;
  const auto b = p.add_block(2);
  EXPECT_THROW(p.add_constraint({{b, 2, 0, 1.0}}, 0.0), Error);
  EXPECT_THROW(p.add_constraint({{b, 1, 1, cplx(0.0, 1.0)}}, 0.0), Error);
  CMatrix c = CMatrix::Zero(2, 2);
  c(0, 1) = 1.0;
  EXPECT_THROW(p.set_cost(b, c), Error);
  EXPECT_THROW(p.add_block(0), Error);
}
