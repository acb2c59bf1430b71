#include <gtest/gtest.h>

#include "opmult/tensorrep.hpp"

using namespace opmult;

namespace {

ElementaryTensorSum random_sum(const Dims& dims, int terms, Rng& rng) {
  ElementaryTensorSum phi(dims);
  for (int r = 0; r < terms; ++r) {
    ElementaryTensorSum::Term t;
    for (auto d : dims) t.push_back(random_gaussian(d, d, rng));
    phi.add_term(std::move(t));
  }
  return phi;
}

VectorFunctional random_functional(Eigen::Index d, Rng& rng) {
  return {random_gaussian(d, 1, rng), random_gaussian(d, 1, rng)};
}

CVector kron_vec(const CVector& a, const CVector& b) {
  CVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

bool same_terms(const ElementaryTensorSum& a, const ElementaryTensorSum& b) {
  if (a.dims() != b.dims() || a.num_terms() != b.num_terms()) return false;
  for (std::size_t r = 0; r < a.num_terms(); ++r)
    for (std::size_t i = 0; i < a.arity(); ++i)
      if (a.terms()[r][i] != b.terms()[r][i]) return false;
  return true;
}

}  // namespace

TEST(Opposite, MatrixUnit) {
  EXPECT_EQ(opposite(matrix_unit(2, 2, 0, 1)), matrix_unit(2, 2, 1, 0));
}

TEST(Opposite, SymmetricAndInvolution) {
  Rng rng(1);
  const CMatrix g = random_gaussian(3, 3, rng);
  const CMatrix s = g + g.transpose();
  EXPECT_EQ(opposite(s), s);
  EXPECT_EQ(opposite(opposite(g)), g);
  EXPECT_THROW(opposite(CMatrix::Zero(2, 3)), Error);
}

TEST(SymbolOf, TwoLegs) {
  Rng rng(2);
  const CMatrix a = random_gaussian(2, 2, rng);
  const CMatrix b = random_gaussian(3, 3, rng);
  const auto u = symbol_of(ElementaryTensorSum({2, 3}, {{a, b}}));
  ASSERT_EQ(u.tensor.dims(), (Dims{3, 2}));
  EXPECT_EQ(u.tensor.terms()[0][0], b);
  EXPECT_EQ(u.tensor.terms()[0][1], CMatrix(a.transpose()));
  EXPECT_EQ(u.opposite_slots, (std::vector<bool>{false, true}));
}

TEST(SymbolOf, ThreeLegs) {
  Rng rng(3);
  const CMatrix a = random_gaussian(2, 2, rng);
  const CMatrix b = random_gaussian(3, 3, rng);
  const CMatrix c = random_gaussian(2, 2, rng);
  const auto u = symbol_of(ElementaryTensorSum({2, 3, 2}, {{a, b, c}}));
  EXPECT_EQ(u.tensor.terms()[0][0], c);
  EXPECT_EQ(u.tensor.terms()[0][1], CMatrix(b.transpose()));
  EXPECT_EQ(u.tensor.terms()[0][2], a);
}

TEST(SymbolOf, Linear) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto phi = random_sum({2, 3}, 2, rng);
    const auto psi = random_sum({2, 3}, 2, rng);
    const CMatrix lhs = symbol_of(phi + psi).tensor.kron_matrix();
    const CMatrix rhs = symbol_of(phi).tensor.kron_matrix() + symbol_of(psi).tensor.kron_matrix();
    EXPECT_LT((lhs - rhs).norm(), 1e-12 * (1 + lhs.norm()));
  }
}

TEST(SymbolOf, RoundTripThroughInverse) {
  Rng rng(5);
  for (std::size_t n = 2; n <= 5; ++n) {
    Dims dims;
    for (std::size_t i = 0; i < n; ++i) dims.push_back(2 + Eigen::Index(i % 2));
    const auto phi = random_sum(dims, 2, rng);
    EXPECT_TRUE(same_terms(from_symbol(symbol_of(phi)), phi));
  }
}

// (phi(xi_1 ⊗ ... ⊗ xi_n), eta_1 ⊗ ... ⊗ eta_n) recovered from the symbol with
// conjugated functionals on the opposite slots.
TEST(SymbolOf, PairingMatchesKroneckerMatrixElement) {
  Rng rng(6);
  for (std::size_t n = 2; n <= 4; ++n) {
    Dims dims;
    for (std::size_t i = 0; i < n; ++i) dims.push_back(2 + Eigen::Index(i % 2));
    for (int trial = 0; trial < 5; ++trial) {
      const auto phi = random_sum(dims, 3, rng);
      std::vector<VectorFunctional> fs;
      for (auto d : dims) fs.push_back(random_functional(d, rng));
      CVector xi = fs[0].xi, eta = fs[0].eta;
      for (std::size_t i = 1; i < n; ++i) {
        xi = kron_vec(xi, fs[i].xi);
        eta = kron_vec(eta, fs[i].eta);
      }
      const cplx expect = eta.dot(phi.kron_matrix() * xi);

      const auto u = symbol_of(phi);
      std::vector<VectorFunctional> gs(n);
      for (std::size_t s = 0; s < n; ++s) {
        const auto& f = fs[n - 1 - s];
        gs[s] = u.opposite_slots[s] ? f.conjugated() : f;
      }
      const cplx got = eh_pair(u.tensor, gs);
      EXPECT_LT(std::abs(got - expect), 1e-10 * (1 + std::abs(expect)));
    }
  }
}

TEST(EhPair, ElementaryAndZero) {
  Rng rng(7);
  const CMatrix a = random_gaussian(2, 2, rng);
  const CMatrix b = random_gaussian(3, 3, rng);
  const auto f1 = random_functional(2, rng);
  const auto f2 = random_functional(3, rng);
  const cplx expect = f1.eta.dot(a * f1.xi) * f2.eta.dot(b * f2.xi);
  EXPECT_LT(std::abs(eh_pair(ElementaryTensorSum({2, 3}, {{a, b}}), {f1, f2}) - expect), 1e-12);
  EXPECT_EQ(eh_pair(ElementaryTensorSum::zero({2, 3}), {f1, f2}), cplx(0.0));
  EXPECT_THROW(eh_pair(ElementaryTensorSum::zero({2, 3}), {f1}), Error);
  EXPECT_THROW(eh_pair(ElementaryTensorSum::zero({2, 3}), {f2, f1}), Error);
}

TEST(EhPair, MatchesKroneckerExpansion) {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto u = random_sum({2, 3}, 2, rng);
    const auto f1 = random_functional(2, rng);
    const auto f2 = random_functional(3, rng);
    const cplx expect = kron_vec(f1.eta, f2.eta).dot(u.kron_matrix() * kron_vec(f1.xi, f2.xi));
    EXPECT_LT(std::abs(eh_pair(u, {f1, f2}) - expect), 1e-12 * (1 + std::abs(expect)));
  }
}

TEST(Slices, SingleTermAndZeroFunctional) {
  Rng rng(9);
  const CMatrix v = random_gaussian(2, 2, rng);
  const CMatrix w = random_gaussian(3, 3, rng);
  const ElementaryTensorSum u({2, 3}, {{v, w}});
  const auto om = random_functional(2, rng);
  EXPECT_LT((left_slice(u, om) - om(v) * w).norm(), 1e-13);
  EXPECT_EQ(left_slice(u, VectorFunctional::zero(2)), CMatrix::Zero(3, 3));
  EXPECT_THROW(left_slice(u, VectorFunctional::zero(3)), Error);
}

TEST(Slices, Duality) {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = random_sum({2, 3}, 3, rng);
    const auto w1 = random_functional(2, rng);
    const auto w2 = random_functional(3, rng);
    const cplx mid = eh_pair(u, {w1, w2});
    EXPECT_LT(std::abs(w1(right_slice(u, w2)) - mid), 1e-12 * (1 + std::abs(mid)));
    EXPECT_LT(std::abs(w2(left_slice(u, w1)) - mid), 1e-12 * (1 + std::abs(mid)));
  }
}

TEST(Factorization, SingleTerm) {
  Rng rng(11);
  const CMatrix a = random_gaussian(2, 2, rng);
  const CMatrix b = random_gaussian(2, 2, rng);
  const auto f = to_factorization(ElementaryTensorSum({2, 2}, {{a, b}}));
  EXPECT_EQ(f.factor(0), a);
  EXPECT_EQ(f.factor(1), b);
  EXPECT_NEAR(f.norm_bound(), op_norm(a) * op_norm(b), 1e-12);
}

TEST(Factorization, PairingRoundTrip) {
  Rng rng(12);
  for (std::size_t n = 2; n <= 4; ++n) {
    Dims dims;
    for (std::size_t i = 0; i < n; ++i) dims.push_back(3 - Eigen::Index(i % 2));
    for (int trial = 0; trial < 5; ++trial) {
      const auto phi = random_sum(dims, 3, rng);
      const auto f = to_factorization(phi);
      std::vector<VectorFunctional> fs;
      for (auto d : dims) fs.push_back(random_functional(d, rng));
      const cplx a = eh_pair(phi, fs);
      EXPECT_LT(std::abs(factorization_pair(f, fs) - a), 1e-12 * (1 + std::abs(a)));
      const cplx b = eh_pair(f.expand(), fs);
      EXPECT_LT(std::abs(b - a), 1e-12 * (1 + std::abs(a)));
    }
  }
}

TEST(Factorization, RejectsMismatchedBlocks) {
  EXPECT_THROW(BlockFactorization({2, 2}, {CMatrix::Zero(2, 4), CMatrix::Zero(2, 2)}), Error);
  EXPECT_THROW(BlockFactorization({2, 2}, {CMatrix::Zero(4, 2), CMatrix::Zero(2, 2)}), Error);
}

TEST(ElementaryTensorSum, RejectsBadFactors) {
  ElementaryTensorSum phi({2, 3});
  EXPECT_THROW(phi.add_term({identity(2), identity(2)}), Error);
  CMatrix bad = identity(3);
  bad(0, 0) = cplx(INFINITY, 0.0);
  EXPECT_THROW(phi.add_term({identity(2), bad}), Error);
  EXPECT_THROW(ElementaryTensorSum({3}), Error);
}

TEST(Transposition, SymbolIsDiagonalUnitSum) {
  const auto phi = transposition_multiplier(3);
  const auto u = symbol_of(phi);
  // sum e_ij ⊗ e_ij as a Kronecker matrix
  CMatrix expect = CMatrix::Zero(9, 9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) expect += kron(matrix_unit(3, 3, i, j), matrix_unit(3, 3, i, j));
  EXPECT_LT((u.tensor.kron_matrix() - expect).norm(), 1e-14);
}
