#pragma once

// Truncated Saar map: x -> ⊕_{k<=K} s_k (q_k x q_k)^T on ⊕ C^k, with s_k = 1/k.
// Each block is completely contractive with level-1 norm 1/k, so the truncations
// are uniformly compact while the block cb norms stay at 1.

#include <cmath>
#include <string>
#include <vector>

#include "opmult/errors.hpp"
#include "opmult/linalg.hpp"
#include "opmult/norms.hpp"
#include "opmult/parallel.hpp"
#include "opmult/tensorrep.hpp"

namespace opmult {

struct SaarBlock {
  Eigen::Index k = 0;
  double scale = 0.0;
  double level1_norm = 0.0;  // ||Phi_k|| from the level-1 amplification witness
  double hs_norm = 0.0;      // ||Phi_k||_2, operator norm on Hilbert-Schmidt space
  NormBracket cb;
};

struct SaarMap {
  Eigen::Index max_block = 0;
  std::string block_map = "transposition";
  std::vector<SaarBlock> blocks;  // k = 1..K

  Eigen::Index dim() const { return max_block * (max_block + 1) / 2; }
  Eigen::Index offset(Eigen::Index k) const { return (k - 1) * k / 2; }
  double scale(Eigen::Index k) const { return blocks[std::size_t(k - 1)].scale; }
  /// sum_{k<=K} (s_k ||tau_k||_2)^2
  double hs_partial_sum() const {
    double s = 0.0;
    for (const auto& b : blocks) s += b.hs_norm * b.hs_norm;
    return s;
  }
};

struct ObstructionCertificate {
  Eigen::Index k = 0;
  CMatrix witness;        // swap matrix in M_k(M_k), Hermitian and unitary
  double witness_norm = 0.0;
  double achieved = 0.0;  // ||Phi_k^(k)(witness)||
  double bound = 0.0;     // lower bound on ||q_k c q_k|| for any c with Phi^(k)(a) <= c ⊗ 1
};

inline ChoiForm saar_block_map(Eigen::Index k, double scale) { return ChoiForm::transposition(k, scale); }

/// Builds the K-block truncation and certifies each block.
inline SaarMap build_saar(Eigen::Index max_block, double tol = 1e-6, const NormOptions& opt = {}) {
  require(max_block >= 2 && max_block <= 12, ErrorKind::InvalidArgument,
          "max block must lie in [2, 12], got " + std::to_string(max_block));
  SaarMap s;
  s.max_block = max_block;
  s.blocks = parallel_map<SaarBlock>(std::size_t(max_block), [&](std::size_t i) {
    SaarBlock b;
    b.k = Eigen::Index(i) + 1;
    b.scale = 1.0 / double(b.k);
    const ChoiForm f = saar_block_map(b.k, b.scale);
    b.level1_norm = cb_lower_amplification(f, 1, std::min(opt.restarts, 4), opt.seed);
    b.hs_norm = op_norm(f.natural());
    b.cb = cb_norm(f, tol, opt);
    return b;
  });
  return s;
}

/// Block-diagonal output ⊕ s_k (q_k x q_k)^T; off-diagonal blocks of x are dropped.
inline CMatrix saar_apply(const SaarMap& s, const CMatrix& x) {
  const Eigen::Index n = s.dim();
  require(x.rows() == n && x.cols() == n, ErrorKind::DimensionMismatch,
          "input must be " + std::to_string(n) + "x" + std::to_string(n));
  check_finite(x, "input");
  CMatrix y = CMatrix::Zero(n, n);
  for (Eigen::Index k = 1; k <= s.max_block; ++k) {
    const auto o = s.offset(k);
    y.block(o, o, k, k) = s.scale(k) * x.block(o, o, k, k).transpose();
  }
  return y;
}

/// (n, ||Phi - p_n Phi(.) p_n||) for n = 0..K: the largest remaining block norm.
inline std::vector<std::pair<Eigen::Index, double>> saar_compactness_profile(const SaarMap& s) {
  std::vector<std::pair<Eigen::Index, double>> out;
  for (Eigen::Index n = 0; n <= s.max_block; ++n) {
    double tail = 0.0;
    for (const auto& b : s.blocks)
      if (b.k > n) tail = std::max(tail, b.level1_norm);
    out.push_back({n, tail});
  }
  return out;
}

/// Swap-matrix certificate for block k.
inline ObstructionCertificate saar_obstruction(const SaarMap& s, Eigen::Index k) {
  require(k >= 1 && k <= s.max_block, ErrorKind::BlockOutOfRange,
          "block " + std::to_string(k) + " outside 1.." + std::to_string(s.max_block));
  ObstructionCertificate c;
  c.k = k;
  c.witness = detail::swap_witness(k, k, k);
  c.witness_norm = op_norm(c.witness);
  const ChoiForm f = saar_block_map(k, s.scale(k));
  const CMatrix out = detail::ChoiAmplifier(f, k).apply(c.witness);
  c.achieved = op_norm(out);
  // c ⊗ 1 ⪰ W gives ||c|| >= <psi, W psi> for every unit psi
  c.bound = lambda_max(hermitian_part(out));
  return c;
}

/// Whether the block-diagonal candidate c = ⊕ c_k satisfies c_k ⊗ 1_k ⪰ Phi_k^(k)(V_k)
/// for every swap witness V_k (up to slack).
inline bool saar_dominates(const SaarMap& s, const std::vector<CMatrix>& c_blocks, double slack = 1e-12) {
  require(c_blocks.size() == std::size_t(s.max_block), ErrorKind::DimensionMismatch, "one candidate block per k");
  for (Eigen::Index k = 1; k <= s.max_block; ++k) {
    const CMatrix& ck = c_blocks[std::size_t(k - 1)];
    require(ck.rows() == k && ck.cols() == k, ErrorKind::DimensionMismatch, "candidate block size");
    const auto cert = saar_obstruction(s, k);
    const CMatrix w = detail::ChoiAmplifier(saar_block_map(k, s.scale(k)), k).apply(cert.witness);
    // c acts inside each k x k block of the amplified output
    if (lambda_min(hermitian_part(kron(identity(k), ck) - w)) < -slack) return false;
  }
  return true;
}

/// Multiplier on M_N ⊗ M_N whose map is saar_apply: sum_k s_k sum_{ij} e_ij ⊗ e_ji on block k.
/// Dense factors; intended for small K.
inline ElementaryTensorSum saar_multiplier(const SaarMap& s) {
  const Eigen::Index n = s.dim();
  ElementaryTensorSum phi({n, n});
  for (Eigen::Index k = 1; k <= s.max_block; ++k) {
    const auto o = s.offset(k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j)
        phi.add_term({s.scale(k) * matrix_unit(n, n, o + i, o + j), matrix_unit(n, n, o + j, o + i)});
  }
  return phi;
}

}  // namespace opmult
