#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bmiopt/errors.hpp"

namespace bmiopt {

/// Number of packed slots of a symmetric matrix of the given order
/// (upper triangle, row-major).
inline int sym_slot_count(int order) { return order * (order + 1) / 2; }

/// Row/column of packed slot s in the upper triangle of an order-k matrix.
inline std::pair<int, int> sym_slot_position(int order, int s) {
  for (int i = 0, base = 0; i < order; ++i) {
    const int row_len = order - i;
    if (s < base + row_len) return {i, i + (s - base)};
    base += row_len;
  }
  throw StructuralError("sym_slot_position: slot out of range");
}

/// Basis matrix of packed slot s: unit diagonal for (i,i), plain duplicated
/// pair e_i e_j^T + e_j e_i^T for i < j (no sqrt-2 scaling).
inline Eigen::MatrixXd sym_basis_matrix(int order, int s) {
  auto [i, j] = sym_slot_position(order, s);
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(order, order);
  E(i, j) = 1.0;
  E(j, i) = 1.0;
  return E;
}

/// Rebuilds the symmetric matrix packed in x[offset .. offset+slots).
inline Eigen::MatrixXd sym_from_slots(int order, const Eigen::VectorXd& x, int offset) {
  Eigen::MatrixXd P(order, order);
  int s = offset;
  for (int i = 0; i < order; ++i)
    for (int j = i; j < order; ++j) {
      P(i, j) = x[s];
      P(j, i) = x[s];
      ++s;
    }
  return P;
}

/// One named slice of the stacked inner variable.
struct InternalVarSpec {
  std::string name;
  enum Kind { kScalar, kSymmetric } kind = kScalar;
  int order = 1;   ///< matrix order for kSymmetric, ignored for scalars
  int offset = 0;  ///< first packed slot

  int slot_count() const { return kind == kSymmetric ? sym_slot_count(order) : 1; }
};

/// coeff multiplies packed slot `index` of the inner variable.
struct AffineTerm {
  int index = 0;
  Eigen::MatrixXd coeff;
};

/// One symmetric block constant + sum of slot terms.
struct AffineBlock {
  Eigen::MatrixXd constant;
  std::vector<AffineTerm> terms;

  int order() const { return static_cast<int>(constant.rows()); }
};

/// Symmetric block-diagonal matrix map x -> diag_b(F0_b + sum_i x_i F_ib).
/// This is the fixed-outer-point slice of a bilinear constraint: affine in the
/// stacked inner variable x described by `structure`.
struct AffineMatrixFunction {
  std::vector<AffineBlock> blocks;
  int internal_dim = 0;
  std::vector<InternalVarSpec> structure;

  /// Checks shape consistency and symmetrizes all matrices in place.
  /// Asymmetry beyond 1e-12 (relative to the entry scale) is an error.
  void canonicalize() {
    if (internal_dim < 0) throw StructuralError("affine: negative internal_dim");
    int declared = 0;
    for (const auto& v : structure) declared += v.slot_count();
    if (!structure.empty() && declared != internal_dim)
      throw StructuralError("affine: structure slots do not sum to internal_dim");
    if (blocks.empty()) throw StructuralError("affine: no blocks");
    for (auto& b : blocks) {
      if (b.constant.rows() != b.constant.cols() || b.constant.rows() == 0)
        throw StructuralError("affine: block constant not square");
      symmetrize(b.constant);
      for (auto& t : b.terms) {
        if (t.index < 0 || t.index >= internal_dim)
          throw StructuralError("affine: term index out of range");
        if (t.coeff.rows() != b.constant.rows() || t.coeff.cols() != b.constant.cols())
          throw StructuralError("affine: term shape does not match its block");
        symmetrize(t.coeff);
      }
    }
  }

  /// Value of block b at inner point x.
  Eigen::MatrixXd block_value(std::size_t b, const Eigen::VectorXd& x) const {
    const auto& blk = blocks[b];
    Eigen::MatrixXd M = blk.constant;
    for (const auto& t : blk.terms) M += x[t.index] * t.coeff;
    return M;
  }

  /// max_b lambda_max(block_b(x)); the certified constraint level at x.
  double max_eigenvalue(const Eigen::VectorXd& x) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block_value(b, x),
                                                        Eigen::EigenvaluesOnly);
      worst = std::max(worst, es.eigenvalues().maxCoeff());
    }
    return worst;
  }

  int total_order() const {
    int n = 0;
    for (const auto& b : blocks) n += b.order();
    return n;
  }

  /// Named slice of a packed inner vector, as a matrix (1x1 for scalars).
  Eigen::MatrixXd internal_value(const Eigen::VectorXd& x, const std::string& name) const {
    for (const auto& v : structure) {
      if (v.name != name) continue;
      if (v.kind == InternalVarSpec::kScalar)
        return Eigen::MatrixXd::Constant(1, 1, x[v.offset]);
      return sym_from_slots(v.order, x, v.offset);
    }
    throw StructuralError("affine: unknown internal variable '" + name + "'");
  }

 private:
  static void symmetrize(Eigen::MatrixXd& M) {
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw StructuralError("affine: coefficient matrix is not symmetric");
    M = 0.5 * (M + M.transpose()).eval();
  }
};

/// Incremental assembler for AffineMatrixFunction values.  Inner variables
/// are declared first; block contributions reference them by handle.
class AffineBuilder {
 public:
  int add_scalar_var(std::string name) {
    InternalVarSpec v;
    v.name = std::move(name);
    v.kind = InternalVarSpec::kScalar;
    v.offset = dim_;
    dim_ += 1;
    vars_.push_back(std::move(v));
    return static_cast<int>(vars_.size()) - 1;
  }

  int add_symmetric_var(std::string name, int order) {
    if (order <= 0) throw StructuralError("builder: symmetric order must be positive");
    InternalVarSpec v;
    v.name = std::move(name);
    v.kind = InternalVarSpec::kSymmetric;
    v.order = order;
    v.offset = dim_;
    dim_ += sym_slot_count(order);
    vars_.push_back(std::move(v));
    return static_cast<int>(vars_.size()) - 1;
  }

  int add_block(int order) {
    if (order <= 0) throw StructuralError("builder: block order must be positive");
    AffineBlock b;
    b.constant = Eigen::MatrixXd::Zero(order, order);
    blocks_.push_back(std::move(b));
    return static_cast<int>(blocks_.size()) - 1;
  }

  /// Adds the (already symmetric) matrix M to the block constant at diagonal
  /// offset r0.
  void add_constant(int b, const Eigen::MatrixXd& M, int r0 = 0) {
    blocks_[b].constant.block(r0, r0, M.rows(), M.cols()) += M;
  }

  /// Adds the symmetric pair: M at (r0, c0) and M^T at (c0, r0).
  void add_constant_pair(int b, const Eigen::MatrixXd& M, int r0, int c0) {
    blocks_[b].constant.block(r0, c0, M.rows(), M.cols()) += M;
    blocks_[b].constant.block(c0, r0, M.cols(), M.rows()) += M.transpose();
  }

  /// For symmetric variable v: adds P*R + (P*R)^T at diagonal offset r0,
  /// i.e. the usual (P R, *) shorthand.
  void add_sym_ar(int b, int v, const Eigen::MatrixXd& R, int r0 = 0) {
    for_each_slot(v, [&](int slot, const Eigen::MatrixXd& E) {
      Eigen::MatrixXd M = E * R;
      add_coeff(b, slot, M + M.transpose(), r0, r0);
    });
  }

  /// For symmetric variable v: adds c*P at diagonal offset r0.
  void add_sym_scaled(int b, int v, double c, int r0 = 0) {
    for_each_slot(v, [&](int slot, const Eigen::MatrixXd& E) {
      add_coeff(b, slot, c * E, r0, r0);
    });
  }

  /// For symmetric variable v: adds P*R at (r0, c0) and R^T*P at (c0, r0).
  void add_sym_offdiag(int b, int v, const Eigen::MatrixXd& R, int r0, int c0) {
    for_each_slot(v, [&](int slot, const Eigen::MatrixXd& E) {
      Eigen::MatrixXd M = E * R;
      coeff_ref(b, slot).block(r0, c0, M.rows(), M.cols()) += M;
      coeff_ref(b, slot).block(c0, r0, M.cols(), M.rows()) += M.transpose();
    });
  }

  /// For scalar variable v: adds sym_coeff (must be symmetric) at diagonal
  /// offset r0.
  void add_scalar_coeff(int b, int v, const Eigen::MatrixXd& sym_coeff, int r0 = 0) {
    if (vars_[v].kind != InternalVarSpec::kScalar)
      throw StructuralError("builder: add_scalar_coeff on non-scalar variable");
    add_coeff(b, vars_[v].offset, sym_coeff, r0, r0);
  }

  /// For symmetric variable v: adds w * trace(P) to a block (1x1 blocks are
  /// the typical target): weight w on every diagonal slot.
  void add_trace_coeff(int b, int v, double w, int r0 = 0) {
    const auto& spec = vars_[v];
    if (spec.kind != InternalVarSpec::kSymmetric)
      throw StructuralError("builder: add_trace_coeff on non-symmetric variable");
    for (int i = 0; i < spec.order; ++i) {
      const int slot = spec.offset + diag_slot(spec.order, i);
      add_coeff(b, slot, Eigen::MatrixXd::Constant(1, 1, w), r0, r0);
    }
  }

  const InternalVarSpec& var(int v) const { return vars_[v]; }

  AffineMatrixFunction build() {
    AffineMatrixFunction f;
    f.internal_dim = dim_;
    f.structure = vars_;
    f.blocks.reserve(blocks_.size());
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      AffineBlock blk;
      blk.constant = blocks_[b].constant;
      auto it = coeffs_.find(b);
      if (it != coeffs_.end()) {
        for (const auto& [slot, M] : it->second) {
          if (M.cwiseAbs().maxCoeff() == 0.0) continue;
          blk.terms.push_back({static_cast<int>(slot), M});
        }
      }
      f.blocks.push_back(std::move(blk));
    }
    f.canonicalize();
    return f;
  }

 private:
  // Packed slot index of diagonal entry (i,i) within an order-k variable.
  static int diag_slot(int k, int i) {
    int s = 0;
    for (int r = 0; r < i; ++r) s += k - r;
    return s;
  }

  template <typename Fn>
  void for_each_slot(int v, Fn&& fn) {
    const auto& spec = vars_[v];
    if (spec.kind != InternalVarSpec::kSymmetric)
      throw StructuralError("builder: symmetric-variable helper on scalar variable");
    const int m = sym_slot_count(spec.order);
    for (int s = 0; s < m; ++s) fn(spec.offset + s, sym_basis_matrix(spec.order, s));
  }

  Eigen::MatrixXd& coeff_ref(int b, int slot) {
    auto& per_block = coeffs_[b];
    auto it = per_block.find(slot);
    if (it == per_block.end()) {
      const int n = blocks_[b].order();
      it = per_block.emplace(slot, Eigen::MatrixXd::Zero(n, n)).first;
    }
    return it->second;
  }

  void add_coeff(int b, int slot, const Eigen::MatrixXd& M, int r0, int c0) {
    coeff_ref(b, slot).block(r0, c0, M.rows(), M.cols()) += M;
  }

  int dim_ = 0;
  std::vector<InternalVarSpec> vars_;
  std::vector<AffineBlock> blocks_;
  std::map<std::size_t, std::map<int, Eigen::MatrixXd>> coeffs_;
};

/// Appends the two blocks of a strict Lyapunov feasibility slice in P for the
/// closed matrix Acl:  P*Acl + Acl^T*P  and  -P  (both required below the
/// level variable).  Returns the handle of the variable P.
inline int append_lyapunov_blocks(AffineBuilder& builder, const Eigen::MatrixXd& Acl,
                                  const std::string& p_name) {
  if (Acl.rows() != Acl.cols())
    throw StructuralError("append_lyapunov_blocks: Acl not square");
  const int n = static_cast<int>(Acl.rows());
  const int p = builder.add_symmetric_var(p_name, n);
  const int b1 = builder.add_block(n);
  builder.add_sym_ar(b1, p, Acl);
  const int b2 = builder.add_block(n);
  builder.add_sym_scaled(b2, p, -1.0);
  return p;
}

/// Single-call form: the Lyapunov feasibility slice as its own two-block map.
inline AffineMatrixFunction assemble_lyapunov_slice(const Eigen::MatrixXd& Acl,
                                                    const std::string& p_name = "P") {
  AffineBuilder b;
  append_lyapunov_blocks(b, Acl, p_name);
  return b.build();
}

}  // namespace bmiopt
