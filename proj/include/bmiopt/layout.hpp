#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "bmiopt/errors.hpp"

namespace bmiopt {

/// Bounded scalar decision variable.
struct ScalarSpec {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
};

/// Gain matrix decision block; every entry shares one box bound.
struct GainBlockSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  double entry_lower = 0.0;
  double entry_upper = 0.0;
};

/// Optional closed-loop channel eig(A + B*F*C) used to seed gain blocks from
/// prescribed pole locations instead of drawing entries pointwise.  Poles are
/// drawn from the box [-sigma_min, 0] x [-omega_max, omega_max].
struct PoleChannel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  double sigma_min = 20.0;
  double omega_max = 20.0;
};

/// Decomposed view of a packed decision vector.
struct StructuredValues {
  std::vector<double> scalars;
  std::vector<Eigen::MatrixXd> gains;
};

/// Describes the tuned (outer) decision vector: which slots are plain bounded
/// scalars, which are gain-matrix entries, and whether a pole channel exists
/// for seeding gains.  subspace_scales lists the box scale factors an
/// initializer may pick from when drawing fresh points.
class VariableLayout {
 public:
  std::vector<ScalarSpec> scalars;
  std::vector<GainBlockSpec> gain_blocks;
  std::optional<PoleChannel> pole_channel;
  std::vector<double> subspace_scales{1.0, 0.5, 0.1};

  /// Total packed dimension (scalars first, then gain entries row-major).
  int dimension() const {
    int d = static_cast<int>(scalars.size());
    for (const auto& g : gain_blocks) d += g.rows * g.cols;
    return d;
  }

  void validate() const {
    if (dimension() <= 0) throw StructuralError("layout: empty decision vector");
    for (const auto& s : scalars) {
      if (!(s.lower <= s.upper))
        throw StructuralError("layout: scalar '" + s.name + "' has inverted bounds");
    }
    for (const auto& g : gain_blocks) {
      if (g.rows <= 0 || g.cols <= 0)
        throw StructuralError("layout: gain block '" + g.name + "' has empty shape");
      if (!(g.entry_lower <= g.entry_upper))
        throw StructuralError("layout: gain block '" + g.name + "' has inverted bounds");
    }
    if (subspace_scales.empty())
      throw StructuralError("layout: subspace_scales must not be empty");
    for (double k : subspace_scales) {
      if (!(k > 0.0) || k > 1.0)
        throw StructuralError("layout: subspace scales must lie in (0, 1]");
    }
    if (pole_channel) {
      const auto& pc = *pole_channel;
      const Eigen::Index n = pc.A.rows();
      if (pc.A.cols() != n) throw StructuralError("layout: pole channel A not square");
      if (pc.B.rows() != n) throw StructuralError("layout: pole channel B row mismatch");
      if (pc.C.cols() != n) throw StructuralError("layout: pole channel C col mismatch");
      if (pc.sigma_min < 0.0 || pc.omega_max < 0.0)
        throw StructuralError("layout: pole box extents must be nonnegative");
      if (channel_gain_block() < 0)
        throw StructuralError(
            "layout: pole channel present but no gain block matches its shape");
    }
  }

  /// Index of the gain block fed by the pole channel (first block whose shape
  /// matches B.cols x C.rows), or -1.
  int channel_gain_block() const {
    if (!pole_channel) return -1;
    const int r = static_cast<int>(pole_channel->B.cols());
    const int c = static_cast<int>(pole_channel->C.rows());
    for (std::size_t i = 0; i < gain_blocks.size(); ++i)
      if (gain_blocks[i].rows == r && gain_blocks[i].cols == c)
        return static_cast<int>(i);
    return -1;
  }

  /// Offset of gain block g in the packed vector.
  int gain_offset(std::size_t g) const {
    int off = static_cast<int>(scalars.size());
    for (std::size_t i = 0; i < g; ++i)
      off += gain_blocks[i].rows * gain_blocks[i].cols;
    return off;
  }
};

/// Flat decision vector obeying a VariableLayout.
struct ExternalVariable {
  Eigen::VectorXd values;
};

/// Packs scalars and gain matrices (row-major entries) into one flat vector.
inline Eigen::VectorXd pack(const VariableLayout& layout, const StructuredValues& parts) {
  if (parts.scalars.size() != layout.scalars.size())
    throw StructuralError("pack: scalar count mismatch");
  if (parts.gains.size() != layout.gain_blocks.size())
    throw StructuralError("pack: gain block count mismatch");
  Eigen::VectorXd v(layout.dimension());
  int k = 0;
  for (double s : parts.scalars) v[k++] = s;
  for (std::size_t g = 0; g < parts.gains.size(); ++g) {
    const auto& spec = layout.gain_blocks[g];
    const auto& F = parts.gains[g];
    if (F.rows() != spec.rows || F.cols() != spec.cols)
      throw StructuralError("pack: gain block '" + spec.name + "' shape mismatch");
    for (int i = 0; i < spec.rows; ++i)
      for (int j = 0; j < spec.cols; ++j) v[k++] = F(i, j);
  }
  return v;
}

/// Inverse of pack.
inline StructuredValues unpack(const VariableLayout& layout, const Eigen::VectorXd& v) {
  if (v.size() != layout.dimension())
    throw StructuralError("unpack: vector length does not match layout");
  StructuredValues out;
  int k = 0;
  out.scalars.reserve(layout.scalars.size());
  for (std::size_t i = 0; i < layout.scalars.size(); ++i) out.scalars.push_back(v[k++]);
  for (const auto& spec : layout.gain_blocks) {
    Eigen::MatrixXd F(spec.rows, spec.cols);
    for (int i = 0; i < spec.rows; ++i)
      for (int j = 0; j < spec.cols; ++j) F(i, j) = v[k++];
    out.gains.push_back(std::move(F));
  }
  return out;
}

}  // namespace bmiopt
