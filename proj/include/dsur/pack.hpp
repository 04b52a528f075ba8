#pragma once

#include <string>
#include <vector>

#include "dsur/qcqp.hpp"

namespace dsur {

/// Which parameters of an instance are learnable. Quadratic coefficients are
/// always parameterized through a factor M with A = M'M.
struct ConstraintMask {
  bool learn_A = true;
  bool learn_b = true;
  bool learn_gamma = true;
};

struct PackOptions {
  bool learn_Q = true;
  bool learn_c = true;
  bool learn_q = true;
  /// Empty means every constraint fully learnable.
  std::vector<ConstraintMask> constraint_masks;
  /// Rows of the factor matrices; 0 means square (n x n).
  int factor_rows = 0;
};

enum class BlockKind {
  ObjectiveFactor,
  ObjectiveLinear,
  ObjectiveConstant,
  ConstraintFactor,
  ConstraintLinear,
  ConstraintConstant,
};

struct PackBlock {
  BlockKind kind;
  int constraint = -1;  // -1 for objective blocks
  int offset = 0;
  int size = 0;
  std::string name;
};

/// Gradients of a scalar loss with respect to every instance parameter, as
/// produced by implicit differentiation of the solution map. dQ and dA are
/// symmetrized; dq is always zero (constant shifts do not move the argmin).
struct InstanceGrad {
  MatrixXd dQ;
  VectorXd dc;
  double dq = 0.0;
  struct ConGrad {
    MatrixXd dA;
    VectorXd db;
    double dgamma = 0.0;
  };
  std::vector<ConGrad> constraints;
  bool nondifferentiable_point = false;
};

/// Flat-vector view of the learnable parameters of an instance shape.
///
/// The layout is built once from a template instance; pack vectors are then
/// plain VectorXd whose segments map onto named blocks (factor entries are
/// stored column-major). pack/unpack are segment copies, so round trips are
/// bit-for-bit.
class PackLayout {
 public:
  static PackLayout from_instance(const QcqpInstance& template_instance,
                                  PackOptions options = {});

  int size() const { return size_; }
  int n_vars() const { return n_; }
  int factor_rows() const { return k_; }
  const std::vector<PackBlock>& blocks() const { return blocks_; }
  const QcqpInstance& template_instance() const { return template_; }

  /// Pack taken from the template's own parameters; quadratic coefficients
  /// are factored via psd_factor_of (requires square factors).
  VectorXd pack_from_instance(const QcqpInstance& inst) const;

  /// Template instance with learnable fields replaced from the pack.
  /// Factor blocks materialize as M'M + jitter*I; uncertainty descriptors
  /// are dropped (the surrogate is a deterministic problem).
  QcqpInstance materialize(const VectorXd& pack, double jitter = 0.0) const;

  /// Maps an InstanceGrad onto pack coordinates, chaining factor blocks
  /// through factor_grad at the current pack point.
  VectorXd chain_to_pack(const InstanceGrad& grad, const VectorXd& pack) const;

  MatrixXd factor_at(const VectorXd& pack, const PackBlock& block) const;
  VectorXd vector_at(const VectorXd& pack, const PackBlock& block) const;

  const PackBlock* find_block(BlockKind kind, int constraint = -1) const;

 private:
  QcqpInstance template_;
  PackOptions options_;
  std::vector<PackBlock> blocks_;
  int n_ = 0;
  int k_ = 0;
  int size_ = 0;
};

}  // namespace dsur
