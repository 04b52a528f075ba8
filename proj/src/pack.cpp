#include "dsur/pack.hpp"

#include <stdexcept>

namespace dsur {

namespace {

Eigen::Map<const MatrixXd> map_factor(const VectorXd& pack,
                                      const PackBlock& block, int k, int n) {
  return Eigen::Map<const MatrixXd>(pack.data() + block.offset, k, n);
}

}  // namespace

PackLayout PackLayout::from_instance(const QcqpInstance& template_instance,
                                     PackOptions options) {
  PackLayout layout;
  layout.template_ = template_instance;
  layout.n_ = template_instance.n_vars;
  layout.k_ = options.factor_rows > 0 ? options.factor_rows : layout.n_;

  const int m = template_instance.n_constraints();
  if (options.constraint_masks.empty()) {
    options.constraint_masks.assign(m, ConstraintMask{});
  } else if (static_cast<int>(options.constraint_masks.size()) != m) {
    throw std::invalid_argument("PackLayout: mask count != constraint count");
  }
  layout.options_ = options;

  int offset = 0;
  auto add = [&](BlockKind kind, int con, int size, std::string name) {
    layout.blocks_.push_back(PackBlock{kind, con, offset, size, std::move(name)});
    offset += size;
  };

  const int n = layout.n_;
  const int k = layout.k_;
  if (options.learn_Q) add(BlockKind::ObjectiveFactor, -1, k * n, "M0");
  if (options.learn_c) add(BlockKind::ObjectiveLinear, -1, n, "c");
  if (options.learn_q) add(BlockKind::ObjectiveConstant, -1, 1, "q");
  for (int i = 0; i < m; ++i) {
    const ConstraintMask& mask = options.constraint_masks[i];
    const std::string si = std::to_string(i);
    if (mask.learn_A) add(BlockKind::ConstraintFactor, i, k * n, "M" + si);
    if (mask.learn_b) add(BlockKind::ConstraintLinear, i, n, "b" + si);
    if (mask.learn_gamma) add(BlockKind::ConstraintConstant, i, 1, "gamma" + si);
  }
  layout.size_ = offset;
  return layout;
}

VectorXd PackLayout::pack_from_instance(const QcqpInstance& inst) const {
  if (inst.n_vars != n_ || inst.n_constraints() != template_.n_constraints())
    throw std::invalid_argument("pack_from_instance: shape mismatch");
  if (k_ != n_)
    throw std::invalid_argument(
        "pack_from_instance: factoring needs square factors");

  VectorXd pack(size_);
  for (const PackBlock& block : blocks_) {
    switch (block.kind) {
      case BlockKind::ObjectiveFactor: {
        MatrixXd M = psd_factor_of(inst.Q);
        pack.segment(block.offset, block.size) =
            Eigen::Map<const VectorXd>(M.data(), M.size());
        break;
      }
      case BlockKind::ObjectiveLinear:
        pack.segment(block.offset, block.size) = inst.c;
        break;
      case BlockKind::ObjectiveConstant:
        pack[block.offset] = inst.q;
        break;
      case BlockKind::ConstraintFactor: {
        MatrixXd M = psd_factor_of(inst.constraints[block.constraint].A);
        pack.segment(block.offset, block.size) =
            Eigen::Map<const VectorXd>(M.data(), M.size());
        break;
      }
      case BlockKind::ConstraintLinear:
        pack.segment(block.offset, block.size) =
            inst.constraints[block.constraint].b;
        break;
      case BlockKind::ConstraintConstant:
        pack[block.offset] = inst.constraints[block.constraint].gamma;
        break;
    }
  }
  return pack;
}

QcqpInstance PackLayout::materialize(const VectorXd& pack,
                                     double jitter) const {
  if (pack.size() != size_)
    throw std::invalid_argument("materialize: pack size mismatch");

  QcqpInstance inst = template_;
  for (QuadConstraint& con : inst.constraints) con.uncertainty = NoUncertainty{};

  const MatrixXd eye = MatrixXd::Identity(n_, n_);
  for (const PackBlock& block : blocks_) {
    switch (block.kind) {
      case BlockKind::ObjectiveFactor: {
        auto M = map_factor(pack, block, k_, n_);
        inst.Q = symmetrize(M.transpose() * M) + jitter * eye;
        break;
      }
      case BlockKind::ObjectiveLinear:
        inst.c = pack.segment(block.offset, block.size);
        break;
      case BlockKind::ObjectiveConstant:
        inst.q = pack[block.offset];
        break;
      case BlockKind::ConstraintFactor: {
        auto M = map_factor(pack, block, k_, n_);
        inst.constraints[block.constraint].A =
            symmetrize(M.transpose() * M) + jitter * eye;
        break;
      }
      case BlockKind::ConstraintLinear:
        inst.constraints[block.constraint].b =
            pack.segment(block.offset, block.size);
        break;
      case BlockKind::ConstraintConstant:
        inst.constraints[block.constraint].gamma = pack[block.offset];
        break;
    }
  }
  return inst;
}

VectorXd PackLayout::chain_to_pack(const InstanceGrad& grad,
                                   const VectorXd& pack) const {
  if (static_cast<int>(grad.constraints.size()) != template_.n_constraints())
    throw std::invalid_argument("chain_to_pack: gradient shape mismatch");

  VectorXd out = VectorXd::Zero(size_);
  for (const PackBlock& block : blocks_) {
    switch (block.kind) {
      case BlockKind::ObjectiveFactor: {
        MatrixXd M = factor_at(pack, block);
        MatrixXd dM = factor_grad(M, grad.dQ);
        out.segment(block.offset, block.size) =
            Eigen::Map<const VectorXd>(dM.data(), dM.size());
        break;
      }
      case BlockKind::ObjectiveLinear:
        out.segment(block.offset, block.size) = grad.dc;
        break;
      case BlockKind::ObjectiveConstant:
        out[block.offset] = grad.dq;
        break;
      case BlockKind::ConstraintFactor: {
        MatrixXd M = factor_at(pack, block);
        MatrixXd dM = factor_grad(M, grad.constraints[block.constraint].dA);
        out.segment(block.offset, block.size) =
            Eigen::Map<const VectorXd>(dM.data(), dM.size());
        break;
      }
      case BlockKind::ConstraintLinear:
        out.segment(block.offset, block.size) =
            grad.constraints[block.constraint].db;
        break;
      case BlockKind::ConstraintConstant:
        out[block.offset] = grad.constraints[block.constraint].dgamma;
        break;
    }
  }
  return out;
}

MatrixXd PackLayout::factor_at(const VectorXd& pack,
                               const PackBlock& block) const {
  return map_factor(pack, block, k_, n_);
}

VectorXd PackLayout::vector_at(const VectorXd& pack,
                               const PackBlock& block) const {
  return pack.segment(block.offset, block.size);
}

const PackBlock* PackLayout::find_block(BlockKind kind, int constraint) const {
  for (const PackBlock& block : blocks_)
    if (block.kind == kind && block.constraint == constraint) return &block;
  return nullptr;
}

}  // namespace dsur
