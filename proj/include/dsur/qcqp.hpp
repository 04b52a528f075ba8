#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace dsur {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// One point of a quadratic-constraint parameter space: the matrix, linear
/// and constant coefficients of x'Ax + b'x + gamma.
struct PackedTriple {
  MatrixXd A;
  VectorXd b;
  double gamma = 0.0;
};

/// Certain constraint: no perturbation.
struct NoUncertainty {};

/// Ellipsoid in full (A, b, gamma) space: theta0 + sum_k u_k * theta_k over
/// ||u||_2 <= 1. `center` duplicates the nominal constraint coefficients so
/// the set is self-contained.
struct ThetaEllipsoid {
  PackedTriple center;
  std::vector<PackedTriple> generators;
};

/// Symmetric Frobenius-norm ball of radius `radius` around the nominal A;
/// b and gamma stay certain.
struct FrobeniusBall {
  double radius = 1.0;
};

struct PGenerator {
  MatrixXd P;
  VectorXd b;
  double gamma = 0.0;
};

/// Ellipsoid over factor space: (P, b, gamma) = (P0, b0, gamma0) +
/// sum_k u_k (P_k, b_k, gamma_k), ||u||_2 <= 1, where the constraint value
/// is x'P'Px + b'x + gamma and (b0, gamma0) are the owning constraint's
/// nominal coefficients.
struct PEllipsoid {
  MatrixXd P0;
  std::vector<PGenerator> generators;
};

using UncertaintySet =
    std::variant<NoUncertainty, ThetaEllipsoid, FrobeniusBall, PEllipsoid>;

inline bool is_certain(const UncertaintySet& u) {
  return std::holds_alternative<NoUncertainty>(u);
}

/// x'Ax + b'x + gamma <= 0, optionally uncertain.
struct QuadConstraint {
  MatrixXd A;
  VectorXd b;
  double gamma = 0.0;
  UncertaintySet uncertainty = NoUncertainty{};
};

/// Convex QCQP data: min x'Qx + c'x + q subject to the constraint list.
/// Matrices are stored symmetrized; construction helpers apply (A + A')/2.
struct QcqpInstance {
  int n_vars = 0;
  MatrixXd Q;
  VectorXd c;
  double q = 0.0;
  std::vector<QuadConstraint> constraints;

  /// Permits indefinite A_i on constraints carrying case-A uncertainty.
  bool allow_indefinite_constraints = false;

  int n_constraints() const { return static_cast<int>(constraints.size()); }
};

inline MatrixXd symmetrize(const MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

QuadConstraint make_constraint(const MatrixXd& A, const VectorXd& b,
                               double gamma,
                               UncertaintySet uncertainty = NoUncertainty{});

QcqpInstance make_instance(const MatrixXd& Q, const VectorXd& c, double q,
                           std::vector<QuadConstraint> constraints,
                           bool allow_indefinite_constraints = false);

/// Checks dimensions, symmetry (1e-12 entrywise) and PSD-ness (min
/// eigenvalue >= -1e-9) per the data-model contract. Throws
/// std::invalid_argument on the first violation.
void validate(const QcqpInstance& inst);

double eval_objective(const QcqpInstance& inst, const VectorXd& x);

/// Value of constraint i at x; <= 0 means nominally feasible.
double eval_constraint(const QcqpInstance& inst, int i, const VectorXd& x);

VectorXd objective_gradient(const QcqpInstance& inst, const VectorXd& x);
VectorXd constraint_gradient(const QcqpInstance& inst, int i,
                             const VectorXd& x);

/// M'M: symmetric PSD by construction.
MatrixXd psd_from_factor(const MatrixXd& M);

/// Chain rule through A = M'M: given dL/dA = G, returns dL/dM = M(G + G').
MatrixXd factor_grad(const MatrixXd& M, const MatrixXd& G);

/// A factor F with F'F = A for symmetric PSD A (eigenvalue square root,
/// negative eigenvalues clamped to zero).
MatrixXd psd_factor_of(const MatrixXd& A);

}  // namespace dsur
