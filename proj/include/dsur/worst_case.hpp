#pragma once

#include <vector>

#include "dsur/qcqp.hpp"

namespace dsur {

/// Feasibility certificate for one factor-ellipsoid constraint: the scalar
/// search variable l maximizing the smallest eigenvalue of the certificate
/// matrix, the matrix itself and its spectrum. feasible <=> max eigenvalue
/// objective >= -1e-9, i.e. the constraint holds for every realization.
struct SCertificate {
  int constraint_index = -1;
  double l_star = 0.0;
  MatrixXd S_star;
  VectorXd eigvals;  // sorted ascending
  bool feasible = false;
  /// Search hit l_max still improving; treated as feasible with zero penalty.
  bool unbounded = false;
};

/// Exact maximizer of one case-A constraint over its uncertainty set.
struct WorstCaseRealization {
  int constraint_index = -1;
  PackedTriple theta_star;
  double violation = 0.0;  // g_i(x, theta*)
};

struct LossBreakdown {
  double objective_term = 0.0;
  VectorXd penalty_terms;   // one per constraint, zero where inapplicable
  VectorXd penalty_coeffs;  // tau_i or lambda_i as supplied
  double total = 0.0;
};

struct GoldenSearchOptions {
  double l_max = 1e8;
  double bracket_tol = 1e-10;
  double expansion = 4.0;
};

/// Certificate matrix for a factor-ellipsoid constraint, affine in x and l:
///
///   S(x, l) = [ -gamma0 - b0'x - l    c'            (P0 x)'  ]
///             [ c                     l * I_L       W'       ]
///             [ P0 x                  W             I_m      ]
///
/// with c_k = -(gamma_k + b_k'x)/2 and W = [P_1 x, ..., P_L x]. The owning
/// constraint supplies (b0, gamma0). S is PSD for some l >= 0 exactly when
/// the constraint holds for every realization in the set.
MatrixXd s_matrix(const QuadConstraint& con, const VectorXd& x, double l);

/// Derivative of s_matrix with respect to x_r (independent of x and l).
MatrixXd s_matrix_dx(const QuadConstraint& con, int r);

/// Per-constraint concave maximization of l -> lambda_min(S(l)) over
/// [0, l_max] by bracket expansion plus golden-section search. Constraints
/// without factor-ellipsoid uncertainty are skipped; the sum over
/// constraints decomposes because uncertainty is constraint-wise.
std::vector<SCertificate> rob2_p(const QcqpInstance& inst, const VectorXd& x,
                                 const GoldenSearchOptions& opts = {});

/// Exact closed-form pessimization for case-A sets. Affine sets maximize the
/// linear-in-theta constraint at theta0 + sum_k (d_k/||d||) theta_k with
/// d_k the generator directional values; Frobenius balls at
/// A0 + rho*x x'/||x||^2. Certain constraints yield their nominal value.
std::vector<WorstCaseRealization> rob2_a(const QcqpInstance& inst,
                                         const VectorXd& x);

WorstCaseRealization worst_case_a(const QuadConstraint& con, int index,
                                  const VectorXd& x);

/// Case-P decision loss: f(x, P_obs) + sum_i tau_i * sum_k relu(-lambda_k).
/// Feasible (or unbounded) certificates contribute exactly zero.
LossBreakdown loss_p(const QcqpInstance& inst_observed, const VectorXd& x,
                     const std::vector<SCertificate>& certs,
                     const VectorXd& tau);

/// Case-A decision loss: f(x, P_obs) + sum_i relu(lambda_i * violation_i).
LossBreakdown loss_a(const QcqpInstance& inst_observed, const VectorXd& x,
                     const std::vector<WorstCaseRealization>& realizations,
                     const VectorXd& lam);

struct LossGradX {
  VectorXd grad;
  /// A penalized eigenvalue sits in a cluster (gap < 1e-8); the averaged
  /// eigenspace subgradient was used.
  bool repeated_eigenvalue = false;
};

/// d(loss)/dx at the fixed inner maximizers (envelope rule): the observed
/// objective gradient plus active-penalty terms. Activation follows the
/// breakdown's penalty terms so loss and gradient always agree.
LossGradX loss_grad_x(const LossBreakdown& breakdown,
                      const QcqpInstance& inst_observed, const VectorXd& x,
                      const std::vector<SCertificate>& certs);
LossGradX loss_grad_x(const LossBreakdown& breakdown,
                      const QcqpInstance& inst_observed, const VectorXd& x,
                      const std::vector<WorstCaseRealization>& realizations);

}  // namespace dsur
