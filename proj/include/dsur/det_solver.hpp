#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsur/pack.hpp"
#include "dsur/qcqp.hpp"

namespace dsur {

enum class SolveStatus { Optimal, Infeasible, MaxIter, NumericalFailure };

std::string to_string(SolveStatus s);

struct SolverConfig {
  double t_init = 1.0;        // initial barrier parameter
  double t_growth = 20.0;     // barrier growth factor
  double gap_tol = 1e-9;      // stop when m / t <= gap_tol
  double newton_tol = 1e-12;  // half squared Newton decrement
  int max_outer = 80;
  int max_inner = 80;
  double eps_active = 1e-6;
  double kkt_damping = 1e-10;
  int polish_iters = 40;
  /// Optional eps*||x||^2 objective regularizer for flat (Q = 0) objectives;
  /// disclosed in run manifests when nonzero.
  double objective_reg = 0.0;
  /// When set, one JSON line per iteration is written here.
  std::ostream* trace = nullptr;
};

/// Primal-dual optimum of the deterministic problem together with the
/// residuals needed to trust it. At status Optimal: mu >= -1e-10 entrywise,
/// stationarity and complementary-slackness residuals <= 1e-8 (inf-norm),
/// and g_i(x*) <= 1e-8 for all i.
struct KktSolution {
  VectorXd x_star;
  VectorXd mu;
  double stationarity_residual = 0.0;
  double comp_slack_residual = 0.0;
  double max_constraint_value = 0.0;
  std::vector<bool> active_flags;
  SolveStatus status = SolveStatus::NumericalFailure;
  std::string message;
  /// Objective value after each outer barrier iteration (non-increasing).
  std::vector<double> outer_objectives;
};

struct PhaseOneResult {
  bool feasible = false;
  VectorXd x;
  /// max_i g_i(x) at the returned point (negative when feasible), or the
  /// certified lower bound on the optimal slack when infeasible.
  double max_violation = 0.0;
};

/// Strictly feasible point via the auxiliary problem min s, g_i(x) <= s.
PhaseOneResult phase_one(const QcqpInstance& inst, const SolverConfig& cfg = {});

/// Log-barrier interior-point solve of min x'Qx + c'x + q s.t. g_i(x) <= 0,
/// followed by a primal-dual Newton polish of the KKT system.
KktSolution solve_det(const QcqpInstance& inst, const SolverConfig& cfg = {});

struct SingularKktError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Vector-Jacobian product through the solution map: given dL/dx*, returns
/// dL/d{Q, c, q, A_i, b_i, gamma_i} by solving the transposed linearized KKT
/// system. Weakly active constraints (|g_i| and mu_i both below eps_active)
/// make the point nondifferentiable; the damped subgradient is returned with
/// `nondifferentiable_point` set.
InstanceGrad kkt_vjp(const QcqpInstance& inst, const KktSolution& sol,
                     const VectorXd& gx, const SolverConfig& cfg = {});

}  // namespace dsur
