#include "dsur/det_solver.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <ostream>

namespace dsur {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Problem {
  const QcqpInstance& inst;
  double reg;  // objective regularizer eps in eps*||x||^2

  int n() const { return inst.n_vars; }
  int m() const { return inst.n_constraints(); }

  double f(const VectorXd& x) const {
    double v = x.dot(inst.Q * x) + inst.c.dot(x) + inst.q;
    if (reg > 0.0) v += reg * x.squaredNorm();
    return v;
  }
  VectorXd grad_f(const VectorXd& x) const {
    VectorXd g = 2.0 * (inst.Q * x) + inst.c;
    if (reg > 0.0) g += 2.0 * reg * x;
    return g;
  }
  MatrixXd hess_f() const {
    MatrixXd h = 2.0 * inst.Q;
    if (reg > 0.0) h += 2.0 * reg * MatrixXd::Identity(n(), n());
    return h;
  }
  VectorXd constraint_values(const VectorXd& x) const {
    VectorXd g(m());
    for (int i = 0; i < m(); ++i) g[i] = eval_constraint(inst, i, x);
    return g;
  }
  VectorXd grad_g(int i, const VectorXd& x) const {
    return constraint_gradient(inst, i, x);
  }
};

/// Solves H d = -grad with escalating Tikhonov damping. Returns false when
/// the factorization never succeeds.
bool newton_direction(const MatrixXd& H, const VectorXd& grad, VectorXd& d) {
  double damping = 0.0;
  for (int attempt = 0; attempt < 10; ++attempt) {
    MatrixXd Hd = H;
    if (damping > 0.0)
      Hd += damping * MatrixXd::Identity(H.rows(), H.cols());
    Eigen::LLT<MatrixXd> llt(Hd);
    if (llt.info() == Eigen::Success) {
      d = llt.solve(-grad);
      if (d.allFinite()) return true;
    }
    damping = damping == 0.0 ? 1e-12 : damping * 100.0;
  }
  return false;
}

void trace_line(std::ostream* os, int phase, int outer, double t, double obj,
                double gap, int newton_iters) {
  if (!os) return;
  *os << "{\"phase\":" << phase << ",\"outer\":" << outer << ",\"t\":" << t
      << ",\"objective\":" << obj << ",\"gap\":" << gap
      << ",\"newton_iters\":" << newton_iters << "}\n";
}

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

PhaseOneResult phase_one(const QcqpInstance& inst, const SolverConfig& cfg) {
  const Problem prob{inst, 0.0};
  const int n = prob.n();
  const int m = prob.m();

  PhaseOneResult res;
  if (m == 0) {
    res.feasible = true;
    res.x = VectorXd::Zero(n);
    res.max_violation = -kInf;
    return res;
  }

  // Variables (x, s); minimize s subject to g_i(x) - s <= 0.
  VectorXd x = VectorXd::Zero(n);
  VectorXd g = prob.constraint_values(x);
  double s = g.maxCoeff() + 1.0;

  const double feasible_exit = -1e-3;
  double t = cfg.t_init;

  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    int inner = 0;
    for (; inner < cfg.max_inner; ++inner) {
      g = prob.constraint_values(x);
      if (s <= feasible_exit) break;

      VectorXd slack = VectorXd::Constant(m, s) - g;  // > 0 on iterates
      VectorXd inv = slack.cwiseInverse();

      VectorXd grad_x = VectorXd::Zero(n);
      MatrixXd hess_xx = MatrixXd::Zero(n, n);
      VectorXd hess_xs = VectorXd::Zero(n);
      double grad_s = t;
      double hess_ss = 0.0;
      for (int i = 0; i < m; ++i) {
        VectorXd gi = prob.grad_g(i, x);
        grad_x += inv[i] * gi;
        grad_s -= inv[i];
        double inv2 = inv[i] * inv[i];
        hess_xx += inv[i] * 2.0 * inst.constraints[i].A + inv2 * gi * gi.transpose();
        hess_xs -= inv2 * gi;
        hess_ss += inv2;
      }

      MatrixXd H(n + 1, n + 1);
      H.topLeftCorner(n, n) = hess_xx;
      H.topRightCorner(n, 1) = hess_xs;
      H.bottomLeftCorner(1, n) = hess_xs.transpose();
      H(n, n) = hess_ss;
      VectorXd grad(n + 1);
      grad.head(n) = grad_x;
      grad[n] = grad_s;

      VectorXd d;
      if (!newton_direction(H, grad, d)) break;
      double decrement = -grad.dot(d);
      // Tolerance scales with t: phi is t*objective + barrier, so this keeps
      // the objective suboptimality of the centering step near newton_tol.
      if (0.5 * decrement <= cfg.newton_tol * (1.0 + t)) break;

      // Backtracking: keep slack positive, then Armijo on the barrier value.
      auto phi = [&](const VectorXd& xx, double ss) {
        VectorXd gg = prob.constraint_values(xx);
        double val = t * ss;
        for (int i = 0; i < m; ++i) {
          double sl = ss - gg[i];
          if (sl <= 0.0) return kInf;
          val -= std::log(sl);
        }
        return val;
      };
      double phi0 = phi(x, s);
      double alpha = 1.0;
      VectorXd dx = d.head(n);
      double ds = d[n];
      bool accepted = false;
      for (int ls = 0; ls < 80; ++ls) {
        double cand = phi(x + alpha * dx, s + alpha * ds);
        if (cand <= phi0 + 1e-4 * alpha * grad.dot(d)) {
          x += alpha * dx;
          s += alpha * ds;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) break;
    }

    g = prob.constraint_values(x);
    double gap = static_cast<double>(m) / t;
    trace_line(cfg.trace, 1, outer, t, s, gap, 0);

    if (s <= feasible_exit) break;
    if (s - gap > 1e-9) {  // certified positive optimal slack
      res.feasible = false;
      res.max_violation = s - gap;
      return res;
    }
    if (gap <= 1e-10) break;
    t *= cfg.t_growth;
  }

  g = prob.constraint_values(x);
  if (s >= -1e-9 || g.maxCoeff() >= 0.0) {
    res.feasible = false;
    res.max_violation = s;
    return res;
  }
  res.feasible = true;
  res.x = x;
  res.max_violation = g.maxCoeff();
  return res;
}

namespace {

struct KktResidual {
  VectorXd stat;  // 2Qx + c + sum mu_i (2A_i x + b_i)
  VectorXd comp;  // mu_i * g_i(x)
  double inf_norm() const {
    double v = stat.size() ? stat.cwiseAbs().maxCoeff() : 0.0;
    if (comp.size()) v = std::max(v, comp.cwiseAbs().maxCoeff());
    return v;
  }
};

KktResidual kkt_residual(const Problem& prob, const VectorXd& x,
                         const VectorXd& mu) {
  KktResidual r;
  r.stat = prob.grad_f(x);
  r.comp.resize(prob.m());
  for (int i = 0; i < prob.m(); ++i) {
    r.stat += mu[i] * prob.grad_g(i, x);
    r.comp[i] = mu[i] * eval_constraint(prob.inst, i, x);
  }
  return r;
}

MatrixXd kkt_matrix(const Problem& prob, const VectorXd& x,
                    const VectorXd& mu) {
  const int n = prob.n();
  const int m = prob.m();
  MatrixXd K = MatrixXd::Zero(n + m, n + m);
  MatrixXd H = prob.hess_f();
  for (int i = 0; i < m; ++i) H += mu[i] * 2.0 * prob.inst.constraints[i].A;
  K.topLeftCorner(n, n) = H;
  for (int i = 0; i < m; ++i) {
    VectorXd gi = prob.grad_g(i, x);
    K.block(0, n + i, n, 1) = gi;
    K.block(n + i, 0, 1, n) = mu[i] * gi.transpose();
    K(n + i, n + i) = eval_constraint(prob.inst, i, x);
  }
  return K;
}

/// Newton iterations on the full KKT system from a strictly feasible
/// near-solution, with a fraction-to-boundary rule keeping mu > 0 and
/// g_i < 0. Tightens residuals well below the barrier gap.
void polish(const Problem& prob, VectorXd& x, VectorXd& mu,
            const SolverConfig& cfg) {
  const int n = prob.n();
  const int m = prob.m();
  KktResidual r = kkt_residual(prob, x, mu);
  double best = r.inf_norm();

  for (int iter = 0; iter < cfg.polish_iters; ++iter) {
    if (best <= 5e-14) break;
    MatrixXd K = kkt_matrix(prob, x, mu);
    VectorXd rhs(n + m);
    rhs.head(n) = -r.stat;
    rhs.tail(m) = -r.comp;
    Eigen::PartialPivLU<MatrixXd> lu(K);
    VectorXd d = lu.solve(rhs);
    if (!d.allFinite()) break;
    VectorXd dx = d.head(n);
    VectorXd dmu = d.tail(m);

    double alpha = 1.0;
    for (int i = 0; i < m; ++i)
      if (dmu[i] < 0.0) alpha = std::min(alpha, -0.995 * mu[i] / dmu[i]);
    // keep strict primal feasibility
    for (int ls = 0; ls < 60; ++ls) {
      VectorXd xc = x + alpha * dx;
      bool interior = true;
      for (int i = 0; i < m && interior; ++i)
        interior = eval_constraint(prob.inst, i, xc) < 0.0;
      if (interior) break;
      alpha *= 0.5;
    }

    bool improved = false;
    for (int ls = 0; ls < 40; ++ls) {
      VectorXd xc = x + alpha * dx;
      VectorXd muc = mu + alpha * dmu;
      KktResidual rc = kkt_residual(prob, xc, muc);
      double nc = rc.inf_norm();
      if (nc < best) {
        x = xc;
        mu = muc;
        r = rc;
        best = nc;
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) break;
  }
}

}  // namespace

KktSolution solve_det(const QcqpInstance& inst, const SolverConfig& cfg) {
  const Problem prob{inst, cfg.objective_reg};
  const int n = prob.n();
  const int m = prob.m();

  KktSolution sol;
  sol.mu = VectorXd::Zero(m);
  sol.active_flags.assign(m, false);

  if (m == 0) {
    // Unconstrained quadratic: one linear solve.
    MatrixXd H = prob.hess_f();
    Eigen::LDLT<MatrixXd> ldlt(H);
    VectorXd x = ldlt.solve(-inst.c);
    double res = (H * x + inst.c).cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || !x.allFinite() || res > 1e-8) {
      sol.status = SolveStatus::NumericalFailure;
      sol.message = "unconstrained objective is singular or unbounded";
      sol.x_star = VectorXd::Zero(n);
      return sol;
    }
    sol.x_star = x;
    sol.stationarity_residual = res;
    sol.status = SolveStatus::Optimal;
    sol.outer_objectives.push_back(prob.f(x));
    return sol;
  }

  PhaseOneResult p1 = phase_one(inst, cfg);
  if (!p1.feasible) {
    sol.status = SolveStatus::Infeasible;
    sol.message = "phase one certifies an empty interior";
    sol.x_star = VectorXd::Zero(n);
    return sol;
  }

  VectorXd x = p1.x;
  double t = cfg.t_init;
  bool converged = false;

  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    int inner = 0;
    for (; inner < cfg.max_inner; ++inner) {
      VectorXd g = prob.constraint_values(x);
      VectorXd inv = (-g).cwiseInverse();

      VectorXd grad = t * prob.grad_f(x);
      MatrixXd hess = t * prob.hess_f();
      for (int i = 0; i < m; ++i) {
        VectorXd gi = prob.grad_g(i, x);
        grad += inv[i] * gi;
        hess += inv[i] * 2.0 * inst.constraints[i].A +
                inv[i] * inv[i] * gi * gi.transpose();
      }

      VectorXd d;
      if (!newton_direction(hess, grad, d)) break;
      double decrement = -grad.dot(d);
      if (0.5 * decrement <= cfg.newton_tol * (1.0 + t)) break;

      auto phi = [&](const VectorXd& xx) {
        double val = t * prob.f(xx);
        for (int i = 0; i < m; ++i) {
          double gi = eval_constraint(inst, i, xx);
          if (gi >= 0.0) return kInf;
          val -= std::log(-gi);
        }
        return val;
      };
      double phi0 = phi(x);
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 80; ++ls) {
        double cand = phi(x + alpha * d);
        if (cand <= phi0 + 1e-4 * alpha * grad.dot(d)) {
          x += alpha * d;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) break;
    }

    double gap = static_cast<double>(m) / t;
    sol.outer_objectives.push_back(prob.f(x));
    trace_line(cfg.trace, 2, outer, t, prob.f(x), gap, 0);
    if (gap <= cfg.gap_tol) {
      converged = true;
      break;
    }
    t *= cfg.t_growth;
  }

  VectorXd g = prob.constraint_values(x);
  VectorXd mu = (t * (-g).array()).inverse().matrix();
  polish(prob, x, mu, cfg);

  KktResidual r = kkt_residual(prob, x, mu);
  g = prob.constraint_values(x);
  sol.x_star = x;
  sol.mu = mu;
  sol.stationarity_residual = r.stat.cwiseAbs().maxCoeff();
  sol.comp_slack_residual = r.comp.size() ? r.comp.cwiseAbs().maxCoeff() : 0.0;
  sol.max_constraint_value = g.maxCoeff();
  for (int i = 0; i < m; ++i) sol.active_flags[i] = mu[i] >= cfg.eps_active;

  const bool clean = sol.stationarity_residual <= 1e-8 &&
                     sol.comp_slack_residual <= 1e-8 &&
                     sol.max_constraint_value <= 1e-8 && mu.minCoeff() >= -1e-10;
  if (clean) {
    sol.status = SolveStatus::Optimal;
  } else if (!converged) {
    sol.status = SolveStatus::MaxIter;
    sol.message = "barrier loop hit iteration limit";
  } else {
    sol.status = SolveStatus::NumericalFailure;
    sol.message = "KKT residuals above tolerance after polish";
  }
  return sol;
}

InstanceGrad kkt_vjp(const QcqpInstance& inst, const KktSolution& sol,
                     const VectorXd& gx, const SolverConfig& cfg) {
  if (sol.status != SolveStatus::Optimal)
    throw std::invalid_argument("kkt_vjp requires an Optimal solution");
  if (gx.size() != inst.n_vars)
    throw std::invalid_argument("kkt_vjp: gradient dimension mismatch");

  const Problem prob{inst, cfg.objective_reg};
  const int n = prob.n();
  const int m = prob.m();
  const VectorXd& x = sol.x_star;
  const VectorXd& mu = sol.mu;

  InstanceGrad grad;
  grad.constraints.resize(m);

  bool weakly_active = false;
  for (int i = 0; i < m; ++i) {
    double gi = eval_constraint(inst, i, x);
    if (std::abs(gi) <= cfg.eps_active && mu[i] <= cfg.eps_active)
      weakly_active = true;
  }
  grad.nondifferentiable_point = weakly_active;

  MatrixXd K = kkt_matrix(prob, x, mu);
  VectorXd rhs = VectorXd::Zero(n + m);
  rhs.head(n) = gx;
  const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());

  VectorXd y;
  double residual = kInf;
  if (!weakly_active) {
    Eigen::PartialPivLU<MatrixXd> lu(K.transpose());
    VectorXd cand = lu.solve(rhs);
    if (cand.allFinite()) {
      double res = (K.transpose() * cand - rhs).cwiseAbs().maxCoeff();
      y = cand;
      residual = res;
    }
  }
  if (residual > 1e-8 * scale) {
    // Damped least-squares fallback; the legitimate route for weakly active
    // (nondifferentiable) points, the retry ladder otherwise.
    for (double delta : {cfg.kkt_damping, 1e-6}) {
      MatrixXd Kd = K * K.transpose() +
                    delta * MatrixXd::Identity(n + m, n + m);
      Eigen::LDLT<MatrixXd> ldlt(Kd);
      VectorXd cand = ldlt.solve(K * rhs);
      if (!cand.allFinite()) continue;
      double res = (K.transpose() * cand - rhs).cwiseAbs().maxCoeff();
      if (res < residual) {
        y = cand;
        residual = res;
      }
      if (residual <= 1e-8 * scale) break;
    }
  }
  if (!y.size() || (!weakly_active && residual > 1e-4 * scale))
    throw SingularKktError("kkt_vjp: KKT system singular beyond damping");

  VectorXd yx = y.head(n);
  VectorXd ymu = y.tail(m);

  grad.dQ = -(yx * x.transpose() + x * yx.transpose());
  grad.dc = -yx;
  grad.dq = 0.0;
  for (int i = 0; i < m; ++i) {
    InstanceGrad::ConGrad& cg = grad.constraints[i];
    cg.dA = -mu[i] * (yx * x.transpose() + x * yx.transpose()) -
            ymu[i] * mu[i] * (x * x.transpose());
    cg.db = -mu[i] * yx - ymu[i] * mu[i] * x;
    cg.dgamma = -ymu[i] * mu[i];
  }
  return grad;
}

}  // namespace dsur
