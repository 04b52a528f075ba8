#include "dsur/worst_case.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace dsur {

namespace {

double lambda_min(const MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigensolver failed on certificate matrix");
  return es.eigenvalues().minCoeff();
}

const PEllipsoid& p_set(const QuadConstraint& con) {
  const auto* pe = std::get_if<PEllipsoid>(&con.uncertainty);
  if (!pe)
    throw std::invalid_argument("constraint does not carry a factor ellipsoid");
  return *pe;
}

}  // namespace

MatrixXd s_matrix(const QuadConstraint& con, const VectorXd& x, double l) {
  const PEllipsoid& pe = p_set(con);
  const int L = static_cast<int>(pe.generators.size());
  const int mr = static_cast<int>(pe.P0.rows());
  if (pe.P0.cols() != x.size())
    throw std::invalid_argument("s_matrix: dimension mismatch");

  const int dim = 1 + L + mr;
  MatrixXd S = MatrixXd::Zero(dim, dim);
  S(0, 0) = -con.gamma - con.b.dot(x) - l;
  for (int k = 0; k < L; ++k) {
    const PGenerator& g = pe.generators[k];
    double ck = -0.5 * (g.gamma + g.b.dot(x));
    S(0, 1 + k) = ck;
    S(1 + k, 0) = ck;
    S(1 + k, 1 + k) = l;
    VectorXd col = g.P * x;
    S.block(1 + k, 1 + L, 1, mr) = col.transpose();
    S.block(1 + L, 1 + k, mr, 1) = col;
  }
  VectorXd p0x = pe.P0 * x;
  S.block(0, 1 + L, 1, mr) = p0x.transpose();
  S.block(1 + L, 0, mr, 1) = p0x;
  S.block(1 + L, 1 + L, mr, mr) = MatrixXd::Identity(mr, mr);
  return S;
}

MatrixXd s_matrix_dx(const QuadConstraint& con, int r) {
  const PEllipsoid& pe = p_set(con);
  const int L = static_cast<int>(pe.generators.size());
  const int mr = static_cast<int>(pe.P0.rows());
  const int dim = 1 + L + mr;

  MatrixXd D = MatrixXd::Zero(dim, dim);
  D(0, 0) = -con.b[r];
  for (int k = 0; k < L; ++k) {
    const PGenerator& g = pe.generators[k];
    double ck = -0.5 * g.b[r];
    D(0, 1 + k) = ck;
    D(1 + k, 0) = ck;
    D.block(1 + k, 1 + L, 1, mr) = g.P.col(r).transpose();
    D.block(1 + L, 1 + k, mr, 1) = g.P.col(r);
  }
  D.block(0, 1 + L, 1, mr) = pe.P0.col(r).transpose();
  D.block(1 + L, 0, mr, 1) = pe.P0.col(r);
  return D;
}

std::vector<SCertificate> rob2_p(const QcqpInstance& inst, const VectorXd& x,
                                 const GoldenSearchOptions& opts) {
  std::vector<SCertificate> certs;
  for (int i = 0; i < inst.n_constraints(); ++i) {
    const QuadConstraint& con = inst.constraints[i];
    if (std::holds_alternative<NoUncertainty>(con.uncertainty)) continue;
    if (!std::holds_alternative<PEllipsoid>(con.uncertainty))
      throw std::invalid_argument(
          "rob2_p: constraint carries a case-A uncertainty set");

    auto value = [&](double l) { return lambda_min(s_matrix(con, x, l)); };

    SCertificate cert;
    cert.constraint_index = i;

    // Expand the bracket while the concave objective keeps improving; hitting
    // l_max still improving is the unbounded exception.
    double hi = 1.0;
    double v_hi = value(hi);
    while (hi < opts.l_max) {
      double next = std::min(hi * opts.expansion, opts.l_max);
      double v_next = value(next);
      if (v_next < v_hi) break;
      hi = next;
      v_hi = v_next;
    }
    const bool unbounded = hi >= opts.l_max;

    if (unbounded) {
      cert.unbounded = true;
      cert.feasible = true;
      cert.l_star = opts.l_max;
      cert.S_star = s_matrix(con, x, cert.l_star);
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(cert.S_star,
                                                 Eigen::EigenvaluesOnly);
      cert.eigvals = es.eigenvalues();
      certs.push_back(std::move(cert));
      continue;
    }

    double lo = 0.0;
    hi = std::min(hi * opts.expansion, opts.l_max);

    // Golden-section on the unimodal (concave) objective.
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - gr * (b - a);
    double x2 = a + gr * (b - a);
    double f1 = value(x1);
    double f2 = value(x2);
    while (b - a > opts.bracket_tol) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = value(x2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = value(x1);
      }
    }
    cert.l_star = 0.5 * (a + b);
    cert.S_star = s_matrix(con, x, cert.l_star);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(cert.S_star,
                                               Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("eigensolver failed on certificate matrix");
    cert.eigvals = es.eigenvalues();
    cert.feasible = cert.eigvals.minCoeff() >= -1e-9;
    certs.push_back(std::move(cert));
  }
  return certs;
}

WorstCaseRealization worst_case_a(const QuadConstraint& con, int index,
                                  const VectorXd& x) {
  WorstCaseRealization wc;
  wc.constraint_index = index;

  const double nominal = x.dot(con.A * x) + con.b.dot(x) + con.gamma;

  if (std::holds_alternative<NoUncertainty>(con.uncertainty)) {
    wc.theta_star = PackedTriple{con.A, con.b, con.gamma};
    wc.violation = nominal;
    return wc;
  }
  if (const auto* fb = std::get_if<FrobeniusBall>(&con.uncertainty)) {
    const double xx = x.squaredNorm();
    MatrixXd delta = xx > 0.0
                         ? MatrixXd((fb->radius / xx) * (x * x.transpose()))
                         : MatrixXd::Zero(x.size(), x.size());
    wc.theta_star = PackedTriple{con.A + delta, con.b, con.gamma};
    wc.violation = nominal + fb->radius * xx;
    return wc;
  }
  if (const auto* te = std::get_if<ThetaEllipsoid>(&con.uncertainty)) {
    // g is affine in theta at fixed x: worst value is the center value plus
    // the norm of the generator directional values.
    const int L = static_cast<int>(te->generators.size());
    VectorXd d(L);
    for (int k = 0; k < L; ++k) {
      const PackedTriple& g = te->generators[k];
      d[k] = x.dot(g.A * x) + g.b.dot(x) + g.gamma;
    }
    const double center_val =
        x.dot(te->center.A * x) + te->center.b.dot(x) + te->center.gamma;
    const double dn = d.norm();
    PackedTriple theta = te->center;
    if (dn > 0.0) {
      for (int k = 0; k < L; ++k) {
        const PackedTriple& g = te->generators[k];
        const double w = d[k] / dn;
        theta.A += w * g.A;
        theta.b += w * g.b;
        theta.gamma += w * g.gamma;
      }
    }
    wc.theta_star = std::move(theta);
    wc.violation = center_val + dn;
    return wc;
  }
  throw std::invalid_argument(
      "rob2_a: constraint carries a factor-ellipsoid set");
}

std::vector<WorstCaseRealization> rob2_a(const QcqpInstance& inst,
                                         const VectorXd& x) {
  std::vector<WorstCaseRealization> out;
  out.reserve(inst.constraints.size());
  for (int i = 0; i < inst.n_constraints(); ++i)
    out.push_back(worst_case_a(inst.constraints[i], i, x));
  return out;
}

LossBreakdown loss_p(const QcqpInstance& inst_observed, const VectorXd& x,
                     const std::vector<SCertificate>& certs,
                     const VectorXd& tau) {
  if (tau.size() != inst_observed.n_constraints())
    throw std::invalid_argument("loss_p: tau size mismatch");
  LossBreakdown bd;
  bd.objective_term = eval_objective(inst_observed, x);
  bd.penalty_terms = VectorXd::Zero(inst_observed.n_constraints());
  bd.penalty_coeffs = tau;
  for (const SCertificate& cert : certs) {
    if (cert.feasible) continue;  // zero penalty by definition, exactly
    double sum = 0.0;
    for (int k = 0; k < cert.eigvals.size(); ++k)
      sum += std::max(0.0, -cert.eigvals[k]);
    bd.penalty_terms[cert.constraint_index] = tau[cert.constraint_index] * sum;
  }
  bd.total = bd.objective_term + bd.penalty_terms.sum();
  return bd;
}

LossBreakdown loss_a(const QcqpInstance& inst_observed, const VectorXd& x,
                     const std::vector<WorstCaseRealization>& realizations,
                     const VectorXd& lam) {
  if (lam.size() != inst_observed.n_constraints())
    throw std::invalid_argument("loss_a: lambda size mismatch");
  LossBreakdown bd;
  bd.objective_term = eval_objective(inst_observed, x);
  bd.penalty_terms = VectorXd::Zero(inst_observed.n_constraints());
  bd.penalty_coeffs = lam;
  for (const WorstCaseRealization& wc : realizations)
    bd.penalty_terms[wc.constraint_index] =
        std::max(0.0, lam[wc.constraint_index] * wc.violation);
  bd.total = bd.objective_term + bd.penalty_terms.sum();
  return bd;
}

LossGradX loss_grad_x(const LossBreakdown& breakdown,
                      const QcqpInstance& inst_observed, const VectorXd& x,
                      const std::vector<SCertificate>& certs) {
  LossGradX out;
  out.grad = objective_gradient(inst_observed, x);

  const double cluster_tol = 1e-8;
  for (const SCertificate& cert : certs) {
    if (breakdown.penalty_terms[cert.constraint_index] <= 0.0) continue;
    const QuadConstraint& con = inst_observed.constraints[cert.constraint_index];
    const PEllipsoid& pe = std::get<PEllipsoid>(con.uncertainty);
    const double tau = breakdown.penalty_coeffs[cert.constraint_index];
    const int L = static_cast<int>(pe.generators.size());
    const int mr = static_cast<int>(pe.P0.rows());

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(cert.S_star);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("eigensolver failed on certificate matrix");
    const VectorXd& lam = es.eigenvalues();
    const MatrixXd& V = es.eigenvectors();
    const int s = static_cast<int>(lam.size());

    // Cluster nearly equal eigenvalues; a cluster straddling zero gets the
    // averaged (fractional) subgradient weight.
    int k = 0;
    while (k < s) {
      int end = k + 1;
      while (end < s && lam[end] - lam[end - 1] < cluster_tol) ++end;
      int n_neg = 0;
      for (int j = k; j < end; ++j)
        if (lam[j] < 0.0) ++n_neg;
      if (n_neg > 0) {
        if (end - k > 1) out.repeated_eigenvalue = true;
        const double w = static_cast<double>(n_neg) / (end - k);
        for (int j = k; j < end; ++j) {
          const VectorXd v = V.col(j);
          const double v0 = v[0];
          const auto vu = v.segment(1, L);
          const auto vm = v.tail(mr);
          // d lambda_j / dx from the affine structure of S.
          VectorXd dl = -v0 * v0 * con.b + 2.0 * v0 * (pe.P0.transpose() * vm);
          for (int g = 0; g < L; ++g) {
            const PGenerator& gen = pe.generators[g];
            dl += vu[g] * (-v0 * gen.b + 2.0 * (gen.P.transpose() * vm));
          }
          out.grad += tau * w * (-dl);  // penalty term is relu(-lambda)
        }
      }
      k = end;
    }
  }
  return out;
}

LossGradX loss_grad_x(const LossBreakdown& breakdown,
                      const QcqpInstance& inst_observed, const VectorXd& x,
                      const std::vector<WorstCaseRealization>& realizations) {
  LossGradX out;
  out.grad = objective_gradient(inst_observed, x);
  for (const WorstCaseRealization& wc : realizations) {
    if (breakdown.penalty_terms[wc.constraint_index] <= 0.0) continue;
    const double lam = breakdown.penalty_coeffs[wc.constraint_index];
    out.grad += lam * (2.0 * (wc.theta_star.A * x) + wc.theta_star.b);
  }
  return out;
}

}  // namespace dsur
