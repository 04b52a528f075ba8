#include "dsur/qcqp.hpp"

#include <Eigen/Eigenvalues>
#include <stdexcept>

namespace dsur {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

bool symmetric_within(const MatrixXd& m, double tol) {
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

double min_eigenvalue(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

QuadConstraint make_constraint(const MatrixXd& A, const VectorXd& b,
                               double gamma, UncertaintySet uncertainty) {
  QuadConstraint con;
  con.A = symmetrize(A);
  con.b = b;
  con.gamma = gamma;
  con.uncertainty = std::move(uncertainty);
  return con;
}

QcqpInstance make_instance(const MatrixXd& Q, const VectorXd& c, double q,
                           std::vector<QuadConstraint> constraints,
                           bool allow_indefinite_constraints) {
  QcqpInstance inst;
  inst.n_vars = static_cast<int>(c.size());
  inst.Q = symmetrize(Q);
  inst.c = c;
  inst.q = q;
  inst.constraints = std::move(constraints);
  inst.allow_indefinite_constraints = allow_indefinite_constraints;
  validate(inst);
  return inst;
}

void validate(const QcqpInstance& inst) {
  const int n = inst.n_vars;
  require(n > 0, "n_vars must be positive");
  require(inst.Q.rows() == n && inst.Q.cols() == n, "Q must be n x n");
  require(inst.c.size() == n, "c must have n entries");
  require(symmetric_within(inst.Q, 1e-12), "Q must be symmetric");
  require(min_eigenvalue(inst.Q) >= -1e-9, "Q must be PSD");

  for (std::size_t i = 0; i < inst.constraints.size(); ++i) {
    const QuadConstraint& con = inst.constraints[i];
    const std::string tag = "constraint " + std::to_string(i) + ": ";
    require(con.A.rows() == n && con.A.cols() == n, tag + "A must be n x n");
    require(con.b.size() == n, tag + "b must have n entries");
    require(symmetric_within(con.A, 1e-12), tag + "A must be symmetric");

    const bool case_a = std::holds_alternative<ThetaEllipsoid>(con.uncertainty) ||
                        std::holds_alternative<FrobeniusBall>(con.uncertainty);
    if (!(inst.allow_indefinite_constraints && case_a)) {
      require(min_eigenvalue(con.A) >= -1e-9, tag + "A must be PSD");
    }

    if (const auto* te = std::get_if<ThetaEllipsoid>(&con.uncertainty)) {
      require(!te->generators.empty(), tag + "ellipsoid needs >= 1 generator");
      require(te->center.A.rows() == n && te->center.A.cols() == n &&
                  te->center.b.size() == n,
              tag + "ellipsoid center dims");
      for (const PackedTriple& g : te->generators)
        require(g.A.rows() == n && g.A.cols() == n && g.b.size() == n,
                tag + "ellipsoid generator dims");
    } else if (const auto* fb = std::get_if<FrobeniusBall>(&con.uncertainty)) {
      require(fb->radius > 0.0, tag + "Frobenius radius must be positive");
    } else if (const auto* pe = std::get_if<PEllipsoid>(&con.uncertainty)) {
      require(!pe->generators.empty(), tag + "ellipsoid needs >= 1 generator");
      require(pe->P0.cols() == n, tag + "P0 must have n columns");
      for (const PGenerator& g : pe->generators)
        require(g.P.rows() == pe->P0.rows() && g.P.cols() == n &&
                    g.b.size() == n,
                tag + "P generator dims");
    }
  }
}

double eval_objective(const QcqpInstance& inst, const VectorXd& x) {
  require(x.size() == inst.n_vars, "eval_objective: dimension mismatch");
  return x.dot(inst.Q * x) + inst.c.dot(x) + inst.q;
}

double eval_constraint(const QcqpInstance& inst, int i, const VectorXd& x) {
  if (i < 0 || i >= inst.n_constraints())
    throw std::out_of_range("eval_constraint: constraint index out of range");
  require(x.size() == inst.n_vars, "eval_constraint: dimension mismatch");
  const QuadConstraint& con = inst.constraints[i];
  return x.dot(con.A * x) + con.b.dot(x) + con.gamma;
}

VectorXd objective_gradient(const QcqpInstance& inst, const VectorXd& x) {
  return 2.0 * (inst.Q * x) + inst.c;
}

VectorXd constraint_gradient(const QcqpInstance& inst, int i,
                             const VectorXd& x) {
  const QuadConstraint& con = inst.constraints[i];
  return 2.0 * (con.A * x) + con.b;
}

MatrixXd psd_from_factor(const MatrixXd& M) { return M.transpose() * M; }

MatrixXd factor_grad(const MatrixXd& M, const MatrixXd& G) {
  if (G.rows() != M.cols() || G.cols() != M.cols())
    throw std::invalid_argument("factor_grad: G must be n x n for M k x n");
  return M * (G + G.transpose());
}

MatrixXd psd_factor_of(const MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(A));
  VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return lam.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace dsur
