#include "dsur/json_io.hpp"

#include <fstream>
#include <stdexcept>

namespace dsur {

using nlohmann::json;

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty())
    throw std::invalid_argument("matrix json must be a nonempty array of rows");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols)
      throw std::invalid_argument("matrix json rows have unequal lengths");
    for (int k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

json vector_to_json(const VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

VectorXd vector_from_json(const json& j) {
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

namespace {

json triple_to_json(const PackedTriple& t) {
  return json{{"A", matrix_to_json(t.A)},
              {"b", vector_to_json(t.b)},
              {"gamma", t.gamma}};
}

PackedTriple triple_from_json(const json& j) {
  return PackedTriple{matrix_from_json(j.at("A")), vector_from_json(j.at("b")),
                      j.at("gamma").get<double>()};
}

json uncertainty_to_json(const UncertaintySet& u) {
  if (std::holds_alternative<NoUncertainty>(u)) return nullptr;
  if (const auto* te = std::get_if<ThetaEllipsoid>(&u)) {
    json gens = json::array();
    for (const PackedTriple& g : te->generators) gens.push_back(triple_to_json(g));
    return json{{"type", "theta_ellipsoid"},
                {"center", triple_to_json(te->center)},
                {"generators", std::move(gens)}};
  }
  if (const auto* fb = std::get_if<FrobeniusBall>(&u)) {
    return json{{"type", "frobenius_ball"}, {"radius", fb->radius}};
  }
  const auto& pe = std::get<PEllipsoid>(u);
  json gens = json::array();
  for (const PGenerator& g : pe.generators)
    gens.push_back(json{{"P", matrix_to_json(g.P)},
                        {"b", vector_to_json(g.b)},
                        {"gamma", g.gamma}});
  return json{{"type", "p_ellipsoid"},
              {"P0", matrix_to_json(pe.P0)},
              {"generators", std::move(gens)}};
}

UncertaintySet uncertainty_from_json(const json& j) {
  if (j.is_null()) return NoUncertainty{};
  const std::string type = j.at("type").get<std::string>();
  if (type == "theta_ellipsoid") {
    ThetaEllipsoid te;
    te.center = triple_from_json(j.at("center"));
    for (const json& g : j.at("generators")) te.generators.push_back(triple_from_json(g));
    return te;
  }
  if (type == "frobenius_ball") {
    return FrobeniusBall{j.at("radius").get<double>()};
  }
  if (type == "p_ellipsoid") {
    PEllipsoid pe;
    pe.P0 = matrix_from_json(j.at("P0"));
    for (const json& g : j.at("generators"))
      pe.generators.push_back(PGenerator{matrix_from_json(g.at("P")),
                                         vector_from_json(g.at("b")),
                                         g.at("gamma").get<double>()});
    return pe;
  }
  throw std::invalid_argument("unknown uncertainty type: " + type);
}

}  // namespace

json instance_to_json(const QcqpInstance& inst) {
  json cons = json::array();
  for (const QuadConstraint& con : inst.constraints) {
    cons.push_back(json{{"A", matrix_to_json(con.A)},
                        {"b", vector_to_json(con.b)},
                        {"gamma", con.gamma},
                        {"uncertainty", uncertainty_to_json(con.uncertainty)}});
  }
  return json{{"n_vars", inst.n_vars},
              {"Q", matrix_to_json(inst.Q)},
              {"c", vector_to_json(inst.c)},
              {"q", inst.q},
              {"constraints", std::move(cons)}};
}

QcqpInstance instance_from_json(const json& j) {
  QcqpInstance inst;
  inst.n_vars = j.at("n_vars").get<int>();
  inst.Q = symmetrize(matrix_from_json(j.at("Q")));
  inst.c = vector_from_json(j.at("c"));
  inst.q = j.at("q").get<double>();
  if (j.contains("allow_indefinite_constraints"))
    inst.allow_indefinite_constraints =
        j.at("allow_indefinite_constraints").get<bool>();
  for (const json& jc : j.at("constraints")) {
    QuadConstraint con;
    con.A = symmetrize(matrix_from_json(jc.at("A")));
    con.b = vector_from_json(jc.at("b"));
    con.gamma = jc.at("gamma").get<double>();
    con.uncertainty = jc.contains("uncertainty")
                          ? uncertainty_from_json(jc.at("uncertainty"))
                          : NoUncertainty{};
    inst.constraints.push_back(std::move(con));
  }
  validate(inst);
  return inst;
}

QcqpInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open instance file: " + path);
  json j;
  in >> j;
  return instance_from_json(j);
}

void save_instance(const QcqpInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write instance file: " + path);
  out << instance_to_json(inst).dump(2) << "\n";
}

}  // namespace dsur
