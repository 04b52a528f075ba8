#pragma once

#include <json.hpp>
#include <string>

#include "dsur/qcqp.hpp"

namespace dsur {

/// Instance schema: {n_vars, Q, c, q, constraints:[{A, b, gamma,
/// uncertainty}]} with matrices as row-major nested arrays. `uncertainty` is
/// null for certain constraints, otherwise a tagged object with "type" one
/// of "theta_ellipsoid", "frobenius_ball", "p_ellipsoid".
nlohmann::json instance_to_json(const QcqpInstance& inst);
QcqpInstance instance_from_json(const nlohmann::json& j);

QcqpInstance load_instance(const std::string& path);
void save_instance(const QcqpInstance& inst, const std::string& path);

nlohmann::json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const VectorXd& v);
VectorXd vector_from_json(const nlohmann::json& j);

}  // namespace dsur
