#pragma once

#include <vector>

#include "dool/basis.hpp"
#include "dool/nn.hpp"

namespace dool {

/// Branch-trunk operator network.  The contraction over the latent width p is
///   G(w, y) = sum_k b_k(w) t_k(y)            (single branch)
///   G(w, gamma, y) = sum_k b1_k b2_k t_k(y)  (two branches, elementwise)
/// with no bias after the contraction.  For a d-component flux the trunk's
/// final layer emits d*p entries grouped per component.
struct OperatorNet {
    std::vector<NetParams> branches; // one or two
    NetParams trunk;
    int latent_p = 1;
    int components = 1;

    void validate() const;
};

/// Trunk inputs for the basis grid, one row per grid node (x [, y]),
/// matching the row-major field layout.
Eigen::MatrixXd trunk_inputs(const BasisSpec& basis);

/// Evaluate the operator at every trunk point; returns one value array per
/// flux component, aligned with the rows of trunk_points.
std::vector<Arr> eval_flux(const OperatorNet& net,
                           const std::vector<Eigen::VectorXd>& branch_inputs,
                           const Eigen::MatrixXd& trunk_points);

nlohmann::json operator_net_to_json(const OperatorNet& net);
OperatorNet operator_net_from_json(const nlohmann::json& j);

} // namespace dool
