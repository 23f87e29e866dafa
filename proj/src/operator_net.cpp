#include "dool/operator_net.hpp"

#include <sstream>

#include "dool/common.hpp"

namespace dool {

void OperatorNet::validate() const {
    if (branches.empty() || branches.size() > 2) {
        throw ConfigError("operator net needs one or two branch networks");
    }
    if (latent_p < 1 || components < 1) {
        throw ConfigError("operator net: latent width and component count must be positive");
    }
    for (std::size_t i = 0; i < branches.size(); ++i) {
        if (branches[i].output_dim() != latent_p) {
            std::ostringstream msg;
            msg << "branch " << i << " emits " << branches[i].output_dim()
                << " values but the latent width is " << latent_p;
            throw ConfigError(msg.str());
        }
    }
    if (trunk.output_dim() != latent_p * components) {
        std::ostringstream msg;
        msg << "trunk emits " << trunk.output_dim() << " values but " << components
            << " component(s) of width " << latent_p << " need " << latent_p * components;
        throw ConfigError(msg.str());
    }
}

Eigen::MatrixXd trunk_inputs(const BasisSpec& basis) {
    basis.validate();
    const Arr x = grid_points_x(basis);
    if (basis.dim == 1) {
        Eigen::MatrixXd pts(basis.grid_nx, 1);
        pts.col(0) = x.matrix();
        return pts;
    }
    const Arr y = grid_points_y(basis);
    Eigen::MatrixXd pts(basis.grid_size(), 2);
    for (int iy = 0; iy < basis.grid_ny; ++iy) {
        for (int ix = 0; ix < basis.grid_nx; ++ix) {
            const long r = static_cast<long>(iy) * basis.grid_nx + ix;
            pts(r, 0) = x(ix);
            pts(r, 1) = y(iy);
        }
    }
    return pts;
}

std::vector<Arr> eval_flux(const OperatorNet& net,
                           const std::vector<Eigen::VectorXd>& branch_inputs,
                           const Eigen::MatrixXd& trunk_points) {
    net.validate();
    if (branch_inputs.size() != net.branches.size()) {
        throw ConfigError("eval_flux: one input vector per branch network is required");
    }
    Mat b = net_forward(net.branches[0], branch_inputs[0].transpose());
    for (std::size_t i = 1; i < net.branches.size(); ++i) {
        b = b.cwiseProduct(net_forward(net.branches[i], branch_inputs[i].transpose()));
    }
    const Mat t = net_forward(net.trunk, trunk_points);

    std::vector<Arr> out;
    out.reserve(static_cast<std::size_t>(net.components));
    for (int a = 0; a < net.components; ++a) {
        out.emplace_back((t.middleCols(static_cast<long>(a) * net.latent_p, net.latent_p) *
                          b.transpose())
                             .col(0)
                             .array());
    }
    return out;
}

nlohmann::json operator_net_to_json(const OperatorNet& net) {
    net.validate();
    nlohmann::json j;
    j["format"] = "dool-operator-net";
    j["latent_width"] = net.latent_p;
    j["components"] = net.components;
    j["branches"] = nlohmann::json::array();
    for (const NetParams& branch : net.branches) {
        j["branches"].push_back(net_to_json(branch));
    }
    j["trunk"] = net_to_json(net.trunk);
    return j;
}

OperatorNet operator_net_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("format", "") != "dool-operator-net") {
        throw ConfigError("checkpoint is not an operator-net document");
    }
    OperatorNet net;
    net.latent_p = j.at("latent_width").get<int>();
    net.components = j.at("components").get<int>();
    for (const nlohmann::json& branch : j.at("branches")) {
        net.branches.push_back(net_from_json(branch));
    }
    net.trunk = net_from_json(j.at("trunk"));
    net.validate();
    return net;
}

} // namespace dool
