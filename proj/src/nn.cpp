#include "dool/nn.hpp"

#include <cmath>
#include <random>

#include "json.hpp"

#include "dool/common.hpp"

namespace dool {

const char* activation_name(Activation a) {
    switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::sin: return "sin";
    case Activation::identity: return "identity";
    }
    return "identity";
}

Activation activation_from_name(const std::string& s) {
    if (s == "tanh") return Activation::tanh;
    if (s == "sin") return Activation::sin;
    if (s == "identity") return Activation::identity;
    throw ConfigError("unknown activation '" + s + "' (expected tanh, sin or identity)");
}

long NetParams::parameter_count() const {
    long n = 0;
    for (const DenseLayer& l : layers) {
        n += static_cast<long>(l.W.size()) + static_cast<long>(l.b.size());
    }
    return n;
}

std::vector<LayerShape> NetParams::shapes() const {
    std::vector<LayerShape> s;
    s.reserve(layers.size());
    for (const DenseLayer& l : layers) {
        s.push_back({static_cast<int>(l.W.cols()), static_cast<int>(l.W.rows()), l.act});
    }
    return s;
}

NetParams NetParams::zeros_like() const {
    NetParams z;
    z.layers.reserve(layers.size());
    for (const DenseLayer& l : layers) {
        DenseLayer d;
        d.W = Mat::Zero(l.W.rows(), l.W.cols());
        d.b = Mat::Zero(l.b.rows(), 1);
        d.act = l.act;
        z.layers.push_back(std::move(d));
    }
    return z;
}

std::vector<LayerShape> mlp_shapes(int in_dim, int depth, int width, int out_dim, Activation act) {
    if (in_dim <= 0 || depth < 0 || width <= 0 || out_dim <= 0) {
        throw ConfigError("mlp_shapes: dimensions must be positive");
    }
    std::vector<LayerShape> s;
    int prev = in_dim;
    for (int i = 0; i < depth; ++i) {
        s.push_back({prev, width, act});
        prev = width;
    }
    s.push_back({prev, out_dim, Activation::identity});
    return s;
}

NetParams net_init(const std::vector<LayerShape>& shapes, std::uint64_t seed) {
    if (shapes.empty()) {
        throw ConfigError("net_init: empty shape list");
    }
    std::mt19937_64 rng(splitmix64(seed));
    NetParams net;
    net.layers.reserve(shapes.size());
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const LayerShape& s = shapes[i];
        if (s.fan_in <= 0 || s.fan_out <= 0) {
            throw ConfigError("net_init: layer dimensions must be positive");
        }
        if (i > 0 && s.fan_in != shapes[i - 1].fan_out) {
            throw ConfigError("net_init: fan_in of layer " + std::to_string(i) +
                              " does not match previous fan_out");
        }
        const double bound = std::sqrt(6.0 / (s.fan_in + s.fan_out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        DenseLayer l;
        l.W.resize(s.fan_out, s.fan_in);
        for (int r = 0; r < s.fan_out; ++r) {
            for (int c = 0; c < s.fan_in; ++c) {
                l.W(r, c) = dist(rng);
            }
        }
        l.b = Mat::Zero(s.fan_out, 1);
        l.act = s.act;
        net.layers.push_back(std::move(l));
    }
    return net;
}

namespace {

void apply_activation(Mat& z, Activation a) {
    switch (a) {
    case Activation::tanh: z = z.array().tanh(); break;
    case Activation::sin: z = z.array().sin(); break;
    case Activation::identity: break;
    }
}

} // namespace

Mat net_forward(const NetParams& net, const Mat& X) {
    if (net.layers.empty()) {
        throw ConfigError("net_forward: empty network");
    }
    if (X.cols() != net.input_dim()) {
        throw ConfigError("net_forward: input has " + std::to_string(X.cols()) +
                          " columns, network expects " + std::to_string(net.input_dim()));
    }
    Mat h = X;
    for (const DenseLayer& l : net.layers) {
        Mat z = h * l.W.transpose();
        z.rowwise() += l.b.col(0).transpose();
        apply_activation(z, l.act);
        h = std::move(z);
    }
    return h;
}

TapeNet register_net(Tape& tape, const NetParams& net) {
    TapeNet tn;
    for (const DenseLayer& l : net.layers) {
        tn.w_nodes.push_back(tape.param(&l.W));
        tn.b_nodes.push_back(tape.param(&l.b));
        tn.acts.push_back(l.act);
    }
    return tn;
}

int net_forward_on_tape(Tape& tape, const TapeNet& tn, int input_node) {
    int h = input_node;
    for (std::size_t i = 0; i < tn.w_nodes.size(); ++i) {
        h = tape.affine(h, tn.w_nodes[i], tn.b_nodes[i]);
        switch (tn.acts[i]) {
        case Activation::tanh: h = tape.tanh_(h); break;
        case Activation::sin: h = tape.sin_(h); break;
        case Activation::identity: break;
        }
    }
    return h;
}

NetParams collect_grads(const Tape& tape, const TapeNet& tn, const NetParams& like) {
    NetParams g = like.zeros_like();
    for (std::size_t i = 0; i < tn.w_nodes.size(); ++i) {
        const Mat& gw = tape.grad(tn.w_nodes[i]);
        const Mat& gb = tape.grad(tn.b_nodes[i]);
        if (gw.size() > 0) g.layers[i].W = gw;
        if (gb.size() > 0) g.layers[i].b = gb;
    }
    return g;
}

std::vector<NetParams> loss_gradient(const LossBuilder& builder,
                                     const std::vector<const NetParams*>& nets,
                                     double* loss_value) {
    Tape tape;
    std::vector<TapeNet> tns;
    tns.reserve(nets.size());
    for (const NetParams* n : nets) {
        tns.push_back(register_net(tape, *n));
    }
    const int root = builder(tape, tns);
    const double loss = tape.value_scalar(root);
    if (loss_value != nullptr) {
        *loss_value = loss;
    }
    tape.backward(root);
    std::vector<NetParams> grads;
    grads.reserve(nets.size());
    for (std::size_t i = 0; i < nets.size(); ++i) {
        grads.push_back(collect_grads(tape, tns[i], *nets[i]));
    }
    return grads;
}

AdamState::AdamState(const NetParams& net, AdamConfig cfg)
    : cfg_(cfg), m_(net.zeros_like()), v_(net.zeros_like()) {}

void AdamState::step(NetParams& net, const NetParams& grads) {
    if (grads.layers.size() != net.layers.size()) {
        throw ConfigError("adam: gradient / parameter layer count mismatch");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (!grads.layers[i].W.allFinite() || !grads.layers[i].b.allFinite()) {
            throw NumericalError("adam: non-finite gradient in layer " + std::to_string(i));
        }
        auto update = [&](Mat& th, Mat& m, Mat& v, const Mat& g) {
            m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
            v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
            th.array() -= cfg_.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg_.eps);
        };
        update(net.layers[i].W, m_.layers[i].W, v_.layers[i].W, grads.layers[i].W);
        update(net.layers[i].b, m_.layers[i].b, v_.layers[i].b, grads.layers[i].b);
    }
}

nlohmann::json net_to_json(const NetParams& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const DenseLayer& l : net.layers) {
        nlohmann::json weights = nlohmann::json::array();
        for (int r = 0; r < l.W.rows(); ++r) {
            for (int c = 0; c < l.W.cols(); ++c) {
                weights.push_back(l.W(r, c));
            }
        }
        nlohmann::json bias = nlohmann::json::array();
        for (int r = 0; r < l.b.rows(); ++r) {
            bias.push_back(l.b(r, 0));
        }
        layers.push_back({{"fan_in", l.W.cols()},
                          {"fan_out", l.W.rows()},
                          {"activation", activation_name(l.act)},
                          {"weights", std::move(weights)},
                          {"bias", std::move(bias)}});
    }
    return {{"layers", std::move(layers)}};
}

NetParams net_from_json(const nlohmann::json& j) {
    if (!j.contains("layers") || !j["layers"].is_array()) {
        throw ConfigError("checkpoint: missing 'layers' array");
    }
    NetParams net;
    for (const auto& jl : j["layers"]) {
        const int fan_in = jl.at("fan_in").get<int>();
        const int fan_out = jl.at("fan_out").get<int>();
        if (fan_in <= 0 || fan_out <= 0) {
            throw ConfigError("checkpoint: layer dimensions must be positive");
        }
        DenseLayer l;
        l.act = activation_from_name(jl.at("activation").get<std::string>());
        const auto& w = jl.at("weights");
        const auto& b = jl.at("bias");
        if (static_cast<long>(w.size()) != static_cast<long>(fan_in) * fan_out ||
            static_cast<long>(b.size()) != fan_out) {
            throw ConfigError("checkpoint: weight or bias array size does not match shape");
        }
        l.W.resize(fan_out, fan_in);
        long idx = 0;
        for (int r = 0; r < fan_out; ++r) {
            for (int c = 0; c < fan_in; ++c) {
                l.W(r, c) = w[idx++].get<double>();
            }
        }
        l.b.resize(fan_out, 1);
        for (int r = 0; r < fan_out; ++r) {
            l.b(r, 0) = b[r].get<double>();
        }
        net.layers.push_back(std::move(l));
    }
    if (net.layers.empty()) {
        throw ConfigError("checkpoint: no layers");
    }
    return net;
}

} // namespace dool
