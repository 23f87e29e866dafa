#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dool/tape.hpp"

#include "json.hpp"

namespace dool {

enum class Activation { tanh, sin, identity };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& s);

struct LayerShape {
    int fan_in = 0;
    int fan_out = 0;
    Activation act = Activation::identity;
};

struct DenseLayer {
    Mat W;               // fan_out x fan_in
    Mat b;               // fan_out x 1
    Activation act = Activation::identity;
};

/// Weights of a plain fully connected network, y = act(W x + b) per layer.
struct NetParams {
    std::vector<DenseLayer> layers;

    int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().W.cols()); }
    int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().W.rows()); }
    long parameter_count() const;
    std::vector<LayerShape> shapes() const;

    /// Structural clone with all entries set to zero (gradient / moment buffers).
    NetParams zeros_like() const;
};

/// Shape list for a multilayer perceptron: `depth` hidden layers of `width`
/// neurons with activation `act`, then a linear output layer.
std::vector<LayerShape> mlp_shapes(int in_dim, int depth, int width, int out_dim, Activation act);

/// Xavier-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases.
/// Deterministic: the same (shapes, seed) always produces the same weights.
NetParams net_init(const std::vector<LayerShape>& shapes, std::uint64_t seed);

/// Forward pass over a batch; rows of X are inputs.  Returns rows of outputs.
Mat net_forward(const NetParams& net, const Mat& X);

// ---- tape integration -------------------------------------------------------

/// Parameter leaf ids of one network registered on a tape, plus activations.
struct TapeNet {
    std::vector<int> w_nodes;
    std::vector<int> b_nodes;
    std::vector<Activation> acts;
};

/// Register every layer of `net` as parameter leaves.  `net` must outlive the
/// tape and must not change shape while the tape is in use.
TapeNet register_net(Tape& tape, const NetParams& net);

/// Batched forward pass as tape nodes; returns the output node id.
int net_forward_on_tape(Tape& tape, const TapeNet& tn, int input_node);

/// Read accumulated gradients for one registered network off the tape.
NetParams collect_grads(const Tape& tape, const TapeNet& tn, const NetParams& like);

/// Builds a scalar loss from freshly registered nets (one TapeNet per entry of
/// `nets`, same order) and returns its gradients by reverse mode.
using LossBuilder = std::function<int(Tape&, const std::vector<TapeNet>&)>;
std::vector<NetParams> loss_gradient(const LossBuilder& builder,
                                     const std::vector<const NetParams*>& nets,
                                     double* loss_value = nullptr);

// ---- optimizer --------------------------------------------------------------

struct AdamConfig {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction.  step() throws NumericalError on non-finite
/// gradient entries, naming the offending layer.
class AdamState {
public:
    AdamState() = default;
    AdamState(const NetParams& net, AdamConfig cfg);
    void step(NetParams& net, const NetParams& grads);
    long step_count() const { return t_; }

private:
    AdamConfig cfg_;
    long t_ = 0;
    NetParams m_, v_;
};

// ---- checkpoints -------------------------------------------------------------

/// JSON round trip preserves every double bit-for-bit.
nlohmann::json net_to_json(const NetParams& net);
NetParams net_from_json(const nlohmann::json& j);

} // namespace dool
