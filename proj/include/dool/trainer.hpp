#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dool/models.hpp"
#include "dool/operator_net.hpp"
#include "dool/oracles.hpp"

namespace dool {

/// Hyper-parameters and budgets for one training run.  The same struct drives
/// the variational trainer and the supervised baseline; fields that do not
/// apply to a given mode are ignored there.
struct TrainConfig {
    ModelSpec model;

    int depth = 3;                           // hidden layers per sub-network
    int width = 50;                          // neurons per hidden layer
    int latent_p = 120;                      // contraction width
    Activation activation = Activation::tanh;

    SamplingSpec sampling;                   // initial-condition distribution
    int n_samples = 50;                      // function samples per batch
    int n_param_draws = 0;                   // 0 = single-input network
    double param_min = 0.01;                 // gamma1 range for parameter draws
    double param_max = 0.1;

    int epochs = 20000;
    double lr = 5e-4;
    std::uint64_t seed = 0;
    int log_every = 100;

    void validate() const;
};

/// Result of a training run: the trained network, the logged loss curve, and
/// enough context to reproduce the run.
struct TrainReport {
    std::vector<double> loss_history;        // one entry per logged epoch
    std::vector<long> logged_epochs;         // epoch index of each entry
    OperatorNet net;
    double wall_seconds = 0.0;
    double floor_loss = 0.0;                 // loss of the analytic flux on the same batch
    TrainConfig config;                      // echo of the configuration used
};

/// Precomputed constants of one training batch: branch inputs, trunk points,
/// and the quadrature-folded density weights.  weight_a[l][a] multiplies flux
/// component a linearly for parameter draw l; weight_w2[l] multiplies the
/// squared flux.  Single-input batches hold exactly one draw slot.
struct DoolBatch {
    Eigen::MatrixXd branch_inputs;           // n_samples x feature_dim
    Eigen::MatrixXd param_inputs;            // n_param_draws x 1 (0 x 0 if single-input)
    Eigen::MatrixXd trunk_points;            // grid nodes x dim
    std::vector<std::vector<Mat>> weight_a;  // [draw][component], n_samples x nodes
    std::vector<Mat> weight_w2;              // [draw], n_samples x nodes
    int components = 1;
};

/// Adam minimization of a scalar tape node over registered networks, shared
/// by every trainer in the library.  Logs the pre-update loss every
/// `log_every` epochs (final epoch always included) and throws NumericalError
/// when the loss leaves the finite range, appending `locate_sample()` to the
/// message.
struct OptimizeResult {
    std::vector<double> losses;
    std::vector<long> epochs;
    double wall_seconds = 0.0;
};
OptimizeResult optimize_on_tape(Tape& tape, int loss_node, const std::vector<TapeNet>& tns,
                                const std::vector<NetParams*>& parts, int epochs, double lr,
                                int log_every,
                                const std::function<std::string()>& locate_sample);

/// The exact input-function set a run of train_dool(config) trains on
/// (deterministic in config.seed), for baselines that must share it.
std::vector<CoeffVector> training_samples(const TrainConfig& config);

/// Fold the density fields of every sample (and parameter draw) into batch
/// constants.  The trained loss built from the result equals the mean of
/// rayleighian_loss over the batch.
DoolBatch make_dool_batch(const ModelSpec& model, const std::vector<CoeffVector>& samples);
DoolBatch make_dool_batch(const ModelSpec& model, const std::vector<CoeffVector>& samples,
                          const std::vector<double>& gammas);

/// Assemble the variational loss on a tape from freshly registered networks:
/// nets = {branch [, parameter branch], trunk}.  Only network weights are
/// differentiated; every field-derived quantity enters as a constant.
/// Returns the scalar loss node; `flux_nodes` (when given) receives the flux
/// node id per [draw][component] for diagnostics.
int build_dool_loss_graph(Tape& tape, const std::vector<TapeNet>& nets, const DoolBatch& batch,
                          std::vector<std::vector<int>>* flux_nodes = nullptr);

/// Unsupervised variational training: a fixed sample set, full-batch
/// gradients, Adam updates.  Throws NumericalError with the epoch index and
/// offending sample when the loss leaves the finite range.  `warm_start`
/// (when given) overrides the seeded initialization; its shapes must match
/// the configured architecture.
TrainReport train_dool(const TrainConfig& config, const OperatorNet* warm_start = nullptr);

/// Supervised mean-squared-error baseline: the branch reads the same input
/// features, the trunk reads (x [, y], t) rows, targets come from `labels`.
/// Every sample must be labeled on one shared space-time grid.
TrainReport train_supervised(const TrainConfig& config, const std::vector<CoeffVector>& inputs,
                             const LabelSet& labels, const OperatorNet* warm_start = nullptr);

} // namespace dool
