#include "dool/trainer.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <string>

namespace dool {

namespace {

bool is_phase_field(ModelName name) {
    return name == ModelName::cahn_hilliard_1d || name == ModelName::cahn_hilliard_2d ||
           name == ModelName::allen_cahn;
}

bool same_shapes(const NetParams& a, const NetParams& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (size_t i = 0; i < a.layers.size(); ++i) {
        if (a.layers[i].W.rows() != b.layers[i].W.rows()) return false;
        if (a.layers[i].W.cols() != b.layers[i].W.cols()) return false;
        if (a.layers[i].act != b.layers[i].act) return false;
    }
    return true;
}

DoolBatch build_batch(const ModelSpec& base, const std::vector<CoeffVector>& samples,
                      const std::vector<double>* gammas) {
    base.validate();
    if (samples.empty()) throw ConfigError("make_dool_batch: sample batch is empty");
    if (gammas != nullptr) {
        if (gammas->empty()) throw ConfigError("make_dool_batch: parameter draw list is empty");
        if (!is_phase_field(base.name))
            throw ConfigError("make_dool_batch: parameter draws require a phase-field model");
    }

    const BasisSpec& basis = base.basis;
    const Arr qw = quadrature_weights(basis);
    const int nb = static_cast<int>(samples.size());
    const int nd = gammas != nullptr ? static_cast<int>(gammas->size()) : 1;
    const int npts = static_cast<int>(qw.size());
    const double inv = 1.0 / (static_cast<double>(nb) * nd);

    DoolBatch batch;
    batch.components = base.flux_components();
    batch.branch_inputs.resize(nb, feature_dim(basis));
    batch.trunk_points = trunk_inputs(basis);
    batch.weight_a.assign(nd, std::vector<Mat>(batch.components, Mat(nb, npts)));
    batch.weight_w2.assign(nd, Mat(nb, npts));
    if (gammas != nullptr) {
        batch.param_inputs.resize(nd, 1);
        for (int l = 0; l < nd; ++l) batch.param_inputs(l, 0) = (*gammas)[l];
    }

    for (int b = 0; b < nb; ++b) {
        batch.branch_inputs.row(b) = coeff_features(basis, samples[b]).transpose();
        const SpectralField u = synthesize(basis, samples[b]);
        for (int l = 0; l < nd; ++l) {
            ModelSpec m = base;
            if (gammas != nullptr) m.gamma1 = (*gammas)[l];
            const RayleighianFields f = rayleighian_fields(m, u);
            for (int a = 0; a < batch.components; ++a)
                batch.weight_a[l][a].row(b) = (inv * qw * f.A[a]).matrix().transpose();
            batch.weight_w2[l].row(b) = (inv * qw * f.w2).matrix().transpose();
        }
    }
    return batch;
}

} // namespace

OptimizeResult optimize_on_tape(Tape& tape, int loss_node, const std::vector<TapeNet>& tns,
                                const std::vector<NetParams*>& parts, int epochs, double lr,
                                int log_every,
                                const std::function<std::string()>& locate_sample) {
    AdamConfig acfg;
    acfg.lr = lr;
    std::vector<AdamState> adams;
    adams.reserve(parts.size());
    for (const NetParams* p : parts) adams.emplace_back(*p, acfg);

    OptimizeResult out;
    const auto t0 = std::chrono::steady_clock::now();
    for (long e = 0; e < epochs; ++e) {
        tape.forward();
        const double loss = tape.value_scalar(loss_node);
        if (!std::isfinite(loss))
            throw NumericalError("training loss became non-finite at epoch " + std::to_string(e) +
                                 locate_sample());
        if (e % log_every == 0 || e == epochs - 1) {
            if (out.epochs.empty() || out.epochs.back() != e) {
                out.losses.push_back(loss);
                out.epochs.push_back(e);
            }
        }
        tape.backward(loss_node);
        try {
            for (size_t i = 0; i < parts.size(); ++i)
                adams[i].step(*parts[i], collect_grads(tape, tns[i], *parts[i]));
        } catch (const NumericalError& err) {
            throw NumericalError("training aborted at epoch " + std::to_string(e) + ": " +
                                 err.what());
        }
    }
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

void TrainConfig::validate() const {
    model.validate();
    if (depth < 1 || width < 1 || latent_p < 1)
        throw ConfigError("train config: depth, width, and latent_p must be at least 1");
    if (activation != Activation::tanh && activation != Activation::sin)
        throw ConfigError("train config: activation must be tanh or sin");
    if (n_samples < 1) throw ConfigError("train config: need at least one sample");
    if (epochs < 1) throw ConfigError("train config: need at least one epoch");
    if (!(lr >= 0.0) || !std::isfinite(lr))
        throw ConfigError("train config: learning rate must be finite and non-negative");
    if (log_every < 1) throw ConfigError("train config: log_every must be at least 1");
    if (n_param_draws < 0) throw ConfigError("train config: n_param_draws must be non-negative");
    if (n_param_draws > 0) {
        if (!is_phase_field(model.name))
            throw ConfigError("train config: parameter draws require a phase-field model");
        if (!(param_min > 0.0) || !(param_max >= param_min) || !std::isfinite(param_max))
            throw ConfigError("train config: parameter range must satisfy 0 < min <= max");
    }
}

DoolBatch make_dool_batch(const ModelSpec& model, const std::vector<CoeffVector>& samples) {
    return build_batch(model, samples, nullptr);
}

DoolBatch make_dool_batch(const ModelSpec& model, const std::vector<CoeffVector>& samples,
                          const std::vector<double>& gammas) {
    return build_batch(model, samples, &gammas);
}

int build_dool_loss_graph(Tape& tape, const std::vector<TapeNet>& nets, const DoolBatch& batch,
                          std::vector<std::vector<int>>* flux_nodes) {
    const bool multi = batch.param_inputs.size() > 0;
    const size_t want = multi ? 3u : 2u;
    if (nets.size() != want)
        throw ConfigError("loss graph: expected " + std::to_string(want) + " networks, got " +
                          std::to_string(nets.size()));
    const int nd = multi ? static_cast<int>(batch.param_inputs.rows()) : 1;
    if (static_cast<int>(batch.weight_a.size()) != nd ||
        static_cast<int>(batch.weight_w2.size()) != nd)
        throw ConfigError("loss graph: weight tables do not match the parameter draws");

    const int branch_out = net_forward_on_tape(tape, nets[0], tape.constant(batch.branch_inputs));
    const int trunk_out =
        net_forward_on_tape(tape, nets.back(), tape.constant(batch.trunk_points));
    const int pcols = static_cast<int>(tape.value(trunk_out).cols());
    if (pcols % batch.components != 0)
        throw ConfigError("loss graph: trunk output width is not a multiple of the component count");
    const int p = pcols / batch.components;
    if (tape.value(branch_out).cols() != p)
        throw ConfigError("loss graph: branch output width does not match the trunk latent width");

    if (flux_nodes != nullptr) flux_nodes->assign(nd, {});
    std::vector<int> terms;
    auto add_draw = [&](int b_node, int l) {
        for (int a = 0; a < batch.components; ++a) {
            const int t_a = batch.components == 1 ? trunk_out : tape.cols(trunk_out, a * p, p);
            const int flux = tape.matmul_nt(b_node, t_a);
            if (flux_nodes != nullptr) (*flux_nodes)[l].push_back(flux);
            terms.push_back(tape.dot_const(flux, batch.weight_a[l][a]));
            terms.push_back(tape.dot_const(tape.square(flux), batch.weight_w2[l]));
        }
    };
    if (!multi) {
        add_draw(branch_out, 0);
    } else {
        const int param_out =
            net_forward_on_tape(tape, nets[1], tape.constant(batch.param_inputs));
        if (tape.value(param_out).cols() != p)
            throw ConfigError("loss graph: parameter branch width does not match the latent width");
        for (int l = 0; l < nd; ++l)
            add_draw(tape.row_bcast_mul(branch_out, tape.row(param_out, l)), l);
    }
    int loss = terms.front();
    for (size_t i = 1; i < terms.size(); ++i) loss = tape.add(loss, terms[i]);
    return loss;
}

std::vector<CoeffVector> training_samples(const TrainConfig& config) {
    return sample_coefficients(config.model.basis, config.sampling, config.n_samples,
                               substream_seed(config.seed, 0xB00));
}

TrainReport train_dool(const TrainConfig& config, const OperatorNet* warm_start) {
    config.validate();
    const BasisSpec& basis = config.model.basis;
    const bool multi = config.n_param_draws > 0;

    const std::vector<CoeffVector> samples = training_samples(config);
    std::vector<double> gammas;
    if (multi) {
        std::mt19937_64 rng(substream_seed(config.seed, 0xC00));
        std::uniform_real_distribution<double> dist(config.param_min, config.param_max);
        gammas.resize(config.n_param_draws);
        for (double& g : gammas) g = dist(rng);
    }
    const DoolBatch batch = multi ? make_dool_batch(config.model, samples, gammas)
                                  : make_dool_batch(config.model, samples);

    const int comps = config.model.flux_components();
    OperatorNet net;
    net.latent_p = config.latent_p;
    net.components = comps;
    net.branches.push_back(
        net_init(mlp_shapes(feature_dim(basis), config.depth, config.width, config.latent_p,
                            config.activation),
                 substream_seed(config.seed, 0xA00)));
    if (multi)
        net.branches.push_back(net_init(
            mlp_shapes(1, config.depth, config.width, config.latent_p, config.activation),
            substream_seed(config.seed, 0xA01)));
    net.trunk = net_init(mlp_shapes(basis.dim, config.depth, config.width,
                                    comps * config.latent_p, config.activation),
                         substream_seed(config.seed, 0xA10));
    if (warm_start != nullptr) {
        warm_start->validate();
        bool ok = warm_start->branches.size() == net.branches.size() &&
                  same_shapes(warm_start->trunk, net.trunk);
        for (size_t i = 0; ok && i < net.branches.size(); ++i)
            ok = same_shapes(warm_start->branches[i], net.branches[i]);
        if (!ok) throw ConfigError("train_dool: warm start does not match the configured architecture");
        net = *warm_start;
    }

    Tape tape;
    std::vector<TapeNet> tns;
    std::vector<NetParams*> parts;
    for (NetParams& b : net.branches) {
        tns.push_back(register_net(tape, b));
        parts.push_back(&b);
    }
    tns.push_back(register_net(tape, net.trunk));
    parts.push_back(&net.trunk);

    std::vector<std::vector<int>> flux_ids;
    const int loss = build_dool_loss_graph(tape, tns, batch, &flux_ids);

    auto locate = [&tape, &batch, &flux_ids, multi]() -> std::string {
        const int nb = static_cast<int>(batch.branch_inputs.rows());
        for (size_t l = 0; l < flux_ids.size(); ++l)
            for (int b = 0; b < nb; ++b) {
                double s = 0.0;
                for (size_t a = 0; a < flux_ids[l].size(); ++a) {
                    const auto row = tape.value(flux_ids[l][a]).row(b).array();
                    s += (row * batch.weight_a[l][a].row(b).array()).sum();
                    s += (row.square() * batch.weight_w2[l].row(b).array()).sum();
                }
                if (!std::isfinite(s))
                    return multi ? " (sample " + std::to_string(b) + ", parameter draw " +
                                       std::to_string(l) + ")"
                                 : " (sample " + std::to_string(b) + ")";
            }
        return "";
    };

    const OptimizeResult out = optimize_on_tape(tape, loss, tns, parts, config.epochs, config.lr,
                                                 config.log_every, locate);

    TrainReport report;
    report.loss_history = out.losses;
    report.logged_epochs = out.epochs;
    report.wall_seconds = out.wall_seconds;
    report.config = config;

    const int nd = multi ? static_cast<int>(gammas.size()) : 1;
    double floor = 0.0;
    for (const CoeffVector& c : samples) {
        const SpectralField u = synthesize(basis, c);
        for (int l = 0; l < nd; ++l) {
            ModelSpec m = config.model;
            if (multi) m.gamma1 = gammas[l];
            const std::vector<SpectralField> jstar = analytic_flux(m, u);
            std::vector<Arr> values;
            values.reserve(jstar.size());
            for (const SpectralField& j : jstar) values.push_back(j.values);
            floor += rayleighian_loss(m, u, values);
        }
    }
    report.floor_loss = floor / (static_cast<double>(samples.size()) * nd);
    report.net = std::move(net);
    return report;
}

TrainReport train_supervised(const TrainConfig& config, const std::vector<CoeffVector>& inputs,
                             const LabelSet& labels, const OperatorNet* warm_start) {
    config.validate();
    if (inputs.empty()) throw ConfigError("train_supervised: no input functions");
    const BasisSpec& basis = config.model.basis;
    if (labels.dim != basis.dim)
        throw ConfigError("train_supervised: label dimension does not match the model basis");
    const int nb = static_cast<int>(inputs.size());
    if (labels.rows.empty() || labels.rows.size() % static_cast<size_t>(nb) != 0)
        throw ConfigError("train_supervised: label rows must split evenly across the inputs");
    const int per = static_cast<int>(labels.rows.size()) / nb;
    const int tdim = basis.dim + 1;

    Eigen::MatrixXd xt(per, tdim);
    Mat targets(nb, per);
    for (int b = 0; b < nb; ++b)
        for (int r = 0; r < per; ++r) {
            const LabelRow& row = labels.rows[static_cast<size_t>(b) * per + r];
            if (row.sample_id != b)
                throw ConfigError("train_supervised: label rows must be grouped by sample");
            Eigen::RowVectorXd pt(tdim);
            pt(0) = row.x;
            if (basis.dim == 2) pt(1) = row.y;
            pt(tdim - 1) = row.t;
            if (b == 0) {
                xt.row(r) = pt;
            } else if ((xt.row(r) - pt).cwiseAbs().maxCoeff() != 0.0) {
                throw ConfigError("train_supervised: all samples must share one space-time grid");
            }
            targets(b, r) = row.u;
        }

    Eigen::MatrixXd feats(nb, feature_dim(basis));
    for (int b = 0; b < nb; ++b) feats.row(b) = coeff_features(basis, inputs[b]).transpose();

    OperatorNet net;
    net.latent_p = config.latent_p;
    net.components = 1;
    net.branches.push_back(
        net_init(mlp_shapes(feature_dim(basis), config.depth, config.width, config.latent_p,
                            config.activation),
                 substream_seed(config.seed, 0xA00)));
    net.trunk = net_init(
        mlp_shapes(tdim, config.depth, config.width, config.latent_p, config.activation),
        substream_seed(config.seed, 0xA10));
    if (warm_start != nullptr) {
        warm_start->validate();
        const bool ok = warm_start->branches.size() == 1 &&
                        same_shapes(warm_start->branches[0], net.branches[0]) &&
                        same_shapes(warm_start->trunk, net.trunk);
        if (!ok)
            throw ConfigError(
                "train_supervised: warm start does not match the configured architecture");
        net = *warm_start;
    }

    Tape tape;
    std::vector<TapeNet> tns{register_net(tape, net.branches[0])};
    std::vector<NetParams*> parts{&net.branches[0]};
    tns.push_back(register_net(tape, net.trunk));
    parts.push_back(&net.trunk);

    const int b_out = net_forward_on_tape(tape, tns[0], tape.constant(feats));
    const int t_out = net_forward_on_tape(tape, tns[1], tape.constant(xt));
    const int pred = tape.matmul_nt(b_out, t_out);
    const int diff = tape.add_const(pred, -targets);
    const int loss = tape.dot_const(
        tape.square(diff), Mat::Constant(nb, per, 1.0 / (static_cast<double>(nb) * per)));

    auto locate = [&tape, diff, nb]() -> std::string {
        const Mat& d = tape.value(diff);
        for (int b = 0; b < nb; ++b)
            if (!d.row(b).allFinite()) return " (sample " + std::to_string(b) + ")";
        return "";
    };

    const OptimizeResult out = optimize_on_tape(tape, loss, tns, parts, config.epochs, config.lr,
                                                 config.log_every, locate);

    TrainReport report;
    report.loss_history = out.losses;
    report.logged_epochs = out.epochs;
    report.wall_seconds = out.wall_seconds;
    report.config = config;
    report.floor_loss = 0.0;
    report.net = std::move(net);
    return report;
}

} // namespace dool
