#include "dool/dlam.hpp"

#include <cmath>
#include <string>

#include "dool/common.hpp"

namespace dool {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSinFloor = 1e-12;

/// Normalization-layer factors and their time derivatives at one time.
struct PhiFactors {
    double phi;    // sin(t pi / T), multiplies the core output
    double phi_t;  // (pi / T) cos(t pi / T)
    double cf;     // sin(T - t) / sin(T), multiplies f
    double cf_t;   // -cos(T - t) / sin(T)
    double cg;     // sin(t) / sin(T), multiplies g
    double cg_t;   // cos(t) / sin(T)
};

PhiFactors phi_factors(double t, double T) {
    const double s = std::sin(T);
    PhiFactors p;
    p.phi = std::sin(t * kPi / T);
    p.phi_t = kPi / T * std::cos(t * kPi / T);
    p.cf = std::sin(T - t) / s;
    p.cf_t = -std::cos(T - t) / s;
    p.cg = std::sin(t) / s;
    p.cg_t = std::cos(t) / s;
    return p;
}

/// Core output and its input derivatives at one point.
std::array<double, 3> core_with_grads(const NetParams& core, double x, double t) {
    Eigen::VectorXd a(2);
    a << x, t;
    Eigen::VectorXd dax = Eigen::VectorXd::Zero(2);
    Eigen::VectorXd dat = Eigen::VectorXd::Zero(2);
    dax(0) = 1.0;
    dat(1) = 1.0;
    for (const DenseLayer& layer : core.layers) {
        const Eigen::VectorXd z = layer.W * a + layer.b;
        Eigen::VectorXd dzx = layer.W * dax;
        Eigen::VectorXd dzt = layer.W * dat;
        switch (layer.act) {
        case Activation::tanh: {
            a = z.array().tanh().matrix();
            const Eigen::ArrayXd s = 1.0 - a.array().square();
            dax = (s * dzx.array()).matrix();
            dat = (s * dzt.array()).matrix();
            break;
        }
        case Activation::sin: {
            const Eigen::ArrayXd c = z.array().cos();
            a = z.array().sin().matrix();
            dax = (c * dzx.array()).matrix();
            dat = (c * dzt.array()).matrix();
            break;
        }
        case Activation::identity:
            a = z;
            dax = dzx;
            dat = dzt;
            break;
        }
    }
    return {a(0), dax(0), dat(0)};
}

void check_grid(int nx, int nt) {
    if (nx < 2 || nt < 2) throw ConfigError("action grid needs at least 2 x 2 points");
}

} // namespace

void NdnnParams::validate() const {
    if (core.layers.empty() || core.input_dim() != 2 || core.output_dim() != 1)
        throw ConfigError("normalized network core must map (x, t) to one value");
    if (!(horizon > 0.0)) throw ConfigError("normalized network: horizon must be positive");
    if (std::abs(std::sin(horizon)) <= kSinFloor)
        throw ConfigError(
            "normalized network: sin(T) vanishes, the normalization layer is undefined");
    if (!(half_width > 0.0)) throw ConfigError("normalized network: half-width must be positive");
    if (!std::isfinite(lambda)) throw ConfigError("normalized network: damping must be finite");
    if (!f || !df || !g || !dg)
        throw ConfigError("normalized network: boundary data and derivatives are required");
}

double ndnn_eval(const NdnnParams& params, double x, double t) {
    return ndnn_eval_with_grads(params, x, t)[0];
}

std::array<double, 3> ndnn_eval_with_grads(const NdnnParams& params, double x, double t) {
    params.validate();
    const auto [y, yx, yt] = core_with_grads(params.core, x, t);
    const PhiFactors p = phi_factors(t, params.horizon);
    const double fx = params.f(x);
    const double gx = params.g(x);
    const double u = p.phi * y + p.cf * fx + p.cg * gx;
    const double ux = p.phi * yx + p.cf * params.df(x) + p.cg * params.dg(x);
    const double ut = p.phi_t * y + p.phi * yt + p.cf_t * fx + p.cg_t * gx;
    return {u, ux, ut};
}

double ndnn_energy(const NdnnParams& params, double t, int nx) {
    params.validate();
    if (nx < 2) throw ConfigError("energy quadrature needs at least two points");
    const double I = params.half_width;
    double sum = 0.0;
    for (int k = 1; k <= nx; ++k) {
        const auto [u, ux, ut] = ndnn_eval_with_grads(params, -I + 2.0 * I * k / nx, t);
        (void)u;
        sum += 0.5 * (ut * ut + ux * ux);
    }
    return sum * 2.0 * I / nx;
}

double action_quadrature(
    const std::function<std::pair<double, double>(double, double)>& grads, double half_width,
    double horizon, double lambda, int nx, int nt) {
    if (!grads) throw ConfigError("action quadrature: derivative callback is required");
    if (!(half_width > 0.0) || !(horizon > 0.0))
        throw ConfigError("action quadrature: domain measures must be positive");
    check_grid(nx, nt);
    const double cell = 2.0 * half_width * horizon / (static_cast<double>(nx) * nt);
    double sum = 0.0;
    for (int n = 1; n <= nt; ++n) {
        const double t = horizon * n / nt;
        const double w = std::exp(2.0 * lambda * t);
        for (int k = 1; k <= nx; ++k) {
            const double x = -half_width + 2.0 * half_width * k / nx;
            const auto [ut, ux] = grads(x, t);
            sum += w * (ut * ut - ux * ux);
        }
    }
    return cell * sum;
}

int build_action_graph(Tape& tape, const TapeNet& core, const NdnnParams& params, int nx,
                       int nt) {
    params.validate();
    check_grid(nx, nt);
    if (core.w_nodes.size() != params.core.layers.size())
        throw ConfigError("action graph: registered core does not match the parameters");

    const int n = nx * nt;
    Mat grid(n, 2);
    Mat phi(n, 1), phi_t(n, 1), psi_x(n, 1), psi_t(n, 1), weight(n, 1);
    const double I = params.half_width;
    const double T = params.horizon;
    const double cell = 2.0 * I * T / static_cast<double>(n);
    for (int m = 0; m < nt; ++m) {
        const double t = T * (m + 1) / nt;
        const PhiFactors p = phi_factors(t, T);
        for (int k = 0; k < nx; ++k) {
            const double x = -I + 2.0 * I * (k + 1) / nx;
            const int r = m * nx + k;
            grid(r, 0) = x;
            grid(r, 1) = t;
            phi(r, 0) = p.phi;
            phi_t(r, 0) = p.phi_t;
            psi_x(r, 0) = p.cf * params.df(x) + p.cg * params.dg(x);
            psi_t(r, 0) = p.cf_t * params.f(x) + p.cg_t * params.g(x);
            weight(r, 0) = cell * std::exp(2.0 * params.lambda * t);
        }
    }

    // Tangent chain: push values and both input derivatives through every
    // layer on the same tape.
    int a = tape.constant(grid);
    Mat ex = Mat::Zero(n, 2), et = Mat::Zero(n, 2);
    ex.col(0).setOnes();
    et.col(1).setOnes();
    int dax = tape.constant(ex);
    int dat = tape.constant(et);
    for (size_t l = 0; l < core.w_nodes.size(); ++l) {
        const int z = tape.affine(a, core.w_nodes[l], core.b_nodes[l]);
        const int dzx = tape.linear(dax, core.w_nodes[l]);
        const int dzt = tape.linear(dat, core.w_nodes[l]);
        switch (core.acts[l]) {
        case Activation::tanh: {
            const int s = tape.sech2(z);
            a = tape.tanh_(z);
            dax = tape.mul(s, dzx);
            dat = tape.mul(s, dzt);
            break;
        }
        case Activation::sin: {
            const int c = tape.cos_(z);
            a = tape.sin_(z);
            dax = tape.mul(c, dzx);
            dat = tape.mul(c, dzt);
            break;
        }
        case Activation::identity:
            a = z;
            dax = dzx;
            dat = dzt;
            break;
        }
    }

    const int ux = tape.add_const(tape.mul_const(dax, phi), psi_x);
    const int ut = tape.add_const(
        tape.add(tape.mul_const(a, phi_t), tape.mul_const(dat, phi)), psi_t);
    return tape.add(tape.dot_const(tape.square(ut), weight),
                    tape.dot_const(tape.square(ux), -weight));
}

double action_loss(const NdnnParams& params, int nx, int nt) {
    Tape tape;
    const TapeNet tn = register_net(tape, params.core);
    return tape.value_scalar(build_action_graph(tape, tn, params, nx, nt));
}

void DlamConfig::validate() const {
    if (!f || !df || !g || !dg)
        throw ConfigError("least-action config: boundary data and derivatives are required");
    if (!(horizon > 0.0) || !(half_width > 0.0))
        throw ConfigError("least-action config: domain measures must be positive");
    if (std::abs(std::sin(horizon)) <= kSinFloor)
        throw ConfigError("least-action config: sin(T) vanishes");
    if (!std::isfinite(lambda)) throw ConfigError("least-action config: damping must be finite");
    if (depth < 1 || width < 1)
        throw ConfigError("least-action config: depth and width must be at least 1");
    if (activation != Activation::tanh && activation != Activation::sin)
        throw ConfigError("least-action config: activation must be tanh or sin");
    check_grid(grid_nx, grid_nt);
    if (epochs < 1) throw ConfigError("least-action config: need at least one epoch");
    if (!(lr >= 0.0) || !std::isfinite(lr))
        throw ConfigError("least-action config: learning rate must be finite and non-negative");
    if (log_every < 1) throw ConfigError("least-action config: log_every must be at least 1");
}

DlamReport train_dlam(const DlamConfig& config, const NetParams* warm_start) {
    config.validate();

    NdnnParams params;
    params.core = net_init(mlp_shapes(2, config.depth, config.width, 1, config.activation),
                           substream_seed(config.seed, 0xD00));
    if (warm_start != nullptr) {
        const auto want = params.core.shapes();
        const auto got = warm_start->shapes();
        bool ok = want.size() == got.size();
        for (size_t i = 0; ok && i < want.size(); ++i)
            ok = want[i].fan_in == got[i].fan_in && want[i].fan_out == got[i].fan_out &&
                 want[i].act == got[i].act;
        if (!ok)
            throw ConfigError("train_dlam: warm start does not match the configured architecture");
        params.core = *warm_start;
    }
    params.horizon = config.horizon;
    params.half_width = config.half_width;
    params.lambda = config.lambda;
    params.f = config.f;
    params.df = config.df;
    params.g = config.g;
    params.dg = config.dg;

    Tape tape;
    const TapeNet tn = register_net(tape, params.core);
    const int loss = build_action_graph(tape, tn, params, config.grid_nx, config.grid_nt);
    const OptimizeResult out =
        optimize_on_tape(tape, loss, {tn}, {&params.core}, config.epochs, config.lr,
                         config.log_every, [] { return std::string(); });

    DlamReport report;
    report.loss_history = out.losses;
    report.logged_epochs = out.epochs;
    report.wall_seconds = out.wall_seconds;
    report.params = std::move(params);
    return report;
}

} // namespace dool
