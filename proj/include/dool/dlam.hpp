#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "dool/nn.hpp"
#include "dool/trainer.hpp"

namespace dool {

/// Normalized space-time network for the damped wave equation on
/// [-I, I] x [0, T]: the core maps (x, t) to a scalar y and the normalization
/// layer
///   u(x, t) = sin(t pi / T) y + (sin(T - t) / sin T) f(x) + (sin t / sin T) g(x)
/// pins u(., 0) = f and u(., T) = g for any core parameters.  The boundary
/// data come with their derivatives so the action can differentiate the
/// layer in closed form.
struct NdnnParams {
    NetParams core;                       // input (x, t), scalar output
    double horizon = 1.0;                 // T; sin(T) must not vanish
    double half_width = 3.141592653589793;
    double lambda = 1.0;                  // damping rate; action weight e^{2 lambda t}
    std::function<double(double)> f;      // u(x, 0)
    std::function<double(double)> df;
    std::function<double(double)> g;      // u(x, T)
    std::function<double(double)> dg;

    void validate() const;
};

double ndnn_eval(const NdnnParams& params, double x, double t);

/// {u, du/dx, du/dt} at one point, chaining input derivatives through the
/// core network and the normalization layer in closed form.
std::array<double, 3> ndnn_eval_with_grads(const NdnnParams& params, double x, double t);

/// Damped-wave energy 0.5 * integral((du/dt)^2 + (du/dx)^2) dx at time t,
/// rectangle rule on nx uniform points.
double ndnn_energy(const NdnnParams& params, double t, int nx);

/// Discrete damped action of an arbitrary field given its derivatives:
/// grads(x, t) returns {du/dt, du/dx}.  Rectangle rule with the training
/// grid convention x_k = -I + 2Ik/N_x (k = 1..N_x), t_n = nT/N_t (n = 1..N_t):
///   (2 I T / (N_x N_t)) sum e^{2 lambda t} ((du/dt)^2 - (du/dx)^2).
double action_quadrature(
    const std::function<std::pair<double, double>(double, double)>& grads, double half_width,
    double horizon, double lambda, int nx, int nt);

/// The action of the normalized network as a differentiable tape graph over
/// a registered core.  Input derivatives are produced by a tangent chain on
/// the same tape.  Returns the scalar loss node.
int build_action_graph(Tape& tape, const TapeNet& core, const NdnnParams& params, int nx,
                       int nt);

/// Value of the training objective at the given parameters.
double action_loss(const NdnnParams& params, int nx, int nt);

/// Training setup for the least-action solver.
struct DlamConfig {
    double half_width = 3.141592653589793;
    double horizon = 1.0;
    double lambda = 1.0;
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::function<double(double)> g;
    std::function<double(double)> dg;

    int depth = 3;
    int width = 40;
    Activation activation = Activation::tanh;
    int grid_nx = 48;
    int grid_nt = 48;
    int epochs = 5000;
    double lr = 5e-4;
    std::uint64_t seed = 0;
    int log_every = 100;

    void validate() const;
};

struct DlamReport {
    std::vector<double> loss_history;
    std::vector<long> logged_epochs;
    NdnnParams params;                    // trained network with its problem data
    double wall_seconds = 0.0;
};

/// Adam minimization of the discrete action.  `warm_start` (when given)
/// replaces the seeded core initialization.
DlamReport train_dlam(const DlamConfig& config, const NetParams* warm_start = nullptr);

} // namespace dool
