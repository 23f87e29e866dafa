#include "dool/stepper.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "dool/common.hpp"

namespace dool {

namespace {

/// Divergence during stepping: periodic fluxes go through the spectral
/// derivative; decaying (hermite) fluxes are projected onto the working
/// truncation and differentiated by the coefficient recurrence, which the
/// same spectral_derivative routine performs for grid-only hermite fields.
Arr stepping_divergence(const ModelSpec& model, const std::vector<SpectralField>& flux) {
    Arr div = Arr::Zero(model.basis.grid_size());
    for (int axis = 0; axis < model.basis.dim; ++axis) {
        div += spectral_derivative(flux[static_cast<std::size_t>(axis)], 1, axis).values;
    }
    return div;
}

void check_flux_shape(const ModelSpec& model, const std::vector<SpectralField>& flux, long step) {
    if (static_cast<int>(flux.size()) != model.flux_components()) {
        std::ostringstream msg;
        msg << "evolve: flux map returned " << flux.size() << " component(s), model needs "
            << model.flux_components() << " (step " << step << ")";
        throw ConfigError(msg.str());
    }
    for (const SpectralField& f : flux) {
        if (f.values.size() != model.basis.grid_size()) {
            throw ConfigError("evolve: flux component does not match the model grid");
        }
    }
}

} // namespace

Trajectory evolve(const ModelSpec& model, const SpectralField& u0, const FluxMap& flux_map,
                  double dt, double T, int record_every) {
    model.validate();
    if (!(dt > 0.0) || !(T > 0.0)) {
        throw ConfigError("evolve: dt and T must be positive");
    }
    if (record_every < 1) {
        throw ConfigError("evolve: record_every must be >= 1");
    }
    if (u0.values.size() != model.basis.grid_size()) {
        throw ConfigError("evolve: initial state does not match the model grid");
    }
    const long steps = std::lround(T / dt);
    if (steps < 1 || std::abs(steps * dt - T) > 1e-9 * std::max(1.0, T)) {
        throw ConfigError("evolve: T must be an integer number of steps N_t * dt");
    }

    Trajectory traj;
    traj.dt = dt;
    const bool conserved = model.kind() == ModelKind::conserved;

    SpectralField u = u0;
    u.basis = model.basis;

    bool energy_warned = false;
    bool positivity_warned = false;
    auto record_diagnostics = [&](long n) {
        traj.masses.push_back(quadrature(model.basis, u.values));
        try {
            traj.energies.push_back(free_energy(model, u));
        } catch (const NumericalError&) {
            traj.energies.push_back(std::numeric_limits<double>::quiet_NaN());
            if (!energy_warned) {
                std::ostringstream msg;
                msg << "free energy undefined from step " << n << ": non-positive state";
                traj.warnings.push_back(msg.str());
                energy_warned = true;
            }
        }
        if (model.name == ModelName::fokker_planck && !positivity_warned &&
            (u.values + model.shift).minCoeff() < -model.eps_u) {
            std::ostringstream msg;
            msg << "shifted state fell below -eps_u at step " << n;
            traj.warnings.push_back(msg.str());
            positivity_warned = true;
        }
    };
    auto record_state = [&](long n, const std::vector<SpectralField>& flux) {
        traj.times.push_back(static_cast<double>(n) * dt);
        traj.states.push_back(u);
        traj.fluxes.push_back(flux);
    };

    record_diagnostics(0);
    for (long n = 0; n < steps; ++n) {
        std::vector<SpectralField> flux = flux_map(u);
        check_flux_shape(model, flux, n);
        if (n % record_every == 0) {
            record_state(n, flux);
        }
        if (conserved) {
            u.values -= dt * stepping_divergence(model, flux);
        } else {
            u.values += dt * flux[0].values;
        }
        u.coeffs.reset();
        if (!u.values.allFinite()) {
            std::ostringstream msg;
            msg << "evolve: state blew up at step " << n + 1 << " (t = " << (n + 1) * dt << ")";
            throw NumericalError(msg.str());
        }
        record_diagnostics(n + 1);
    }
    std::vector<SpectralField> final_flux = flux_map(u);
    check_flux_shape(model, final_flux, steps);
    record_state(steps, final_flux);
    return traj;
}

FluxMap analytic_flux_map(const ModelSpec& model) {
    return [model](const SpectralField& u) { return analytic_flux(model, u); };
}

FluxMap net_flux_map(const ModelSpec& model, const OperatorNet& net,
                     std::vector<Eigen::VectorXd> extra_branch_inputs) {
    model.validate();
    net.validate();
    if (extra_branch_inputs.size() + 1 != net.branches.size()) {
        throw ConfigError("net_flux_map: the state feeds branch 0; every further branch "
                          "needs one fixed input vector");
    }
    if (net.components != model.flux_components()) {
        throw ConfigError("net_flux_map: network component count does not match the model");
    }
    if (net.branches[0].input_dim() != feature_dim(model.basis)) {
        throw ConfigError("net_flux_map: branch 0 input size does not match the basis features");
    }
    // trunk output is state-independent: evaluate once on the grid
    auto trunk_out = std::make_shared<Mat>(net_forward(net.trunk, trunk_inputs(model.basis)));
    return [model, net, extra = std::move(extra_branch_inputs),
            trunk_out](const SpectralField& u) {
        const CoeffVector c = project(model.basis, u.values);
        Mat b = net_forward(net.branches[0], coeff_features(model.basis, c).transpose());
        for (std::size_t i = 0; i < extra.size(); ++i) {
            b = b.cwiseProduct(net_forward(net.branches[i + 1], extra[i].transpose()));
        }
        std::vector<SpectralField> flux(static_cast<std::size_t>(net.components));
        for (int a = 0; a < net.components; ++a) {
            SpectralField& f = flux[static_cast<std::size_t>(a)];
            f.basis = model.basis;
            f.values = (trunk_out->middleCols(static_cast<long>(a) * net.latent_p, net.latent_p) *
                        b.transpose())
                           .col(0)
                           .array();
        }
        return flux;
    };
}

SpectralField divergence(const std::vector<SpectralField>& flux) {
    if (flux.empty()) {
        throw ConfigError("divergence: no flux components");
    }
    const BasisSpec& basis = flux[0].basis;
    if (basis.family != BasisFamily::fourier) {
        throw ConfigError("divergence: only periodic fluxes are supported; decaying-basis "
                          "fluxes are differentiated by coefficient recurrence inside evolve");
    }
    if (static_cast<int>(flux.size()) != basis.dim) {
        throw ConfigError("divergence: one flux component per axis is required");
    }
    SpectralField out;
    out.basis = basis;
    out.values = Arr::Zero(basis.grid_size());
    for (int axis = 0; axis < basis.dim; ++axis) {
        out.values += spectral_derivative(flux[static_cast<std::size_t>(axis)], 1, axis).values;
    }
    return out;
}

namespace {

int space_ratio(int fine, int coarse, const char* axis) {
    if (coarse < 1 || fine < coarse || fine % coarse != 0) {
        std::ostringstream msg;
        msg << "relative_l2_error: reference grid (" << fine << ") is not an integer "
            << "refinement of the trajectory grid (" << coarse << ") along " << axis;
        throw ConfigError(msg.str());
    }
    return fine / coarse;
}

} // namespace

double relative_l2_error(const Trajectory& traj, const Trajectory& ref) {
    if (traj.states.empty() || ref.states.empty()) {
        throw ConfigError("relative_l2_error: empty trajectory");
    }
    const BasisSpec& bt = traj.states[0].basis;
    const BasisSpec& br = ref.states[0].basis;
    if (bt.dim != br.dim || std::abs(bt.half_width - br.half_width) > 1e-12 ||
        (bt.dim == 2 && std::abs(bt.half_width_y - br.half_width_y) > 1e-12)) {
        throw ConfigError("relative_l2_error: domain mismatch between trajectories");
    }
    const int mx = space_ratio(br.grid_nx, bt.grid_nx, "x");
    const int my = bt.dim == 2 ? space_ratio(br.grid_ny, bt.grid_ny, "y") : 1;

    double num = 0.0;
    double den = 0.0;
    std::size_t rlo = 0;
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const double t = traj.times[i];
        // recorded times are increasing in both trajectories
        while (rlo < ref.times.size() && ref.times[rlo] < t - 1e-9) ++rlo;
        if (rlo >= ref.times.size() || std::abs(ref.times[rlo] - t) > 1e-9) {
            std::ostringstream msg;
            msg << "relative_l2_error: no matching reference time for t = " << t;
            throw ConfigError(msg.str());
        }
        const Arr& up = traj.states[i].values;
        const Arr& ur = ref.states[rlo].values;
        for (int iy = 0; iy < (bt.dim == 2 ? bt.grid_ny : 1); ++iy) {
            const long ry = static_cast<long>(iy) * my + (my - 1);
            for (int ix = 0; ix < bt.grid_nx; ++ix) {
                const long rx = static_cast<long>(ix) * mx + (mx - 1);
                const double a = up(static_cast<long>(iy) * bt.grid_nx + ix);
                const double b = ur(ry * br.grid_nx + rx);
                num += (a - b) * (a - b);
                den += b * b;
            }
        }
    }
    if (den == 0.0) {
        return std::sqrt(num);
    }
    return std::sqrt(num / den);
}

} // namespace dool
