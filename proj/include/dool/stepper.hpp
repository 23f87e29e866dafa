#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dool/models.hpp"
#include "dool/operator_net.hpp"

namespace dool {

/// Time-indexed record of an evolution.  `states`/`fluxes` hold every
/// `record_every`-th step (always including t = 0 and the final time) with
/// their times in `times`.  evolve() records energies and masses at every
/// step n (aligned with t_n = n * dt); the reference solver records them at
/// the same cadence as states.
struct Trajectory {
    double dt = 0.0;
    std::vector<double> times;
    std::vector<SpectralField> states;
    std::vector<std::vector<SpectralField>> fluxes;
    std::vector<double> energies;
    std::vector<double> masses;
    std::vector<std::string> warnings;
};

using FluxMap = std::function<std::vector<SpectralField>(const SpectralField&)>;

/// Forward-Euler evolution: u^{n+1} = u^n - dt div j^n for conserved models,
/// u^{n+1} = u^n + dt j^n for nonconserved ones.
Trajectory evolve(const ModelSpec& model, const SpectralField& u0, const FluxMap& flux_map,
                  double dt, double T, int record_every = 1);

/// The constitutive flux as a flux map (the solver's analytic reference mode).
FluxMap analytic_flux_map(const ModelSpec& model);

/// Trained operator as a flux map.  The state enters the first branch as its
/// coefficient features; `extra_branch_inputs` feed any further branches
/// (multi-input nets).  The trunk is evaluated once and cached: stepping only
/// re-runs the branch network and one small matrix product.
FluxMap net_flux_map(const ModelSpec& model, const OperatorNet& net,
                     std::vector<Eigen::VectorXd> extra_branch_inputs = {});

/// Sum of per-axis spectral derivatives of a vector flux (periodic fields
/// only; decaying-basis fluxes are differentiated inside evolve instead).
SpectralField divergence(const std::vector<SpectralField>& flux);

/// Relative space-time L2 distance between a trajectory and a reference that
/// may be denser by an integer ratio in space and/or recorded times.
double relative_l2_error(const Trajectory& traj, const Trajectory& ref);

} // namespace dool
