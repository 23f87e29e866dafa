#pragma once

#include <limits>
#include <string>
#include <vector>

#include "dool/models.hpp"
#include "dool/stepper.hpp"

namespace dool {

// ---- closed-form benchmark solutions -------------------------------------------

enum class ExactName { heat, heat_source, fokker_planck, damped_wave };

std::string exact_name_string(ExactName name);
ExactName exact_name_from_string(const std::string& s);

struct ExactParams {
    double beta = 2.0;       ///< fokker_planck: inverse mobility temperature
    double sigma0_sq = 1.0;  ///< fokker_planck: initial Gaussian variance
    double wave_T = 1.0;     ///< damped_wave: horizon (the profile vanishes at t = wave_T)
};

/// A closed-form space-time solution with its validity region.  `eval` and
/// `eval_dt` are pure pointwise evaluators; validity is enforced by the
/// grid-sampling helpers below, not per call.
struct ExactSolution {
    ExactName name = ExactName::heat;
    ExactParams params;
    double half_width = 0.0;  ///< spatial validity half-width (infinity: whole line)
    double horizon = std::numeric_limits<double>::infinity();  ///< temporal validity

    double eval(double x, double t) const;
    double eval_dt(double x, double t) const;  ///< closed-form time derivative
};

ExactSolution make_exact_solution(ExactName name, const ExactParams& params = {});

/// Sample the closed form on the grid of `basis` at time t, with the exact
/// expansion coefficients attached: reduced Fourier modes for the periodic
/// solutions, and quadrature-computed Hermite coefficients of the Gaussian
/// for fokker_planck (so coefficient recurrences see the true decay).
SpectralField exact_field(const ExactSolution& sol, const BasisSpec& basis, double t);

/// Closed-form time derivative sampled on the grid of `basis`.
SpectralField exact_time_derivative(const ExactSolution& sol, const BasisSpec& basis, double t);

// ---- exact propagation of periodic diffusion ------------------------------------

/// Propagate reduced Fourier coefficients under the periodic heat equation for
/// time t: mode k decays at rate (pi k / I)^2.  With the source switched on the
/// equation gains the + sin x forcing term (half-width must equal pi), which
/// feeds mode 1 toward its steady coefficient.
CoeffVector heat_propagate(const BasisSpec& basis, const CoeffVector& c0, double t,
                           bool with_source);

// ---- semi-implicit spectral reference solver -------------------------------------

/// Reference trajectories for the fourth- and second-order phase-field models
/// (cahn_hilliard, allen_cahn): the stiff linear term is treated implicitly in
/// full Fourier-coefficient space and the cubic term explicitly.  The run uses
/// the grid of u0.basis, which may be (and should be) finer than the model's
/// own grid; pass dt_ref well below the step of the run under test.  Energies
/// and masses are recorded at the same cadence as states.  Blow-up raises
/// NumericalError.
Trajectory reference_solve(const ModelSpec& model, const SpectralField& u0, double dt_ref,
                           double T, int record_every = 1);

// ---- labeled datasets for supervised baselines -----------------------------------

struct LabelRow {
    int sample_id = 0;
    double x = 0.0;
    double y = 0.0;  ///< unused when dim == 1
    double t = 0.0;
    double u = 0.0;
};

struct LabelSet {
    int dim = 1;
    std::vector<LabelRow> rows;
};

/// Ground-truth labels (sample_id, x[, y], t, u) on the model's own grid at the
/// requested times, one block per input function.  Routing: heat family by
/// exact mode propagation; fokker_planck by fine-step explicit evolution of the
/// analytic flux; cahn_hilliard / allen_cahn by the semi-implicit reference
/// solver on a 4x refined grid, restricted to the model grid.  Every requested
/// time must be a whole number of dt_ref steps (solver routes).
LabelSet generate_labels(const ModelSpec& model, const std::vector<CoeffVector>& inputs,
                         const std::vector<double>& times, double dt_ref);

} // namespace dool
