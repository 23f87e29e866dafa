#include "dool/inverse.hpp"

#include <cmath>
#include <string>

namespace dool {

namespace {

constexpr double kSentinel = 1e30;

bool basis_equal(const BasisSpec& a, const BasisSpec& b) {
    return a.family == b.family && a.dim == b.dim && a.truncation == b.truncation &&
           a.grid_nx == b.grid_nx && a.grid_ny == b.grid_ny &&
           a.half_width == b.half_width && a.half_width_y == b.half_width_y;
}

} // namespace

void InversionProblem::validate() const {
    model.validate();
    if (model.name != ModelName::cahn_hilliard_1d && model.name != ModelName::cahn_hilliard_2d &&
        model.name != ModelName::allen_cahn)
        throw ConfigError("inversion: the identified parameter gamma1 needs a phase-field model");
    net.validate();
    if (net.branches.size() != 2)
        throw ConfigError("inversion: the forward map must be a two-branch network");
    if (!(gamma_min < gamma_max))
        throw ConfigError("inversion: need gamma_min < gamma_max");
    if (!(tol > 0.0)) throw ConfigError("inversion: tolerance must be positive");
    if (!(dt > 0.0)) throw ConfigError("inversion: forward step must be positive");
    if (!basis_equal(observations.basis, model.basis))
        throw ConfigError("inversion: observations must live on the forward model grid");
    if (observations.times.empty())
        throw ConfigError("inversion: observations must include the initial time");
    if (observations.values.size() != observations.times.size())
        throw ConfigError("inversion: one observed field per observation time is required");
    const double t0 = observations.times.front();
    for (size_t n = 0; n < observations.times.size(); ++n) {
        if (n > 0 && !(observations.times[n] > observations.times[n - 1]))
            throw ConfigError("inversion: observation times must increase strictly");
        const double steps = (observations.times[n] - t0) / dt;
        if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, std::abs(steps)))
            throw ConfigError("inversion: observation times must be whole numbers of dt");
        if (observations.values[n].size() != model.basis.grid_size())
            throw ConfigError("inversion: observed field size does not match the grid");
        if (!observations.values[n].allFinite())
            throw ConfigError("inversion: observations must be finite");
    }
}

GoldenResult golden_section_search(const std::function<double(double)>& f, double a, double b,
                                   double tol) {
    if (!(b > a)) throw ConfigError("golden section: need b > a");
    if (!(tol > 0.0)) throw ConfigError("golden section: tolerance must be positive");
    const double rho = (std::sqrt(5.0) - 1.0) / 2.0;

    GoldenResult out;
    if (b - a <= tol) {
        out.argmin = 0.5 * (a + b);
        out.value = f(out.argmin);
        out.evaluations = 1;
        return out;
    }
    double x1 = b - rho * (b - a);
    double x2 = a + rho * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    int evals = 2;
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - rho * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + rho * (b - a);
            f2 = f(x2);
        }
        ++evals;
    }
    out.argmin = 0.5 * (a + b);
    out.value = std::min(f1, f2);
    out.evaluations = evals;
    return out;
}

double misfit(double gamma1, const InversionProblem& problem) {
    problem.validate();
    if (gamma1 < problem.gamma_min || gamma1 > problem.gamma_max)
        throw ConfigError("misfit: gamma1 lies outside the search interval");

    ModelSpec forward = problem.model;
    forward.gamma1 = gamma1;
    const ObservationSet& obs = problem.observations;
    const SpectralField u0{forward.basis, obs.values.front(), std::nullopt};
    const double t0 = obs.times.front();
    const double horizon = obs.times.back() - t0;
    const FluxMap flux =
        net_flux_map(forward, problem.net, {Eigen::VectorXd::Constant(1, gamma1)});

    double total = 0.0;
    if (horizon <= 0.0) return total; // only the initial field is observed

    Trajectory traj;
    try {
        traj = evolve(forward, u0, flux, problem.dt, horizon);
    } catch (const NumericalError&) {
        return kSentinel;
    }
    for (size_t n = 0; n < obs.times.size(); ++n) {
        const auto idx = static_cast<size_t>(std::llround((obs.times[n] - t0) / problem.dt));
        total += (traj.states[idx].values - obs.values[n]).square().sum();
    }
    return std::isfinite(total) ? total : kSentinel;
}

InversionReport invert(const InversionProblem& problem) {
    problem.validate();
    InversionReport report;
    const auto probe = [&](double g) {
        const double v = misfit(g, problem);
        report.curve_gammas.push_back(g);
        report.curve_values.push_back(v);
        return v;
    };
    const GoldenResult r =
        golden_section_search(probe, problem.gamma_min, problem.gamma_max, problem.tol);
    report.gamma = r.argmin;
    report.misfit_value = r.value;
    report.evaluations = r.evaluations;
    return report;
}

} // namespace dool
