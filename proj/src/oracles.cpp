#include "dool/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dool/common.hpp"

namespace dool {

namespace {

constexpr double kPi = 3.14159265358979323846;

double fp_sigma_sq(const ExactParams& p, double t) {
    const double decay = std::exp(-2.0 * t);
    return (1.0 - decay) / p.beta + p.sigma0_sq * decay;
}

double fp_sigma_sq_dt(const ExactParams& p, double t) {
    return 2.0 * std::exp(-2.0 * t) * (1.0 / p.beta - p.sigma0_sq);
}

void check_validity(const ExactSolution& sol, const BasisSpec& basis, double t) {
    if (t < -1e-12 || t > sol.horizon + 1e-12)
        throw ConfigError("exact solution '" + exact_name_string(sol.name) +
                          "' queried outside its time window");
    if (sol.name == ExactName::fokker_planck) {
        if (basis.family != BasisFamily::hermite || basis.dim != 1)
            throw ConfigError("the fokker_planck closed form lives on a 1d hermite basis");
        return;
    }
    if (basis.family != BasisFamily::fourier || basis.dim != 1)
        throw ConfigError("exact solution '" + exact_name_string(sol.name) +
                          "' lives on a 1d periodic basis");
    if (std::abs(basis.half_width - kPi) > 1e-9)
        throw ConfigError("exact solution '" + exact_name_string(sol.name) +
                          "' is periodic on half-width pi only");
    if (basis.truncation < 1)
        throw ConfigError("exact solution '" + exact_name_string(sol.name) +
                          "' needs truncation >= 1 to carry its mode-1 coefficient");
}

/// Exact hermite coefficients of the time-t Gaussian by wide-window midpoint
/// quadrature (the integrand decays fast at the window edges, so the rule is
/// spectrally accurate there).
CoeffVector fp_exact_coeffs(const ExactSolution& sol, const BasisSpec& basis, double t) {
    const double s2 = fp_sigma_sq(sol.params, t);
    const double width = std::max(10.0, 8.0 * std::sqrt(s2));
    const int nq = 40000;
    const double h = 2.0 * width / nq;
    Arr xq(nq);
    Arr uq(nq);
    for (int q = 0; q < nq; ++q) {
        xq(q) = -width + (q + 0.5) * h;
        uq(q) = sol.eval(xq(q), t);
    }
    const Eigen::VectorXd ck =
        h * (hermite_table(xq, basis.truncation).transpose() * uq.matrix());
    CoeffVector out;
    out.c.resize(static_cast<std::size_t>(basis.truncation) + 1);
    for (int k = 0; k <= basis.truncation; ++k)
        out.c[static_cast<std::size_t>(k)] = Cplx(ck(k), 0.0);
    return out;
}

} // namespace

std::string exact_name_string(ExactName name) {
    switch (name) {
    case ExactName::heat: return "heat";
    case ExactName::heat_source: return "heat_source";
    case ExactName::fokker_planck: return "fokker_planck";
    case ExactName::damped_wave: return "damped_wave";
    }
    return "unknown";
}

ExactName exact_name_from_string(const std::string& s) {
    if (s == "heat") return ExactName::heat;
    if (s == "heat_source") return ExactName::heat_source;
    if (s == "fokker_planck") return ExactName::fokker_planck;
    if (s == "damped_wave") return ExactName::damped_wave;
    throw ConfigError("unknown exact solution '" + s + "'");
}

double ExactSolution::eval(double x, double t) const {
    switch (name) {
    case ExactName::heat: return std::exp(-t) * std::sin(x) + 2.0;
    case ExactName::heat_source: return (1.0 - std::exp(-t)) * std::sin(x) + 2.0;
    case ExactName::fokker_planck: {
        const double s2 = fp_sigma_sq(params, t);
        return std::exp(-x * x / (2.0 * s2)) / std::sqrt(2.0 * kPi * s2);
    }
    case ExactName::damped_wave:
        return (1.0 - t / params.wave_T) * std::exp(-t) * std::cos(x);
    }
    return 0.0;
}

double ExactSolution::eval_dt(double x, double t) const {
    switch (name) {
    case ExactName::heat: return -std::exp(-t) * std::sin(x);
    case ExactName::heat_source: return std::exp(-t) * std::sin(x);
    case ExactName::fokker_planck: {
        const double s2 = fp_sigma_sq(params, t);
        return eval(x, t) * (x * x / (2.0 * s2 * s2) - 0.5 / s2) * fp_sigma_sq_dt(params, t);
    }
    case ExactName::damped_wave: {
        const double a_dt = -std::exp(-t) * (1.0 / params.wave_T + 1.0 - t / params.wave_T);
        return a_dt * std::cos(x);
    }
    }
    return 0.0;
}

ExactSolution make_exact_solution(ExactName name, const ExactParams& params) {
    ExactSolution sol;
    sol.name = name;
    sol.params = params;
    if (name == ExactName::fokker_planck) {
        if (params.beta <= 0.0 || params.sigma0_sq <= 0.0)
            throw ConfigError("fokker_planck closed form needs beta > 0 and sigma0_sq > 0");
        sol.half_width = std::numeric_limits<double>::infinity();
    } else {
        sol.half_width = kPi;
    }
    if (name == ExactName::damped_wave) {
        if (params.wave_T <= 0.0) throw ConfigError("damped_wave horizon must be positive");
        sol.horizon = params.wave_T;
    }
    return sol;
}

SpectralField exact_field(const ExactSolution& sol, const BasisSpec& basis, double t) {
    basis.validate();
    check_validity(sol, basis, t);

    if (sol.name == ExactName::fokker_planck) {
        SpectralField f;
        f.basis = basis;
        const Arr x = grid_points_x(basis);
        f.values.resize(x.size());
        for (int i = 0; i < x.size(); ++i) f.values(i) = sol.eval(x(i), t);
        f.coeffs = fp_exact_coeffs(sol, basis, t);
        return f;
    }

    CoeffVector c;
    c.c.assign(reduced_modes(basis).size(), Cplx(0.0, 0.0));
    switch (sol.name) {
    case ExactName::heat:
        c.c[0] = Cplx(2.0, 0.0);
        c.c[1] = Cplx(0.0, -0.5 * std::exp(-t));
        break;
    case ExactName::heat_source:
        c.c[0] = Cplx(2.0, 0.0);
        c.c[1] = Cplx(0.0, -0.5 * (1.0 - std::exp(-t)));
        break;
    case ExactName::damped_wave:
        c.c[1] = Cplx(0.5 * (1.0 - t / sol.params.wave_T) * std::exp(-t), 0.0);
        break;
    default: break;
    }
    return synthesize(basis, c);
}

SpectralField exact_time_derivative(const ExactSolution& sol, const BasisSpec& basis, double t) {
    basis.validate();
    check_validity(sol, basis, t);
    const Arr x = grid_points_x(basis);
    SpectralField out;
    out.basis = basis;
    out.values.resize(x.size());
    for (int i = 0; i < x.size(); ++i) out.values(i) = sol.eval_dt(x(i), t);
    return out;
}

CoeffVector heat_propagate(const BasisSpec& basis, const CoeffVector& c0, double t,
                           bool with_source) {
    basis.validate();
    if (basis.family != BasisFamily::fourier || basis.dim != 1)
        throw ConfigError("heat propagation needs a 1d periodic basis");
    if (c0.c.size() != reduced_modes(basis).size())
        throw ConfigError("coefficient vector does not match the basis truncation");
    if (t < 0.0) throw ConfigError("heat propagation runs forward in time only");
    if (with_source && std::abs(basis.half_width - kPi) > 1e-12)
        throw ConfigError("the sin x source is periodic on half-width pi only");
    if (with_source && basis.truncation < 1)
        throw ConfigError("the sin x source needs truncation >= 1");

    CoeffVector out = c0;
    for (int k = 0; k <= basis.truncation; ++k) {
        const double rate = kPi * k / basis.half_width;
        out.c[static_cast<std::size_t>(k)] *= std::exp(-rate * rate * t);
    }
    if (with_source) {
        const double lam = std::pow(kPi / basis.half_width, 2);
        out.c[1] += Cplx(0.0, -0.5) * ((1.0 - std::exp(-lam * t)) / lam);
    }
    return out;
}

namespace {

void transform_axis_x(std::vector<Cplx>& a, int nx, int ny, int sign) {
    std::vector<Cplx> line(static_cast<std::size_t>(nx));
    for (int iy = 0; iy < ny; ++iy) {
        const std::size_t off = static_cast<std::size_t>(iy) * nx;
        std::copy(a.begin() + off, a.begin() + off + nx, line.begin());
        dft_line(line, sign);
        std::copy(line.begin(), line.end(), a.begin() + off);
    }
}

void transform_axis_y(std::vector<Cplx>& a, int nx, int ny, int sign) {
    std::vector<Cplx> line(static_cast<std::size_t>(ny));
    for (int ix = 0; ix < nx; ++ix) {
        for (int iy = 0; iy < ny; ++iy)
            line[static_cast<std::size_t>(iy)] = a[static_cast<std::size_t>(iy) * nx + ix];
        dft_line(line, sign);
        for (int iy = 0; iy < ny; ++iy)
            a[static_cast<std::size_t>(iy) * nx + ix] = line[static_cast<std::size_t>(iy)];
    }
}

std::vector<Cplx> grid_to_spectrum(const Arr& v, int nx, int ny) {
    std::vector<Cplx> a(static_cast<std::size_t>(v.size()));
    for (int i = 0; i < v.size(); ++i) a[static_cast<std::size_t>(i)] = Cplx(v(i), 0.0);
    transform_axis_x(a, nx, ny, -1);
    if (ny > 1) transform_axis_y(a, nx, ny, -1);
    return a;
}

Arr spectrum_to_grid(std::vector<Cplx> a, int nx, int ny) {
    transform_axis_x(a, nx, ny, +1);
    if (ny > 1) transform_axis_y(a, nx, ny, +1);
    const double norm = 1.0 / (static_cast<double>(nx) * ny);
    Arr out(static_cast<long>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) out(static_cast<long>(i)) = a[i].real() * norm;
    return out;
}

} // namespace

Trajectory reference_solve(const ModelSpec& model, const SpectralField& u0, double dt_ref,
                           double T, int record_every) {
    if (model.name != ModelName::cahn_hilliard_1d &&
        model.name != ModelName::cahn_hilliard_2d && model.name != ModelName::allen_cahn)
        throw ConfigError("the reference solver supports the phase-field models only");
    u0.basis.validate();
    if (u0.basis.family != BasisFamily::fourier)
        throw ConfigError("the reference solver needs a periodic basis");
    if (u0.basis.dim != model.basis.dim ||
        std::abs(u0.basis.half_width - model.basis.half_width) > 1e-12 ||
        (u0.basis.dim == 2 && std::abs(u0.basis.half_width_y - model.basis.half_width_y) > 1e-12))
        throw ConfigError("reference grid must cover the model's domain");
    if (u0.values.size() != u0.basis.grid_size())
        throw ConfigError("initial state does not match its grid");
    if (dt_ref <= 0.0) throw ConfigError("dt_ref must be positive");
    if (T < 0.0) throw ConfigError("T must be nonnegative");
    if (record_every < 1) throw ConfigError("record_every must be >= 1");

    const long steps = std::lround(T / dt_ref);
    if (std::abs(steps * dt_ref - T) > 1e-9 * std::max(1.0, std::abs(T)))
        throw ConfigError("T must be a whole number of reference steps N_t * dt_ref");

    const int nx = u0.basis.grid_nx;
    const int ny = u0.basis.dim == 2 ? u0.basis.grid_ny : 1;
    const bool fourth_order = model.name != ModelName::allen_cahn;

    // Per-bin update factors: u_hat <- (u_hat - dt * mul * nlin_hat) / den with
    // mul = |w|^2 (conserved) or 1, den = 1 + dt * gamma1 * |w|^(4 or 2).
    std::vector<double> mul(static_cast<std::size_t>(nx) * ny);
    std::vector<double> inv_den(mul.size());
    for (int iy = 0; iy < ny; ++iy) {
        const int ky = ny > 1 ? dft_signed_mode(iy, ny) : 0;
        const double wy = ny > 1 ? kPi * ky / u0.basis.half_width_y : 0.0;
        for (int ix = 0; ix < nx; ++ix) {
            const int kx = dft_signed_mode(ix, nx);
            const double wx = kPi * kx / u0.basis.half_width;
            const double w2 = wx * wx + wy * wy;
            const std::size_t bin = static_cast<std::size_t>(iy) * nx + ix;
            mul[bin] = fourth_order ? w2 : 1.0;
            inv_den[bin] = 1.0 / (1.0 + dt_ref * model.gamma1 * (fourth_order ? w2 * w2 : w2));
        }
    }

    ModelSpec fine = model;
    fine.basis = u0.basis;

    Trajectory traj;
    traj.dt = dt_ref;
    bool energy_warned = false;

    std::vector<Cplx> uh = grid_to_spectrum(u0.values, nx, ny);
    for (long n = 0; n <= steps; ++n) {
        const Arr u = n == 0 ? u0.values : spectrum_to_grid(uh, nx, ny);
        if (!u.allFinite()) {
            std::ostringstream msg;
            msg << "reference solver blew up at step " << n << " (t = " << n * dt_ref
                << "); lower dt_ref or check the parameters";
            throw NumericalError(msg.str());
        }
        if (n % record_every == 0 || n == steps) {
            SpectralField state;
            state.basis = u0.basis;
            state.values = u;
            traj.times.push_back(n * dt_ref);
            traj.masses.push_back(quadrature(u0.basis, u));
            try {
                traj.energies.push_back(free_energy(fine, state));
            } catch (const NumericalError&) {
                traj.energies.push_back(std::numeric_limits<double>::quiet_NaN());
                if (!energy_warned) {
                    traj.warnings.push_back("free energy undefined at step " +
                                            std::to_string(n));
                    energy_warned = true;
                }
            }
            traj.states.push_back(std::move(state));
        }
        if (n == steps) break;

        const Arr nlin = model.gamma2 * (u.cube() - u);
        const std::vector<Cplx> nh = grid_to_spectrum(nlin, nx, ny);
        for (std::size_t b = 0; b < uh.size(); ++b)
            uh[b] = (uh[b] - dt_ref * mul[b] * nh[b]) * inv_den[b];
    }
    return traj;
}

namespace {

void append_rows(LabelSet& set, const BasisSpec& basis, int sample_id, double t,
                 const Arr& values) {
    const Arr x = grid_points_x(basis);
    if (basis.dim == 1) {
        for (int i = 0; i < x.size(); ++i)
            set.rows.push_back({sample_id, x(i), 0.0, t, values(i)});
        return;
    }
    const Arr y = grid_points_y(basis);
    for (int iy = 0; iy < y.size(); ++iy)
        for (int ix = 0; ix < x.size(); ++ix)
            set.rows.push_back(
                {sample_id, x(ix), y(iy), t, values(iy * basis.grid_nx + ix)});
}

/// Restrict a 4x-refined grid field to the coarse grid (offset grids share
/// every 4th node, at fine index 4 i + 3).
Arr restrict_values(const BasisSpec& coarse, const BasisSpec& fine, const Arr& v) {
    const int m = fine.grid_nx / coarse.grid_nx;
    Arr out(coarse.grid_size());
    if (coarse.dim == 1) {
        for (int i = 0; i < coarse.grid_nx; ++i) out(i) = v(m * i + m - 1);
        return out;
    }
    for (int iy = 0; iy < coarse.grid_ny; ++iy)
        for (int ix = 0; ix < coarse.grid_nx; ++ix)
            out(iy * coarse.grid_nx + ix) =
                v((m * iy + m - 1) * fine.grid_nx + (m * ix + m - 1));
    return out;
}

} // namespace

LabelSet generate_labels(const ModelSpec& model, const std::vector<CoeffVector>& inputs,
                         const std::vector<double>& times, double dt_ref) {
    model.validate();
    if (inputs.empty()) throw ConfigError("generate_labels needs at least one input function");
    if (times.empty()) throw ConfigError("generate_labels needs at least one time");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < 0.0) throw ConfigError("label times must be nonnegative");
        if (i > 0 && times[i] < times[i - 1])
            throw ConfigError("label times must be nondecreasing");
    }

    LabelSet set;
    set.dim = model.basis.dim;

    for (std::size_t b = 0; b < inputs.size(); ++b) {
        const int id = static_cast<int>(b);
        switch (model.name) {
        case ModelName::heat:
        case ModelName::heat_source: {
            const bool source = model.name == ModelName::heat_source;
            for (double t : times) {
                const CoeffVector c = heat_propagate(model.basis, inputs[b], t, source);
                append_rows(set, model.basis, id, t, synthesize(model.basis, c).values);
            }
            break;
        }
        case ModelName::fokker_planck: {
            SpectralField u = synthesize(model.basis, inputs[b]);
            const FluxMap flux = analytic_flux_map(model);
            double now = 0.0;
            for (double t : times) {
                if (t > now + 1e-12) {
                    const Trajectory seg =
                        evolve(model, u, flux, dt_ref, t - now, 1 << 30);
                    u = seg.states.back();
                    now = t;
                }
                append_rows(set, model.basis, id, t, u.values);
            }
            break;
        }
        case ModelName::cahn_hilliard_1d:
        case ModelName::cahn_hilliard_2d:
        case ModelName::allen_cahn: {
            BasisSpec fb = model.basis;
            fb.grid_nx *= 4;
            if (fb.dim == 2) fb.grid_ny *= 4;
            SpectralField u = synthesize(fb, inputs[b]);
            double now = 0.0;
            for (double t : times) {
                if (t > now + 1e-12) {
                    const Trajectory seg =
                        reference_solve(model, u, dt_ref, t - now, 1 << 30);
                    u = seg.states.back();
                    now = t;
                }
                append_rows(set, model.basis, id, t, restrict_values(model.basis, fb, u.values));
            }
            break;
        }
        }
    }
    return set;
}

} // namespace dool
