#include "dool/models.hpp"

#include <cmath>
#include <sstream>

#include "dool/common.hpp"

namespace dool {

namespace {

/// Real hermite coefficients of u, exact when the field carries them,
/// otherwise projected at the basis working truncation.
std::vector<double> hermite_coeffs_of(const SpectralField& u) {
    if (u.coeffs) {
        std::vector<double> c(u.coeffs->c.size());
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = u.coeffs->c[i].real();
        return c;
    }
    return hermite_project(u.basis, u.values, u.basis.work_modes + 1);
}

CoeffVector to_coeff_vector(const std::vector<double>& c) {
    CoeffVector out;
    out.c.resize(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out.c[i] = Cplx(c[i], 0.0);
    return out;
}

/// Basis with truncation grown to hold `count` hermite coefficients.
BasisSpec grown_hermite_basis(const BasisSpec& basis, std::size_t count) {
    BasisSpec grown = basis;
    grown.truncation = static_cast<int>(count) - 1;
    grown.work_modes = std::max(grown.work_modes, grown.truncation + 2);
    return grown;
}

void check_positivity(const ModelSpec& model, const Arr& denom) {
    const double lo = denom.minCoeff();
    if (!(lo >= model.eps_u)) {
        std::ostringstream msg;
        msg << "rayleighian density for model '" << model_name_string(model.name)
            << "': min(u + C) = " << lo << " is below the positivity guard eps_u = "
            << model.eps_u << " (C = " << model.shift
            << "); increase the shift C to keep denominators positive";
        throw NumericalError(msg.str());
    }
}

void check_field(const ModelSpec& model, const SpectralField& u, const char* where) {
    model.validate();
    if (u.values.size() != model.basis.grid_size()) {
        std::ostringstream msg;
        msg << where << ": field has " << u.values.size() << " values but the model grid has "
            << model.basis.grid_size();
        throw ConfigError(msg.str());
    }
}

/// Chemical-potential linear weight shared by the phase-field models:
///   A = -gamma1 * Lap u + gamma2 (u^3 - u)   (allen_cahn: this is A itself;
///   cahn_hilliard takes its gradient afterwards).
Arr double_well_potential(const ModelSpec& model, const SpectralField& u) {
    Arr lap = spectral_derivative(u, 2, 0).values;
    if (model.basis.dim == 2) {
        lap += spectral_derivative(u, 2, 1).values;
    }
    return -model.gamma1 * lap + model.gamma2 * (u.values.cube() - u.values);
}

} // namespace

const char* model_name_string(ModelName name) {
    switch (name) {
        case ModelName::heat: return "heat";
        case ModelName::heat_source: return "heat_source";
        case ModelName::fokker_planck: return "fokker_planck";
        case ModelName::cahn_hilliard_1d: return "cahn_hilliard_1d";
        case ModelName::cahn_hilliard_2d: return "cahn_hilliard_2d";
        case ModelName::allen_cahn: return "allen_cahn";
    }
    throw ConfigError("model_name_string: unknown model");
}

ModelName model_name_from_string(const std::string& s) {
    if (s == "heat") return ModelName::heat;
    if (s == "heat_source") return ModelName::heat_source;
    if (s == "fokker_planck") return ModelName::fokker_planck;
    if (s == "cahn_hilliard_1d") return ModelName::cahn_hilliard_1d;
    if (s == "cahn_hilliard_2d") return ModelName::cahn_hilliard_2d;
    if (s == "allen_cahn") return ModelName::allen_cahn;
    throw ConfigError("unknown model name '" + s + "'");
}

ModelKind ModelSpec::kind() const {
    return name == ModelName::allen_cahn ? ModelKind::nonconserved : ModelKind::conserved;
}

int ModelSpec::flux_components() const {
    return kind() == ModelKind::conserved ? basis.dim : 1;
}

bool ModelSpec::has_denominator() const {
    return name == ModelName::heat || name == ModelName::heat_source ||
           name == ModelName::fokker_planck;
}

void ModelSpec::validate() const {
    basis.validate();
    const bool hermite = basis.family == BasisFamily::hermite;
    if (name == ModelName::fokker_planck) {
        if (!hermite) {
            throw ConfigError("fokker_planck requires the hermite basis (decaying fields)");
        }
    } else if (hermite) {
        throw ConfigError(std::string("model '") + model_name_string(name) +
                          "' requires the fourier basis");
    }
    const int want_dim = name == ModelName::cahn_hilliard_2d ? 2 : 1;
    if (basis.dim != want_dim) {
        std::ostringstream msg;
        msg << "model '" << model_name_string(name) << "' requires a " << want_dim
            << "d basis, got " << basis.dim << "d";
        throw ConfigError(msg.str());
    }
    if (name == ModelName::fokker_planck && !(beta > 0.0)) {
        throw ConfigError("fokker_planck: beta must be positive");
    }
    const bool phase_field = name == ModelName::cahn_hilliard_1d ||
                             name == ModelName::cahn_hilliard_2d || name == ModelName::allen_cahn;
    if (phase_field && !(gamma1 >= 0.0 && gamma2 >= 0.0)) {
        throw ConfigError("phase-field models need gamma1 >= 0 and gamma2 >= 0");
    }
    if (!(eps_u > 0.0)) {
        throw ConfigError("eps_u must be positive");
    }
    if (shift < 0.0) {
        throw ConfigError("shift C must be non-negative");
    }
}

RayleighianFields rayleighian_fields(const ModelSpec& model, const SpectralField& u) {
    check_field(model, u, "rayleighian_fields");
    RayleighianFields out;

    if (model.has_denominator()) {
        const Arr denom = u.values + model.shift;
        check_positivity(model, denom);
        out.w2 = 0.5 / denom;
        const Arr dux = spectral_derivative(u, 1, 0).values;
        switch (model.name) {
            case ModelName::heat:
                out.A.push_back(dux / denom);
                break;
            case ModelName::heat_source: {
                const Arr x = grid_points_x(model.basis);
                out.A.push_back((dux - x.cos()) / denom);
                break;
            }
            case ModelName::fokker_planck: {
                const Arr x = grid_points_x(model.basis);
                // A = (beta^{-1} u' + u V') / (u + C) with V = a x^2; the
                // density's minimizer -A/(2 w2) is the constitutive flux for
                // every shift C, and C = 0 recovers beta^{-1} u'/u + V'.
                out.A.push_back((dux / model.beta + u.values * (2.0 * model.potential_a) * x) /
                                denom);
                break;
            }
            default:
                throw ConfigError("rayleighian_fields: unreachable");
        }
        return out;
    }

    out.w2 = Arr::Constant(model.basis.grid_size(), 0.5);
    const Arr mu = double_well_potential(model, u);
    if (model.name == ModelName::allen_cahn) {
        out.A.push_back(mu);
        return out;
    }
    SpectralField mu_field{model.basis, mu, std::nullopt};
    for (int axis = 0; axis < model.basis.dim; ++axis) {
        out.A.push_back(spectral_derivative(mu_field, 1, axis).values);
    }
    return out;
}

double rayleighian_loss(const ModelSpec& model, const SpectralField& u,
                        const std::vector<Arr>& flux) {
    check_field(model, u, "rayleighian_loss");
    if (static_cast<int>(flux.size()) != model.flux_components()) {
        std::ostringstream msg;
        msg << "rayleighian_loss: model '" << model_name_string(model.name) << "' expects "
            << model.flux_components() << " flux component(s), got " << flux.size();
        throw ConfigError(msg.str());
    }
    const RayleighianFields f = rayleighian_fields(model, u);
    Arr density = Arr::Zero(model.basis.grid_size());
    for (std::size_t a = 0; a < flux.size(); ++a) {
        if (flux[a].size() != model.basis.grid_size()) {
            throw ConfigError("rayleighian_loss: flux component size does not match the grid");
        }
        density += f.A[a] * flux[a] + f.w2 * flux[a].square();
    }
    return quadrature(model.basis, density);
}

std::vector<SpectralField> analytic_flux(const ModelSpec& model, const SpectralField& u) {
    check_field(model, u, "analytic_flux");
    const RayleighianFields f = rayleighian_fields(model, u);

    std::vector<SpectralField> flux;
    flux.reserve(f.A.size());
    for (const Arr& A : f.A) {
        SpectralField j;
        j.basis = model.basis;
        j.values = -A / (2.0 * f.w2);
        flux.push_back(std::move(j));
    }

    // Fokker-Planck flux j = -beta^{-1} u' - u V' shifts hermite degrees by
    // one, so it is exactly representable one mode above u's truncation;
    // attach those coefficients when u's are known so downstream divergences
    // stay in coefficient space.
    if (model.name == ModelName::fokker_planck && u.coeffs) {
        std::vector<double> c(u.coeffs->c.size());
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = u.coeffs->c[i].real();
        const std::vector<double> dc = hermite_derivative_coeffs(c);
        const std::vector<double> xc = hermite_x_multiply_coeffs(c);
        std::vector<double> jc(dc.size());
        for (std::size_t i = 0; i < jc.size(); ++i) {
            jc[i] = -dc[i] / model.beta - 2.0 * model.potential_a * xc[i];
        }
        flux[0].basis = grown_hermite_basis(model.basis, jc.size());
        flux[0].coeffs = to_coeff_vector(jc);
    }
    return flux;
}

double free_energy(const ModelSpec& model, const SpectralField& u) {
    check_field(model, u, "free_energy");
    switch (model.name) {
        case ModelName::heat:
        case ModelName::heat_source:
        case ModelName::fokker_planck: {
            const double lo = u.values.minCoeff();
            if (!(lo > 0.0)) {
                std::ostringstream msg;
                msg << "free_energy: model '" << model_name_string(model.name)
                    << "' needs u > 0 under the logarithm, got min u = " << lo;
                throw NumericalError(msg.str());
            }
            Arr density = u.values * u.values.log();
            if (model.name == ModelName::fokker_planck) {
                const Arr x = grid_points_x(model.basis);
                density = (density + u.values * model.potential_a * x.square()) / model.beta;
            }
            return quadrature(model.basis, density);
        }
        case ModelName::cahn_hilliard_1d:
        case ModelName::cahn_hilliard_2d:
        case ModelName::allen_cahn: {
            Arr grad_sq = spectral_derivative(u, 1, 0).values.square();
            if (model.basis.dim == 2) {
                grad_sq += spectral_derivative(u, 1, 1).values.square();
            }
            const Arr density = 0.5 * model.gamma1 * grad_sq +
                                0.25 * model.gamma2 * (u.values.square() - 1.0).square();
            return quadrature(model.basis, density);
        }
    }
    throw ConfigError("free_energy: unknown model");
}

double pde_residual(const ModelSpec& model, const SpectralField& u, const SpectralField& dudt) {
    check_field(model, u, "pde_residual");
    if (dudt.values.size() != model.basis.grid_size()) {
        throw ConfigError("pde_residual: du/dt size does not match the model grid");
    }
    const std::vector<SpectralField> flux = analytic_flux(model, u);

    Arr residual;
    if (model.kind() == ModelKind::nonconserved) {
        residual = dudt.values - flux[0].values;
    } else {
        Arr div = Arr::Zero(model.basis.grid_size());
        for (int axis = 0; axis < model.basis.dim; ++axis) {
            const SpectralField& j = flux[static_cast<std::size_t>(axis)];
            if (model.basis.family == BasisFamily::hermite && j.coeffs) {
                const std::vector<double> dc =
                    hermite_derivative_coeffs(hermite_coeffs_of(j));
                div += hermite_synthesize(grown_hermite_basis(model.basis, dc.size()), dc);
            } else {
                div += spectral_derivative(j, 1, axis).values;
            }
        }
        residual = dudt.values + div;
    }
    const double denom = std::sqrt(quadrature(model.basis, dudt.values.square()));
    const double num = std::sqrt(quadrature(model.basis, residual.square()));
    return denom > 0.0 ? num / denom : num;
}

} // namespace dool
