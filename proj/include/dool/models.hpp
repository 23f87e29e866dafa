#pragma once

#include <string>
#include <vector>

#include "dool/basis.hpp"

namespace dool {

enum class ModelName {
    heat,
    heat_source,
    fokker_planck,
    cahn_hilliard_1d,
    cahn_hilliard_2d,
    allen_cahn,
};

enum class ModelKind { conserved, nonconserved };

const char* model_name_string(ModelName name);
ModelName model_name_from_string(const std::string& s);

/// A dissipative model: Rayleighian density, free energy, analytic
/// constitutive flux, and conservation type, plus its physical parameters.
struct ModelSpec {
    ModelName name = ModelName::heat;
    BasisSpec basis;

    double beta = 1.0;        // inverse temperature (fokker_planck)
    double gamma1 = 0.1;      // interface coefficient (cahn_hilliard, allen_cahn)
    double gamma2 = 1.0;      // double-well coefficient (cahn_hilliard, allen_cahn)
    double shift = 0.0;       // C: u -> u + C inside denominators only
    double potential_a = 0.5; // V(x) = a x^2 (fokker_planck)
    double eps_u = 1e-3;      // positivity guard for denominators

    ModelKind kind() const;
    /// Number of flux components: conserved models carry a vector flux
    /// (one component per axis), the nonconserved rate is a scalar.
    int flux_components() const;
    /// True when the dissipation weight has u in a denominator.
    bool has_denominator() const;
    void validate() const;
};

/// Pointwise ingredients of the Rayleighian density
///   r(j) = sum_a A_a j_a + w2 * sum_a j_a^2,
/// evaluated on the grid of u.  All spatial derivatives of u are computed
/// spectrally here; training graphs treat A and w2 as constants.
struct RayleighianFields {
    std::vector<Arr> A; // linear weight per flux component
    Arr w2;             // quadratic weight (shared by components)
};

RayleighianFields rayleighian_fields(const ModelSpec& model, const SpectralField& u);

/// Quadrature of the Rayleighian density over the domain.
double rayleighian_loss(const ModelSpec& model, const SpectralField& u,
                        const std::vector<Arr>& flux);

/// Exact pointwise minimizer of the Rayleighian density in j (the
/// constitutive flux).  Returned fields carry coefficients whenever the flux
/// is exactly representable in the (possibly enlarged) basis.
std::vector<SpectralField> analytic_flux(const ModelSpec& model, const SpectralField& u);

/// Free energy E(u) by quadrature of the model's energy density.
double free_energy(const ModelSpec& model, const SpectralField& u);

/// Relative L2 norm of du/dt + div(analytic_flux(u)) for conserved models,
/// or du/dt - analytic_flux(u) for nonconserved ones, normalized by the L2
/// norm of du/dt (absolute norm when du/dt vanishes identically).
double pde_residual(const ModelSpec& model, const SpectralField& u, const SpectralField& dudt);

} // namespace dool
