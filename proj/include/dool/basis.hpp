#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "dool/common.hpp"

namespace dool {

using Arr = Eigen::ArrayXd;
using Cplx = std::complex<double>;

enum class BasisFamily { fourier, hermite };

const char* basis_family_name(BasisFamily f);
BasisFamily basis_family_from_name(const std::string& s);

/// Spectral discretization of [-I, I]^dim with uniform grid x_k = -I + 2kI/N,
/// k = 1..N (so the left endpoint is excluded, the right included).
///
/// fourier: plane waves exp(i pi k x / I); truncation K keeps |k| <= K with
///   coefficients stored over the conjugate-reduced half (real fields).
/// hermite: normalized Hermite functions psi_k (degree 0..K); the grid covers
///   the same interval and all fields are assumed negligible at |x| = I.
struct BasisSpec {
    BasisFamily family = BasisFamily::fourier;
    int dim = 1;
    double half_width = 3.141592653589793;   // I (x direction)
    double half_width_y = 3.141592653589793; // I (y direction, dim == 2)
    int truncation = 1;                      // K
    int grid_nx = 128;
    int grid_ny = 1;
    /// Working truncation for projecting grid-only hermite fields (flux
    /// divergence during stepping).  Kept modest: high-degree modes are not
    /// resolvable on [-I, I].
    int work_modes = 12;

    long grid_size() const { return static_cast<long>(grid_nx) * (dim == 2 ? grid_ny : 1); }
    void validate() const;
};

struct ModeIndex {
    int kx = 0;
    int ky = 0;
};

/// Conjugate-reduced mode list, sorted lexicographically by (kx, ky):
///   1d fourier: k = 0..K
///   2d fourier: (0,0), (0,1)..(0,K), then kx=1..K with ky=-K..K
///   hermite:    k = 0..K (real coefficients)
std::vector<ModeIndex> reduced_modes(const BasisSpec& basis);

/// Coefficients aligned with reduced_modes().  For fourier the omitted
/// negative-half modes are implied by conjugation, c_{-k} = conj(c_k);
/// self-conjugate modes must be real.  For hermite imaginary parts are zero.
struct CoeffVector {
    std::vector<Cplx> c;
};

/// Field sampled on the grid of `basis`, optionally carrying the truncated
/// coefficients it was synthesized from.  2d values are row-major with x
/// fastest: values[iy * grid_nx + ix].
struct SpectralField {
    BasisSpec basis;
    Arr values;
    std::optional<CoeffVector> coeffs;
};

Arr grid_points_x(const BasisSpec& basis);
Arr grid_points_y(const BasisSpec& basis);

/// Sum of basis functions weighted by coefficients, evaluated on the grid.
/// Throws NumericalError if a self-conjugate fourier mode has an imaginary
/// part (broken Hermitian symmetry: the field would not be real).
SpectralField synthesize(const BasisSpec& basis, const CoeffVector& coeffs);

/// Truncated coefficients of grid values (discrete transform / quadrature
/// inner products).  Exact for fields band-limited to the truncation.
CoeffVector project(const BasisSpec& basis, const Arr& values);

/// Coefficients over modes 0..count-1 for a 1d hermite grid field (used by
/// the stepper with count = work_modes, independent of the branch truncation).
std::vector<double> hermite_project(const BasisSpec& basis, const Arr& values, int count);
Arr hermite_synthesize(const BasisSpec& basis, const std::vector<double>& coeffs);

/// Spectral derivative of given order along axis (0 = x, 1 = y).
/// fourier: full-spectrum coefficient multiplication by (i pi k / I)^order.
/// hermite: recurrence on coefficients (exact if the field carries them,
/// otherwise projected at work_modes first).
SpectralField spectral_derivative(const SpectralField& field, int order, int axis = 0);

/// Rectangle-rule integral over the domain, (2I/N) sum (tensorized in 2d).
double quadrature(const BasisSpec& basis, const Arr& values);
Arr quadrature_weights(const BasisSpec& basis);

// ---- coefficient calculus (hermite) -----------------------------------------

/// psi_k(x) for k = 0..kmax, one column per k.
Eigen::MatrixXd hermite_table(const Arr& x, int kmax);

/// Coefficients of u' given coefficients of u (output one mode longer):
/// psi_k' = sqrt(k/2) psi_{k-1} - sqrt((k+1)/2) psi_{k+1}.
std::vector<double> hermite_derivative_coeffs(const std::vector<double>& c);

/// Coefficients of x*u given coefficients of u (output one mode longer):
/// x psi_k = sqrt((k+1)/2) psi_{k+1} + sqrt(k/2) psi_{k-1}.
std::vector<double> hermite_x_multiply_coeffs(const std::vector<double>& c);

// ---- sampling ----------------------------------------------------------------

/// Uniform rectangles per reduced mode, centered at `center0` for mode 0 and
/// at 0 elsewhere, with half-width base_width * 2^{-|k|} per real/imaginary
/// part (|k| = max(|kx|, |ky|)).  Self-conjugate modes draw only a real part.
/// If positivity_floor > 0, draws whose synthesized minimum falls below the
/// floor are rejected and redrawn (bounded retries).
struct SamplingSpec {
    double base_width = 0.5;
    double center0 = 0.0;
    double positivity_floor = 0.0;
    int max_retries = 1000;
};

/// Deterministic per (seed, sample index): sample i only consumes its own
/// substream, so any prefix of the batch is reproducible in isolation.
std::vector<CoeffVector> sample_coefficients(const BasisSpec& basis, const SamplingSpec& spec,
                                             int count, std::uint64_t seed);

/// Branch-input encoding: interleaved (Re, Im) per fourier mode in reduced
/// order, or the real coefficients for hermite.
Eigen::VectorXd coeff_features(const BasisSpec& basis, const CoeffVector& coeffs);
int feature_dim(const BasisSpec& basis);

// ---- full-spectrum helpers (used by the stepper) ------------------------------

/// Full DFT spectrum of a real 1d grid field; entry m holds the coefficient
/// of exp(i pi k x / I) with k = m for m < N/2 and k = m - N otherwise.
std::vector<Cplx> fourier_full_spectrum(const Arr& values, double half_width);
Arr fourier_from_full_spectrum(const std::vector<Cplx>& spectrum, double half_width);

/// In-place complex DFT of one line: sign=-1 forward, sign=+1 inverse, both
/// unnormalized.  Bin m corresponds to signed wavenumber index m (m < N/2)
/// or m - N.  Radix-2 for power-of-two lengths, direct evaluation otherwise.
void dft_line(std::vector<Cplx>& line, int sign);

/// Signed wavenumber index of DFT bin m on an N-point line.
int dft_signed_mode(int m, int n);

} // namespace dool
