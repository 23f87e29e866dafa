#include "dool/basis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace dool {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

const char* basis_family_name(BasisFamily f) {
    return f == BasisFamily::fourier ? "fourier" : "hermite";
}

BasisFamily basis_family_from_name(const std::string& s) {
    if (s == "fourier") return BasisFamily::fourier;
    if (s == "hermite") return BasisFamily::hermite;
    throw ConfigError("unknown basis family '" + s + "' (expected fourier or hermite)");
}

void BasisSpec::validate() const {
    if (dim != 1 && dim != 2) {
        throw ConfigError("basis: dim must be 1 or 2");
    }
    if (half_width <= 0.0 || (dim == 2 && half_width_y <= 0.0)) {
        throw ConfigError("basis: half_width must be positive");
    }
    if (truncation < 0) {
        throw ConfigError("basis: truncation must be non-negative");
    }
    if (grid_nx <= 0 || (dim == 2 && grid_ny <= 0)) {
        throw ConfigError("basis: grid size must be positive");
    }
    if (family == BasisFamily::fourier) {
        if (grid_nx <= 2 * truncation || (dim == 2 && grid_ny <= 2 * truncation)) {
            throw ConfigError("basis: grid must resolve the truncation (N > 2K)");
        }
    } else {
        if (dim != 1) {
            throw ConfigError("basis: hermite supports dim == 1 only");
        }
        if (grid_nx <= truncation) {
            throw ConfigError("basis: grid must resolve the truncation");
        }
        if (work_modes < truncation + 2) {
            throw ConfigError("basis: work_modes must be at least truncation + 2");
        }
    }
}

std::vector<ModeIndex> reduced_modes(const BasisSpec& basis) {
    std::vector<ModeIndex> m;
    const int K = basis.truncation;
    if (basis.family == BasisFamily::hermite || basis.dim == 1) {
        for (int k = 0; k <= K; ++k) {
            m.push_back({k, 0});
        }
        return m;
    }
    for (int ky = 0; ky <= K; ++ky) {
        m.push_back({0, ky});
    }
    for (int kx = 1; kx <= K; ++kx) {
        for (int ky = -K; ky <= K; ++ky) {
            m.push_back({kx, ky});
        }
    }
    return m;
}

Arr grid_points_x(const BasisSpec& basis) {
    Arr x(basis.grid_nx);
    for (int k = 1; k <= basis.grid_nx; ++k) {
        x(k - 1) = -basis.half_width + 2.0 * basis.half_width * k / basis.grid_nx;
    }
    return x;
}

Arr grid_points_y(const BasisSpec& basis) {
    if (basis.dim != 2) {
        throw ConfigError("basis: y grid requested for a 1d basis");
    }
    Arr y(basis.grid_ny);
    for (int k = 1; k <= basis.grid_ny; ++k) {
        y(k - 1) = -basis.half_width_y + 2.0 * basis.half_width_y * k / basis.grid_ny;
    }
    return y;
}

namespace {

bool self_conjugate(const ModeIndex& m) { return m.kx == 0 && m.ky == 0; }

void check_real_representable(const BasisSpec& basis, const CoeffVector& coeffs,
                              const std::vector<ModeIndex>& modes) {
    if (coeffs.c.size() != modes.size()) {
        throw NumericalError("coefficients: expected " + std::to_string(modes.size()) +
                             " modes, got " + std::to_string(coeffs.c.size()));
    }
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const bool must_be_real =
            basis.family == BasisFamily::hermite || self_conjugate(modes[i]);
        if (must_be_real && coeffs.c[i].imag() != 0.0) {
            throw NumericalError(
                "coefficients: mode (" + std::to_string(modes[i].kx) + "," +
                std::to_string(modes[i].ky) +
                ") must be real for a real field (broken Hermitian symmetry)");
        }
    }
}

} // namespace

Eigen::MatrixXd hermite_table(const Arr& x, int kmax) {
    const auto n = x.size();
    Eigen::MatrixXd t(n, kmax + 1);
    const Arr env = (-0.5 * x.square()).exp() / std::pow(kPi, 0.25);
    t.col(0) = env.matrix();
    if (kmax >= 1) {
        t.col(1) = (std::sqrt(2.0) * x * env).matrix();
    }
    for (int k = 1; k < kmax; ++k) {
        // psi_{k+1} = x sqrt(2/(k+1)) psi_k - sqrt(k/(k+1)) psi_{k-1}
        t.col(k + 1) = (x * std::sqrt(2.0 / (k + 1)) * t.col(k).array()).matrix() -
                       std::sqrt(static_cast<double>(k) / (k + 1)) * t.col(k - 1);
    }
    return t;
}

std::vector<double> hermite_derivative_coeffs(const std::vector<double>& c) {
    const int n = static_cast<int>(c.size());
    std::vector<double> d(static_cast<std::size_t>(n) + 1, 0.0);
    for (int k = 0; k < n; ++k) {
        if (k >= 1) d[k - 1] += std::sqrt(k / 2.0) * c[k];
        d[k + 1] -= std::sqrt((k + 1) / 2.0) * c[k];
    }
    return d;
}

std::vector<double> hermite_x_multiply_coeffs(const std::vector<double>& c) {
    const int n = static_cast<int>(c.size());
    std::vector<double> d(static_cast<std::size_t>(n) + 1, 0.0);
    for (int k = 0; k < n; ++k) {
        if (k >= 1) d[k - 1] += std::sqrt(k / 2.0) * c[k];
        d[k + 1] += std::sqrt((k + 1) / 2.0) * c[k];
    }
    return d;
}

SpectralField synthesize(const BasisSpec& basis, const CoeffVector& coeffs) {
    basis.validate();
    const auto modes = reduced_modes(basis);
    check_real_representable(basis, coeffs, modes);

    SpectralField f;
    f.basis = basis;
    f.coeffs = coeffs;

    if (basis.family == BasisFamily::hermite) {
        std::vector<double> cr(coeffs.c.size());
        for (std::size_t i = 0; i < coeffs.c.size(); ++i) cr[i] = coeffs.c[i].real();
        f.values = hermite_synthesize(basis, cr);
        return f;
    }

    const Arr x = grid_points_x(basis);
    if (basis.dim == 1) {
        Arr v = Arr::Zero(basis.grid_nx);
        for (std::size_t i = 0; i < modes.size(); ++i) {
            const int k = modes[i].kx;
            const double w = kPi * k / basis.half_width;
            if (k == 0) {
                v += coeffs.c[i].real();
            } else {
                // c_k e^{iwx} + conj: 2 Re(c) cos(wx) - 2 Im(c) sin(wx)
                v += 2.0 * coeffs.c[i].real() * (w * x).cos() -
                     2.0 * coeffs.c[i].imag() * (w * x).sin();
            }
        }
        f.values = v;
        return f;
    }

    const Arr y = grid_points_y(basis);
    Arr v = Arr::Zero(basis.grid_size());
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const double wx = kPi * modes[i].kx / basis.half_width;
        const double wy = kPi * modes[i].ky / basis.half_width_y;
        const Cplx c = coeffs.c[i];
        for (int iy = 0; iy < basis.grid_ny; ++iy) {
            for (int ix = 0; ix < basis.grid_nx; ++ix) {
                const double phase = wx * x(ix) + wy * y(iy);
                double term;
                if (self_conjugate(modes[i])) {
                    term = c.real();
                } else {
                    term = 2.0 * (c.real() * std::cos(phase) - c.imag() * std::sin(phase));
                }
                v(static_cast<long>(iy) * basis.grid_nx + ix) += term;
            }
        }
    }
    f.values = v;
    return f;
}

CoeffVector project(const BasisSpec& basis, const Arr& values) {
    basis.validate();
    if (values.size() != basis.grid_size()) {
        throw NumericalError("project: field size does not match basis grid");
    }
    CoeffVector out;
    const auto modes = reduced_modes(basis);
    out.c.resize(modes.size());

    if (basis.family == BasisFamily::hermite) {
        const std::vector<double> c = hermite_project(basis, values, basis.truncation + 1);
        for (std::size_t i = 0; i < c.size(); ++i) out.c[i] = Cplx(c[i], 0.0);
        return out;
    }

    const Arr x = grid_points_x(basis);
    if (basis.dim == 1) {
        for (std::size_t i = 0; i < modes.size(); ++i) {
            const double w = kPi * modes[i].kx / basis.half_width;
            const double re = (values * (w * x).cos()).sum() / basis.grid_nx;
            const double im = -(values * (w * x).sin()).sum() / basis.grid_nx;
            out.c[i] = modes[i].kx == 0 ? Cplx(re, 0.0) : Cplx(re, im);
        }
        return out;
    }

    const Arr y = grid_points_y(basis);
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const double wx = kPi * modes[i].kx / basis.half_width;
        const double wy = kPi * modes[i].ky / basis.half_width_y;
        double re = 0.0, im = 0.0;
        for (int iy = 0; iy < basis.grid_ny; ++iy) {
            for (int ix = 0; ix < basis.grid_nx; ++ix) {
                const double phase = wx * x(ix) + wy * y(iy);
                const double v = values(static_cast<long>(iy) * basis.grid_nx + ix);
                re += v * std::cos(phase);
                im -= v * std::sin(phase);
            }
        }
        const double norm = static_cast<double>(basis.grid_size());
        out.c[i] = self_conjugate(modes[i]) ? Cplx(re / norm, 0.0) : Cplx(re / norm, im / norm);
    }
    return out;
}

std::vector<double> hermite_project(const BasisSpec& basis, const Arr& values, int count) {
    if (basis.family != BasisFamily::hermite) {
        throw ConfigError("hermite_project: basis is not hermite");
    }
    if (values.size() != basis.grid_nx) {
        throw NumericalError("hermite_project: field size does not match basis grid");
    }
    const Arr x = grid_points_x(basis);
    const Eigen::MatrixXd t = hermite_table(x, count - 1);
    const double h = 2.0 * basis.half_width / basis.grid_nx;
    Eigen::VectorXd c = h * (t.transpose() * values.matrix());
    return std::vector<double>(c.data(), c.data() + c.size());
}

Arr hermite_synthesize(const BasisSpec& basis, const std::vector<double>& coeffs) {
    if (basis.family != BasisFamily::hermite) {
        throw ConfigError("hermite_synthesize: basis is not hermite");
    }
    if (coeffs.empty()) {
        return Arr::Zero(basis.grid_nx);
    }
    const Arr x = grid_points_x(basis);
    const Eigen::MatrixXd t = hermite_table(x, static_cast<int>(coeffs.size()) - 1);
    const Eigen::Map<const Eigen::VectorXd> c(coeffs.data(), static_cast<long>(coeffs.size()));
    return (t * c).array();
}

// ---- FFT ----------------------------------------------------------------------

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 transform; sign = -1 forward, +1 inverse
/// (inverse is unnormalized).
void fft_pow2(std::vector<Cplx>& a, int sign) {
    const int n = static_cast<int>(a.size());
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(j)]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * kPi / len;
        const Cplx wl(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            Cplx w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                const Cplx u = a[static_cast<std::size_t>(i + k)];
                const Cplx v = a[static_cast<std::size_t>(i + k + len / 2)] * w;
                a[static_cast<std::size_t>(i + k)] = u + v;
                a[static_cast<std::size_t>(i + k + len / 2)] = u - v;
                w *= wl;
            }
        }
    }
}

/// Direct transform for non power-of-two sizes (small test grids only).
std::vector<Cplx> dft_direct(const std::vector<Cplx>& a, int sign) {
    const int n = static_cast<int>(a.size());
    std::vector<Cplx> out(a.size());
    for (int m = 0; m < n; ++m) {
        Cplx s(0.0, 0.0);
        for (int k = 0; k < n; ++k) {
            const double ang = sign * 2.0 * kPi * m * k / n;
            s += a[static_cast<std::size_t>(k)] * Cplx(std::cos(ang), std::sin(ang));
        }
        out[static_cast<std::size_t>(m)] = s;
    }
    return out;
}

void transform(std::vector<Cplx>& a, int sign) {
    if (is_pow2(static_cast<int>(a.size()))) {
        fft_pow2(a, sign);
    } else {
        a = dft_direct(a, sign);
    }
}

/// Phase of the grid offset: exp(i pi k x_a / I) = phi_k * exp(2 pi i k a / N)
/// with x_a = -I + 2I(a+1)/N and phi_k = exp(i pi k (2/N - 1)).
Cplx offset_phase(int k, int n) {
    const double ang = kPi * k * (2.0 / n - 1.0);
    return {std::cos(ang), std::sin(ang)};
}

int signed_mode(int m, int n) { return m < (n + 1) / 2 ? m : m - n; }

} // namespace

std::vector<Cplx> fourier_full_spectrum(const Arr& values, double half_width) {
    (void)half_width;
    const int n = static_cast<int>(values.size());
    std::vector<Cplx> a(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] = Cplx(values(i), 0.0);
    transform(a, -1);
    for (int m = 0; m < n; ++m) {
        const int k = signed_mode(m, n);
        a[static_cast<std::size_t>(m)] *= std::conj(offset_phase(k, n)) / static_cast<double>(n);
    }
    return a;
}

Arr fourier_from_full_spectrum(const std::vector<Cplx>& spectrum, double half_width) {
    (void)half_width;
    const int n = static_cast<int>(spectrum.size());
    std::vector<Cplx> a(spectrum);
    for (int m = 0; m < n; ++m) {
        const int k = signed_mode(m, n);
        a[static_cast<std::size_t>(m)] *= offset_phase(k, n);
    }
    transform(a, +1);
    Arr out(n);
    for (int i = 0; i < n; ++i) out(i) = a[static_cast<std::size_t>(i)].real();
    return out;
}

void dft_line(std::vector<Cplx>& line, int sign) { transform(line, sign); }

int dft_signed_mode(int m, int n) { return signed_mode(m, n); }

namespace {

/// Multiply the full spectrum by (i pi k / I)^order; the Nyquist mode is
/// zeroed for odd orders (its derivative aliases to zero on the grid).
void apply_derivative_factor(std::vector<Cplx>& spec, double half_width, int order) {
    const int n = static_cast<int>(spec.size());
    for (int m = 0; m < n; ++m) {
        const int k = signed_mode(m, n);
        const bool nyquist = (n % 2 == 0) && (m == n / 2);
        if (nyquist && order % 2 == 1) {
            spec[static_cast<std::size_t>(m)] = Cplx(0.0, 0.0);
            continue;
        }
        const Cplx iw(0.0, kPi * k / half_width);
        Cplx f(1.0, 0.0);
        for (int o = 0; o < order; ++o) f *= iw;
        spec[static_cast<std::size_t>(m)] *= f;
    }
}

Arr fourier_derivative_1d(const Arr& values, double half_width, int order) {
    auto spec = fourier_full_spectrum(values, half_width);
    apply_derivative_factor(spec, half_width, order);
    return fourier_from_full_spectrum(spec, half_width);
}

} // namespace

SpectralField spectral_derivative(const SpectralField& field, int order, int axis) {
    const BasisSpec& basis = field.basis;
    basis.validate();
    if (order < 0) {
        throw ConfigError("spectral_derivative: order must be non-negative");
    }
    if (order == 0) {
        return field;
    }
    SpectralField out;
    out.basis = basis;

    if (basis.family == BasisFamily::hermite) {
        if (axis != 0) {
            throw ConfigError("spectral_derivative: hermite fields are 1d");
        }
        std::vector<double> c;
        if (field.coeffs) {
            c.resize(field.coeffs->c.size());
            for (std::size_t i = 0; i < c.size(); ++i) c[i] = field.coeffs->c[i].real();
        } else {
            c = hermite_project(basis, field.values, basis.work_modes + 1);
        }
        for (int o = 0; o < order; ++o) {
            c = hermite_derivative_coeffs(c);
        }
        out.values = hermite_synthesize(basis, c);
        return out;
    }

    if (basis.dim == 1) {
        if (axis != 0) {
            throw ConfigError("spectral_derivative: axis out of range for 1d field");
        }
        out.values = fourier_derivative_1d(field.values, basis.half_width, order);
        return out;
    }

    if (axis != 0 && axis != 1) {
        throw ConfigError("spectral_derivative: axis must be 0 or 1");
    }
    const int nx = basis.grid_nx;
    const int ny = basis.grid_ny;
    out.values = Arr::Zero(basis.grid_size());
    if (axis == 0) {
        Arr line(nx);
        for (int iy = 0; iy < ny; ++iy) {
            for (int ix = 0; ix < nx; ++ix) line(ix) = field.values(static_cast<long>(iy) * nx + ix);
            const Arr d = fourier_derivative_1d(line, basis.half_width, order);
            for (int ix = 0; ix < nx; ++ix) out.values(static_cast<long>(iy) * nx + ix) = d(ix);
        }
    } else {
        Arr line(ny);
        for (int ix = 0; ix < nx; ++ix) {
            for (int iy = 0; iy < ny; ++iy) line(iy) = field.values(static_cast<long>(iy) * nx + ix);
            const Arr d = fourier_derivative_1d(line, basis.half_width_y, order);
            for (int iy = 0; iy < ny; ++iy) out.values(static_cast<long>(iy) * nx + ix) = d(iy);
        }
    }
    return out;
}

double quadrature(const BasisSpec& basis, const Arr& values) {
    basis.validate();
    if (values.size() != basis.grid_size()) {
        throw NumericalError("quadrature: field size does not match basis grid");
    }
    double cell = 2.0 * basis.half_width / basis.grid_nx;
    if (basis.dim == 2) {
        cell *= 2.0 * basis.half_width_y / basis.grid_ny;
    }
    return cell * values.sum();
}

Arr quadrature_weights(const BasisSpec& basis) {
    basis.validate();
    double cell = 2.0 * basis.half_width / basis.grid_nx;
    if (basis.dim == 2) {
        cell *= 2.0 * basis.half_width_y / basis.grid_ny;
    }
    return Arr::Constant(basis.grid_size(), cell);
}

std::vector<CoeffVector> sample_coefficients(const BasisSpec& basis, const SamplingSpec& spec,
                                             int count, std::uint64_t seed) {
    basis.validate();
    if (count <= 0) {
        throw ConfigError("sample_coefficients: count must be positive");
    }
    if (spec.base_width < 0.0 || spec.positivity_floor < 0.0) {
        throw ConfigError("sample_coefficients: widths and floor must be non-negative");
    }
    const auto modes = reduced_modes(basis);
    std::vector<CoeffVector> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        std::mt19937_64 rng(substream_seed(seed, static_cast<std::uint64_t>(i)));
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        CoeffVector cv;
        cv.c.resize(modes.size());
        bool accepted = false;
        for (int attempt = 0; attempt < spec.max_retries && !accepted; ++attempt) {
            for (std::size_t m = 0; m < modes.size(); ++m) {
                const int absk = std::max(std::abs(modes[m].kx), std::abs(modes[m].ky));
                const double r = spec.base_width * std::pow(2.0, -absk);
                const double center = (m == 0) ? spec.center0 : 0.0;
                const double re = center + r * unit(rng);
                const bool real_only =
                    basis.family == BasisFamily::hermite || self_conjugate(modes[m]);
                const double im = real_only ? 0.0 : r * unit(rng);
                cv.c[m] = Cplx(re, im);
            }
            if (spec.positivity_floor > 0.0) {
                const SpectralField f = synthesize(basis, cv);
                accepted = f.values.minCoeff() >= spec.positivity_floor;
            } else {
                accepted = true;
            }
        }
        if (!accepted) {
            throw NumericalError("sample_coefficients: positivity floor " +
                                 std::to_string(spec.positivity_floor) + " infeasible for sample " +
                                 std::to_string(i) + " after " + std::to_string(spec.max_retries) +
                                 " retries");
        }
        out.push_back(std::move(cv));
    }
    return out;
}

Eigen::VectorXd coeff_features(const BasisSpec& basis, const CoeffVector& coeffs) {
    const auto modes = reduced_modes(basis);
    if (coeffs.c.size() != modes.size()) {
        throw NumericalError("coeff_features: coefficient count does not match basis");
    }
    if (basis.family == BasisFamily::hermite) {
        Eigen::VectorXd f(static_cast<long>(modes.size()));
        for (std::size_t i = 0; i < modes.size(); ++i) f(static_cast<long>(i)) = coeffs.c[i].real();
        return f;
    }
    Eigen::VectorXd f(2 * static_cast<long>(modes.size()));
    for (std::size_t i = 0; i < modes.size(); ++i) {
        f(2 * static_cast<long>(i)) = coeffs.c[i].real();
        f(2 * static_cast<long>(i) + 1) = coeffs.c[i].imag();
    }
    return f;
}

int feature_dim(const BasisSpec& basis) {
    const auto n = static_cast<int>(reduced_modes(basis).size());
    return basis.family == BasisFamily::hermite ? n : 2 * n;
}

} // namespace dool
