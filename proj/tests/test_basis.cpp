#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "dool/basis.hpp"
#include "dool/common.hpp"

using namespace dool;

namespace {

constexpr double kPi = std::numbers::pi;

BasisSpec fourier1d(int K, int N, double I = kPi) {
    BasisSpec b;
    b.family = BasisFamily::fourier;
    b.dim = 1;
    b.half_width = I;
    b.truncation = K;
    b.grid_nx = N;
    return b;
}

BasisSpec hermite1d(int K, int N, double I = 5.0) {
    BasisSpec b;
    b.family = BasisFamily::hermite;
    b.dim = 1;
    b.half_width = I;
    b.truncation = K;
    b.grid_nx = N;
    return b;
}

CoeffVector random_coeffs(const BasisSpec& basis, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    CoeffVector c;
    for (const ModeIndex& m : reduced_modes(basis)) {
        const bool self_conj = basis.family == BasisFamily::hermite || (m.kx == 0 && m.ky == 0);
        const double re = dist(rng);
        c.c.emplace_back(re, self_conj ? 0.0 : dist(rng));
    }
    return c;
}

/// Direct trigonometric evaluation of d^order/dx^order of a reduced
/// coefficient set, written with explicit complex arithmetic.
Arr hand_derivative(const BasisSpec& basis, const CoeffVector& c, int order) {
    const Arr x = grid_points_x(basis);
    Arr out = Arr::Zero(basis.grid_nx);
    const auto modes = reduced_modes(basis);
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const int k = modes[i].kx;
        std::complex<double> f = std::pow(std::complex<double>(0.0, kPi * k / basis.half_width),
                                          order);
        const std::complex<double> ck = c.c[i] * f;
        for (int g = 0; g < basis.grid_nx; ++g) {
            const std::complex<double> e(std::cos(kPi * k * x(g) / basis.half_width),
                                         std::sin(kPi * k * x(g) / basis.half_width));
            out(g) += (k == 0 ? 1.0 : 2.0) * (ck * e).real();
        }
    }
    return out;
}

} // namespace

TEST_CASE("grid follows the offset convention x_k = -I + 2kI/N") {
    const BasisSpec b = fourier1d(1, 8, 2.0);
    const Arr x = grid_points_x(b);
    REQUIRE(x.size() == 8);
    for (int k = 1; k <= 8; ++k) {
        CHECK(x(k - 1) == doctest::Approx(-2.0 + 2.0 * k * 2.0 / 8.0).epsilon(1e-15));
    }
    CHECK(x(7) == doctest::Approx(2.0));
}

TEST_CASE("fourier synthesis reproduces sin(x) + 2 from its coefficients") {
    const BasisSpec b = fourier1d(1, 64);
    CoeffVector c;
    c.c = {Cplx(2.0, 0.0), Cplx(0.0, -0.5)};
    const SpectralField f = synthesize(b, c);
    const Arr x = grid_points_x(b);
    CHECK((f.values - (x.sin() + 2.0)).abs().maxCoeff() <= 1e-12);
    REQUIRE(f.coeffs.has_value());
}

TEST_CASE("hermite synthesis: psi_0 is the normalized gaussian") {
    const BasisSpec b = hermite1d(0, 200);
    CoeffVector c;
    c.c = {Cplx(std::pow(kPi, 0.25), 0.0)};
    const SpectralField f = synthesize(b, c);
    const Arr x = grid_points_x(b);
    CHECK((f.values - (-0.5 * x.square()).exp()).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("2d fourier synthesis reproduces sin(x) sin(y)") {
    BasisSpec b = fourier1d(1, 32);
    b.dim = 2;
    b.grid_ny = 16;
    b.half_width_y = kPi;
    CoeffVector c;
    const auto modes = reduced_modes(b);
    c.c.assign(modes.size(), Cplx(0.0, 0.0));
    for (std::size_t i = 0; i < modes.size(); ++i) {
        if (modes[i].kx == 1 && modes[i].ky == -1) c.c[i] = Cplx(0.25, 0.0);
        if (modes[i].kx == 1 && modes[i].ky == 1) c.c[i] = Cplx(-0.25, 0.0);
    }
    const SpectralField f = synthesize(b, c);
    const Arr x = grid_points_x(b);
    const Arr y = grid_points_y(b);
    for (int iy = 0; iy < b.grid_ny; ++iy) {
        for (int ix = 0; ix < b.grid_nx; ++ix) {
            CHECK(f.values(iy * b.grid_nx + ix) ==
                  doctest::Approx(std::sin(x(ix)) * std::sin(y(iy))).epsilon(1e-12));
        }
    }
}

TEST_CASE("synthesize rejects broken hermitian symmetry") {
    const BasisSpec b = fourier1d(1, 16);
    CoeffVector c;
    c.c = {Cplx(0.0, 0.3), Cplx(0.1, 0.0)}; // imaginary mean is not a real field
    CHECK_THROWS_AS(synthesize(b, c), NumericalError);
}

TEST_CASE("project inverts synthesize for random coefficients") {
    for (unsigned seed = 0; seed < 3; ++seed) {
        const BasisSpec b1 = fourier1d(5, 64);
        const CoeffVector c1 = random_coeffs(b1, 100 + seed);
        const CoeffVector back1 = project(b1, synthesize(b1, c1).values);
        for (std::size_t i = 0; i < c1.c.size(); ++i)
            CHECK(std::abs(back1.c[i] - c1.c[i]) <= 1e-10);

        BasisSpec b2 = fourier1d(3, 24);
        b2.dim = 2;
        b2.grid_ny = 20;
        const CoeffVector c2 = random_coeffs(b2, 200 + seed);
        const CoeffVector back2 = project(b2, synthesize(b2, c2).values);
        for (std::size_t i = 0; i < c2.c.size(); ++i)
            CHECK(std::abs(back2.c[i] - c2.c[i]) <= 1e-10);

        // wide window: every kept hermite function is negligible at the boundary
        const BasisSpec b3 = hermite1d(8, 640, 8.0);
        const CoeffVector c3 = random_coeffs(b3, 300 + seed);
        const CoeffVector back3 = project(b3, synthesize(b3, c3).values);
        for (std::size_t i = 0; i < c3.c.size(); ++i)
            CHECK(std::abs(back3.c[i] - c3.c[i]) <= 1e-10);
    }
}

TEST_CASE("hermite functions are discretely orthonormal while tails stay inside") {
    const BasisSpec b = hermite1d(12, 400, 8.0);
    const Eigen::MatrixXd t = hermite_table(grid_points_x(b), 12);
    const double h = 2.0 * b.half_width / b.grid_nx;
    const Eigen::MatrixXd gram = h * (t.transpose() * t);
    CHECK((gram - Eigen::MatrixXd::Identity(13, 13)).cwiseAbs().maxCoeff() <= 1e-12);

    // on the production window [-5, 5] the degree-12 turning point reaches the
    // boundary, so orthonormality visibly degrades: this is why projections of
    // grid-only fields cap the working order
    const BasisSpec tight = hermite1d(12, 400, 5.0);
    const Eigen::MatrixXd t5 = hermite_table(grid_points_x(tight), 12);
    const Eigen::MatrixXd gram5 = (2.0 * 5.0 / 400.0) * (t5.transpose() * t5);
    const double dev = (gram5 - Eigen::MatrixXd::Identity(13, 13)).cwiseAbs().maxCoeff();
    CHECK(dev > 1e-3);
    CHECK(dev < 0.1);
}

TEST_CASE("spectral derivatives match closed forms and a hand synthesis") {
    const BasisSpec b = fourier1d(3, 64);
    const Arr x = grid_points_x(b);
    SpectralField sinx;
    sinx.basis = b;
    sinx.values = x.sin();
    CHECK((spectral_derivative(sinx, 1).values - x.cos()).abs().maxCoeff() <= 1e-12);
    CHECK((spectral_derivative(sinx, 2).values + x.sin()).abs().maxCoeff() <= 1e-12);

    const CoeffVector c = random_coeffs(b, 7);
    const SpectralField f = synthesize(b, c);
    for (int order = 1; order <= 3; ++order) {
        const Arr want = hand_derivative(b, c, order);
        CHECK((spectral_derivative(f, order).values - want).abs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("2d spectral derivative works per axis") {
    BasisSpec b = fourier1d(2, 32, kPi);
    b.dim = 2;
    b.grid_ny = 24;
    b.half_width_y = 2.0;
    const Arr x = grid_points_x(b);
    const Arr y = grid_points_y(b);
    SpectralField f;
    f.basis = b;
    f.values = Arr::Zero(b.grid_size());
    Arr want_dx = Arr::Zero(b.grid_size());
    Arr want_dy = Arr::Zero(b.grid_size());
    for (int iy = 0; iy < b.grid_ny; ++iy) {
        for (int ix = 0; ix < b.grid_nx; ++ix) {
            const double wy = kPi * y(iy) / 2.0;
            f.values(iy * b.grid_nx + ix) = std::sin(x(ix)) * std::cos(wy);
            want_dx(iy * b.grid_nx + ix) = std::cos(x(ix)) * std::cos(wy);
            want_dy(iy * b.grid_nx + ix) = -std::sin(x(ix)) * std::sin(wy) * kPi / 2.0;
        }
    }
    CHECK((spectral_derivative(f, 1, 0).values - want_dx).abs().maxCoeff() <= 1e-11);
    CHECK((spectral_derivative(f, 1, 1).values - want_dy).abs().maxCoeff() <= 1e-11);
}

TEST_CASE("hermite coefficient recurrences: derivative and x-multiplication") {
    // psi_0' = -x psi_0 = -psi_1 / sqrt(2);  x psi_0 = psi_1 / sqrt(2)
    const std::vector<double> e0 = {1.0};
    const std::vector<double> d = hermite_derivative_coeffs(e0);
    REQUIRE(d.size() == 2);
    CHECK(d[0] == doctest::Approx(0.0));
    CHECK(d[1] == doctest::Approx(-1.0 / std::sqrt(2.0)));
    const std::vector<double> xm = hermite_x_multiply_coeffs(e0);
    CHECK(xm[1] == doctest::Approx(1.0 / std::sqrt(2.0)));

    // grid check on a random hermite field
    const BasisSpec b = hermite1d(6, 400);
    const CoeffVector c = random_coeffs(b, 9);
    const SpectralField f = synthesize(b, c);
    std::vector<double> cr(c.c.size());
    for (std::size_t i = 0; i < cr.size(); ++i) cr[i] = c.c[i].real();
    const Arr x = grid_points_x(b);
    const Arr xf = hermite_synthesize(b, hermite_x_multiply_coeffs(cr));
    CHECK((xf - x * f.values).abs().maxCoeff() <= 1e-10);

    const Arr df = spectral_derivative(f, 1).values;
    // centered finite differences as an independent oracle (interior points)
    const double h = 2.0 * b.half_width / b.grid_nx;
    for (int i = 1; i + 1 < b.grid_nx; ++i) {
        const double fd = (f.values(i + 1) - f.values(i - 1)) / (2.0 * h);
        CHECK(df(i) == doctest::Approx(fd).epsilon(5e-3));
    }
}

TEST_CASE("quadrature: rectangle rule on the periodic and decaying grids") {
    const BasisSpec b = fourier1d(1, 128);
    CHECK(quadrature(b, Arr::Constant(128, 1.0)) == doctest::Approx(2.0 * kPi));
    CHECK(std::abs(quadrature(b, grid_points_x(b).sin())) <= 1e-12);

    const BasisSpec g = hermite1d(0, 400);
    const Arr x = grid_points_x(g);
    const double got = quadrature(g, (-0.5 * x.square()).exp());
    const BasisSpec fine = hermite1d(0, 40000);
    const Arr xf = grid_points_x(fine);
    const double oracle = quadrature(fine, (-0.5 * xf.square()).exp());
    CHECK(std::abs(got - oracle) <= 1e-8);
    CHECK(quadrature_weights(b).sum() == doctest::Approx(2.0 * kPi));
}

TEST_CASE("divergence of any periodic field integrates to zero") {
    const BasisSpec b = fourier1d(6, 64);
    const SpectralField f = synthesize(b, random_coeffs(b, 33));
    CHECK(std::abs(quadrature(b, spectral_derivative(f, 1).values)) <= 1e-12);
}

TEST_CASE("grid-level parseval identity for band-limited fields") {
    const BasisSpec b = fourier1d(5, 64);
    const CoeffVector c = random_coeffs(b, 44);
    const SpectralField f = synthesize(b, c);
    double coeff_sum = 0.0;
    const auto modes = reduced_modes(b);
    for (std::size_t i = 0; i < modes.size(); ++i) {
        coeff_sum += (modes[i].kx == 0 ? 1.0 : 2.0) * std::norm(c.c[i]);
    }
    const double grid_sum = quadrature(b, f.values.square());
    CHECK(std::abs(grid_sum - 2.0 * b.half_width * coeff_sum) <= 1e-10);
}

TEST_CASE("coefficient sampling: determinism, degenerate rectangles, positivity") {
    const BasisSpec b = fourier1d(1, 64);
    SamplingSpec degenerate;
    degenerate.base_width = 0.0;
    degenerate.center0 = 2.0;
    auto pts = sample_coefficients(b, degenerate, 5, 99);
    for (const CoeffVector& c : pts) {
        CHECK((synthesize(b, c).values - 2.0).abs().maxCoeff() <= 1e-14);
    }

    SamplingSpec s;
    s.base_width = 0.5;
    s.center0 = 2.0;
    s.positivity_floor = 0.1;
    auto a1 = sample_coefficients(b, s, 64, 7);
    auto a2 = sample_coefficients(b, s, 64, 7);
    for (std::size_t i = 0; i < a1.size(); ++i)
        for (std::size_t k = 0; k < a1[i].c.size(); ++k) CHECK(a1[i].c[k] == a2[i].c[k]);

    Arr mean = Arr::Zero(b.grid_nx);
    const int n = 10000;
    auto draws = sample_coefficients(b, s, n, 2024);
    for (const CoeffVector& c : draws) {
        const Arr v = synthesize(b, c).values;
        CHECK(v.minCoeff() >= 0.1);
        mean += v / n;
    }
    CHECK((mean - 2.0).abs().maxCoeff() <= 0.05 * 2.0);
}

TEST_CASE("infeasible positivity floor raises a sampling error") {
    const BasisSpec b = fourier1d(1, 32);
    SamplingSpec s;
    s.base_width = 0.5;
    s.center0 = 0.0;
    s.positivity_floor = 10.0;
    s.max_retries = 50;
    CHECK_THROWS_AS(sample_coefficients(b, s, 1, 1), NumericalError);
}

TEST_CASE("basis validation rejects under-resolved and malformed specs") {
    CHECK_THROWS_AS(fourier1d(8, 16).validate(), ConfigError); // N_x must exceed 2K
    BasisSpec h = hermite1d(3, 100);
    h.dim = 2;
    CHECK_THROWS_AS(h.validate(), ConfigError);
    BasisSpec bad = fourier1d(1, 0);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("branch features interleave coefficient parts in mode order") {
    const BasisSpec b = fourier1d(1, 16);
    CHECK(feature_dim(b) == 4);
    CoeffVector c;
    c.c = {Cplx(2.0, 0.0), Cplx(0.25, -0.5)};
    const Eigen::VectorXd f = coeff_features(b, c);
    REQUIRE(f.size() == 4);
    CHECK(f(0) == 2.0);
    CHECK(f(1) == 0.0);
    CHECK(f(2) == 0.25);
    CHECK(f(3) == -0.5);

    const BasisSpec h = hermite1d(3, 64);
    CHECK(feature_dim(h) == 4); // hermite coefficients are real
}
