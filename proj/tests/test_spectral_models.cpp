#include <doctest.h>

#include <cmath>
#include <complex>

#include "nhtrace/spectral_system.hpp"
#include "support/oracles.hpp"

using namespace nhtrace;

TEST_CASE("dirichlet interval: closed-form eigendata") {
    SpectralSystem s = build_dirichlet_interval(4, 64);
    CHECK(s.model() == ModelId::dirichlet_interval);
    CHECK(s.nu() == doctest::Approx(2.0));
    CHECK(s.weyl_q() == doctest::Approx(1.0));
    CHECK(s.size() == 4);

    // lambda_1 = pi^2
    CHECK(s.eigenvalues()[0].real() == doctest::Approx(M_PI * M_PI).epsilon(1e-14));
    CHECK(s.eigenvalues()[0].imag() == 0.0);

    // <1> evaluated directly from the definition
    const double expected = std::pow(1.0 + std::pow(M_PI, 4.0), 0.25);
    CHECK(expected == doctest::Approx(3.14962).epsilon(1e-5));
    CHECK(s.brackets()[0] == doctest::Approx(expected).epsilon(1e-14));

    // bracket invariant for every mode
    for (Index j = 0; j < s.size(); ++j) {
        const double b = std::pow(1.0 + std::norm(s.eigenvalues()[j]), 1.0 / (2.0 * s.nu()));
        CHECK(s.brackets()[j] == doctest::Approx(b).epsilon(1e-15));
    }

    // grid excludes the endpoints, weights positive, nodes increasing
    CHECK(s.grid()[0] > 0.0);
    CHECK(s.grid()[s.grid_size() - 1] < 1.0);
    CHECK(s.weights().minCoeff() > 0.0);
    for (Index i = 1; i < s.grid_size(); ++i) CHECK(s.grid()[i] > s.grid()[i - 1]);
}

TEST_CASE("dirichlet interval: quadrature biorthogonality") {
    SpectralSystem s = build_dirichlet_interval(8, 64);
    CHECK(biorthogonality_check(s) <= 1e-10);
}

TEST_CASE("dirichlet interval: rejects bad sizes") {
    CHECK_THROWS_AS(build_dirichlet_interval(0, 64), std::invalid_argument);
    CHECK_THROWS_AS(build_dirichlet_interval(4, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_dirichlet_interval(16, 63), std::invalid_argument);
}

TEST_CASE("periodic circle: closed-form eigendata") {
    SpectralSystem s = build_periodic_circle(2, 64);
    CHECK(s.size() == 5);
    CHECK(s.labels()[0] == 0);
    CHECK(s.brackets()[0] == doctest::Approx(1.0));                  // <0> = 1
    CHECK(s.brackets()[1] == doctest::Approx(std::sqrt(2.0)));       // <1> = sqrt(2)
    // tie-breaking: nonnegative label first
    CHECK(s.labels()[1] == 1);
    CHECK(s.labels()[2] == -1);
    CHECK(s.labels()[3] == 2);
    CHECK(s.labels()[4] == -2);
    for (Index j = 1; j < s.size(); ++j) CHECK(s.brackets()[j] >= s.brackets()[j - 1]);
}

TEST_CASE("periodic circle: trapezoidal biorthogonality is exact") {
    SpectralSystem s = build_periodic_circle(16, 256);
    CHECK(biorthogonality_check(s) <= 1e-12);
    CHECK_THROWS_AS(build_periodic_circle(16, 4 * 33 - 1), std::invalid_argument);
}

TEST_CASE("twisted model: eigenvalues and normalization convention") {
    const double h = 2.0;
    SpectralSystem s = build_twisted_model(h, 8, 256);
    CHECK_FALSE(s.self_adjoint());

    auto idx1 = s.index_of_label(1);
    REQUIRE(idx1.has_value());
    const Complex lam1 = s.eigenvalues()[*idx1];
    CHECK(lam1.real() == doctest::Approx(2.0 * M_PI).epsilon(1e-14));
    CHECK(lam1.imag() == doctest::Approx(-std::log(2.0)).epsilon(1e-14));
    CHECK(std::abs(lam1) ==
          doctest::Approx(std::sqrt(4.0 * M_PI * M_PI + std::log(2.0) * std::log(2.0)))
              .epsilon(1e-14));
    CHECK(std::abs(lam1) == doctest::Approx(6.3213).epsilon(1e-4));

    for (Index j = 0; j < s.size(); ++j) {
        // pairing normalization (u_j, v_j) = 1
        CHECK(std::abs(s.pairing(j, j) - 1.0) <= 1e-10);
        // ||u_j|| = 1 in the quadrature norm, ||v_j|| >= 1
        const double nu2 = (s.weights().array() * s.u_row(j).array().abs2()).sum();
        const double nv2 = (s.weights().array() * s.v_row(j).array().abs2()).sum();
        CHECK(nu2 == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(nv2 >= 1.0 - 1e-10);
        // WZ condition: eigenfunctions nowhere vanishing on the grid
        CHECK(s.u_row(j).cwiseAbs().minCoeff() > 0.0);
        CHECK(s.v_row(j).cwiseAbs().minCoeff() > 0.0);
    }
}

TEST_CASE("twisted model: biorthogonality and parameter validation") {
    SpectralSystem s = build_twisted_model(2.0, 8, 256);
    CHECK(biorthogonality_check(s) <= 1e-8);
    CHECK_THROWS_AS(build_twisted_model(1.0, 8, 256), std::invalid_argument);
    CHECK_THROWS_AS(build_twisted_model(0.0, 8, 256), std::invalid_argument);
    CHECK_THROWS_AS(build_twisted_model(-2.0, 8, 256), std::invalid_argument);
    // h < 1 is a valid twist
    SpectralSystem inv = build_twisted_model(0.5, 4, 128);
    CHECK(biorthogonality_check(inv) <= 1e-8);
}

TEST_CASE("weyl counting on the circle") {
    SpectralSystem s = build_periodic_circle(16, 256);
    // sqrt(1 + k^2) <= 10  <=>  |k| <= 9, so 19 modes
    CHECK(weyl_counting(s, 10.0) == 19);
    CHECK(weyl_counting(s, 0.5) == 0);  // below the smallest bracket
    CHECK(weyl_counting(s, s.max_bracket()) == s.size());
    Index prev = 0;
    for (double lam = 0.5; lam <= 12.0; lam += 0.25) {
        const Index n = weyl_counting(s, lam);
        CHECK(n >= prev);
        prev = n;
    }
}

TEST_CASE("weyl counting on the dirichlet interval") {
    SpectralSystem s = build_dirichlet_interval(8, 64);
    // (1 + k^4 pi^4)^{1/4} <= 10  <=>  k <= 3
    CHECK(weyl_counting(s, 10.0) == 3);
    CHECK(weyl_counting(s, 1.0) == 0);
}

TEST_CASE("weyl exponent fit approaches Q on all models" * doctest::timeout(300)) {
    SpectralSystem dir = build_dirichlet_interval(512, 2048);
    SpectralSystem cir = build_periodic_circle(512, 4 * 1025);
    SpectralSystem twi = build_twisted_model(2.0, 512, 4 * 1025);
    CHECK(oracles::within_abs(fit_weyl_exponent(dir, 10.0, 100.0), 1.0, 0.05));
    CHECK(oracles::within_abs(fit_weyl_exponent(cir, 10.0, 100.0), 1.0, 0.05));
    CHECK(oracles::within_abs(fit_weyl_exponent(twi, 10.0, 100.0), 1.0, 0.05));

    // prefactor fits match the closed-form counting densities
    CHECK(oracles::within_rel(fit_weyl_law(dir, 10.0, 100.0).prefactor, 1.0 / M_PI, 0.1));
    CHECK(oracles::within_rel(fit_weyl_law(cir, 10.0, 100.0).prefactor, 2.0, 0.1));

    CHECK_THROWS_AS(fit_weyl_exponent(dir, 0.5, 2.0), std::invalid_argument);  // N = 0 inside
    CHECK_THROWS_AS(fit_weyl_exponent(dir, 10.0, 1e9), std::invalid_argument); // beyond spectrum
}

TEST_CASE("weyl fit error shrinks as the truncation grows" * doctest::timeout(300)) {
    // window scaling with the spectrum, so the low-end offset bias decays
    double prev_err = 1e9;
    for (int modes : {128, 256, 512}) {
        SpectralSystem s = build_dirichlet_interval(modes, 4 * modes);
        const double err = std::abs(
            fit_weyl_exponent(s, 0.05 * s.max_bracket(), 0.5 * s.max_bracket()) - s.weyl_q());
        CHECK(err < prev_err);
        prev_err = err;
    }
}

TEST_CASE("biorthogonality deviation improves with grid refinement") {
    // With analytic eigendata both rules are spectrally exact, so the
    // deviation sits at the rounding floor already at the coarsest legal
    // grid; refinement must not degrade it beyond that floor.
    constexpr double rounding_floor = 1e-13;
    SpectralSystem coarse = build_dirichlet_interval(128, 512);
    SpectralSystem fine = build_dirichlet_interval(128, 1024);
    const double dev_coarse = biorthogonality_check(coarse);
    const double dev_fine = biorthogonality_check(fine);
    CHECK(dev_coarse <= 1e-8);
    CHECK((dev_fine < dev_coarse || dev_fine <= rounding_floor));
}

TEST_CASE("eigenfunctions solve the model operator on the grid") {
    // independent check: numerically differentiate the samples and compare
    // against lambda * u, relative to (1 + |lambda|) ||u||
    auto residual = [](const SpectralSystem& s, Index j) {
        Eigen::VectorXcd lhs = oracles::apply_model_operator(s, j);
        Eigen::VectorXcd rhs = s.eigenvalues()[j] * s.u_row(j);
        const double scale = (1.0 + std::abs(s.eigenvalues()[j])) * s.u_row(j).norm();
        return (lhs - rhs).norm() / scale;
    };

    SpectralSystem cir = build_periodic_circle(16, 160);
    for (Index j = 0; j < cir.size(); ++j) CHECK(residual(cir, j) <= 1e-6);

    SpectralSystem twi = build_twisted_model(2.0, 12, 128);
    for (Index j = 0; j < twi.size(); ++j) CHECK(residual(twi, j) <= 1e-6);

    SpectralSystem dir = build_dirichlet_interval(24, 192);
    for (Index j = 0; j < dir.size(); ++j) CHECK(residual(dir, j) <= 1e-6);
}

TEST_CASE("label lookup matches storage order") {
    SpectralSystem s = build_periodic_circle(5, 48);
    for (Index j = 0; j < s.size(); ++j) {
        auto back = s.index_of_label(s.labels()[j]);
        REQUIRE(back.has_value());
        CHECK(*back == j);
    }
    CHECK_FALSE(s.index_of_label(6).has_value());
    CHECK_FALSE(s.index_of_label(-6).has_value());
}
