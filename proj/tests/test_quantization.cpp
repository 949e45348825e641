#include <doctest.h>

#include <cmath>
#include <complex>

#include "nhtrace/quantize.hpp"
#include "nhtrace/symbol.hpp"
#include "support/oracles.hpp"

using namespace nhtrace;

TEST_CASE("multiplier symbols tabulate g(xi) constant in x") {
    SpectralSystem dir = build_dirichlet_interval(8, 64);
    Symbol one = make_multiplier(dir, [](std::int64_t) { return Complex(1.0); }, 0.0);
    CHECK(one.x_independent);
    CHECK(one.value(3, 5) == Complex(1.0));

    Symbol dec = bracket_power(dir, -1.0);
    const double expected = 1.0 / std::pow(1.0 + std::pow(M_PI, 4.0), 0.25);
    CHECK(expected == doctest::Approx(0.31750).epsilon(1e-4));
    CHECK(dec.value(0, 0).real() == doctest::Approx(expected).epsilon(1e-14));
    CHECK(dec.order_m == -1.0);

    Symbol mq = bracket_power(dir, 1.5);  // symbol of the q = 1.5 regularizer
    for (Index j = 0; j < dir.size(); ++j)
        CHECK(mq.value(0, j).real() ==
              doctest::Approx(std::pow(dir.brackets()[j], 1.5)).epsilon(1e-14));
}

TEST_CASE("quantize: identity and multipliers are diagonal") {
    SpectralSystem cir = build_periodic_circle(8, 128);
    QuantizedOperator id = identity_operator(cir);
    CHECK(id.is_diagonal);
    CHECK((id.diag.array() - 1.0).abs().maxCoeff() == 0.0);

    Symbol g = bracket_power(cir, -2.0);
    QuantizedOperator a = quantize(g);
    CHECK(a.is_diagonal);
    for (Index j = 0; j < cir.size(); ++j) CHECK(a.diag[j] == g.mult[j]);

    // the dense quadrature path agrees: off-diagonal mass below quad_tol
    QuantizedOperator ad = quantize_dense(g);
    Eigen::MatrixXcd offdiag = ad.matrix;
    offdiag.diagonal().setZero();
    CHECK(offdiag.cwiseAbs().maxCoeff() <= kQuadTol);
    CHECK((ad.matrix.diagonal() - g.mult).cwiseAbs().maxCoeff() <= kQuadTol);
}

TEST_CASE("quantize: x-dependent columns match the direct quadrature oracle") {
    SpectralSystem dir = build_dirichlet_interval(8, 64);
    Symbol s = make_symbol(
        dir,
        [&](double x, std::int64_t label) {
            const double b = std::pow(1.0 + std::pow(double(label) * M_PI, 4.0), 0.25);
            return Complex(std::sin(M_PI * x) / b, 0.0);
        },
        -1.0, 1.0, 0.0, "sin_bracket_inv");
    QuantizedOperator a = quantize(s);
    REQUIRE_FALSE(a.is_diagonal);
    for (Index xi = 0; xi < dir.size(); ++xi) {
        for (Index eta = 0; eta < dir.size(); ++eta) {
            Complex direct = 0.0;  // sum_i w_i sigma(x_i, xi) u_xi(x_i) conj(v_eta(x_i))
            for (Index i = 0; i < dir.grid_size(); ++i)
                direct += dir.weights()[i] * s.value(i, xi) * dir.u_value(xi, i) *
                          std::conj(dir.v_value(eta, i));
            CHECK(std::abs(a.matrix(eta, xi) - direct) <= 1e-12);
        }
    }
}

TEST_CASE("apply: identity, diagonal action, and the two-path oracle") {
    SpectralSystem cir = build_periodic_circle(10, 128);
    GridFunction f = oracles::random_band_limited(cir, cir.size(), 4242);

    GridFunction same = apply(identity_operator(cir), f);
    CHECK((same.values - f.values).cwiseAbs().maxCoeff() <= 1e-8);

    // multiplier <xi>^s acts diagonally on eigenfunctions
    Symbol g = bracket_power(cir, 0.5);
    auto k3 = cir.index_of_label(3);
    GridFunction u3{&cir, cir.u_row(*k3)};
    GridFunction gu3 = apply(quantize(g), u3);
    const double factor = std::pow(cir.brackets()[*k3], 0.5);
    CHECK((gu3.values - factor * u3.values).cwiseAbs().maxCoeff() <= 1e-8);

    // dense operator vs direct grid summation sum_xi u_xi(x) sigma(x, xi) fhat(xi);
    // f stays clear of the truncation edge so sigma(., xi) u_xi is retained
    Symbol s = make_random_order_zero_symbol(cir, 2, 99);
    QuantizedOperator a = quantize(s);
    GridFunction f_int = oracles::random_band_limited(cir, cir.size() - 4, 4243);
    GridFunction lhs = apply(a, f_int);
    CoeffSequence fh = l_fourier(f_int);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(cir.grid_size());
    for (Index j = 0; j < cir.size(); ++j)
        rhs += (s.mode_column(j).array() * cir.u_row(j).array()).matrix() * fh.values[j];
    CHECK((lhs.values - rhs).cwiseAbs().maxCoeff() <= 1e-8);

    SpectralSystem other = build_periodic_circle(4, 64);
    CHECK_THROWS_AS(apply(identity_operator(other), f), std::invalid_argument);
}

TEST_CASE("extract_symbol inverts quantize on WZ models") {
    // circle, random order-0 symbols, interior modes (x-band keeps the
    // outermost modes aliased, they are excluded by construction)
    SpectralSystem cir = build_periodic_circle(16, 160);
    for (int trial = 0; trial < 5; ++trial) {
        Symbol s = make_random_order_zero_symbol(cir, 3, 1000 + trial);
        Symbol back = extract_symbol(quantize(s));
        for (Index j = 0; j < cir.size(); ++j) {
            if (std::llabs(cir.labels()[j]) > 16 - 4) continue;
            CHECK((back.mode_column(j) - s.mode_column(j)).cwiseAbs().maxCoeff() <= 1e-7);
        }
    }

    SpectralSystem twi = build_twisted_model(2.0, 12, 128);
    Symbol st = make_random_order_zero_symbol(twi, 3, 77);
    Symbol backt = extract_symbol(quantize(st));
    for (Index j = 0; j < twi.size(); ++j) {
        if (std::llabs(twi.labels()[j]) > 12 - 4) continue;
        CHECK((backt.mode_column(j) - st.mode_column(j)).cwiseAbs().maxCoeff() <= 1e-7);
    }
}

TEST_CASE("extract_symbol regularizes near-zeros on the dirichlet grid") {
    // not a WZ model: sin eigenfunctions dip near interior zeros; the
    // clamped denominator keeps the extraction finite, and the dense
    // diagonal structure still reproduces the multiplier
    SpectralSystem dir = build_dirichlet_interval(8, 64);
    Symbol g = bracket_power(dir, -1.0);
    Symbol back = extract_symbol(quantize_dense(g));
    CHECK(back.table.allFinite());
    for (Index j = 0; j < dir.size(); ++j) {
        // compare on nodes where u_xi is comfortably away from zero
        for (Index i = 0; i < dir.grid_size(); ++i) {
            if (std::abs(dir.u_value(j, i)) < 0.3) continue;
            CHECK(std::abs(back.table(i, j) - g.mult[j]) <= 1e-6);
        }
    }
}

TEST_CASE("symbol csv and sidecar layout") {
    SpectralSystem cir = build_periodic_circle(1, 16);
    Symbol s = make_symbol(
        cir, [](double x, std::int64_t k) { return Complex(double(k), x); }, 0.5, 0.75,
        0.25, "probe");
    std::ostringstream csv;
    write_csv(s, csv);
    std::istringstream in(csv.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "x_index,mode_label,re,im");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 16 * 3);  // grid x index set

    std::ostringstream sidecar;
    write_sidecar(s, sidecar);
    CHECK(sidecar.str().find("\"name\": \"probe\"") != std::string::npos);
    CHECK(sidecar.str().find("\"m\": 0.5") != std::string::npos);
    CHECK(sidecar.str().find("\"rho\": 0.75") != std::string::npos);
    CHECK(sidecar.str().find("\"delta\": 0.25") != std::string::npos);
}

TEST_CASE("extract_symbol on explicit diagonal and identity operators") {
    SpectralSystem cir = build_periodic_circle(6, 64);
    QuantizedOperator id = identity_operator(cir);
    Symbol sid = extract_symbol(id);
    CHECK((sid.mult.array() - 1.0).abs().maxCoeff() <= 1e-12);

    Symbol g = bracket_power(cir, -1.0);
    Symbol back = extract_symbol(quantize(g));
    CHECK((back.mult - g.mult).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("difference: forward differences in the mode label") {
    SpectralSystem cir = build_periodic_circle(72, 4 * 145);

    // sigma(k) = k^2  ->  2k + 1
    Symbol sq = make_multiplier(
        cir, [](std::int64_t k) { return Complex(double(k) * double(k)); }, 2.0);
    Symbol dsq = difference(sq, 1);
    for (Index j = 0; j < cir.size(); ++j) {
        if (!dsq.valid[j]) continue;
        const double k = double(cir.labels()[j]);
        CHECK(dsq.mult[j].real() == doctest::Approx(2.0 * k + 1.0).epsilon(1e-12));
    }
    // top label dropped from the support
    CHECK_FALSE(dsq.valid[*cir.index_of_label(72)]);
    CHECK(dsq.valid[*cir.index_of_label(-72)]);

    // constants difference to zero
    Symbol c = make_multiplier(cir, [](std::int64_t) { return Complex(3.5); }, 0.0);
    Symbol dc = difference(c, 1);
    for (Index j = 0; j < cir.size(); ++j)
        if (dc.valid[j]) CHECK(std::abs(dc.mult[j]) == 0.0);

    // second difference of k^2 is the constant 2; support shrinks again
    Symbol d2 = difference(sq, 2);
    for (Index j = 0; j < cir.size(); ++j)
        if (d2.valid[j]) CHECK(d2.mult[j].real() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_FALSE(d2.valid[*cir.index_of_label(71)]);
    CHECK(d2.valid[*cir.index_of_label(70)]);

    // <k>^{-1} differences decay one order faster
    Symbol dec = bracket_power(cir, -1.0);
    Symbol ddec = difference(dec, 1);
    for (std::int64_t k = 8; k <= 64; ++k) {
        const Index j = *cir.index_of_label(k);
        REQUIRE(ddec.valid[j]);
        const double ratio =
            std::abs(ddec.mult[j]) * cir.brackets()[j] * cir.brackets()[j];
        CHECK(ratio > 0.5);
        CHECK(ratio < 2.0);
    }

    SpectralSystem dir = build_dirichlet_interval(8, 64);
    Symbol sd = bracket_power(dir, -1.0);
    CHECK_THROWS_AS(difference(sd, 1), unsupported_model_error);
}

TEST_CASE("seminorm: suprema against the bracket scale") {
    SpectralSystem cir = build_periodic_circle(16, 256);

    Symbol dec = bracket_power(cir, -1.0);
    CHECK(seminorm(dec, 0, 0, -1.0) == doctest::Approx(1.0).epsilon(1e-12));

    Symbol one = make_multiplier(cir, [](std::int64_t) { return Complex(1.0); }, 0.0);
    CHECK(seminorm(one, 1, 0, 0.0) == 0.0);
    CHECK(seminorm(one, 1, 0, 2.0) == 0.0);

    // sigma(x,k) = e^{ix} <k>^{-1}: |D_x sigma| = <k>^{-1}
    Symbol s = make_symbol(
        cir,
        [](double x, std::int64_t k) {
            return std::polar(1.0, x) / std::sqrt(1.0 + double(k) * double(k));
        },
        -1.0, 1.0, 0.0, "phase_dec");
    CHECK(seminorm(s, 0, 1, -1.0) == doctest::Approx(1.0).epsilon(1e-8));

    // absolute homogeneity
    Symbol s3 = s.scaled(Complex(0.0, -3.0));
    CHECK(seminorm(s3, 0, 1, -1.0) ==
          doctest::Approx(3.0 * seminorm(s, 0, 1, -1.0)).epsilon(1e-10));

    // x-derivatives on the other two grids: |D_x sin(pi x)| peaks at pi
    // near the interval ends (finite-difference path), |D_x e^{2 pi i x}|
    // is 2 pi on the twisted grid (spectral path)
    SpectralSystem dir = build_dirichlet_interval(8, 64);
    Symbol sd = make_symbol(
        dir,
        [](double x, std::int64_t k) {
            const double b = std::pow(1.0 + std::pow(double(k) * M_PI, 4.0), 0.25);
            return Complex(std::sin(M_PI * x) / b, 0.0);
        },
        -1.0, 1.0, 0.0, "sin_dec");
    CHECK(seminorm(sd, 0, 1, -1.0) == doctest::Approx(M_PI).epsilon(1e-3));

    SpectralSystem twi = build_twisted_model(2.0, 8, 128);
    Symbol st = make_symbol(
        twi,
        [](double x, std::int64_t k) {
            return std::polar(1.0, 2.0 * M_PI * x) /
                   std::sqrt(1.0 + std::norm(Complex(2.0 * M_PI * double(k), -std::log(2.0))));
        },
        -1.0, 1.0, 0.0, "phase_dec_twisted");
    CHECK(seminorm(st, 0, 1, -1.0) == doctest::Approx(2.0 * M_PI).epsilon(1e-8));
}

TEST_CASE("ellipticity margin") {
    SpectralSystem cir = build_periodic_circle(8, 96);

    Symbol b1 = bracket_power(cir, 1.0);
    CHECK(ellipticity_margin(b1) == doctest::Approx(1.0).epsilon(1e-12));
    Symbol b2 = b1.scaled(2.0);
    CHECK(ellipticity_margin(b2) == doctest::Approx(0.5).epsilon(1e-12));

    const double m = 1.0;
    Symbol s = make_symbol(
        cir,
        [m](double x, std::int64_t k) {
            return Complex((2.0 + std::sin(x)) * std::sqrt(1.0 + double(k) * double(k)), 0.0);
        },
        m, 1.0, 0.0, "wobble");
    CHECK(ellipticity_margin(s) == doctest::Approx(1.0).epsilon(1e-12));

    // scale invariance under c * sigma
    CHECK(ellipticity_margin(s.scaled(4.0)) ==
          doctest::Approx(ellipticity_margin(s) / 4.0).epsilon(1e-12));

    Symbol vanish = make_multiplier(
        cir, [](std::int64_t k) { return Complex(k == 0 ? 0.0 : 1.0); }, 0.0);
    CHECK(std::isinf(ellipticity_margin(vanish)));
}

TEST_CASE("parametrix residual: diagonal cases are exact") {
    SpectralSystem cir = build_periodic_circle(8, 96);
    Symbol g = bracket_power(cir, 1.0);
    CHECK(parametrix_residual(g) <= 1e-10);
    Symbol one = make_multiplier(cir, [](std::int64_t) { return Complex(1.0); }, 0.0);
    CHECK(parametrix_residual(one) == 0.0);

    Symbol vanish = make_multiplier(
        cir, [](std::int64_t k) { return Complex(k == 0 ? 0.0 : 1.0); }, 0.0);
    CHECK_THROWS_AS(parametrix_residual(vanish), std::invalid_argument);
}

TEST_CASE("parametrix residual halves when the truncation doubles"
          * doctest::timeout(300)) {
    auto residual_at = [](int modes) {
        SpectralSystem cir = build_periodic_circle(modes, 4 * (2 * modes + 1));
        Symbol a = make_symbol(
            cir,
            [](double x, std::int64_t k) {
                return Complex((2.0 + std::cos(x)) * std::sqrt(1.0 + double(k) * double(k)),
                               0.0);
            },
            1.0, 1.0, 0.0, "leading");
        return parametrix_residual(a);
    };
    const double r32 = residual_at(32);
    const double r64 = residual_at(64);
    const double r128 = residual_at(128);
    CHECK(r64 / r32 > 0.38);
    CHECK(r64 / r32 < 0.65);
    CHECK(r128 / r64 > 0.38);
    CHECK(r128 / r64 < 0.65);
}

TEST_CASE("composition defect: exact cases") {
    SpectralSystem cir = build_periodic_circle(40, 4 * 81);

    // multipliers commute exactly
    Symbol g1 = bracket_power(cir, 0.5);
    Symbol g2 = bracket_power(cir, -1.0);
    CHECK(composition_defect(g1, g2).maxCoeff() <= 1e-10);

    // identity composed with anything
    Symbol one = make_multiplier(cir, [](std::int64_t) { return Complex(1.0); }, 0.0);
    Symbol b = make_random_order_zero_symbol(cir, 2, 5);
    Eigen::VectorXd d = composition_defect(one, b);
    for (Index j = 0; j < cir.size(); ++j) {
        if (std::llabs(cir.labels()[j]) > 40 - 3) continue;  // aliased edge band
        CHECK(d[j] <= 1e-10);
    }

    // a = e^{ix}, b = <k>^{-1}: the shift composes exactly with the
    // multiplier, so the defect obeys (trivially) the <k>^{-2} contract
    Symbol shift = make_symbol(
        cir, [](double x, std::int64_t) { return std::polar(1.0, x); }, 0.0, 1.0, 0.0,
        "phase");
    Eigen::VectorXd d2 = composition_defect(shift, g2);
    for (std::int64_t k = 4; k <= 32; ++k) {
        const Index j = *cir.index_of_label(k);
        CHECK(d2[j] <= 1.0 / (cir.brackets()[j] * cir.brackets()[j]));
    }

    SpectralSystem dir = build_dirichlet_interval(8, 64);
    CHECK_THROWS_AS(
        composition_defect(bracket_power(dir, 0.0), bracket_power(dir, -1.0)),
        unsupported_model_error);
}

TEST_CASE("composition defect decays one bracket order below the product") {
    SpectralSystem cir = build_periodic_circle(80, 4 * 161);
    Symbol a = bracket_power(cir, 1.0);
    Symbol b = make_symbol(
        cir,
        [](double x, std::int64_t k) {
            return Complex((2.0 + std::cos(x)) / std::sqrt(1.0 + double(k) * double(k)), 0.0);
        },
        -1.0, 1.0, 0.0, "cos_dec");
    Eigen::VectorXd d = composition_defect(a, b);

    // |a b| is order 0; the defect contracts like <k>^{-1}: the scaled
    // profile is bounded and the raw ratio decays monotonically through
    // the dyadic window
    double prev = 1e100;
    for (std::int64_t k : {8, 16, 32, 64}) {
        const Index j = *cir.index_of_label(k);
        const double product_sup = 3.0;  // sup_x |(2 + cos x)|
        const double ratio = d[j] / product_sup;
        CHECK(ratio < prev);
        prev = ratio;
        CHECK(d[j] * cir.brackets()[j] <= 5.0);
    }
}

TEST_CASE("l2 operator norm") {
    SpectralSystem cir = build_periodic_circle(8, 96);

    CHECK(l2_operator_norm(identity_operator(cir)) == doctest::Approx(1.0).epsilon(1e-10));

    Symbol g = make_multiplier(
        cir, [](std::int64_t k) { return Complex(1.0 / (1.0 + std::abs(double(k)))); }, -1.0);
    CHECK(l2_operator_norm(quantize(g)) ==
          doctest::Approx(g.mult.cwiseAbs().maxCoeff()).epsilon(1e-12));

    // dense path agrees with the diagonal fast path
    CHECK(l2_operator_norm(quantize_dense(g)) ==
          doctest::Approx(l2_operator_norm(quantize(g))).epsilon(1e-8));

    // identity on the twisted model: Gram-corrected norm is still 1
    SpectralSystem twi = build_twisted_model(2.0, 8, 128);
    CHECK(l2_operator_norm(identity_operator(twi)) == doctest::Approx(1.0).epsilon(1e-8));

    // order-0 symbols stay uniformly bounded across truncations
    for (int modes : {32, 64, 128}) {
        SpectralSystem s = build_periodic_circle(modes, 4 * (2 * modes + 1));
        Symbol sym = make_symbol(
            s,
            [](double x, std::int64_t k) {
                const double b = std::sqrt(1.0 + double(k) * double(k));
                return Complex(std::cos(x) * double(k) / b, 0.0);
            },
            0.0, 1.0, 0.0, "cv_probe");
        CHECK(l2_operator_norm(quantize(sym)) <= 3.0);
    }
}
