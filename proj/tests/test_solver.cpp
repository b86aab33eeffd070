#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "pks/experiments.hpp"
#include "pks/solver.hpp"
#include "test_util.hpp"

using namespace pks;
using pks_test::rel_err;
using pks_test::uniform;

namespace {

constexpr double pi = std::numbers::pi;

GridSpec small_grid(int nx, int ny, double lx = 32 * pi, double ly = 32 * pi) {
    GridSpec g;
    g.nx = nx;
    g.ny = ny;
    g.lx = lx;
    g.ly = ly;
    return g;
}

// Random Hermitian field on |i| <= mi, |j| <= mj with zero mean.
SpectralField random_low_modes(const GridSpec& g, std::mt19937_64& rng, int mi, int mj, double scale) {
    SpectralField f(g);
    for (int i = 0; i <= mi; ++i)
        for (int js = -mj; js <= mj; ++js) {
            if (i == 0 && js <= 0) continue;
            f.set_mode(i, js, scale * cplx(uniform(rng, -1, 1), uniform(rng, -1, 1)));
        }
    return f;
}

// Field value at (x, y) from comoving coefficients, using the sheared wavenumbers.
double evaluate(const SpectralField& f, double phase, double x, double y) {
    const GridSpec& g = f.grid;
    double v = 0;
    for (int i = 0; i < g.nkx(); ++i)
        for (int j = 0; j < g.ny; ++j) {
            const cplx c = f.at(i, j);
            if (c == cplx(0)) continue;
            const double arg = g.kx(i) * x + g.ky(i, j, phase) * y;
            v += column_multiplicity(g, i) * (c * std::polar(1.0, arg)).real();
        }
    return v;
}

double max_coeff_diff(const SpectralField& a, const SpectralField& b) {
    double d = 0;
    for (std::size_t q = 0; q < a.coeffs.size(); ++q) d = std::max(d, std::abs(a.coeffs[q] - b.coeffs[q]));
    return d;
}

SimConfig quiet(SimConfig c) {
    c.moser_monitor = false;
    c.sample_every = 1000000;
    return c;
}

}  // namespace

TEST_CASE("propagator: closed forms") {
    CHECK(rel_err(linear_propagator(0, 1, 0, 1, 1), std::exp(-1.0)) < 1e-15);
    for (double a : {1.0, 10.0, 1e3})
        for (double t : {0.5, 2.0, 7.0}) {
            INFO(a, " ", t);
            CHECK(rel_err(linear_propagator(1, 0, 0, t, a), std::exp(-(t + t * t * t / 3) / a)) < 1e-14);
        }
    // First-order expansion.
    const double k = 0.7, xi0 = -1.3, s = 0.4, a = 3.0, h = 1e-7;
    const double slope = (1 - linear_propagator(k, xi0, s, h, a)) / h;
    CHECK(rel_err(slope, (k * k + std::pow(xi0 + k * s, 2)) / a) < 1e-6);
    CHECK(linear_propagator(k, xi0, s, 0, a) == 1);
}

TEST_CASE("propagator: exponent agrees with quadrature") {
    using boost::math::quadrature::gauss_kronrod;
    std::mt19937_64 rng(2);
    for (int n = 0; n < 100; ++n) {
        const double k = uniform(rng, -3, 3), xi0 = uniform(rng, -5, 5), rate = uniform(rng, -4, 4);
        const double dt = uniform(rng, 0.01, 3);
        auto f = [&](double t) { return k * k + std::pow(xi0 + rate * t, 2); };
        const double q = gauss_kronrod<double, 31>::integrate(f, 0.0, dt, 5, 1e-14);
        CHECK(rel_err(sheared_heat_integral(k, xi0, rate, dt), q) < 1e-13);
    }
}

TEST_CASE("linear scheme is exact mode by mode over 1000 steps") {
    std::mt19937_64 rng(7);
    for (auto [frame, amp] : {std::pair{Frame::rescaled, 1.0}, std::pair{Frame::rescaled, 100.0},
                              std::pair{Frame::physical, 0.5}, std::pair{Frame::physical, 0.0}}) {
        SimConfig c;
        c.grid = small_grid(32, 64);
        c.frame = frame;
        c.amplitude = amp;
        c.nonlinear = false;
        c.dt = 0.01;
        const SpectralField n0 = random_low_modes(c.grid, rng, 4, 6, 1.0);
        Stepper st(c);
        SimState s = initial_state(c, n0);
        for (int n = 0; n < 1000; ++n) REQUIRE(st.step(s, c.dt).status == StepStatus::ok);
        const double sigma = c.shear_rate(), nu = c.diffusivity();
        double worst = 0;
        for (int i = 0; i <= 4; ++i)
            for (int j = -6; j <= 6; ++j) {
                int row = 0;
                if (!comoving_row(s, i, j, row)) continue;
                const double k = c.grid.kx(i), xi0 = 2 * pi * j / c.grid.ly;
                // xi(t) = xi0 - sigma k t; the propagator's convention has the mirrored sign.
                const double decay = std::exp(-nu * sheared_heat_integral(k, -xi0, sigma * k, s.t));
                const cplx exact = n0.mode(i, j) * decay;
                worst = std::max(worst, std::abs(s.n.at(i, row) - exact) / std::abs(n0.mode(i, j)));
            }
        INFO(frame_name(frame), " A=", amp, " remaps ", s.remaps);
        CHECK(worst < 1e-13);
        CHECK(rel_err(s.t, 10.0) < 1e-12);
        if (sigma > 0) CHECK(s.remaps > 0);
    }
}

TEST_CASE("remap: single mode moves to the shifted row") {
    SimConfig c;
    c.grid = small_grid(16, 32);
    SpectralField n0(c.grid);
    n0.set_mode(1, 3, cplx(0.5, 0.25));
    n0.set_mode(2, 3, cplx(0.1, 0));
    SimState s = initial_state(c, n0);
    s.phase = 1.0;
    remap_shear(s, 1.0);
    CHECK(s.n.mode(1, 2) == cplx(0.5, 0.25));
    CHECK(s.n.mode(1, 3) == cplx(0));
    CHECK(s.n.mode(2, 1) == cplx(0.1, 0));
    CHECK(s.phase == 0);
    CHECK(s.shift == 1);
    CHECK(s.remaps == 1);
    int row = 0;
    REQUIRE(comoving_row(s, 1, 3, row));
    CHECK(row == 2);
    CHECK_THROWS_AS(remap_shear(s, 0.5), InternalError);
}

TEST_CASE("remap: physical field is unchanged") {
    std::mt19937_64 rng(19);
    SimConfig c;
    c.grid = small_grid(16, 64);
    c.coupled = true;
    for (int trial = 0; trial < 5; ++trial) {
        const SpectralField n0 = random_low_modes(c.grid, rng, 5, 10, 0.1);
        const SpectralField w0 = random_low_modes(c.grid, rng, 5, 10, 0.1);
        SimState s = initial_state(c, n0, &w0);
        s.phase = 2.0 + uniform(rng, 0, 0.5);
        const SimState before = s;
        remap_shear(s, 2.0);
        double d = 0;
        for (int p = 0; p < 20; ++p) {
            const double x = uniform(rng, 0, c.grid.lx), y = uniform(rng, 0, c.grid.ly);
            d = std::max(d, std::abs(evaluate(s.n, s.phase, x, y) - evaluate(before.n, before.phase, x, y)));
            d = std::max(d, std::abs(evaluate(s.w, s.phase, x, y) - evaluate(before.w, before.phase, x, y)));
        }
        CHECK(d < 1e-11);
        CHECK(rel_err(l2_norm_sq(s.n), l2_norm_sq(before.n)) < 1e-14);
    }
}

TEST_CASE("remap: two unit shifts compose to one double shift") {
    std::mt19937_64 rng(20);
    SimConfig c;
    c.grid = small_grid(16, 64);
    const SpectralField n0 = random_low_modes(c.grid, rng, 5, 10, 1.0);
    SimState a = initial_state(c, n0), b = initial_state(c, n0);
    a.phase = b.phase = 2.0;
    remap_shear(a, 1.0);
    remap_shear(a, 1.0);
    remap_shear(b, 2.0);
    CHECK(a.n.coeffs == b.n.coeffs);
    CHECK(a.shift == b.shift);
    CHECK(a.phase == b.phase);
}

TEST_CASE("mass is conserved per step and over a run") {
    SimConfig c;
    c.grid = small_grid(64, 64);
    c.frame = Frame::physical;
    c.amplitude = 2.0;
    c.alpha = 0.0;
    c.dt = 0.01;
    c.t_end = 2.0;
    const SpectralField n0 = reference_bump(c.grid, 0.5 * 8 * pi, c.grid.lx / 16);
    Stepper st(c);
    SimState s = initial_state(c, n0);
    const double m0 = s.n.coeffs[0].real();
    double worst = 0;
    for (int n = 0; n < 50; ++n) {
        const double before = s.n.coeffs[0].real();
        REQUIRE(st.step(s, c.dt).status == StepStatus::ok);
        worst = std::max(worst, rel_err(s.n.coeffs[0].real(), before));
    }
    CHECK(worst < 1e-12);
    CHECK(rel_err(s.n.coeffs[0].real(), m0) < 1e-12);

    const RunResult r = run(c, n0);
    CHECK(r.status == RunStatus::completed);
    CHECK(r.max_mass_drift < 1e-10);
    CHECK(r.max_hermitian_defect < 1e-12);
    CHECK(r.max_parseval_defect < 1e-12);
}

TEST_CASE("zero data stays zero") {
    for (bool coupled : {false, true}) {
        SimConfig c;
        c.grid = small_grid(32, 32);
        c.coupled = coupled;
        c.t_end = 2;
        c.sample_every = 5;
        const RunResult r = run(c, SpectralField(c.grid));
        CHECK(r.status == RunStatus::completed);
        REQUIRE(r.samples.size() > 3);
        for (const Sample& sm : r.samples) {
            CHECK(sm.mass == 0);
            CHECK(sm.linf_n == 0);
            CHECK(sm.l2_n == 0);
            CHECK(sm.xnorm_n == 0);
            CHECK(sm.xnorm_dx13_n == 0);
            CHECK(sm.xnorm_w == 0);
        }
        CHECK(r.warnings.empty());
    }
}

TEST_CASE("nonlinear deviation from the linear flow is quadratic in the amplitude") {
    std::mt19937_64 rng(30);
    SimConfig c;
    c.grid = small_grid(32, 32);
    c.alpha = 1.0;
    c.amplitude = 1e6;
    c.dt = 0.05;
    c.t_end = 1.0;
    // Positive profile; the whole density scales with eps, so the flux is exactly quadratic.
    SpectralField shape = random_low_modes(c.grid, rng, 3, 3, 0.02);
    shape.at(0, 0) = 1.0;
    auto deviation = [&](double eps) {
        SpectralField n0 = shape;
        for (cplx& v : n0.coeffs) v *= eps;
        SimConfig lin = quiet(c);
        lin.nonlinear = false;
        const RunResult a = run(quiet(c), n0);
        const RunResult b = run(lin, n0);
        REQUIRE(a.status == RunStatus::completed);
        return max_coeff_diff(a.final_state.n, b.final_state.n);
    };
    const double d1 = deviation(1e-2), d2 = deviation(2e-2);
    INFO(d1, " ", d2);
    CHECK(d1 > 0);
    CHECK(d2 / d1 == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("time stepping converges at fourth order") {
    GridSpec g = small_grid(32, 32, 4 * pi, 4 * pi);
    SpectralField n0(g);
    n0.at(0, 0) = 1.0;
    n0.set_mode(1, 0, 0.15);
    n0.set_mode(0, 1, cplx(0.05, 0.1));
    n0.set_mode(1, -1, 0.08);
    for (auto [frame, amp] : {std::pair{Frame::physical, 0.0}, std::pair{Frame::physical, 1.0},
                              std::pair{Frame::rescaled, 0.5}}) {
        SimConfig c;
        c.grid = g;
        c.frame = frame;
        c.amplitude = amp;
        c.alpha = 1.0;
        c.t_end = 0.8;  // final phase stays off the remap boundary for every dt
        c.blowup_linf = 10;
        c = quiet(c);
        auto final_state = [&](double dt) {
            SimConfig d = c;
            d.dt = dt;
            const RunResult r = run(d, n0);
            REQUIRE(r.status == RunStatus::completed);
            return r.final_state;
        };
        const SimState ref = final_state(1.0 / 640);
        std::vector<double> err;
        for (double dt : {0.1, 0.05, 0.025}) {
            const SimState s = final_state(dt);
            REQUIRE(s.shift == ref.shift);
            err.push_back(max_coeff_diff(s.n, ref.n));
        }
        INFO(frame_name(frame), " A=", amp);
        for (std::size_t i = 1; i < err.size(); ++i) CHECK(std::log2(err[i - 1] / err[i]) == doctest::Approx(4).epsilon(0.075));
    }
}

TEST_CASE("blow-up detection: thresholds") {
    const GridSpec g = small_grid(32, 32);
    SimConfig c;
    c.grid = g;
    c.blowup_tail = 0.1;
    SpectralField f(g);
    f.at(0, 0) = 0.1;
    f.set_mode(1, 1, 0.01);
    const BlowupCheck smooth = detect_blowup(inverse_transform(f), f, c);
    CHECK_FALSE(smooth.flagged);

    // 20% of the non-mean energy beyond the tail radius.
    f.set_mode(9, 0, 0.005);
    const BlowupCheck tail = detect_blowup(inverse_transform(f), f, c);
    CHECK(tail.tail == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(tail.flagged);
    CHECK(tail.criterion == "tail");

    c.blowup_linf = 0.05;
    const BlowupCheck linf = detect_blowup(inverse_transform(f), f, c);
    CHECK(linf.flagged);
    CHECK(linf.criterion == "linf");
}

TEST_CASE("blow-up detection time is monotone in the cutoff") {
    SimConfig c;
    c.frame = Frame::physical;
    c.amplitude = 0;
    c.dt = 0.01;
    c.t_end = 5;
    c = quiet(c);
    const SpectralField n0 = reference_bump(c.grid, 1.5 * 8 * pi);
    double prev = 0;
    for (double cut : {0.7, 0.85, 1.0}) {
        c.blowup_linf = cut;
        const RunResult r = run(c, n0);
        INFO(cut);
        REQUIRE(r.status == RunStatus::blowup);
        CHECK(r.criterion == "linf");
        CHECK(r.detection_time > prev);
        prev = r.detection_time;
    }
}

TEST_CASE("subcritical no-flow run stays bounded") {
    SimConfig c;
    c.grid = small_grid(64, 64);
    c.frame = Frame::physical;
    c.amplitude = 0;
    c.dt = 0.02;
    c.t_end = 5;
    const RunResult r = run(c, reference_bump(c.grid, 0.5 * 8 * pi));
    CHECK(r.status == RunStatus::completed);
    CHECK(r.max_linf <= r.initial_linf * (1 + 1e-9));
    CHECK(r.moser_negative_samples == 0);
    for (const Sample& sm : r.samples) CHECK(std::isnan(sm.xnorm_n));  // no shear, no X norm
}

TEST_CASE("configuration validation") {
    SimConfig c;
    c.amplitude = 0;
    CHECK_THROWS_AS(validate(c), ParameterError);
    c.frame = Frame::physical;
    CHECK_NOTHROW(validate(c));
    c.dt = 0;
    CHECK_THROWS_AS(validate(c), ParameterError);
    c = SimConfig{};
    c.tracked_modes = {{1000, 0}};
    CHECK_THROWS_AS(validate(c), ParameterError);
    CHECK(parse_frame("physical") == Frame::physical);
    CHECK_THROWS_AS(parse_frame("lab"), ParameterError);
}

TEST_CASE("runs are deterministic and export the documented columns") {
    SimConfig c;
    c.grid = small_grid(64, 64);
    c.amplitude = 10;
    c.t_end = 1;
    c.tracked_modes = {{1, 0}, {2, -1}};
    const SpectralField n0 = reference_bump(c.grid, 0.5 * 8 * pi, c.grid.lx / 16);
    const RunResult a = run(c, n0), b = run(c, n0);
    REQUIRE(a.status == RunStatus::completed);
    CHECK(run_csv(a) == run_csv(b));
    CHECK(run_summary_json(a, c) == run_summary_json(b, c));
    std::istringstream is(run_csv(a));
    std::string header;
    std::getline(is, header);
    CHECK(header.rfind("t,mass,linf_n,xnorm_n,xnorm_dx13_n,xnorm_w,mode_k1_xi0_abs,mode_k2_xi-1_abs,moser_margin", 0) ==
          0);
    CHECK(a.samples.back().t == doctest::Approx(1.0));
}
