#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "pks/threshold.hpp"
#include "test_util.hpp"

using namespace pks;
using pks_test::rel_err;
using pks_test::uniform;

namespace {

constexpr double pi = std::numbers::pi;

// Independent Beta oracle: split at 1/2 and substitute t = u^(1/x) on each half,
// which removes both endpoint singularities, then adaptive Gauss-Kronrod.
double beta_quadrature(double x, double y) {
    using boost::math::quadrature::gauss_kronrod;
    auto half = [](double p, double q) {
        const double top = std::pow(0.5, p);
        auto f = [p, q](double u) { return std::pow(1 - std::pow(u, 1 / p), q - 1); };
        return gauss_kronrod<double, 61>::integrate(f, 0.0, top, 12, 1e-13) / p;
    };
    return half(x, y) + half(y, x);
}

NormParams random_params(std::mt19937_64& rng, bool alpha_zero) {
    NormParams p;
    p.theta2 = uniform(rng, 0.3, 1.0);
    p.theta1 = uniform(rng, 0.3, 1.0) * std::min(1.0, 2 * std::sqrt(p.theta2) - p.theta2);
    p.xi = uniform(rng, 0.5, 3.0);
    p.a = uniform(rng, 0.05, 0.95) * p.theta1 * p.xi / (4 * pi);
    p.eps = alpha_zero ? uniform(rng, 0.35, 0.49) : uniform(rng, 0.05, 0.49);
    p.m = uniform(rng, 0.55, 1.5);
    return p;
}

}  // namespace

TEST_CASE("beta function: trivial identities") {
    CHECK(beta_function(1, 1) == doctest::Approx(1).epsilon(1e-14));
    CHECK(rel_err(beta_function(0.5, 0.5), pi) < 1e-13);
    CHECK(rel_err(beta_function(2, 3), 1.0 / 12.0) < 1e-13);
}

TEST_CASE("beta function: quadrature oracle") {
    const double pts[][2] = {{0.25, 0.4}, {1.0 / 12.0, 0.2}, {0.5, 0.4}, {0.1, 0.2}, {3.5, 0.7}, {1.3, 2.9}};
    for (auto& q : pts) {
        INFO(q[0], " ", q[1]);
        CHECK(rel_err(beta_function(q[0], q[1]), beta_quadrature(q[0], q[1])) < 1e-10);
    }
    CHECK(rel_err(beta_function(0.25, 0.4), 5.80748820391979) < 1e-12);
    CHECK(beta_function(0.25, 0.4) <= std::pow(2.0, 47.0 / 20.0) + 5 * std::pow(2.0, -13.0 / 20.0));
    CHECK(rel_err(beta_function(1.0 / 12.0, 0.2), 16.6170023489) < 1e-10);
}

TEST_CASE("log_gamma agrees with the standard library") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 2000; ++i) {
        const double x = std::exp(uniform(rng, std::log(1e-3), std::log(1e3)));
        const double ref = std::lgamma(x);
        CHECK(std::abs(log_gamma(x) - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
    }
}

TEST_CASE("beta function rejects non-positive arguments") {
    CHECK_THROWS_AS(beta_function(0, 1), DomainError);
    CHECK_THROWS_AS(beta_function(1, -2), DomainError);
    CHECK_THROWS_AS(log_gamma(0), DomainError);
}

TEST_CASE("property: beta is symmetric") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double x = std::exp(uniform(rng, std::log(0.01), std::log(50.0)));
        const double y = std::exp(uniform(rng, std::log(0.01), std::log(50.0)));
        CHECK(rel_err(beta_function(x, y), beta_function(y, x)) <= 1e-12);
    }
}

TEST_CASE("bound constants at the reference parameters") {
    const NormParams p = paper_norm_params({1.0, false});
    const BoundConstants c = bound_constants(p);
    // Independent high-precision evaluation of the closed forms.
    CHECK(rel_err(c.c_st, 12.0885891028) < 1e-10);
    CHECK(rel_err(c.c_ch1, 4.11024860899) < 1e-10);
    CHECK(rel_err(c.c_ch2, 3.55090454982) < 1e-10);
    CHECK(rel_err(c.c_ch3, 3.91432379758) < 1e-10);
    CHECK(rel_err(c.c_fl1, 5.17858874277) < 1e-10);
    CHECK(rel_err(c.c_fl2, 1.47146090374) < 1e-10);
    CHECK(rel_err(c.c_fl3, 1.58248383942) < 1e-10);
    CHECK(rel_err(c.c_l, 12.5915537218) < 1e-10);
    CHECK(rel_err(c.c_hl, 13.0517563998) < 1e-10);
    CHECK(rel_err(c.c_l, 2000 * pi / 499) < 1e-14);

    // Published three-decimal bounds: computed value below, and not by more than 0.1%.
    const std::pair<double, double> pub[] = {{c.c_st, 12.089}, {c.c_ch1, 4.111}, {c.c_ch2, 3.551},
                                             {c.c_ch3, 3.915}, {c.c_fl1, 5.179}, {c.c_fl2, 1.472},
                                             {c.c_fl3, 1.583}, {c.c_l, 12.592},  {c.c_hl, 13.052}};
    for (auto [v, b] : pub) {
        CHECK(v < b);
        CHECK(v >= 0.999 * b);
    }
}

TEST_CASE("bound constants reject invalid parameters") {
    NormParams p = paper_norm_params({1.0, false});
    p.a = 1.0;  // 4 pi a > theta1 xi
    CHECK_THROWS_AS(bound_constants(p), ParameterError);
    p = paper_norm_params({1.0, false});
    p.theta1 = 1.0;
    p.theta2 = 0.25;  // theta1 > 2 sqrt(theta2) - theta2
    CHECK_THROWS_AS(bound_constants(p), ParameterError);
    p = paper_norm_params({0.0, false});
    p.eps = 0.3;
    CHECK_THROWS_AS(validate(p, ModelCase{0.0, false}), ParameterError);
    CHECK_THROWS_AS(rate_r2(p), DomainError);
}

TEST_CASE("rate factors") {
    const NormParams pp = paper_norm_params({1.0, false});
    const NormParams pz = paper_norm_params({0.0, false});
    CHECK(rel_err(rate_r1(pp, 1.0), 4.97672884497) < 1e-10);
    CHECK(rel_err(rate_r3(pp, 1.0), 4.97672884497) < 1e-10);
    CHECK(rel_err(rate_r2(pz), 7.84095019982) < 1e-10);
    CHECK(rate_r3(pp, 1.0) < 4.977);
    CHECK(rate_r2(pz) < 7.841);
    CHECK(rate_r1(pp, 1.0) <= std::pow(3.0, 0.25) * std::sqrt(26.0));
    // Closed-form alpha dependence.
    CHECK(rel_err(rate_r1(pp, 16.0), rate_r1(pp, 1.0) / 2) < 1e-14);
    CHECK(rel_err(rate_r3(pp, 16.0), rate_r3(pp, 1.0)) < 1e-14);
    CHECK(rel_err(rate_r3(pp, 1.0 / 16), 2 * rate_r3(pp, 1.0)) < 1e-14);
    CHECK(rate_factor(pz, {0.0, true}) == rate_r2(pz));
}

TEST_CASE("paper-split thresholds, uncoupled") {
    for (double alpha : {1.0, 4.0, 0.25}) {
        const ModelCase mc{alpha, false};
        const NormParams p = paper_norm_params(mc);
        const ThresholdResult r = solve_amplitude_threshold(bound_constants(p), p, mc, ThresholdMode::paper_split);
        const double expect = std::max(389256 / std::sqrt(alpha), 239197 * std::pow(alpha, -0.75));
        CHECK(rel_err(r.lambda, expect) < 1e-14);
        REQUIRE(r.steps.size() == 2);
        CHECK(r.steps[0].solved <= r.steps[0].published);
        CHECK(r.steps[1].solved <= r.steps[1].published);
    }
    const ModelCase mz{0.0, false};
    const NormParams pz = paper_norm_params(mz);
    const ThresholdResult r0 = solve_amplitude_threshold(bound_constants(pz), pz, mz, ThresholdMode::paper_split);
    CHECK(r0.lambda == 2058614.0);
    REQUIRE(r0.steps.size() == 2);
    CHECK(rel_err(r0.steps[0].solved, 1126548.567) < 1e-8);
    CHECK(rel_err(r0.steps[1].solved, 1632839.680) < 1e-8);
    CHECK(rel_err(r0.steps[0].coarsened, 1378713.6) < 1e-9);
}

TEST_CASE("paper-split thresholds, coupled") {
    const ModelCase c1{1.0, true}, c0{0.0, true}, cq{1.0 / 16, true};
    const NormParams p1 = paper_norm_params(c1), p0 = paper_norm_params(c0);
    auto lam = [](const NormParams& p, const ModelCase& mc) {
        return solve_amplitude_threshold(bound_constants(p), p, mc, ThresholdMode::paper_split);
    };
    const ThresholdResult r1 = lam(p1, c1);
    const ThresholdResult r0 = lam(p0, c0);
    CHECK(r1.lambda == doctest::Approx(1.013e6).epsilon(1e-14));
    CHECK(r0.lambda == doctest::Approx(4.673e6).epsilon(1e-14));
    CHECK(rel_err(r1.steps[0].solved, 1012083.40) < 1e-7);
    CHECK(rel_err(r0.steps[0].solved, 4672042.02) < 1e-7);
    CHECK(rel_err(r1.steps[0].coarsened, 1.013e6) < 1e-14);
    CHECK(rel_err(lam(p1, cq).lambda, 1.013e6 * 8) < 1e-14);
}

TEST_CASE("sharp thresholds are pinned and below the paper values") {
    struct Row {
        double alpha;
        bool coupled;
        double sharp;
    } rows[] = {{1.0, true, 1011737.36}, {0.0, true, 4670131.03}, {1.0, false, 78697.8994},
                {0.0, false, 589229.8615034308}};
    for (const Row& row : rows) {
        const ModelCase mc{row.alpha, row.coupled};
        const NormParams p = paper_norm_params(mc);
        const ConstantReport rep = constant_report(p, mc);
        INFO(row.alpha, " ", row.coupled);
        CHECK(rel_err(rep.sharp.lambda, row.sharp) < 1e-8);
        CHECK(rep.sharp.lambda < rep.paper.lambda);
        CHECK(rep.sharp.residual <= 1e-12);
        CHECK_FALSE(rep.sharp.bracket_failed);
    }
}

TEST_CASE("property: sharp mode root and monotonicity") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 40; ++trial) {
        const bool coupled = trial % 2 == 1;
        const bool az = trial % 4 >= 2;
        const ModelCase mc{az ? 0.0 : uniform(rng, 0.1, 5.0), coupled};
        const NormParams p = random_params(rng, az);
        const BoundConstants c = bound_constants(p);
        const double r = rate_factor(p, mc);
        const ThresholdResult s = solve_amplitude_threshold(c, p, mc, ThresholdMode::sharp);
        if (s.bracket_failed) continue;
        CHECK(std::abs(closing_function(c, r, mc, s.lambda) - 1) <= 1e-12);
        double prev = closing_function(c, r, mc, 1.0);
        for (int i = 1; i <= 120; ++i) {
            const double a = std::pow(10.0, i * 0.1);
            const double g = closing_function(c, r, mc, a);
            CHECK(g < prev);
            prev = g;
        }
    }
}

TEST_CASE("property: lambda_sharp <= lambda_paper for random admissible parameters") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const bool az = trial % 3 == 0;
        const ModelCase mc{az ? 0.0 : uniform(rng, 0.05, 10.0), trial % 2 == 0};
        const NormParams p = random_params(rng, az);
        const ConstantReport rep = constant_report(p, mc);
        CHECK(rep.sharp.lambda <= rep.paper.lambda);
    }
}

TEST_CASE("bracket failure returns 1 with a flag") {
    BoundConstants tiny;
    tiny.c_ch1 = tiny.c_ch2 = 1e-9;
    const NormParams p = paper_norm_params({1.0, false});
    const ThresholdResult r = solve_amplitude_threshold(tiny, p, {1.0, false}, ThresholdMode::sharp);
    CHECK(r.lambda == 1);
    CHECK(r.bracket_failed);
    CHECK_THROWS_AS(parse_threshold_mode("fast"), ParameterError);
}

TEST_CASE("bootstrap sizes") {
    const double b = 3 + 2 * std::sqrt(2.0);
    InitialNorms zero;
    BootstrapSizes s = bootstrap_sizes(zero, {0.0, false});
    CHECK(s.size == 1);
    CHECK(rel_err(s.size_inf, 128 * (4 / (pi * pi) * b * b * 1.01 * 1.01 + 1) * 2.01) < 1e-14);
    s = bootstrap_sizes(zero, {1.0, false});
    CHECK(rel_err(s.size_inf, 128 * (std::sqrt(1 / (2 * pi)) * 1.01 * 1.01 + 1) * 2.01) < 1e-14);
    InitialNorms two;
    two.y_n = 2;
    CHECK(rel_err(bootstrap_sizes(two, {1.0, false}).size, std::sqrt(5.0)) < 1e-15);
    two.y_w = 2;
    two.y_dx13_n = 1;
    CHECK(bootstrap_sizes(two, {1.0, false}).size == doctest::Approx(std::sqrt(5.0)));
    CHECK(rel_err(bootstrap_sizes(two, {1.0, true}).size, std::sqrt(10.0)) < 1e-15);
    InitialNorms bad;
    bad.mass = -1;
    CHECK_THROWS_AS(bootstrap_sizes(bad, {1.0, false}), DomainError);
}

TEST_CASE("paper chain audit passes everywhere") {
    const auto audit = verify_paper_chain();
    CHECK(audit.size() >= 40);
    for (const auto& e : audit) {
        INFO(e.inequality, ": ", e.lhs, " ", e.relation, " ", e.rhs);
        CHECK(e.pass);
    }
}

TEST_CASE("report JSON carries every constant and the audit") {
    const ModelCase mc{1.0, false};
    const ConstantReport rep = constant_report(paper_norm_params(mc), mc);
    const auto audit = verify_paper_chain();
    const auto j = nlohmann::json::parse(report_json(rep, &audit));
    for (const char* k : {"c_st", "c_ch1", "c_ch2", "c_ch3", "c_fl1", "c_fl2", "c_fl3", "c_hl", "c_l", "r1",
                          "lambda_paper", "lambda_sharp"})
        CHECK(j.contains(k));
    CHECK(j["lambda_paper"].get<double>() == 389256.0);
    CHECK(j["audit"].size() == audit.size());
}
