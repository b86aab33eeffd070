#include "pks/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "pks/format.hpp"

namespace pks {

namespace {

constexpr double pi = std::numbers::pi;

double paper_a() { return 1.0 / (2000.0 * pi); }

bool close_rel(double x, double y, double tol = 1e-12) {
    return std::abs(x - y) <= tol * std::max(std::abs(x), std::abs(y));
}

double ceil_decimals(double v, int digits) {
    const double s = std::pow(10.0, digits);
    return std::ceil(v * s) / s;
}

double ceil_significant(double v, int digits) {
    const int e = static_cast<int>(std::floor(std::log10(v))) - digits + 1;
    const double s = std::pow(10.0, e);
    return std::ceil(v / s) * s;
}

// Terms of the combination max{sqrt B(1/2 - eps, m - 1/2), sqrt B(second, m - 1/2)}.
double beta_max(double eps, double second, double m) {
    return std::max(std::sqrt(beta_function(0.5 - eps, m - 0.5)),
                    std::sqrt(beta_function(second, m - 0.5)));
}

double prefactor(const NormParams& p, double power_of_two_m) {
    return std::pow(2.0, power_of_two_m) * std::pow(1.5, p.eps);
}

}  // namespace

NormParams paper_norm_params(const ModelCase& mc) {
    NormParams p;
    p.a = paper_a();
    p.xi = p.theta1 = p.theta2 = 1.0;
    if (mc.alpha > 0) {
        p.eps = 0.25;
        p.m = 0.9;
    } else {
        p.eps = 5.0 / 12.0;
        p.m = 0.7;
    }
    return p;
}

void validate(const NormParams& p) {
    auto fail = [](const std::string& what) { throw ParameterError("invalid norm parameters: " + what); };
    for (double v : {p.m, p.eps, p.a, p.xi, p.theta1, p.theta2})
        if (!std::isfinite(v)) fail("non-finite value");
    if (!(p.theta1 > 0 && p.theta1 <= 1)) fail("need 0 < theta1 <= 1");
    if (!(p.theta2 > 0 && p.theta2 <= 1)) fail("need 0 < theta2 <= 1");
    if (!(p.theta1 <= 2 * std::sqrt(p.theta2) - p.theta2)) fail("need theta1 <= 2 sqrt(theta2) - theta2");
    if (!(p.theta2 * p.xi > 0 && p.theta2 * p.xi < 4 * pi)) fail("need 0 < theta2 xi < 4 pi");
    if (!(4 * pi * p.a > 0 && 4 * pi * p.a < p.theta1 * p.xi)) fail("need 0 < 4 pi a < theta1 xi");
    if (!(p.eps > 0 && p.eps < 0.5)) fail("need 0 < eps < 1/2");
    if (!(p.m > 0.5)) fail("need m > 1/2");
}

void validate(const NormParams& p, const ModelCase& mc) {
    if (!(mc.alpha >= 0) || !std::isfinite(mc.alpha)) throw ParameterError("invalid model: need alpha >= 0");
    validate(p);
    if (mc.alpha == 0 && !(p.eps > 1.0 / 3.0))
        throw ParameterError("invalid norm parameters: alpha = 0 needs eps > 1/3");
}

double log_gamma(double x) {
    if (!(x > 0) || !std::isfinite(x)) throw DomainError("log_gamma: argument must be positive and finite");
    static constexpr double cof[14] = {
        57.1562356658629235,     -59.5979603554754912,    14.1360979747417471,
        -0.491913816097620199,   0.339946499848118887e-4, 0.465236289270485756e-4,
        -0.983744753048795646e-4, 0.158088703224912494e-3, -0.210264441724104883e-3,
        0.217439618115212643e-3, -0.164318106536763890e-3, 0.844182239838527433e-4,
        -0.261908384015814087e-4, 0.368991826595316234e-5};
    double y = x;
    double tmp = x + 5.24218750000000000;
    tmp = (x + 0.5) * std::log(tmp) - tmp;
    double ser = 0.999999999999997092;
    for (double c : cof) ser += c / ++y;
    return tmp + std::log(2.5066282746310005 * ser / x);
}

double beta_function(double x, double y) {
    if (!(x > 0) || !(y > 0)) throw DomainError("beta_function: arguments must be positive");
    return std::exp(log_gamma(x) + log_gamma(y) - log_gamma(x + y));
}

BoundConstants bound_constants(const NormParams& p) {
    validate(p);
    const double g1 = p.theta1 * p.xi / (2 * pi) - 2 * p.a;
    const double g2 = p.xi / (2 * pi);
    const double g3 = 2 - p.theta2 * p.xi / (2 * pi);
    const double pre = (1 + p.xi) / std::sqrt(2 * pi);
    const double s43 = std::sqrt(4.0 / 3.0);
    const double q14 = std::pow(2.0, -0.25);
    const double g1_34 = std::pow(g1, -0.75);
    const double g13 = 1.0 / std::sqrt(g1 * g3);
    const double g23 = 1.0 / std::sqrt(g2 * g3);

    BoundConstants c;
    c.c_st = pre * (std::cbrt(2.0) * s43 * g1_34 * q14 + (3 + std::sqrt(2.0) + s43) * g23);
    c.c_ch1 = pre * std::pow(2.0, 5.0 / 12.0) * s43 * g1_34 * q14;
    c.c_ch2 = pre * q14 * (s43 + 1 + std::sqrt(0.5)) * g13;
    c.c_ch3 = pre * q14 * (s43 + 2) * g13;
    c.c_fl1 = pre * std::pow(2.0, 0.75) * s43 * g1_34 * q14;
    c.c_fl2 = pre * (std::pow(2.0, 25.0 / 12.0) + std::pow(2.0, -1.0 / 12.0)) / (3 * std::sqrt(3.0)) * g13;
    c.c_fl3 = pre * (std::pow(2.0, 25.0 / 12.0) + std::pow(2.0, 5.0 / 12.0)) / (3 * std::sqrt(3.0)) * g13;
    c.c_l = (1 + p.xi) / g1;
    c.c_hl = pre * (std::cbrt(3.0) * s43 * g1_34 * q14 +
                    (std::cbrt(2.0) + std::pow(2.0, 1.0 / 6.0) + std::cbrt(3.0) * s43 + 1 + std::pow(2.0, -1.0 / 3.0)) *
                        g23);
    return c;
}

double rate_r1(const NormParams& p, double alpha) {
    if (!(alpha > 0)) throw DomainError("r1 needs alpha > 0");
    return prefactor(p, p.m) * std::pow(alpha, -0.25) * beta_max(p.eps, p.eps, p.m);
}

double rate_r2(const NormParams& p) {
    if (!(p.eps > 1.0 / 3.0)) throw DomainError("r2 needs eps > 1/3 (Beta argument eps - 1/3 must be positive)");
    return prefactor(p, p.m) * beta_max(p.eps, p.eps - 1.0 / 3.0, p.m);
}

double rate_r3(const NormParams& p, double alpha) {
    if (!(alpha > 0)) throw DomainError("r3 needs alpha > 0");
    return prefactor(p, p.m) * std::max(1.0, std::pow(alpha, -0.25)) * beta_max(p.eps, p.eps, p.m);
}

double rate_factor(const NormParams& p, const ModelCase& mc) {
    if (mc.alpha == 0) return rate_r2(p);
    return mc.coupled ? rate_r3(p, mc.alpha) : rate_r1(p, mc.alpha);
}

ThresholdMode parse_threshold_mode(const std::string& s) {
    if (s == "paper-split") return ThresholdMode::paper_split;
    if (s == "sharp") return ThresholdMode::sharp;
    throw ParameterError("unknown threshold mode '" + s + "' (expected paper-split or sharp)");
}

double closing_function(const BoundConstants& c, double r, const ModelCase& mc, double amplitude) {
    const double k3 = std::pow(1.01, 3);
    const double h = std::pow(amplitude, -0.5);
    const double t = std::pow(amplitude, -1.0 / 3.0);
    const double q = std::pow(2.0, 0.25);
    if (!mc.coupled) {
        if (mc.alpha > 0) return k3 * 2 * r * (c.c_ch1 * h + c.c_ch2 * t);
        return k3 * std::pow(2.0, 1.25) * r * (c.c_ch1 * h + c.c_ch3 * t);
    }
    const double lead = c.c_l / (1.01 * std::pow(amplitude, 2.0 / 3.0));
    if (mc.alpha > 0)
        return 2 * k3 * r * (lead + (2 * c.c_st + c.c_hl + c.c_ch1 + c.c_fl1) * h + (c.c_ch2 + c.c_fl2) * t);
    return 2 * k3 * r *
           (lead + (2 * c.c_st + c.c_hl + q * c.c_ch1 + q * c.c_fl1) * h + q * (c.c_ch3 + c.c_fl3) * t);
}

namespace {

bool is_paper_point(const NormParams& p, const ModelCase& mc) {
    const NormParams ref = paper_norm_params(mc);
    return close_rel(p.a, ref.a) && p.xi == 1 && p.theta1 == 1 && p.theta2 == 1 && close_rel(p.eps, ref.eps) &&
           close_rel(p.m, ref.m);
}

ThresholdResult bisect(const BoundConstants& c, double r, const ModelCase& mc) {
    ThresholdResult out;
    auto g = [&](double amp) { return closing_function(c, r, mc, amp); };
    double lo = 1.0, hi = 1e18;
    if (g(lo) <= 1) {
        out.lambda = 1;
        out.bracket_failed = true;
        out.residual = std::abs(g(lo) - 1);
        return out;
    }
    if (g(hi) > 1) {
        out.lambda = hi;
        out.bracket_failed = true;
        out.residual = std::abs(g(hi) - 1);
        return out;
    }
    double mid = hi;
    for (int it = 1; it <= 200; ++it) {
        mid = std::sqrt(lo * hi);
        const double gm = g(mid);
        out.iterations = it;
        if (std::abs(gm - 1) <= 1e-12) break;
        (gm > 1 ? lo : hi) = mid;
    }
    out.lambda = mid;
    out.residual = std::abs(g(mid) - 1);
    return out;
}

// Named intermediate bounds printed in the uncoupled chain.
const double ch1_bound = 16.0 / 5.0 * std::pow(pi, 0.25);
const double ch2_bound = 54.0 / 25.0 * std::sqrt(pi);
const double ch3_bound = 12.0 / 5.0 * std::sqrt(pi);
const double r1_bound = std::pow(3.0, 0.25) * std::sqrt(26.0);
const double r2_bound = std::pow(3.0, 5.0 / 12.0) * std::pow(2.0, 77.0 / 120.0) * std::sqrt(17.0);

double x1_value(double r, double ch1) { return std::pow(10 * std::pow(1.01, 3) * 2 * r * ch1, 2); }
double x2_value(double r, double ch2) { return std::pow(10.0 / 9.0 * std::pow(1.01, 3) * 2 * r * ch2, 3); }
double x3_value(double r, double ch1) { return std::pow(10 * std::pow(1.01, 3) * std::pow(2.0, 1.25) * r * ch1, 2); }
double x4_value(double r, double ch3) {
    return std::pow(10.0 / 9.0 * std::pow(1.01, 3) * std::pow(2.0, 1.25) * r * ch3, 3);
}

double x1_closed() { return 121.0 * 4 * 256 * pi; }
double x2_closed() { return std::pow(11.0 / 9.0, 3) * 8 * std::pow(54.0, 3) / 125.0 * 13; }
double x3_closed() { return 100.0 * 1.1 * 8 * 17 * 256 / 25.0 * 9; }
double x4_closed() {
    return std::pow(10.0 / 9.0, 3) * 1.1 * 64 * 17 * std::sqrt(17.0) * 1728.0 / 125.0 * std::pow(3.0, 1.25) *
           std::pow(pi, 1.5);
}

ThresholdResult split_uncoupled(const BoundConstants& c, const NormParams& p, const ModelCase& mc) {
    ThresholdResult out;
    if (is_paper_point(p, mc)) {
        out.paper_chain = true;
        if (mc.alpha > 0) {
            const double s2 = std::pow(mc.alpha, -0.5), s3 = std::pow(mc.alpha, -0.75);
            out.steps.push_back({"x1", x1_value(r1_bound, ch1_bound) * s2, x1_closed() * s2, 389256.0 * s2});
            out.steps.push_back({"x2", x2_value(r1_bound, ch2_bound) * s3, x2_closed() * s3, 239197.0 * s3});
        } else {
            out.steps.push_back({"x3", x3_value(r2_bound, ch1_bound), x3_closed(), 1378714.0});
            out.steps.push_back({"x4", x4_value(r2_bound, ch3_bound), x4_closed(), 2058614.0});
        }
    } else {
        const double r = rate_factor(p, mc);
        if (mc.alpha > 0) {
            const double v1 = x1_value(r, c.c_ch1), v2 = x2_value(r, c.c_ch2);
            out.steps.push_back({"x1", v1, v1, std::ceil(v1)});
            out.steps.push_back({"x2", v2, v2, std::ceil(v2)});
        } else {
            const double v3 = x3_value(r, c.c_ch1), v4 = x4_value(r, c.c_ch3);
            out.steps.push_back({"x3", v3, v3, std::ceil(v3)});
            out.steps.push_back({"x4", v4, v4, std::ceil(v4)});
        }
    }
    for (const auto& s : out.steps) out.lambda = std::max(out.lambda, s.published);
    return out;
}

// Coupled chain: constants and the alpha-free rate factor rounded up at three
// decimals, one combined solve, result rounded up to four significant digits,
// then scaled by max{1, alpha^(-3/4)}.
ThresholdResult combined_coupled(const BoundConstants& c, const NormParams& p, const ModelCase& mc) {
    BoundConstants up = c;
    for (double* v : {&up.c_st, &up.c_ch1, &up.c_ch2, &up.c_ch3, &up.c_fl1, &up.c_fl2, &up.c_fl3, &up.c_hl, &up.c_l})
        *v = ceil_decimals(*v, 3);
    const double r_base = mc.alpha > 0 ? rate_r3(p, 1.0) : rate_r2(p);
    ThresholdResult solved = bisect(up, ceil_decimals(r_base, 3), mc);
    ThresholdResult out;
    out.paper_chain = is_paper_point(p, mc);
    out.bracket_failed = solved.bracket_failed;
    out.iterations = solved.iterations;
    out.residual = solved.residual;
    const double scale = mc.alpha > 0 ? std::max(1.0, std::pow(mc.alpha, -0.75)) : 1.0;
    const double rounded = ceil_significant(solved.lambda, 4);
    double published = rounded;
    if (out.paper_chain) published = mc.alpha > 0 ? 1.013e6 : 4.673e6;
    out.steps.push_back({"combined", solved.lambda * scale, rounded * scale, published * scale});
    out.lambda = published * scale;
    return out;
}

}  // namespace

ThresholdResult solve_amplitude_threshold(const BoundConstants& c, const NormParams& p, const ModelCase& mc,
                                          ThresholdMode mode) {
    validate(p, mc);
    if (mode == ThresholdMode::sharp) return bisect(c, rate_factor(p, mc), mc);
    return mc.coupled ? combined_coupled(c, p, mc) : split_uncoupled(c, p, mc);
}

BootstrapSizes bootstrap_sizes(const InitialNorms& in, const ModelCase& mc) {
    for (double v : {in.y_n, in.y_dx13_n, in.y_w, in.mass, in.linf_n})
        if (!(v >= 0) || !std::isfinite(v)) throw DomainError("bootstrap_sizes: norms must be finite and nonnegative");
    if (!(mc.alpha >= 0)) throw DomainError("bootstrap_sizes: alpha must be nonnegative");
    double sum = in.y_n * in.y_n;
    if (mc.coupled) sum += in.y_dx13_n * in.y_dx13_n + in.y_w * in.y_w;
    BootstrapSizes b;
    b.size = std::sqrt(sum + 1);
    const double q = 1.01 * b.size;
    const double tail = q + in.mass + in.linf_n + 1;
    double bracket;
    if (mc.alpha > 0) {
        bracket = std::sqrt(1.0 / (2 * pi * mc.alpha)) * q * q + 1;
    } else {
        const double rc = 2.0 / pi * (3 + 2 * std::sqrt(2.0)) * (q + in.mass);
        bracket = rc * rc + 1;
    }
    b.size_inf = 128.0 * bracket * tail;
    return b;
}

ConstantReport constant_report(const NormParams& p, const ModelCase& mc, const InitialNorms* initial) {
    validate(p, mc);
    ConstantReport r;
    r.params = p;
    r.model = mc;
    r.c = bound_constants(p);
    if (mc.alpha > 0) {
        r.r1 = rate_r1(p, mc.alpha);
        r.r3 = rate_r3(p, mc.alpha);
    }
    if (p.eps > 1.0 / 3.0) r.r2 = rate_r2(p);
    r.paper = solve_amplitude_threshold(r.c, p, mc, ThresholdMode::paper_split);
    r.sharp = solve_amplitude_threshold(r.c, p, mc, ThresholdMode::sharp);
    if (initial) {
        r.has_bootstrap = true;
        r.bootstrap = bootstrap_sizes(*initial, mc);
    }
    return r;
}

std::vector<AuditEntry> verify_paper_chain() {
    std::vector<AuditEntry> out;
    auto add = [&](const std::string& name, double lhs, const std::string& rel, double rhs) {
        bool ok = false;
        if (rel == "<") ok = lhs < rhs;
        else if (rel == "<=") ok = lhs <= rhs * (1 + 1e-14);
        else ok = close_rel(lhs, rhs);
        out.push_back({name, lhs, rhs, ok, rel});
    };

    const ModelCase pos{1.0, false}, zero{0.0, false};
    const NormParams pp = paper_norm_params(pos), pz = paper_norm_params(zero);
    const BoundConstants c = bound_constants(pp);
    const double s43 = std::sqrt(4.0 / 3.0);
    const double ratio = 1000.0 / 499.0;
    const double k4 = std::sqrt(pi / (4 * pi - 1));

    // Uncoupled, alpha > 0.
    add("C_ch1 == 2^(5/3) pi^(1/4) 3^(-1/2) (1000/499)^(3/4)", c.c_ch1, "==",
        std::pow(2.0, 5.0 / 3.0) * std::pow(pi, 0.25) / std::sqrt(3.0) * std::pow(ratio, 0.75));
    add("2^(5/3) < 16/5", std::pow(2.0, 5.0 / 3.0), "<", 3.2);
    add("3^(-1/2) (1000/499)^(3/4) < 1", std::pow(ratio, 0.75) / std::sqrt(3.0), "<", 1.0);
    add("C_ch1 < (16/5) pi^(1/4)", c.c_ch1, "<", ch1_bound);
    const double ch2_mid = std::pow(2.0, 0.75) * (s43 + 1 + std::sqrt(0.5)) * std::sqrt(ratio) * k4;
    add("C_ch2 <= 2^(3/4) (sqrt(4/3) + 1 + sqrt(1/2)) (1000/499)^(1/2) (pi/(4pi-1))^(1/2)", c.c_ch2, "<=", ch2_mid);
    add("2^(3/4) (1000/499)^(1/2) < 12/5", std::pow(2.0, 0.75) * std::sqrt(ratio), "<", 2.4);
    add("sqrt(4/3) + 1 + sqrt(1/2) < 3", s43 + 1 + std::sqrt(0.5), "<", 3.0);
    add("(1/(4pi-1))^(1/2) < 3/10", 1 / std::sqrt(4 * pi - 1), "<", 0.3);
    add("2^(3/4) (...) (1000/499)^(1/2) (pi/(4pi-1))^(1/2) < (12/5) 3 (pi/(4pi-1))^(1/2)", ch2_mid, "<",
        2.4 * 3 * k4);
    add("(12/5) 3 (pi/(4pi-1))^(1/2) < (54/25) pi^(1/2)", 2.4 * 3 * k4, "<", ch2_bound);
    add("C_ch2 < (54/25) pi^(1/2)", c.c_ch2, "<", ch2_bound);
    const double b1 = beta_function(0.25, 0.4);
    const double b1_split = std::pow(2.0, 47.0 / 20.0) + 5 * std::pow(2.0, -13.0 / 20.0);
    add("2^(3/5) int_0^(1/2) t^(-3/4) dt + 2^(3/4) int_(1/2)^1 (1-t)^(-3/5) dt == 2^(47/20) + 5 2^(-13/20)",
        std::pow(2.0, 0.6) * 4 * std::pow(0.5, 0.25) + std::pow(2.0, 0.75) * 2.5 * std::pow(0.5, 0.4), "==",
        b1_split);
    add("B(1/4, 2/5) <= 2^(47/20) + 5 2^(-13/20)", b1, "<=", b1_split);
    const double r1_split = std::pow(3.0, 0.25) * std::sqrt(std::pow(2.0, 73.0 / 20.0) + 5 * std::pow(2.0, 13.0 / 20.0));
    add("2^(9/10) (3/2)^(1/4) (2^(47/20) + 5 2^(-13/20))^(1/2) == 3^(1/4) (2^(73/20) + 5 2^(13/20))^(1/2)",
        std::pow(2.0, 0.9) * std::pow(1.5, 0.25) * std::sqrt(b1_split), "==", r1_split);
    add("3^(1/4) (2^(73/20) + 5 2^(13/20))^(1/2) < 3^(1/4) 26^(1/2)", r1_split, "<", r1_bound);
    add("r1 (alpha = 1) <= 3^(1/4) 26^(1/2)", rate_r1(pp, 1.0), "<=", r1_bound);
    const double x1 = x1_value(r1_bound, ch1_bound);
    add("1.01^6 (26/25) 3^(1/2) < 1.1^2 pi^(1/2)", std::pow(1.01, 6) * 26.0 / 25.0 * std::sqrt(3.0), "<",
        1.21 * std::sqrt(pi));
    add("x1 alpha^(1/2) < 11^2 4 16^2 pi", x1, "<", x1_closed());
    add("11^2 4 16^2 pi < 389256", x1_closed(), "<", 389256.0);
    add("x1 alpha^(1/2) < 389256", x1, "<", 389256.0);
    const double x2 = x2_value(r1_bound, ch2_bound);
    add("3^(3/4) pi^(3/2) < 13", std::pow(3.0, 0.75) * std::pow(pi, 1.5), "<", 13.0);
    add("1.01^9 26^(3/2) / 5^3 < 1.1^3", std::pow(1.01, 9) * std::pow(26.0, 1.5) / 125.0, "<", std::pow(1.1, 3));
    add("x2 alpha^(3/4) < (11/9)^3 8 54^3 / 5^3 13", x2, "<", x2_closed());
    add("(11/9)^3 8 54^3 / 5^3 13 < 239197", x2_closed(), "<", 239197.0);
    add("x2 alpha^(3/4) < 239197", x2, "<", 239197.0);

    // Uncoupled, alpha = 0.
    const BoundConstants cz = bound_constants(pz);
    add("C_ch3 == 2^(1/4) (sqrt(4/3) + 2) (1000/499)^(1/2) (2pi/(4pi-1))^(1/2)", cz.c_ch3, "==",
        std::pow(2.0, 0.25) * (s43 + 2) * std::sqrt(ratio) * std::sqrt(2 * pi / (4 * pi - 1)));
    add("sqrt(4/3) < 5/4", s43, "<", 1.25);
    const double ch3_mid = (1.25 + 2) * 0.3 * 2.4 * std::sqrt(pi);
    add("C_ch3 < (5/4 + 2) (3/10) (12/5) pi^(1/2)", cz.c_ch3, "<", ch3_mid);
    add("(5/4 + 2) (3/10) (12/5) pi^(1/2) < (12/5) pi^(1/2)", ch3_mid, "<", ch3_bound);
    add("C_ch3 < (12/5) pi^(1/2)", cz.c_ch3, "<", ch3_bound);
    const double b2 = beta_function(1.0 / 12.0, 0.2);
    const double b2_split = std::pow(2.0, 43.0 / 60.0) * 17;
    add("2^(4/5) int_0^(1/2) t^(-11/12) dt + 2^(11/12) int_(1/2)^1 (1-t)^(-4/5) dt == 2^(43/60) 17",
        std::pow(2.0, 0.8) * 12 * std::pow(0.5, 1.0 / 12.0) + std::pow(2.0, 11.0 / 12.0) * 5 * std::pow(0.5, 0.2),
        "==", b2_split);
    add("B(1/12, 1/5) <= 2^(43/60) 17", b2, "<=", b2_split);
    add("2^(7/10) (3/2)^(5/12) (2^(43/60) 17)^(1/2) == 3^(5/12) 2^(77/120) 17^(1/2)",
        std::pow(2.0, 0.7) * std::pow(1.5, 5.0 / 12.0) * std::sqrt(b2_split), "==", r2_bound);
    add("r2 <= 3^(5/12) 2^(77/120) 17^(1/2)", rate_r2(pz), "<=", r2_bound);
    const double x3 = x3_value(r2_bound, ch1_bound);
    add("3^(5/6) pi^(1/2) < 9/2", std::pow(3.0, 5.0 / 6.0) * std::sqrt(pi), "<", 4.5);
    add("x3 < 10^2 1.1 2^3 17 16^2 / 5^2 9", x3, "<", x3_closed());
    add("10^2 1.1 2^3 17 16^2 / 5^2 9 < 1378714", x3_closed(), "<", 1378714.0);
    add("x3 < 1378714", x3, "<", 1378714.0);
    const double x4 = x4_value(r2_bound, ch3_bound);
    add("x4 < (10/9)^3 1.1 2^6 17 17^(1/2) 12^3 / 5^3 3^(5/4) pi^(3/2)", x4, "<", x4_closed());
    add("3^(5/4) pi^(3/2) < 22", std::pow(3.0, 1.25) * std::pow(pi, 1.5), "<", 22.0);
    add("(10/9)^3 1.1 2^6 17 17^(1/2) 12^3 / 5^3 22 < 2058614",
        x4_closed() / (std::pow(3.0, 1.25) * std::pow(pi, 1.5)) * 22, "<", 2058614.0);
    add("x4 < 2058614", x4, "<", 2058614.0);

    // Appendix B.
    add("C_l < 12.592", c.c_l, "<", 12.592);
    add("C_l == 2000 pi / 499", c.c_l, "==", 2000 * pi / 499);
    add("C_st < 12.089", c.c_st, "<", 12.089);
    add("C_hl < 13.052", c.c_hl, "<", 13.052);
    add("C_ch1 < 4.111", c.c_ch1, "<", 4.111);
    add("C_fl1 < 5.179", c.c_fl1, "<", 5.179);
    add("C_ch2 < 3.551", c.c_ch2, "<", 3.551);
    add("C_fl2 < 1.472", c.c_fl2, "<", 1.472);
    add("C_ch3 < 3.915", cz.c_ch3, "<", 3.915);
    add("C_fl3 < 1.583", cz.c_fl3, "<", 1.583);
    add("r3 (alpha = 1) < 4.977", rate_r3(pp, 1.0), "<", 4.977);
    add("r2 < 7.841", rate_r2(pz), "<", 7.841);
    const ModelCase cp{1.0, true}, cz0{0.0, true};
    const ThresholdResult t1 = combined_coupled(c, pp, cp);
    const ThresholdResult t0 = combined_coupled(cz, pz, cz0);
    add("coupled alpha > 0: root with rounded constants < 1.013e6", t1.steps[0].solved, "<", 1.013e6);
    add("coupled alpha = 0: root with rounded constants < 4.673e6", t0.steps[0].solved, "<", 4.673e6);
    return out;
}

std::string report_json(const ConstantReport& r, const std::vector<AuditEntry>* audit) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["schema"] = "pks-constants/1";
    j["params"] = {{"m", num15(r.params.m)},         {"eps", num15(r.params.eps)},
                   {"a", num15(r.params.a)},         {"xi", num15(r.params.xi)},
                   {"theta1", num15(r.params.theta1)}, {"theta2", num15(r.params.theta2)}};
    j["model"] = {{"alpha", num15(r.model.alpha)}, {"coupled", r.model.coupled}};
    j["c_st"] = num15(r.c.c_st);
    j["c_ch1"] = num15(r.c.c_ch1);
    j["c_ch2"] = num15(r.c.c_ch2);
    j["c_ch3"] = num15(r.c.c_ch3);
    j["c_fl1"] = num15(r.c.c_fl1);
    j["c_fl2"] = num15(r.c.c_fl2);
    j["c_fl3"] = num15(r.c.c_fl3);
    j["c_hl"] = num15(r.c.c_hl);
    j["c_l"] = num15(r.c.c_l);
    auto opt = [](double v) { return v > 0 ? ordered_json(num15(v)) : ordered_json(nullptr); };
    j["r1"] = opt(r.r1);
    j["r2"] = opt(r.r2);
    j["r3"] = opt(r.r3);
    j["lambda_paper"] = num15(r.paper.lambda);
    j["lambda_sharp"] = num15(r.sharp.lambda);
    ordered_json steps = ordered_json::array();
    for (const auto& s : r.paper.steps)
        steps.push_back({{"name", s.name},
                         {"solved", num15(s.solved)},
                         {"coarsened", num15(s.coarsened)},
                         {"published", num15(s.published)}});
    j["paper_split"] = {{"published_chain", r.paper.paper_chain}, {"steps", steps}};
    j["sharp"] = {{"residual", num15(r.sharp.residual)},
                  {"iterations", r.sharp.iterations},
                  {"bracket_failed", r.sharp.bracket_failed}};
    if (r.has_bootstrap) {
        const char* a = r.model.coupled ? "k" : "q";
        const char* b = r.model.coupled ? "k_inf" : "q_inf";
        j[a] = num15(r.bootstrap.size);
        j[b] = num15(r.bootstrap.size_inf);
    }
    if (audit) {
        ordered_json arr = ordered_json::array();
        for (const auto& e : *audit)
            arr.push_back({{"inequality", e.inequality},
                           {"relation", e.relation},
                           {"lhs", num15(e.lhs)},
                           {"rhs", num15(e.rhs)},
                           {"pass", e.pass}});
        j["audit"] = arr;
    }
    return j.dump(2) + "\n";
}

}  // namespace pks
