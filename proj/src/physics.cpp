#include "pks/physics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pks {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx I(0.0, 1.0);

double mean_tolerance(const SpectralField& f) {
    double mx = 0;
    for (const cplx& c : f.coeffs) mx = std::max(mx, std::abs(c));
    return 1e-12 * std::max(1.0, mx);
}

// Applies out(i, j) = mult(i, j) * f(i, j) on the dealiased band and zero elsewhere.
template <class Mult>
void masked_apply(const SpectralField& f, SpectralField& out, Mult mult) {
    const GridSpec& g = f.grid;
    if (!(out.grid == g) || out.coeffs.size() != g.spectral_size()) out = SpectralField(g);
    const int ki = g.keep_i(), kj = g.keep_j();
    for (int i = 0; i < g.nkx(); ++i) {
        const cplx* src = &f.coeffs[g.index(i, 0)];
        cplx* dst = &out.coeffs[g.index(i, 0)];
        if (i > ki) {
            std::fill(dst, dst + g.ny, cplx(0, 0));
            continue;
        }
        for (int j = 0; j < g.ny; ++j) {
            const int js = g.signed_j(j);
            dst[j] = (js > kj || js < -kj) ? cplx(0, 0) : mult(i, j) * src[j];
        }
    }
}

bool nyquist_x(const GridSpec& g, int i) { return 2 * i == g.nx; }
bool nyquist_y(const GridSpec& g, int j) { return 2 * j == g.ny; }

}  // namespace

SpectralField solve_chemoattractant(const SpectralField& n, double alpha, double phase) {
    if (!(alpha >= 0) || !std::isfinite(alpha)) throw ParameterError("solve_chemoattractant: alpha must be >= 0");
    if (alpha == 0 && std::abs(n.coeffs[0]) > mean_tolerance(n)) {
        const double mass = n.coeffs[0].real() * n.grid.lx * n.grid.ly;
        throw SolvabilityError("solve_chemoattractant: alpha = 0 needs mean-free n, got mass " + std::to_string(mass));
    }
    const GridSpec& g = n.grid;
    SpectralField c(g);
    for (int i = 0; i < g.nkx(); ++i) {
        const double k = g.kx(i);
        for (int j = 0; j < g.ny; ++j) {
            if (i == 0 && j == 0 && alpha == 0) continue;
            const double xi = g.ky(i, j, phase);
            c.at(i, j) = n.at(i, j) / (alpha + k * k + xi * xi);
        }
    }
    return c;
}

SpectralField solve_chemoattractant_periodic(const SpectralField& n, double alpha, double phase) {
    if (alpha != 0) return solve_chemoattractant(n, alpha, phase);
    SpectralField m = n;
    m.coeffs[0] = 0;
    return solve_chemoattractant(m, 0.0, phase);
}

Velocity velocity_from_vorticity(const SpectralField& w, double phase) {
    if (std::abs(w.coeffs[0]) > mean_tolerance(w))
        throw SolvabilityError("velocity_from_vorticity: vorticity must be mean-free, got mean " +
                               std::to_string(w.coeffs[0].real()));
    const GridSpec& g = w.grid;
    Velocity u{SpectralField(g), SpectralField(g)};
    for (int i = 0; i < g.nkx(); ++i) {
        const double k = g.kx(i);
        for (int j = 0; j < g.ny; ++j) {
            if (i == 0 && j == 0) continue;
            const double xi = g.ky(i, j, phase);
            const cplx phi = -w.at(i, j) / (k * k + xi * xi);
            u.u1.at(i, j) = I * xi * phi;
            u.u2.at(i, j) = -I * k * phi;
        }
    }
    return u;
}

double spectral_divergence(const Velocity& u, double phase) {
    const GridSpec& g = u.u1.grid;
    require_same_grid(g, u.u2.grid, "spectral_divergence");
    double d = 0;
    for (int i = 0; i < g.nkx(); ++i) {
        const double k = g.kx(i);
        for (int j = 0; j < g.ny; ++j) {
            const double xi = g.ky(i, j, phase);
            d = std::max(d, std::abs(I * k * u.u1.at(i, j) + I * xi * u.u2.at(i, j)));
        }
    }
    return d;
}

void spectral_dx(const SpectralField& f, SpectralField& out) {
    const GridSpec& g = f.grid;
    if (!(out.grid == g) || out.coeffs.size() != g.spectral_size()) out = SpectralField(g);
    for (int i = 0; i < g.nkx(); ++i) {
        const cplx m = nyquist_x(g, i) ? cplx(0, 0) : I * g.kx(i);
        for (int j = 0; j < g.ny; ++j) out.at(i, j) = m * f.at(i, j);
    }
}

void spectral_dy(const SpectralField& f, double phase, SpectralField& out) {
    const GridSpec& g = f.grid;
    if (!(out.grid == g) || out.coeffs.size() != g.spectral_size()) out = SpectralField(g);
    for (int i = 0; i < g.nkx(); ++i)
        for (int j = 0; j < g.ny; ++j)
            out.at(i, j) = nyquist_y(g, j) ? cplx(0, 0) : I * g.ky(i, j, phase) * f.at(i, j);
}

// ---- flux evaluator ----

FluxEvaluator::FluxEvaluator(const GridSpec& g) : grid_(g), tf_(g), tmp_(g), s1_(g), s2_(g) {}

void FluxEvaluator::to_physical_masked(const SpectralField& f, std::vector<double>& out) {
    require_same_grid(f.grid, grid_, "nonlinear_fluxes");
    masked_apply(f, tmp_, [](int, int) { return cplx(1, 0); });
    tf_.inverse(tmp_, out);
}

void FluxEvaluator::to_physical_derivative(const SpectralField& f, int axis, double phase, std::vector<double>& out) {
    require_same_grid(f.grid, grid_, "nonlinear_fluxes");
    const GridSpec& g = grid_;
    if (axis == 0)
        masked_apply(f, tmp_, [&](int i, int) { return nyquist_x(g, i) ? cplx(0, 0) : I * g.kx(i); });
    else
        masked_apply(f, tmp_, [&](int i, int j) { return nyquist_y(g, j) ? cplx(0, 0) : I * g.ky(i, j, phase); });
    tf_.inverse(tmp_, out);
}

void FluxEvaluator::divergence(const std::vector<double>& f1, const std::vector<double>& f2, double phase,
                               SpectralField& out) {
    const GridSpec& g = grid_;
    tf_.forward(f1, s1_);
    tf_.forward(f2, s2_);
    if (!(out.grid == g) || out.coeffs.size() != g.spectral_size()) out = SpectralField(g);
    const int ki = g.keep_i(), kj = g.keep_j();
    for (int i = 0; i < g.nkx(); ++i) {
        const cplx mx = nyquist_x(g, i) ? cplx(0, 0) : I * g.kx(i);
        for (int j = 0; j < g.ny; ++j) {
            const int js = g.signed_j(j);
            if (i > ki || js > kj || js < -kj) {
                out.at(i, j) = 0;
                continue;
            }
            const cplx my = nyquist_y(g, j) ? cplx(0, 0) : I * g.ky(i, j, phase);
            out.at(i, j) = -(mx * s1_.at(i, j) + my * s2_.at(i, j));
        }
    }
    out.coeffs[0] = 0;  // exact divergence form
}

void FluxEvaluator::density_flux(const SpectralField& n, const SpectralField& c, const Velocity* u, double phase,
                                 SpectralField& out) {
    to_physical_masked(n, p0_);
    to_physical_derivative(c, 0, phase, p1_);
    to_physical_derivative(c, 1, phase, p2_);
    if (u) {
        to_physical_masked(u->u1, p3_);
        to_physical_masked(u->u2, p4_);
    }
    double speed = 0;
    const std::size_t np = grid_.physical_size();
    for (std::size_t q = 0; q < np; ++q) {
        double v1 = p1_[q], v2 = p2_[q];
        if (u) {
            v1 += p3_[q];
            v2 += p4_[q];
        }
        speed = std::max(speed, v1 * v1 + v2 * v2);
        p1_[q] = p0_[q] * v1;
        p2_[q] = p0_[q] * v2;
    }
    last_speed_ = std::sqrt(speed);
    divergence(p1_, p2_, phase, out);
}

void FluxEvaluator::vorticity_flux(const SpectralField& w, const Velocity& u, double phase, SpectralField& out) {
    to_physical_masked(w, p0_);
    to_physical_masked(u.u1, p1_);
    to_physical_masked(u.u2, p2_);
    double flow = 0;
    const std::size_t np = grid_.physical_size();
    for (std::size_t q = 0; q < np; ++q) {
        flow = std::max(flow, p1_[q] * p1_[q] + p2_[q] * p2_[q]);
        p1_[q] *= p0_[q];
        p2_[q] *= p0_[q];
    }
    last_flow_ = std::sqrt(flow);
    divergence(p1_, p2_, phase, out);
}

void FluxEvaluator::product(const SpectralField& a, const SpectralField& b, SpectralField& out) {
    to_physical_masked(a, p0_);
    to_physical_masked(b, p1_);
    for (std::size_t q = 0; q < p0_.size(); ++q) p0_[q] *= p1_[q];
    tf_.forward(p0_, out);
    apply_dealias(out);
}

FluxSet FluxEvaluator::fluxes(const SpectralField& n, const SpectralField& c, const SpectralField* w,
                              const Velocity* u, double phase) {
    require_same_grid(n.grid, grid_, "nonlinear_fluxes");
    require_same_grid(c.grid, grid_, "nonlinear_fluxes");
    FluxSet fs;
    density_flux(n, c, nullptr, phase, fs.chemotaxis);
    fs.advect_n = SpectralField(grid_);
    fs.advect_w = SpectralField(grid_);
    fs.buoyancy = SpectralField(grid_);
    if (u) {
        require_same_grid(u->u1.grid, grid_, "nonlinear_fluxes");
        fs.has_flow = true;
        vorticity_flux(n, *u, phase, fs.advect_n);
        if (w) {
            require_same_grid(w->grid, grid_, "nonlinear_fluxes");
            vorticity_flux(*w, *u, phase, fs.advect_w);
        }
    }
    masked_apply(n, tmp_, [&](int i, int) { return nyquist_x(grid_, i) ? cplx(0, 0) : -I * grid_.kx(i); });
    fs.buoyancy = tmp_;
    return fs;
}

FluxSet nonlinear_fluxes(const SpectralField& n, const SpectralField& c, const SpectralField* w, const Velocity* u,
                         double phase) {
    require_same_grid(n.grid, c.grid, "nonlinear_fluxes");
    FluxEvaluator ev(n.grid);
    return ev.fluxes(n, c, w, u, phase);
}

// ---- norms ----

double lp_norm(const GridSpec& g, const std::vector<double>& phys, double p) {
    if (phys.size() != g.physical_size()) throw ShapeError("lp_norm: sample array size");
    const double dA = g.lx * g.ly / static_cast<double>(g.physical_size());
    double s = 0;
    for (double v : phys) s += std::pow(std::abs(v), p);
    return std::pow(s * dA, 1 / p);
}

double linf_norm(const std::vector<double>& phys) {
    double m = 0;
    for (double v : phys) m = std::max(m, std::abs(v));
    return m;
}

double gradient_l4(const SpectralField& c, Transform& tf, double phase) {
    const GridSpec& g = c.grid;
    SpectralField d(g);
    spectral_dx(c, d);
    std::vector<double> gx = tf.inverse(d);
    spectral_dy(c, phase, d);
    std::vector<double> gy = tf.inverse(d);
    const double dA = g.lx * g.ly / static_cast<double>(g.physical_size());
    double s = 0;
    for (std::size_t q = 0; q < gx.size(); ++q) {
        const double m2 = gx[q] * gx[q] + gy[q] * gy[q];
        s += m2 * m2;
    }
    return std::pow(s * dA, 0.25);
}

// ---- elliptic estimates ----

int Lemma22Report::hard_violations() const {
    int n = 0;
    for (const auto& c : checks) n += (c.hard && !c.pass);
    return n;
}

int Lemma22Report::warnings() const {
    int n = 0;
    for (const auto& c : checks) n += (!c.hard && !c.pass);
    return n;
}

Lemma22Report lemma22_residuals(const SpectralField& n, const SpectralField& c, double alpha, double mass,
                                const NormParams* weight, double phase) {
    require_same_grid(n.grid, c.grid, "lemma22_residuals");
    const GridSpec& g = n.grid;
    Lemma22Report rep;
    auto add = [&](const std::string& name, double lhs, double rhs, bool hard) {
        InequalityCheck ch{name, lhs, rhs, hard, lhs <= rhs * (1 + 1e-10) + 1e-14};
        rep.checks.push_back(ch);
    };

    // Weighted L2 identities, computed on coefficients.
    struct Multiplier {
        std::string label;
        const NormParams* p;
    };
    std::vector<Multiplier> mults{{"N = 1", nullptr}};
    if (weight) mults.push_back({"N = <D_x>^m <1/D_x>^eps", weight});
    for (const Multiplier& mu : mults) {
        double nn = 0, c1 = 0, c2 = 0;
        for (int i = 0; i < g.nkx(); ++i) {
            const double k = g.kx(i);
            double w = 1;
            if (mu.p) {
                if (i == 0 && mu.p->eps > 0) continue;
                w = i == 0 ? 1.0 : y_weight_sq(k, mu.p->m, mu.p->eps);
            }
            w *= column_multiplicity(g, i);
            for (int j = 0; j < g.ny; ++j) {
                const double xi = g.ky(i, j, phase);
                const double K2 = k * k + xi * xi;
                nn += w * std::norm(n.at(i, j));
                const double cc = w * std::norm(c.at(i, j));
                c1 += K2 * cc;
                c2 += K2 * K2 * cc;
            }
        }
        const double area = g.lx * g.ly;
        const double n_l2 = std::sqrt(nn * area);
        if (alpha == 0)
            add("||grad^2 N c||_L2 <= ||N n||_L2 (" + mu.label + ")", std::sqrt(c2 * area), n_l2, true);
        else
            add("||grad N c||_L2 <= (2 alpha)^(-1/2) ||N n||_L2 (" + mu.label + ")", std::sqrt(c1 * area),
                n_l2 / std::sqrt(2 * alpha), true);
    }

    // L4 bounds with continuum constants, on the collocation grid.
    Transform tf(g);
    const std::vector<double> nphys = tf.inverse(n);
    const double gl4 = gradient_l4(c, tf, phase);
    const double n_l2 = std::sqrt(l2_norm_sq(g, nphys));
    const double riesz = 3 + 2 * std::sqrt(2.0);
    if (alpha == 0) {
        add("||grad c||_L4 <= 4 (3 + 2 sqrt 2) / pi ||n||_L(4/3)", gl4, 4 * riesz / kPi * lp_norm(g, nphys, 4.0 / 3.0),
            false);
        add("||grad c||_L4 <= 2 (3 + 2 sqrt 2) / pi (||n||_L2 + M)", gl4, 2 * riesz / kPi * (n_l2 + mass), false);
    } else {
        add("||grad c||_L4 <= (2 pi alpha)^(-1/4) ||n||_L2", gl4, std::pow(2 * kPi * alpha, -0.25) * n_l2, false);
    }
    return rep;
}

double moser_bound(double sup_grad_c_l4, double sup_n_l2, double mass, double linf_initial) {
    return 128.0 * (sup_grad_c_l4 * sup_grad_c_l4 + 1) * (sup_n_l2 + mass + linf_initial + 1);
}

}  // namespace pks
