#include "pks/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "pks/format.hpp"

namespace pks {

namespace {

const cplx I(0.0, 1.0);

double max_abs(const std::vector<cplx>& v) {
    double m = 0;
    for (const cplx& c : v) m = std::max(m, std::abs(c));
    return m;
}

bool all_finite(const std::vector<cplx>& v) {
    for (const cplx& c : v)
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
    return true;
}

void zero_nyquist(SpectralField& f) {
    const GridSpec& g = f.grid;
    if (f.coeffs.empty()) return;
    cplx* last = &f.coeffs[g.index(g.nx / 2, 0)];
    std::fill(last, last + g.ny, cplx(0, 0));
    for (int i = 0; i < g.nkx(); ++i) f.at(i, g.ny / 2) = 0;
}

}  // namespace

Frame parse_frame(const std::string& s) {
    if (s == "rescaled") return Frame::rescaled;
    if (s == "physical") return Frame::physical;
    throw ParameterError("unknown frame '" + s + "' (expected rescaled or physical)");
}

std::string frame_name(Frame f) { return f == Frame::rescaled ? "rescaled" : "physical"; }

double SimConfig::shear_rate() const { return frame == Frame::rescaled ? 1.0 : amplitude; }
double SimConfig::diffusivity() const { return frame == Frame::rescaled ? 1.0 / amplitude : 1.0; }
double SimConfig::rescaled_time_factor() const { return frame == Frame::rescaled ? 1.0 : amplitude; }

void validate(const SimConfig& c) {
    validate(c.grid);
    if (c.frame == Frame::rescaled && !(c.amplitude > 0))
        throw ParameterError("solver: amplitude must be > 0 in the rescaled frame");
    if (!(c.amplitude >= 0) || !std::isfinite(c.amplitude)) throw ParameterError("solver: amplitude must be >= 0");
    if (!(c.alpha >= 0) || !std::isfinite(c.alpha)) throw ParameterError("solver: alpha must be >= 0");
    if (!(c.dt > 0) || !std::isfinite(c.dt)) throw ParameterError("solver: dt must be > 0");
    if (!(c.t_end > 0) || !std::isfinite(c.t_end)) throw ParameterError("solver: t_end must be > 0");
    if (!(c.remap_threshold > 0 && c.remap_threshold <= 1))
        throw ParameterError("solver: remap_threshold must lie in (0, 1]");
    if (!(c.blowup_linf > 0)) throw ParameterError("solver: blowup_linf must be > 0");
    if (!(c.blowup_tail > 0 && c.blowup_tail <= 1)) throw ParameterError("solver: blowup_tail must lie in (0, 1]");
    if (!(c.cfl > 0)) throw ParameterError("solver: cfl must be > 0");
    if (c.max_halvings < 0) throw ParameterError("solver: max_halvings must be >= 0");
    if (c.sample_every < 1) throw ParameterError("solver: sample_every must be >= 1");
    validate(c.norm_params);
    for (auto [i, j] : c.tracked_modes)
        if (std::abs(i) > c.grid.nx / 2 || std::abs(j) > c.grid.ny / 2)
            throw ParameterError("solver: tracked mode (" + std::to_string(i) + ", " + std::to_string(j) +
                                 ") outside the grid");
}

double sheared_heat_integral(double k, double xi0, double rate, double dt) {
    return (k * k + xi0 * xi0) * dt + xi0 * rate * dt * dt + rate * rate * dt * dt * dt / 3.0;
}

double linear_propagator(double k, double xi0, double s, double dt, double amplitude) {
    return std::exp(-sheared_heat_integral(k, xi0 + k * s, k, dt) / amplitude);
}

SimState initial_state(const SimConfig& c, const SpectralField& n0, const SpectralField* w0) {
    require_same_grid(n0.grid, c.grid, "initial_state");
    SimState s;
    s.n = n0;
    apply_dealias(s.n);
    zero_nyquist(s.n);
    enforce_hermitian(s.n);
    s.has_w = c.coupled;
    if (c.coupled) {
        if (w0) {
            require_same_grid(w0->grid, c.grid, "initial_state");
            s.w = *w0;
            if (std::abs(s.w.coeffs[0]) > 1e-12 * std::max(1.0, max_abs(s.w.coeffs)))
                throw ParameterError("initial vorticity must be mean-free");
            s.w.coeffs[0] = 0;
            apply_dealias(s.w);
            zero_nyquist(s.w);
            enforce_hermitian(s.w);
        } else {
            s.w = SpectralField(c.grid);
        }
    }
    const double amp = c.amplitude > 0 ? c.amplitude : 1.0;
    s.acc_n = NormAccumulator(c.norm_params, amp, AccumulatorWeight::plain);
    s.acc_dx13 = NormAccumulator(c.norm_params, amp, AccumulatorWeight::dx13);
    s.acc_w = NormAccumulator(c.norm_params, amp, AccumulatorWeight::plain);
    return s;
}

bool comoving_row(const SimState& s, int i, int j, int& row) {
    const GridSpec& g = s.n.grid;
    if (i < 0) {
        i = -i;
        j = -j;
    }
    const long long js = static_cast<long long>(j) - static_cast<long long>(i) * s.shift;
    if (js > g.ny / 2 || js <= -g.ny / 2) return false;
    row = g.storage_j(static_cast<int>(js));
    return true;
}

namespace {

void shift_rows(SpectralField& f, long long q) {
    const GridSpec& g = f.grid;
    std::vector<cplx> col(g.ny);
    for (int i = 1; i < g.nkx(); ++i) {
        std::fill(col.begin(), col.end(), cplx(0, 0));
        const long long d = static_cast<long long>(i) * q;
        for (int j = 0; j < g.ny; ++j) {
            const long long js = g.signed_j(j) - d;
            if (js > g.ny / 2 || js <= -g.ny / 2) continue;
            col[g.storage_j(static_cast<int>(js))] = f.at(i, j);
        }
        std::copy(col.begin(), col.end(), &f.coeffs[g.index(i, 0)]);
    }
}

}  // namespace

void remap_shear(SimState& s, double shift) {
    const double q = std::round(shift);
    if (std::abs(shift - q) > 1e-12 * std::max(1.0, std::abs(shift)) || q < 0)
        throw InternalError("remap_shear: shift " + std::to_string(shift) + " is not a lattice multiple");
    if (q == 0) return;
    const long long qi = static_cast<long long>(q);
    shift_rows(s.n, qi);
    if (s.has_w) shift_rows(s.w, qi);
    s.phase -= q;
    s.shift += qi;
    s.remaps += 1;
}

double remap_phase(const SimConfig& c) {
    const int ki = std::max(1, c.grid.keep_i());
    return std::max(1.0, std::floor(c.remap_threshold * (c.grid.ny / 2) / ki));
}

// ---- stepper ----

Stepper::Stepper(const SimConfig& c) : cfg_(c), ev_(c.grid) {
    validate(c);
    const GridSpec& g = c.grid;
    fn_ = SpectralField(g);
    fw_ = SpectralField(g);
    c_ = SpectralField(g);
    out_n_ = SpectralField(g);
    out_w_ = SpectralField(g);
    const std::size_t n = g.spectral_size();
    e_half_.assign(n, 0.0);
    e_half2_.assign(n, 0.0);
    e_full_.assign(n, 0.0);
}

void Stepper::propagators(double phase0, double h) {
    const GridSpec& g = cfg_.grid;
    const double nu = cfg_.diffusivity();
    const double sigma = cfg_.shear_rate();
    const double hh = 0.5 * h;
    for (int i = 0; i < g.nkx(); ++i) {
        const double k = g.kx(i);
        const double rate = -sigma * k;
        for (int j = 0; j < g.ny; ++j) {
            const double xi0 = g.ky(i, j, phase0);
            const double xim = xi0 + rate * hh;
            const double ia = nu * sheared_heat_integral(k, xi0, rate, hh);
            const double ib = nu * sheared_heat_integral(k, xim, rate, hh);
            // Stored as exp(-I) - 1 and applied as x + d x, so that repeated factors
            // do not accumulate a fixed rounding bias.
            const std::size_t q = g.index(i, j);
            e_half_[q] = std::expm1(-ia);
            e_half2_[q] = std::expm1(-ib);
            e_full_[q] = std::expm1(-(ia + ib));
        }
    }
}

void Stepper::rhs(const Fields& f, double phase, Fields& out) {
    const GridSpec& g = cfg_.grid;
    const std::size_t n = g.spectral_size();
    out.n.assign(n, cplx(0, 0));
    if (cfg_.coupled) out.w.assign(n, cplx(0, 0));
    last_speed_ = 0;
    if (!cfg_.nonlinear) return;
    const double nu = cfg_.diffusivity();

    fn_.coeffs = f.n;
    // Chemoattractant: -Lap c = n - alpha c (mean removed when alpha = 0).
    for (int i = 0; i < g.nkx(); ++i) {
        const double k2 = g.kx(i) * g.kx(i);
        for (int j = 0; j < g.ny; ++j) {
            const std::size_t q = g.index(i, j);
            if (q == 0 && cfg_.alpha == 0) {
                c_.coeffs[q] = 0;
                continue;
            }
            const double xi = g.ky(i, j, phase);
            c_.coeffs[q] = fn_.coeffs[q] / (cfg_.alpha + k2 + xi * xi);
        }
    }
    if (cfg_.coupled) {
        fw_.coeffs = f.w;
        fw_.coeffs[0] = 0;
        Velocity u = velocity_from_vorticity(fw_, phase);
        ev_.density_flux(fn_, c_, &u, phase, out_n_);
        ev_.vorticity_flux(fw_, u, phase, out_w_);
        last_speed_ = std::max(ev_.last_max_speed(), ev_.last_max_flow());
        const int ki = g.keep_i(), kj = g.keep_j();
        for (int i = 0; i < g.nkx(); ++i) {
            const double k = g.kx(i);
            for (int j = 0; j < g.ny; ++j) {
                const std::size_t q = g.index(i, j);
                const int js = g.signed_j(j);
                cplx buoy = 0;
                if (i <= ki && js <= kj && js >= -kj && 2 * i != g.nx) buoy = -I * k * fn_.coeffs[q];
                out.w[q] = nu * (out_w_.coeffs[q] + buoy);
            }
        }
    } else {
        ev_.density_flux(fn_, c_, nullptr, phase, out_n_);
        last_speed_ = ev_.last_max_speed();
    }
    for (std::size_t q = 0; q < n; ++q) out.n[q] = nu * out_n_.coeffs[q];
}

StepInfo Stepper::step(SimState& s, double dt_max) {
    StepInfo info;
    const GridSpec& g = cfg_.grid;
    const std::size_t n = g.spectral_size();
    const double nu = cfg_.diffusivity();
    const double dphase = cfg_.shear_rate() * g.ly / g.lx;
    const bool cw = cfg_.coupled;
    const double p0 = s.phase;

    u0_.n = s.n.coeffs;
    if (cw) u0_.w = s.w.coeffs;
    rhs(u0_, p0, k1_);
    info.max_speed = last_speed_;

    double h = dt_max;
    const double dx = g.dx_min();
    while (h * nu * last_speed_ / dx > cfg_.cfl && info.halvings < cfg_.max_halvings) {
        h *= 0.5;
        ++info.halvings;
    }
    if (h * nu * last_speed_ / dx > cfg_.cfl) {
        info.status = StepStatus::cfl_abort;
        info.dt_used = h;
        return info;
    }
    // Use the increment the clock actually takes so that phase and time stay consistent.
    const double t1 = s.t + h;
    h = t1 - s.t;
    info.dt_used = h;
    propagators(p0, h);

    auto stage = [&](auto&& combine_n, auto&& combine_w) {
        stage_.n.resize(n);
        for (std::size_t q = 0; q < n; ++q) stage_.n[q] = combine_n(q);
        if (cw) {
            stage_.w.resize(n);
            for (std::size_t q = 0; q < n; ++q) stage_.w[q] = combine_w(q);
        }
    };
    const double hh = 0.5 * h;
    auto E = [](const std::vector<double>& d, std::size_t q, cplx x) { return x + d[q] * x; };
    // a = E(0,h/2) (u + h/2 k1)
    stage([&](std::size_t q) { return E(e_half_, q, u0_.n[q] + hh * k1_.n[q]); },
          [&](std::size_t q) { return E(e_half_, q, u0_.w[q] + hh * k1_.w[q]); });
    rhs(stage_, p0 + dphase * hh, k2_);
    // b = E(0,h/2) u + h/2 k2
    stage([&](std::size_t q) { return E(e_half_, q, u0_.n[q]) + hh * k2_.n[q]; },
          [&](std::size_t q) { return E(e_half_, q, u0_.w[q]) + hh * k2_.w[q]; });
    rhs(stage_, p0 + dphase * hh, k3_);
    // c = E(0,h) u + h E(h/2,h) k3
    stage([&](std::size_t q) { return E(e_full_, q, u0_.n[q]) + h * E(e_half2_, q, k3_.n[q]); },
          [&](std::size_t q) { return E(e_full_, q, u0_.w[q]) + h * E(e_half2_, q, k3_.w[q]); });
    rhs(stage_, p0 + dphase * h, k4_);

    const double h6 = h / 6.0;
    auto combine = [&](const std::vector<cplx>& u, const std::vector<cplx>& a, const std::vector<cplx>& b,
                       const std::vector<cplx>& c, const std::vector<cplx>& d, std::vector<cplx>& out) {
        out.resize(n);
        for (std::size_t q = 0; q < n; ++q)
            out[q] = E(e_full_, q, u[q]) + h6 * (E(e_full_, q, a[q]) + 2.0 * E(e_half2_, q, b[q] + c[q]) + d[q]);
    };
    std::vector<cplx> new_n, new_w;
    combine(u0_.n, k1_.n, k2_.n, k3_.n, k4_.n, new_n);
    if (cw) combine(u0_.w, k1_.w, k2_.w, k3_.w, k4_.w, new_w);
    if (!all_finite(new_n) || (cw && !all_finite(new_w))) {
        info.status = StepStatus::non_finite;
        return info;
    }

    // Left-endpoint accumulation in rescaled time.
    if (cfg_.amplitude > 0) {
        const double tf = cfg_.rescaled_time_factor();
        s.acc_n.accumulate(s.n, s.t * tf, h * tf, p0);
        s.acc_dx13.accumulate(s.n, s.t * tf, h * tf, p0);
        if (cw) s.acc_w.accumulate(s.w, s.t * tf, h * tf, p0);
    }

    s.n.coeffs.swap(new_n);
    if (cw) s.w.coeffs.swap(new_w);
    s.n.coeffs[0] = u0_.n[0];  // the (0,0) multiplier is exactly one and its flux exactly zero
    s.t = t1;
    s.phase = p0 + dphase * h;
    s.steps += 1;
    const double pr = remap_phase(cfg_);
    if (s.phase >= pr) remap_shear(s, std::floor(s.phase));
    return info;
}

// ---- run loop ----

std::string status_name(RunStatus s) {
    switch (s) {
        case RunStatus::completed: return "completed";
        case RunStatus::blowup: return "blowup";
        case RunStatus::numerical_failure: return "numerical-failure";
    }
    return "unknown";
}

BlowupCheck detect_blowup(const std::vector<double>& n_phys, const SpectralField& n, const SimConfig& c) {
    BlowupCheck b;
    b.linf = 0;
    b.min_value = n_phys.empty() ? 0 : n_phys[0];
    for (double v : n_phys) {
        b.linf = std::max(b.linf, std::abs(v));
        b.min_value = std::min(b.min_value, v);
    }
    b.tail = tail_fraction(n);
    if (b.linf > c.blowup_linf) {
        b.flagged = true;
        b.criterion = "linf";
    } else if (b.tail > c.blowup_tail) {
        b.flagged = true;
        b.criterion = "tail";
    }
    return b;
}

BlowupCheck detect_blowup(const SimState& s, const SimConfig& c, Transform& tf) {
    return detect_blowup(tf.inverse(s.n), s.n, c);
}

namespace {

struct Tracker {
    double sup_grad_l4 = 0;
    double sup_l2 = 0;
};

}  // namespace

RunResult run(const SimConfig& c, const SpectralField& n0, const SpectralField* w0, const RunHooks* hooks) {
    validate(c);
    require_same_grid(n0.grid, c.grid, "run");
    Stepper st(c);
    Transform& tf = st.transform();
    const GridSpec& g = c.grid;
    RunResult r;
    SimState s = initial_state(c, n0, w0);
    const double area = g.lx * g.ly;
    r.initial_mass = s.n.coeffs[0].real() * area;
    for (auto [i, j] : c.tracked_modes)
        r.mode_labels.push_back("mode_k" + std::to_string(i) + "_xi" + std::to_string(j) + "_abs");

    std::vector<double> phys = tf.inverse(s.n);
    BlowupCheck chk = detect_blowup(phys, s.n, c);
    r.initial_linf = chk.linf;
    r.max_linf = chk.linf;
    r.min_dt = c.dt;
    if (chk.min_value < -1e-10) {
        r.warnings.push_back("initial density has negative values (min " + fmt15(chk.min_value) + ")");
    }
    Tracker tr;
    const bool have_x = c.amplitude > 0;

    auto take_sample = [&](double dt_used, const BlowupCheck& b) {
        Sample sm;
        sm.t = s.t;
        sm.mass = s.n.coeffs[0].real() * area;
        sm.linf_n = b.linf;
        sm.min_n = b.min_value;
        sm.tail = b.tail;
        sm.dt = dt_used;
        const double coef_l2 = l2_norm_sq(s.n);
        const double phys_l2 = l2_norm_sq(g, phys);
        sm.l2_n = std::sqrt(coef_l2);
        const double scale = std::max({coef_l2, phys_l2, 1e-300});
        r.max_parseval_defect = std::max(r.max_parseval_defect, std::abs(coef_l2 - phys_l2) / scale);
        const double mx = max_abs(s.n.coeffs);
        if (mx > 0) r.max_hermitian_defect = std::max(r.max_hermitian_defect, hermitian_defect(s.n) / mx);
        if (s.has_w) {
            const double mw = max_abs(s.w.coeffs);
            if (mw > 0) r.max_hermitian_defect = std::max(r.max_hermitian_defect, hermitian_defect(s.w) / mw);
        }
        const double tfac = c.rescaled_time_factor();
        if (have_x) {
            s.acc_n.observe(s.n, s.t * tfac, s.phase);
            s.acc_dx13.observe(s.n, s.t * tfac, s.phase);
            if (s.has_w) s.acc_w.observe(s.w, s.t * tfac, s.phase);
            sm.xnorm_n = s.acc_n.x_norm();
            sm.xnorm_dx13_n = s.acc_dx13.x_norm();
            sm.xnorm_w = s.has_w ? s.acc_w.x_norm() : 0.0;
        } else {
            sm.xnorm_n = sm.xnorm_dx13_n = sm.xnorm_w = std::nan("");
        }
        for (auto [i, j] : c.tracked_modes) {
            int row = 0;
            const int ii = std::abs(i);
            sm.modes.push_back(comoving_row(s, i, j, row) ? std::abs(s.n.at(ii, row)) : 0.0);
        }
        if (c.moser_monitor) {
            const SpectralField cc = solve_chemoattractant_periodic(s.n, c.alpha, s.phase);
            sm.grad_c_l4 = gradient_l4(cc, tf, s.phase);
            tr.sup_grad_l4 = std::max(tr.sup_grad_l4, sm.grad_c_l4);
            tr.sup_l2 = std::max(tr.sup_l2, sm.l2_n);
            sm.moser_margin = moser_bound(tr.sup_grad_l4, tr.sup_l2, std::abs(r.initial_mass), r.initial_linf) - b.linf;
            if (sm.moser_margin < 0) ++r.moser_negative_samples;
        } else {
            sm.moser_margin = std::nan("");
        }
        r.samples.push_back(sm);
        if (hooks && hooks->on_sample) hooks->on_sample(s, sm);
    };

    take_sample(0.0, chk);
    const double t_stop = c.t_end * (1 - 1e-12);
    double last_dt = c.dt;
    while (s.t < t_stop) {
        const double h = std::min(c.dt, c.t_end - s.t);
        StepInfo info = st.step(s, h);
        r.cfl_halvings += info.halvings;
        if (info.status == StepStatus::non_finite) {
            r.status = RunStatus::numerical_failure;
            r.criterion = "non-finite";
            r.detection_time = s.t;
            break;
        }
        if (info.status == StepStatus::cfl_abort) {
            r.status = RunStatus::numerical_failure;
            r.criterion = "cfl";
            r.detection_time = s.t;
            break;
        }
        last_dt = info.dt_used;
        r.min_dt = std::min(r.min_dt, info.dt_used);
        tf.inverse(s.n, phys);
        chk = detect_blowup(phys, s.n, c);
        r.max_linf = std::max(r.max_linf, chk.linf);
        const double mass = s.n.coeffs[0].real() * area;
        const double denom = std::max(std::abs(r.initial_mass), 1e-300);
        r.max_mass_drift = std::max(r.max_mass_drift, std::abs(mass - r.initial_mass) / denom);
        if (chk.flagged) {
            r.status = RunStatus::blowup;
            r.criterion = chk.criterion;
            r.detection_time = s.t;
            take_sample(last_dt, chk);
            break;
        }
        if (chk.min_value < -1e-4) {
            r.status = RunStatus::numerical_failure;
            r.criterion = "negativity";
            r.detection_time = s.t;
            take_sample(last_dt, chk);
            break;
        }
        if (chk.min_value < -1e-8) ++r.negativity_warnings;
        const bool done = s.t >= t_stop;
        if (done || s.steps % c.sample_every == 0) take_sample(last_dt, chk);
    }
    if (r.negativity_warnings > 0)
        r.warnings.push_back(std::to_string(r.negativity_warnings) + " steps with density below -1e-8");
    if (r.moser_negative_samples > 0)
        r.warnings.push_back(std::to_string(r.moser_negative_samples) + " samples with negative Moser margin");
    r.final_state = std::move(s);
    return r;
}

// ---- output ----

std::string run_csv(const RunResult& r) {
    std::ostringstream os;
    os << "t,mass,linf_n,xnorm_n,xnorm_dx13_n,xnorm_w";
    for (const auto& l : r.mode_labels) os << ',' << l;
    os << ",moser_margin,min_n,l2_n,grad_c_l4,tail_fraction,dt\n";
    for (const Sample& s : r.samples) {
        os << fmt15(s.t) << ',' << fmt15(s.mass) << ',' << fmt15(s.linf_n) << ',' << fmt15(s.xnorm_n) << ','
           << fmt15(s.xnorm_dx13_n) << ',' << fmt15(s.xnorm_w);
        for (double m : s.modes) os << ',' << fmt15(m);
        os << ',' << fmt15(s.moser_margin) << ',' << fmt15(s.min_n) << ',' << fmt15(s.l2_n) << ','
           << fmt15(s.grad_c_l4) << ',' << fmt15(s.tail) << ',' << fmt15(s.dt) << '\n';
    }
    return os.str();
}

namespace {

nlohmann::ordered_json config_object(const SimConfig& c) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["amplitude"] = num15(c.amplitude);
    j["alpha"] = num15(c.alpha);
    j["coupled"] = c.coupled;
    j["frame"] = frame_name(c.frame);
    j["grid"] = {{"nx", c.grid.nx},
                 {"ny", c.grid.ny},
                 {"lx", num15(c.grid.lx)},
                 {"ly", num15(c.grid.ly)},
                 {"dealias_fraction", num15(c.grid.dealias_fraction)}};
    j["dt"] = num15(c.dt);
    j["t_end"] = num15(c.t_end);
    j["remap_threshold"] = num15(c.remap_threshold);
    j["blowup_linf"] = num15(c.blowup_linf);
    j["blowup_tail"] = num15(c.blowup_tail);
    j["cfl"] = num15(c.cfl);
    j["max_halvings"] = c.max_halvings;
    j["norm_params"] = {{"m", num15(c.norm_params.m)},           {"eps", num15(c.norm_params.eps)},
                        {"a", num15(c.norm_params.a)},           {"xi", num15(c.norm_params.xi)},
                        {"theta1", num15(c.norm_params.theta1)}, {"theta2", num15(c.norm_params.theta2)}};
    j["sample_every"] = c.sample_every;
    j["nonlinear"] = c.nonlinear;
    ordered_json modes = ordered_json::array();
    for (auto [i, k] : c.tracked_modes) modes.push_back({i, k});
    j["tracked_modes"] = modes;
    j["moser_monitor"] = c.moser_monitor;
    return j;
}

}  // namespace

std::string config_json(const SimConfig& c) {
    nlohmann::ordered_json j;
    j["schema"] = "pks-simconfig/1";
    j.update(config_object(c));
    return j.dump(2) + "\n";
}

std::string run_summary_json(const RunResult& r, const SimConfig& c) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["schema"] = "pks-run/1";
    j["status"] = status_name(r.status);
    j["criterion"] = r.criterion.empty() ? ordered_json(nullptr) : ordered_json(r.criterion);
    j["detection_time"] = r.status == RunStatus::completed ? ordered_json(nullptr) : num15(r.detection_time);
    const SimState& s = r.final_state;
    j["t_final"] = num15(s.t);
    j["steps"] = s.steps;
    j["remaps"] = s.remaps;
    j["final_phase"] = num15(s.phase);  // shear phase of the final checkpoint
    j["initial_mass"] = num15(r.initial_mass);
    j["final_mass"] = r.samples.empty() ? ordered_json(nullptr) : num15(r.samples.back().mass);
    j["max_mass_drift"] = num15(r.max_mass_drift);
    j["initial_linf"] = num15(r.initial_linf);
    j["max_linf"] = num15(r.max_linf);
    j["max_hermitian_defect"] = num15(r.max_hermitian_defect);
    j["max_parseval_defect"] = num15(r.max_parseval_defect);
    j["min_dt"] = num15(r.min_dt);
    j["cfl_halvings"] = r.cfl_halvings;
    j["negativity_warnings"] = r.negativity_warnings;
    j["moser_negative_samples"] = r.moser_negative_samples;
    if (!r.samples.empty()) {
        const Sample& last = r.samples.back();
        j["xnorm_n"] = num15(last.xnorm_n);
        j["xnorm_dx13_n"] = num15(last.xnorm_dx13_n);
        j["xnorm_w"] = num15(last.xnorm_w);
    }
    j["warnings"] = r.warnings;
    j["config"] = config_object(c);
    return j.dump(2) + "\n";
}

}  // namespace pks
