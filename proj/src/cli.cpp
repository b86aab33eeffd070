#include "pks/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "pks/config.hpp"
#include "pks/experiments.hpp"
#include "pks/format.hpp"

namespace pks {

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ParameterError("cannot write " + p.string());
    os << text;
    if (!os) throw ParameterError("write failed for " + p.string());
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParameterError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int status_exit(RunStatus s) {
    switch (s) {
        case RunStatus::completed: return exit_ok;
        case RunStatus::blowup: return exit_blowup;
        case RunStatus::numerical_failure: return exit_numerical;
    }
    return exit_numerical;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            out.push_back(Expression(item)(0, 0, 0, 0));
        } catch (const ParameterError&) {
            throw ParameterError("cannot parse list entry '" + item + "'");
        }
    }
    return out;
}

}  // namespace

// ---- oracle ----

OracleResult linear_oracle(int i, int j, double amplitude, double t_end, double dt, int nx, int ny) {
    SimConfig c;
    c.grid.nx = nx;
    c.grid.ny = ny;
    c.amplitude = amplitude;
    c.frame = Frame::rescaled;
    c.nonlinear = false;
    c.dt = dt;
    c.t_end = t_end;
    c.moser_monitor = false;
    validate(c);
    const GridSpec& g = c.grid;
    if (i < 0 || i > g.keep_i() || std::abs(j) > g.keep_j())
        throw ParameterError("oracle: mode (" + std::to_string(i) + ", " + std::to_string(j) +
                             ") is outside the dealiased band");
    SpectralField n0(g);
    n0.set_mode(i, j, cplx(1.0, 0.0));
    SimState s = initial_state(c, n0);
    Stepper st(c);
    const double k = g.kx(i);
    const double xi0 = g.ky(i, g.storage_j(j), 0.0);
    OracleResult r;
    const double t_stop = t_end * (1 - 1e-12);
    while (s.t < t_stop) {
        const StepInfo info = st.step(s, std::min(dt, t_end - s.t));
        if (info.status != StepStatus::ok) throw InternalError("oracle: linear step failed");
        int row = 0;
        if (!comoving_row(s, i, j, row)) {
            r.left_range = true;
            break;
        }
        // Physical xi moves as xi0 - k t, the mirror of the propagator's xi0 + k t.
        const double exact = linear_propagator(k, -xi0, 0.0, s.t, amplitude);
        const double num = std::abs(s.n.at(i, row));
        const double err = std::abs(s.n.at(i, row) - cplx(exact, 0.0)) / exact;
        r.max_rel_error = std::max(r.max_rel_error, err);
        r.final_exact = exact;
        r.final_numeric = num;
        for (std::size_t q = 0; q < s.n.coeffs.size(); ++q) {
            if (q == g.index(i, row)) continue;
            if (i == 0 && q == g.index(0, g.storage_j(-g.signed_j(row)))) continue;
            r.max_spurious = std::max(r.max_spurious, std::abs(s.n.coeffs[q]));
        }
    }
    r.steps = s.steps;
    r.remaps = s.remaps;
    return r;
}

// ---- subcommands ----

namespace {

struct ConstantsOpts {
    double alpha = 1.0;
    bool coupled = false;
    double m = NAN, eps = NAN, a = NAN, xi = NAN, theta1 = NAN, theta2 = NAN;
    bool paper_defaults = false;
    bool verify = false;
    std::string mode = "paper-split";
    std::string params_file;
    std::string out_file;
    double y_n = NAN, y_dx13 = NAN, y_w = NAN, mass = NAN, linf = NAN;
};

int cmd_constants(const ConstantsOpts& o, std::ostream& out, std::ostream& err) {
    ModelCase mc{o.alpha, o.coupled};
    NormParams p;
    if (!o.params_file.empty()) {
        const RunConfig rc = load_run_config(o.params_file);
        mc = ModelCase{rc.sim.alpha, rc.sim.coupled};
        p = rc.sim.norm_params;
    } else {
        p = paper_norm_params(mc);
    }
    const bool overrides = !std::isnan(o.m) || !std::isnan(o.eps) || !std::isnan(o.a) || !std::isnan(o.xi) ||
                           !std::isnan(o.theta1) || !std::isnan(o.theta2);
    if (o.paper_defaults && (overrides || !o.params_file.empty()))
        throw ParameterError("--paper-defaults cannot be combined with parameter overrides");
    if (!std::isnan(o.m)) p.m = o.m;
    if (!std::isnan(o.eps)) p.eps = o.eps;
    if (!std::isnan(o.a)) p.a = o.a;
    if (!std::isnan(o.xi)) p.xi = o.xi;
    if (!std::isnan(o.theta1)) p.theta1 = o.theta1;
    if (!std::isnan(o.theta2)) p.theta2 = o.theta2;
    const ThresholdMode mode = parse_threshold_mode(o.mode);
    validate(p, mc);

    InitialNorms in;
    const bool has_initial = !std::isnan(o.y_n);
    if (has_initial) {
        in.y_n = o.y_n;
        in.y_dx13_n = std::isnan(o.y_dx13) ? 0.0 : o.y_dx13;
        in.y_w = std::isnan(o.y_w) ? 0.0 : o.y_w;
        in.mass = std::isnan(o.mass) ? 0.0 : o.mass;
        in.linf_n = std::isnan(o.linf) ? 0.0 : o.linf;
    }
    const ConstantReport rep = constant_report(p, mc, has_initial ? &in : nullptr);
    std::vector<AuditEntry> audit;
    if (o.verify) audit = verify_paper_chain();
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(report_json(rep, o.verify ? &audit : nullptr));
    j["mode"] = o.mode;
    j["lambda"] = num15(mode == ThresholdMode::sharp ? rep.sharp.lambda : rep.paper.lambda);
    const std::string text = j.dump(2) + "\n";
    if (o.out_file.empty())
        out << text;
    else
        write_file(o.out_file, text);
    if (o.verify) {
        int failures = 0;
        for (const AuditEntry& e : audit)
            if (!e.pass) {
                ++failures;
                err << "audit failure: " << e.inequality << " (" << fmt15(e.lhs) << ' ' << e.relation << ' '
                    << fmt15(e.rhs) << ")\n";
            }
        if (failures > 0) return exit_numerical;
    }
    return exit_ok;
}

int cmd_solve(const std::string& config_path, const std::string& out_override, int verbosity, std::ostream& out,
              std::ostream& err) {
    RunConfig rc = load_run_config(config_path);
    if (!out_override.empty()) rc.output_dir = out_override;
    const SpectralField n0 = build_initial_density(rc.initial, rc.sim.grid);
    std::unique_ptr<SpectralField> w0;
    if (rc.sim.coupled) w0 = build_initial_vorticity(rc.initial, rc.sim.grid);
    RunHooks hooks;
    const int verb = std::max(verbosity, rc.verbosity);
    if (verb > 0)
        hooks.on_sample = [&](const SimState&, const Sample& s) {
            err << "t " << fmt15(s.t) << " max n " << fmt15(s.linf_n) << " mass " << fmt15(s.mass) << '\n';
        };
    const RunResult r = run(rc.sim, n0, w0.get(), &hooks);
    namespace fs = std::filesystem;
    const fs::path dir(rc.output_dir);
    fs::create_directories(dir);
    write_file(dir / "series.csv", run_csv(r));
    write_file(dir / "summary.json", run_summary_json(r, rc.sim));
    write_file(dir / "config.json", config_json(rc.sim));
    if (rc.write_final_checkpoint) {
        write_checkpoint((dir / "final_n.pksc").string(), r.final_state.n);
        if (r.final_state.has_w) write_checkpoint((dir / "final_w.pksc").string(), r.final_state.w);
    }
    out << "status " << status_name(r.status);
    if (r.status != RunStatus::completed)
        out << " criterion " << r.criterion << " time " << fmt15(r.detection_time);
    out << " steps " << r.final_state.steps << '\n';
    for (const auto& w : r.warnings) err << "warning: " << w << '\n';
    return status_exit(r.status);
}

struct OracleOpts {
    int k = 1, xi = 0, nx = 128, ny = 128;
    double amplitude = 100, t = 5, dt = 0.01;
};

int cmd_oracle(const OracleOpts& o, std::ostream& out) {
    const OracleResult r = linear_oracle(o.k, o.xi, o.amplitude, o.t, o.dt, o.nx, o.ny);
    nlohmann::ordered_json j;
    j["schema"] = "pks-oracle/1";
    j["k_index"] = o.k;
    j["xi_index"] = o.xi;
    j["amplitude"] = num15(o.amplitude);
    j["t"] = num15(o.t);
    j["dt"] = num15(o.dt);
    j["steps"] = r.steps;
    j["remaps"] = r.remaps;
    j["left_range"] = r.left_range;
    j["final_exact"] = num15(r.final_exact);
    j["final_numeric"] = num15(r.final_numeric);
    j["max_spurious"] = num15(r.max_spurious);
    j["max_rel_error"] = num15(r.max_rel_error);
    out << j.dump(2) << '\n';
    if (r.left_range) throw ParameterError("oracle: the mode left the stored range; shorten t or enlarge ny");
    return r.max_rel_error <= 1e-12 ? exit_ok : exit_numerical;
}

struct NormsOpts {
    std::string checkpoint;
    double alpha = 1.0, amplitude = 100.0, t = 0.0, phase = 0.0;
    double m = NAN, eps = NAN;
};

int cmd_norms(const NormsOpts& o, std::ostream& out) {
    const SpectralField f = read_checkpoint(o.checkpoint);
    NormParams p = paper_norm_params(ModelCase{o.alpha, false});
    if (!std::isnan(o.m)) p.m = o.m;
    if (!std::isnan(o.eps)) p.eps = o.eps;
    validate(p);
    if (!(o.amplitude > 0)) throw ParameterError("norms: amplitude must be > 0");
    const YNorm y = y_norm_report(f, p.m, p.eps);
    const YNorm y13 = y_norm_report(f, p.m, p.eps, 1.0 / 3.0);
    using nlohmann::ordered_json;
    auto pieces = [&](AccumulatorWeight w) {
        const NormAccumulator acc(p, o.amplitude, w);
        const NormAccumulator::Pieces q = acc.instantaneous(f, o.t, o.phase);
        return ordered_json{{"sup", num15(q.sup)},
                            {"dy", num15(q.dy)},
                            {"dx13", num15(q.dx13)},
                            {"dx", num15(q.dx)},
                            {"ghost", num15(q.ghost)}};
    };
    ordered_json j;
    j["schema"] = "pks-norms/1";
    j["grid"] = {{"nx", f.grid.nx}, {"ny", f.grid.ny}, {"lx", num15(f.grid.lx)}, {"ly", num15(f.grid.ly)}};
    j["m"] = num15(p.m);
    j["eps"] = num15(p.eps);
    j["mass"] = num15(f.coeffs[0].real() * f.grid.lx * f.grid.ly);
    j["l2"] = num15(std::sqrt(l2_norm_sq(f)));
    j["y_norm"] = {{"value", num15(y.value)}, {"k0_l2", num15(y.k0_l2)}, {"singular", y.singular}};
    j["y_norm_dx13"] = {{"value", num15(y13.value)}, {"k0_l2", num15(y13.k0_l2)}, {"singular", y13.singular}};
    j["x_pieces"] = pieces(AccumulatorWeight::plain);
    j["x_pieces_dx13"] = pieces(AccumulatorWeight::dx13);
    out << j.dump(2) << '\n';
    return exit_ok;
}

SweepPlan default_sweep_plan() {
    SweepPlan p;
    SimConfig& c = p.base;
    c.frame = Frame::physical;
    c.alpha = 0.0;
    c.norm_params = paper_norm_params(ModelCase{0.0, false});
    c.grid.nx = 128;
    c.grid.ny = 512;
    c.dt = 0.01;
    c.blowup_linf = 1.0;
    c.sample_every = 20;
    p.amplitudes = {0.1, 0.3, 1.0, 3.0, 10.0, 100.0};
    p.mass_scale = 1.5;
    p.horizon = 20.0;
    p.jobs = 1;
    return p;
}

int cmd_sweep(const std::string& plan_file, const std::string& out_dir, int jobs, bool print_plan, std::ostream& out) {
    SweepPlan plan = default_sweep_plan();
    if (print_plan) {
        out << sweep_plan_json(plan);
        return exit_ok;
    }
    if (!plan_file.empty()) plan = sweep_plan_from_json(read_file(plan_file), plan.base);
    if (jobs > 0) plan.jobs = jobs;
    const SweepResult res = suppression_sweep(plan, true);
    write_sweep_directory(out_dir, plan, res);
    out << sweep_summary_csv(res);
    out << "A* " << (res.has_threshold ? fmt15(res.empirical_threshold) : std::string("none")) << '\n';
    out << "monotone " << (res.monotone_consistent ? "true" : "false") << '\n';
    return exit_ok;
}

struct CriticalOpts {
    std::string masses = "0.5,1.5";
    int nx = 128, ny = 128, jobs = 1;
    double t_end = 20.0, dt = 0.01, linf = 1.0;
    std::string out_dir = "pks_critical";
};

int cmd_critical(const CriticalOpts& o, std::ostream& out) {
    SimConfig c;
    c.frame = Frame::physical;
    c.amplitude = 0.0;
    c.alpha = 0.0;
    c.norm_params = paper_norm_params(ModelCase{0.0, false});
    c.grid.nx = o.nx;
    c.grid.ny = o.ny;
    c.t_end = o.t_end;
    c.dt = o.dt;
    c.blowup_linf = o.linf;
    c.sample_every = 20;
    const std::vector<double> scales = parse_list(o.masses);
    if (scales.empty()) throw ParameterError("critical: empty mass list");
    const std::vector<MassRow> rows = critical_mass_study(scales, c, o.jobs);
    write_mass_directory(o.out_dir, scales, c, rows);
    out << mass_summary_csv(rows);
    return exit_ok;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"pkslab: chemotaxis under Couette shear, constants and simulations"};
    app.require_subcommand(0, 1);
    bool print_defaults = false;
    int verbosity = 0;
    app.add_flag("--print-defaults", print_defaults, "Print the default run configuration and exit");
    app.add_flag("-v,--verbose", verbosity, "Progress output on stderr (repeatable)");

    ConstantsOpts co;
    auto* constants = app.add_subcommand("constants", "Explicit constants and amplitude thresholds as JSON");
    constants->add_option("--alpha", co.alpha, "Chemoattractant degradation rate");
    constants->add_flag("--coupled", co.coupled, "Coupled model with the fluid");
    constants->add_option("--m", co.m, "Horizontal Sobolev index");
    constants->add_option("--eps", co.eps, "Low-frequency index");
    constants->add_option("--a", co.a, "Exponential rate coefficient");
    constants->add_option("--xi", co.xi, "Multiplier scale");
    constants->add_option("--theta1", co.theta1);
    constants->add_option("--theta2", co.theta2);
    constants->add_flag("--paper-defaults", co.paper_defaults, "Use the reference parameter set for the model");
    constants->add_flag("--verify-paper", co.verify, "Audit the published numeric chain; nonzero exit on failure");
    constants->add_option("--mode", co.mode, "Headline threshold: paper-split or sharp");
    constants->add_option("--params", co.params_file, "INI file with [model] and [norms] sections");
    constants->add_option("--out", co.out_file, "Write the report here instead of stdout");
    constants->add_option("--y-n", co.y_n, "Initial Y norm of n (enables bootstrap sizes)");
    constants->add_option("--y-dx13", co.y_dx13, "Initial Y norm of |Dx|^(1/3) n");
    constants->add_option("--y-w", co.y_w, "Initial Y norm of the vorticity");
    constants->add_option("--mass", co.mass, "Initial mass");
    constants->add_option("--linf", co.linf, "Initial L-infinity norm of n");

    std::string config_path, solve_out;
    auto* solve = app.add_subcommand("solve", "Run one simulation from a config file");
    solve->add_option("config", config_path, "INI run configuration")->required();
    solve->add_option("--out", solve_out, "Output directory (overrides [output] dir)");

    OracleOpts oo;
    auto* oracle = app.add_subcommand("oracle", "Compare a linear run with the closed-form propagator");
    oracle->add_option("--k", oo.k, "Horizontal lattice index of the mode");
    oracle->add_option("--xi", oo.xi, "Vertical lattice index of the mode");
    oracle->add_option("--A", oo.amplitude, "Shear amplitude");
    oracle->add_option("--t", oo.t, "Final rescaled time");
    oracle->add_option("--dt", oo.dt, "Step size");
    oracle->add_option("--nx", oo.nx);
    oracle->add_option("--ny", oo.ny);

    NormsOpts no;
    auto* norms = app.add_subcommand("norms", "Y norm and instantaneous X-norm pieces of a checkpoint");
    norms->add_option("checkpoint", no.checkpoint, "PKSC checkpoint")->required();
    norms->add_option("--alpha", no.alpha, "Selects the default (m, eps) pair");
    norms->add_option("--m", no.m);
    norms->add_option("--eps", no.eps);
    norms->add_option("--A", no.amplitude, "Shear amplitude in the weights");
    norms->add_option("--t", no.t, "Time in the exponential weight");
    norms->add_option("--phase", no.phase, "Shear phase of the stored coefficients");

    std::string plan_file, sweep_out = "pks_sweep";
    int sweep_jobs = 0;
    bool print_plan = false;
    auto* sweep = app.add_subcommand("sweep", "Amplitude sweep of the supercritical bump");
    sweep->add_option("--plan", plan_file, "JSON sweep plan");
    sweep->add_option("--out", sweep_out, "Experiment directory");
    sweep->add_option("--jobs", sweep_jobs, "Concurrent runs (overrides the plan)");
    sweep->add_flag("--print-default-plan", print_plan, "Print the built-in plan and exit");

    CriticalOpts cr;
    auto* critical = app.add_subcommand("critical", "No-flow runs of the reference bump at several masses");
    critical->add_option("--masses", cr.masses, "Comma-separated multiples of 8 pi");
    critical->add_option("--nx", cr.nx);
    critical->add_option("--ny", cr.ny);
    critical->add_option("--t-end", cr.t_end);
    critical->add_option("--dt", cr.dt);
    critical->add_option("--linf", cr.linf, "L-infinity blow-up cutoff");
    critical->add_option("--jobs", cr.jobs);
    critical->add_option("--out", cr.out_dir, "Experiment directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (print_defaults) {
            out << default_config_text();
            return exit_ok;
        }
        if (*constants) return cmd_constants(co, out, err);
        if (*solve) return cmd_solve(config_path, solve_out, verbosity, out, err);
        if (*oracle) return cmd_oracle(oo, out);
        if (*norms) return cmd_norms(no, out);
        if (*sweep) return cmd_sweep(plan_file, sweep_out, sweep_jobs, print_plan, out);
        if (*critical) return cmd_critical(cr, out);
        err << app.help();
        return exit_config;
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const ShapeError& e) {
        err << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return exit_numerical;
    }
}

}  // namespace pks
