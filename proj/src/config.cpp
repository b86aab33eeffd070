#include "pks/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "pks/experiments.hpp"
#include "pks/format.hpp"

namespace pks {

// ---- expressions ----

struct Expression::Node {
    enum Kind { number, var_x, var_y, var_lx, var_ly, neg, add, sub, mul, div, pow, call } kind = number;
    double value = 0;
    double (*fn)(double) = nullptr;
    std::unique_ptr<Node> a, b;

    double eval(double x, double y, double lx, double ly) const {
        switch (kind) {
            case number: return value;
            case var_x: return x;
            case var_y: return y;
            case var_lx: return lx;
            case var_ly: return ly;
            case neg: return -a->eval(x, y, lx, ly);
            case add: return a->eval(x, y, lx, ly) + b->eval(x, y, lx, ly);
            case sub: return a->eval(x, y, lx, ly) - b->eval(x, y, lx, ly);
            case mul: return a->eval(x, y, lx, ly) * b->eval(x, y, lx, ly);
            case div: return a->eval(x, y, lx, ly) / b->eval(x, y, lx, ly);
            case pow: return std::pow(a->eval(x, y, lx, ly), b->eval(x, y, lx, ly));
            case call: return fn(a->eval(x, y, lx, ly));
        }
        return 0;
    }
};

namespace {

using NodePtr = std::unique_ptr<Expression::Node>;

NodePtr make(Expression::Node::Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_unique<Expression::Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr parse() {
        NodePtr n = sum();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ParameterError("expression '" + s_ + "': " + what + " at offset " + std::to_string(pos_));
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    NodePtr sum() {
        NodePtr n = product();
        for (;;) {
            if (accept('+'))
                n = make(Expression::Node::add, std::move(n), product());
            else if (accept('-'))
                n = make(Expression::Node::sub, std::move(n), product());
            else
                return n;
        }
    }
    NodePtr product() {
        NodePtr n = unary();
        for (;;) {
            if (accept('*'))
                n = make(Expression::Node::mul, std::move(n), unary());
            else if (accept('/'))
                n = make(Expression::Node::div, std::move(n), unary());
            else
                return n;
        }
    }
    NodePtr unary() {
        if (accept('-')) return make(Expression::Node::neg, unary());
        if (accept('+')) return unary();
        return power();
    }
    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return make(Expression::Node::pow, std::move(base), unary());
        return base;
    }
    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr n = sum();
            if (!accept(')')) fail("missing ')'");
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) fail("bad number");
            pos_ += static_cast<std::size_t>(end - begin);
            auto n = make(Expression::Node::number);
            n->value = v;
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            const std::string name = s_.substr(start, pos_ - start);
            if (name == "x") return make(Expression::Node::var_x);
            if (name == "y") return make(Expression::Node::var_y);
            if (name == "lx") return make(Expression::Node::var_lx);
            if (name == "ly") return make(Expression::Node::var_ly);
            if (name == "pi" || name == "e") {
                auto n = make(Expression::Node::number);
                n->value = name == "pi" ? std::numbers::pi : std::numbers::e;
                return n;
            }
            static const std::map<std::string, double (*)(double)> fns = {
                {"sin", [](double v) { return std::sin(v); }},   {"cos", [](double v) { return std::cos(v); }},
                {"tan", [](double v) { return std::tan(v); }},   {"exp", [](double v) { return std::exp(v); }},
                {"log", [](double v) { return std::log(v); }},   {"sqrt", [](double v) { return std::sqrt(v); }},
                {"abs", [](double v) { return std::abs(v); }},   {"tanh", [](double v) { return std::tanh(v); }},
                {"sinh", [](double v) { return std::sinh(v); }}, {"cosh", [](double v) { return std::cosh(v); }},
            };
            auto it = fns.find(name);
            if (it == fns.end()) fail("unknown name '" + name + "'");
            if (!accept('(')) fail("expected '(' after " + name);
            auto n = make(Expression::Node::call, sum());
            n->fn = it->second;
            if (!accept(')')) fail("missing ')'");
            return n;
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression(const std::string& text) : text_(text) {
    Parser p(text_);
    root_ = p.parse();
}
Expression::~Expression() = default;
Expression::Expression(Expression&&) noexcept = default;
Expression& Expression::operator=(Expression&&) noexcept = default;

double Expression::operator()(double x, double y, double lx, double ly) const { return root_->eval(x, y, lx, ly); }

// ---- INI configuration ----

namespace {

using boost::property_tree::ptree;

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> k = {
        {"model", {"amplitude", "alpha", "coupled", "frame"}},
        {"grid", {"nx", "ny", "lx", "ly", "dealias_fraction"}},
        {"time", {"dt", "t_end", "cfl", "max_halvings", "remap_threshold"}},
        {"blowup", {"linf", "tail"}},
        {"norms", {"m", "eps", "a", "xi", "theta1", "theta2"}},
        {"initial",
         {"kind", "mass_scale", "sigma", "x0", "y0", "mode_i", "mode_j", "mode_amplitude", "mean", "expression",
          "checkpoint", "seed", "noise_amplitude", "noise_modes", "w_kind", "w_expression", "w_checkpoint"}},
        {"output", {"dir", "sample_every", "tracked_modes", "checkpoint"}},
        {"debug", {"nonlinear", "moser_monitor", "verbosity"}},
    };
    return k;
}

template <class T>
T get_value(const ptree& sec, const std::string& section, const std::string& key, T fallback) {
    auto child = sec.get_child_optional(key);
    if (!child) return fallback;
    const std::string raw = child->get_value<std::string>();
    if constexpr (std::is_same_v<T, bool>) {
        if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
        if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
        throw ParameterError("[" + section + "] " + key + ": expected a boolean, got '" + raw + "'");
    } else if constexpr (std::is_same_v<T, std::string>) {
        return raw;
    } else {
        std::istringstream is(raw);
        T v{};
        is >> v;
        if (!is || !(is >> std::ws).eof())
            throw ParameterError("[" + section + "] " + key + ": cannot parse '" + raw + "'");
        return v;
    }
}

// Numbers may also be written as expressions in pi (e.g. "32*pi").
double get_number(const ptree& sec, const std::string& section, const std::string& key, double fallback) {
    auto child = sec.get_child_optional(key);
    if (!child) return fallback;
    const std::string raw = child->get_value<std::string>();
    if (raw == "nan") return std::nan("");
    try {
        return Expression(raw)(0, 0, 0, 0);
    } catch (const ParameterError& e) {
        throw ParameterError("[" + section + "] " + key + ": " + e.what());
    }
}

std::string resolve(const std::string& path, const std::string& base) {
    if (path.empty()) return path;
    std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    return (std::filesystem::path(base) / p).lexically_normal().string();
}

}  // namespace

std::vector<std::pair<int, int>> parse_mode_list(const std::string& s) {
    std::vector<std::pair<int, int>> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) {
        const auto first = item.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ParameterError("tracked mode '" + item + "': expected i:j");
        try {
            out.emplace_back(std::stoi(item.substr(0, colon)), std::stoi(item.substr(colon + 1)));
        } catch (const std::exception&) {
            throw ParameterError("tracked mode '" + item + "': expected integers i:j");
        }
    }
    return out;
}

RunConfig parse_run_config(const std::string& text, const std::string& base_dir) {
    ptree root;
    try {
        std::istringstream is(text);
        boost::property_tree::ini_parser::read_ini(is, root);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ParameterError(std::string("config: ") + e.what());
    }
    const auto& known = known_keys();
    for (const auto& [section, body] : root) {
        auto it = known.find(section);
        if (it == known.end()) throw ParameterError("config: unknown section [" + section + "]");
        if (body.empty() && !body.data().empty())
            throw ParameterError("config: key '" + section + "' outside any section");
        for (const auto& [key, v] : body)
            if (!it->second.count(key)) throw ParameterError("config: unknown key '" + key + "' in [" + section + "]");
    }
    const ptree empty;
    auto sec = [&](const char* name) -> const ptree& {
        auto c = root.get_child_optional(name);
        return c ? *c : empty;
    };

    RunConfig rc;
    SimConfig& c = rc.sim;
    const ptree& model = sec("model");
    c.amplitude = get_number(model, "model", "amplitude", c.amplitude);
    c.alpha = get_number(model, "model", "alpha", c.alpha);
    c.coupled = get_value<bool>(model, "model", "coupled", c.coupled);
    c.frame = parse_frame(get_value<std::string>(model, "model", "frame", frame_name(c.frame)));

    const ptree& grid = sec("grid");
    c.grid.nx = get_value<int>(grid, "grid", "nx", c.grid.nx);
    c.grid.ny = get_value<int>(grid, "grid", "ny", c.grid.ny);
    c.grid.lx = get_number(grid, "grid", "lx", c.grid.lx);
    c.grid.ly = get_number(grid, "grid", "ly", c.grid.ly);
    c.grid.dealias_fraction = get_number(grid, "grid", "dealias_fraction", c.grid.dealias_fraction);

    const ptree& time = sec("time");
    c.dt = get_number(time, "time", "dt", c.dt);
    c.t_end = get_number(time, "time", "t_end", c.t_end);
    c.cfl = get_number(time, "time", "cfl", c.cfl);
    c.max_halvings = get_value<int>(time, "time", "max_halvings", c.max_halvings);
    c.remap_threshold = get_number(time, "time", "remap_threshold", c.remap_threshold);

    const ptree& blow = sec("blowup");
    c.blowup_linf = get_number(blow, "blowup", "linf", c.blowup_linf);
    c.blowup_tail = get_number(blow, "blowup", "tail", c.blowup_tail);

    const ptree& norms = sec("norms");
    NormParams np = paper_norm_params(ModelCase{c.alpha, c.coupled});
    np.m = get_number(norms, "norms", "m", np.m);
    np.eps = get_number(norms, "norms", "eps", np.eps);
    np.a = get_number(norms, "norms", "a", np.a);
    np.xi = get_number(norms, "norms", "xi", np.xi);
    np.theta1 = get_number(norms, "norms", "theta1", np.theta1);
    np.theta2 = get_number(norms, "norms", "theta2", np.theta2);
    c.norm_params = np;

    const ptree& ini = sec("initial");
    InitialSpec& s = rc.initial;
    s.kind = get_value<std::string>(ini, "initial", "kind", s.kind);
    s.mass_scale = get_number(ini, "initial", "mass_scale", s.mass_scale);
    s.sigma = get_number(ini, "initial", "sigma", s.sigma);
    s.x0 = get_number(ini, "initial", "x0", s.x0);
    s.y0 = get_number(ini, "initial", "y0", s.y0);
    s.mode_i = get_value<int>(ini, "initial", "mode_i", s.mode_i);
    s.mode_j = get_value<int>(ini, "initial", "mode_j", s.mode_j);
    s.mode_amplitude = get_number(ini, "initial", "mode_amplitude", s.mode_amplitude);
    s.mean = get_number(ini, "initial", "mean", s.mean);
    s.expression = get_value<std::string>(ini, "initial", "expression", s.expression);
    s.checkpoint = resolve(get_value<std::string>(ini, "initial", "checkpoint", s.checkpoint), base_dir);
    s.seed = get_value<std::uint64_t>(ini, "initial", "seed", s.seed);
    s.noise_amplitude = get_number(ini, "initial", "noise_amplitude", s.noise_amplitude);
    s.noise_modes = get_value<int>(ini, "initial", "noise_modes", s.noise_modes);
    s.w_kind = get_value<std::string>(ini, "initial", "w_kind", s.w_kind);
    s.w_expression = get_value<std::string>(ini, "initial", "w_expression", s.w_expression);
    s.w_checkpoint = resolve(get_value<std::string>(ini, "initial", "w_checkpoint", s.w_checkpoint), base_dir);

    const ptree& out = sec("output");
    rc.output_dir = resolve(get_value<std::string>(out, "output", "dir", rc.output_dir), base_dir);
    c.sample_every = get_value<int>(out, "output", "sample_every", c.sample_every);
    if (out.get_child_optional("tracked_modes"))
        c.tracked_modes = parse_mode_list(get_value<std::string>(out, "output", "tracked_modes", ""));
    rc.write_final_checkpoint = get_value<bool>(out, "output", "checkpoint", rc.write_final_checkpoint);

    const ptree& dbg = sec("debug");
    c.nonlinear = get_value<bool>(dbg, "debug", "nonlinear", c.nonlinear);
    c.moser_monitor = get_value<bool>(dbg, "debug", "moser_monitor", c.moser_monitor);
    rc.verbosity = get_value<int>(dbg, "debug", "verbosity", rc.verbosity);

    static const std::set<std::string> kinds = {"bump", "zero", "mode", "expression", "checkpoint", "noise"};
    if (!kinds.count(s.kind)) throw ParameterError("config: unknown [initial] kind '" + s.kind + "'");
    static const std::set<std::string> wkinds = {"zero", "expression", "checkpoint"};
    if (!wkinds.count(s.w_kind)) throw ParameterError("config: unknown [initial] w_kind '" + s.w_kind + "'");
    if (s.kind == "expression" && s.expression.empty()) throw ParameterError("config: [initial] expression is empty");
    if (s.kind == "checkpoint" && s.checkpoint.empty()) throw ParameterError("config: [initial] checkpoint is empty");
    if (s.kind == "noise" && s.noise_modes < 1) throw ParameterError("config: [initial] noise_modes must be >= 1");
    if (s.kind == "bump" && !(s.mass_scale >= 0)) throw ParameterError("config: [initial] mass_scale must be >= 0");
    if (s.kind == "checkpoint" && !std::filesystem::exists(s.checkpoint))
        throw ParameterError("config: checkpoint '" + s.checkpoint + "' not found");
    if (c.coupled && s.w_kind == "checkpoint" && !std::filesystem::exists(s.w_checkpoint))
        throw ParameterError("config: vorticity checkpoint '" + s.w_checkpoint + "' not found");
    validate(c);
    validate(np, ModelCase{c.alpha, c.coupled});
    return rc;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParameterError("cannot read config '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    const std::string base = std::filesystem::path(path).parent_path().string();
    return parse_run_config(ss.str(), base.empty() ? "." : base);
}

std::string default_config_text() {
    const RunConfig rc;
    const SimConfig& c = rc.sim;
    const InitialSpec& s = rc.initial;
    const NormParams np = paper_norm_params(ModelCase{c.alpha, c.coupled});
    std::ostringstream os;
    os << "[model]\n"
       << "amplitude = " << fmt15(c.amplitude) << "\n"
       << "alpha = " << fmt15(c.alpha) << "\n"
       << "coupled = " << (c.coupled ? "true" : "false") << "\n"
       << "; rescaled: time in units of A; physical: unrescaled system, A = 0 allowed\n"
       << "frame = " << frame_name(c.frame) << "\n\n"
       << "[grid]\n"
       << "nx = " << c.grid.nx << "\n"
       << "ny = " << c.grid.ny << "\n"
       << "lx = " << fmt15(c.grid.lx) << "\n"
       << "ly = " << fmt15(c.grid.ly) << "\n"
       << "dealias_fraction = " << fmt15(c.grid.dealias_fraction) << "\n\n"
       << "[time]\n"
       << "dt = " << fmt15(c.dt) << "\n"
       << "t_end = " << fmt15(c.t_end) << "\n"
       << "cfl = " << fmt15(c.cfl) << "\n"
       << "max_halvings = " << c.max_halvings << "\n"
       << "remap_threshold = " << fmt15(c.remap_threshold) << "\n\n"
       << "[blowup]\n"
       << "linf = " << fmt15(c.blowup_linf) << "\n"
       << "tail = " << fmt15(c.blowup_tail) << "\n\n"
       << "[norms]\n"
       << "; defaults follow the model case (alpha > 0 or alpha = 0)\n"
       << "m = " << fmt15(np.m) << "\n"
       << "eps = " << fmt15(np.eps) << "\n"
       << "a = " << fmt15(np.a) << "\n"
       << "xi = " << fmt15(np.xi) << "\n"
       << "theta1 = " << fmt15(np.theta1) << "\n"
       << "theta2 = " << fmt15(np.theta2) << "\n\n"
       << "[initial]\n"
       << "; bump | zero | mode | expression | checkpoint | noise\n"
       << "kind = " << s.kind << "\n"
       << "mass_scale = " << fmt15(s.mass_scale) << "\n"
       << "sigma = " << fmt15(s.sigma) << "\n"
       << "x0 = nan\n"
       << "y0 = nan\n"
       << "mode_i = " << s.mode_i << "\n"
       << "mode_j = " << s.mode_j << "\n"
       << "mode_amplitude = " << fmt15(s.mode_amplitude) << "\n"
       << "mean = " << fmt15(s.mean) << "\n"
       << "expression =\n"
       << "checkpoint =\n"
       << "seed = " << s.seed << "\n"
       << "noise_amplitude = " << fmt15(s.noise_amplitude) << "\n"
       << "noise_modes = " << s.noise_modes << "\n"
       << "; zero | expression | checkpoint\n"
       << "w_kind = " << s.w_kind << "\n"
       << "w_expression =\n"
       << "w_checkpoint =\n\n"
       << "[output]\n"
       << "dir = " << rc.output_dir << "\n"
       << "sample_every = " << c.sample_every << "\n"
       << "; comma-separated i:j lattice labels\n"
       << "tracked_modes =\n"
       << "checkpoint = " << (rc.write_final_checkpoint ? "true" : "false") << "\n\n"
       << "[debug]\n"
       << "nonlinear = " << (c.nonlinear ? "true" : "false") << "\n"
       << "moser_monitor = " << (c.moser_monitor ? "true" : "false") << "\n"
       << "verbosity = " << rc.verbosity << "\n";
    return os.str();
}

// ---- initial data ----

namespace {

SpectralField sample_expression(const std::string& text, const GridSpec& g) {
    const Expression e(text);
    std::vector<double> phys(g.physical_size());
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix)
            phys[static_cast<std::size_t>(iy) * g.nx + ix] = e(grid_x(g, ix), grid_y(g, iy), g.lx, g.ly);
    for (double v : phys)
        if (!std::isfinite(v)) throw ParameterError("expression '" + text + "' is not finite on the grid");
    return forward_transform(g, phys);
}

SpectralField load_checkpoint_on(const std::string& path, const GridSpec& g) {
    SpectralField f = read_checkpoint(path);
    if (f.grid.nx != g.nx || f.grid.ny != g.ny || f.grid.lx != g.lx || f.grid.ly != g.ly)
        throw ParameterError("checkpoint '" + path + "' does not match the configured grid");
    f.grid = g;
    return f;
}

}  // namespace

SpectralField build_initial_density(const InitialSpec& s, const GridSpec& g) {
    validate(g);
    if (s.kind == "bump") return reference_bump(g, s.mass_scale * 8.0 * std::numbers::pi, s.sigma, s.x0, s.y0);
    if (s.kind == "zero") return SpectralField(g);
    if (s.kind == "mode") {
        SpectralField f(g);
        if (std::abs(s.mode_i) > g.nx / 2 || std::abs(s.mode_j) > g.ny / 2)
            throw ParameterError("initial mode outside the grid");
        // Real cosine of amplitude mode_amplitude.
        const cplx half = (s.mode_i == 0 && s.mode_j == 0) ? cplx(s.mode_amplitude, 0) : cplx(0.5 * s.mode_amplitude, 0);
        f.set_mode(s.mode_i, s.mode_j, half);
        f.coeffs[0] += s.mean;
        return f;
    }
    if (s.kind == "expression") return sample_expression(s.expression, g);
    if (s.kind == "checkpoint") return load_checkpoint_on(s.checkpoint, g);
    if (s.kind == "noise") {
        SpectralField f(g);
        std::mt19937_64 rng(s.seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        const int mi = std::min(s.noise_modes, g.keep_i());
        const int mj = std::min(s.noise_modes, g.keep_j());
        for (int i = 0; i <= mi; ++i)
            for (int j = -mj; j <= mj; ++j) {
                if (i == 0 && j <= 0) continue;
                const double re = normal(rng), im = normal(rng);
                f.set_mode(i, j, s.noise_amplitude * cplx(re, im));
            }
        f.coeffs[0] = s.mean;
        return f;
    }
    throw ParameterError("unknown initial kind '" + s.kind + "'");
}

std::unique_ptr<SpectralField> build_initial_vorticity(const InitialSpec& s, const GridSpec& g) {
    if (s.w_kind == "zero") return nullptr;
    if (s.w_kind == "expression") {
        auto f = std::make_unique<SpectralField>(sample_expression(s.w_expression, g));
        f->coeffs[0] = 0;  // the vorticity must be mean-free
        return f;
    }
    if (s.w_kind == "checkpoint") return std::make_unique<SpectralField>(load_checkpoint_on(s.w_checkpoint, g));
    throw ParameterError("unknown vorticity kind '" + s.w_kind + "'");
}

}  // namespace pks
