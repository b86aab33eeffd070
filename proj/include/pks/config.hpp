#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>

#include "pks/solver.hpp"

namespace pks {

// Compiled scalar expression in x, y with the constants pi, e, lx, ly.
// Grammar: sums and products of factors; factors are numbers, names, calls
// f(expr) for sin cos tan exp log sqrt abs tanh sinh cosh, parentheses, unary
// minus and right-associative ^.
class Expression {
public:
    explicit Expression(const std::string& text);
    ~Expression();
    Expression(Expression&&) noexcept;
    Expression& operator=(Expression&&) noexcept;

    double operator()(double x, double y, double lx, double ly) const;
    const std::string& text() const { return text_; }

    struct Node;

private:
    std::string text_;
    std::unique_ptr<Node> root_;
};

struct InitialSpec {
    std::string kind = "bump";  // bump | zero | mode | expression | checkpoint | noise
    double mass_scale = 1.5;    // bump mass in units of 8 pi
    double sigma = 0.0;         // bump width; <= 0 selects lx / 32
    double x0 = std::numeric_limits<double>::quiet_NaN();
    double y0 = std::numeric_limits<double>::quiet_NaN();
    int mode_i = 1;  // mode: lattice labels and real amplitude of the cosine
    int mode_j = 0;
    double mode_amplitude = 1.0;
    double mean = 0.0;  // added to mode and noise data
    std::string expression;
    std::string checkpoint;
    std::uint64_t seed = 1;
    double noise_amplitude = 0.01;
    int noise_modes = 8;  // noise fills |i|, |j| <= noise_modes
    std::string w_kind = "zero";  // zero | expression | checkpoint (coupled runs only)
    std::string w_expression;
    std::string w_checkpoint;
};

struct RunConfig {
    SimConfig sim;
    InitialSpec initial;
    std::string output_dir = "pks_run";
    bool write_final_checkpoint = true;
    int verbosity = 0;
};

// INI-style text with sections [model] [grid] [time] [blowup] [norms] [initial]
// [output] [debug]. Unknown sections or keys are errors. Relative paths are
// resolved against base_dir. Norm parameters not given follow the model case.
RunConfig parse_run_config(const std::string& text, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);
std::string default_config_text();

SpectralField build_initial_density(const InitialSpec& s, const GridSpec& g);
// Null when the spec asks for zero vorticity.
std::unique_ptr<SpectralField> build_initial_vorticity(const InitialSpec& s, const GridSpec& g);

// "i:j,i:j" lists of tracked modes.
std::vector<std::pair<int, int>> parse_mode_list(const std::string& s);

}  // namespace pks
