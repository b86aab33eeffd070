#pragma once

#include <string>
#include <vector>

#include "pks/errors.hpp"

namespace pks {

struct NormParams {
    double m = 0.9;
    double eps = 0.25;
    double a = 0.0;  // set by paper_norm_params()
    double xi = 1.0;
    double theta1 = 1.0;
    double theta2 = 1.0;
};

struct ModelCase {
    double alpha = 1.0;
    bool coupled = false;
};

// a = 1/(2000 pi), Xi = theta1 = theta2 = 1, with the (eps, m) pair used for the
// given model: (1/4, 9/10) when alpha > 0 and (5/12, 7/10) when alpha = 0.
NormParams paper_norm_params(const ModelCase& mc);

// Throws ParameterError naming the first violated condition.
void validate(const NormParams& p, const ModelCase& mc);
void validate(const NormParams& p);

double log_gamma(double x);
double beta_function(double x, double y);

struct BoundConstants {
    double c_st = 0, c_ch1 = 0, c_ch2 = 0, c_ch3 = 0;
    double c_fl1 = 0, c_fl2 = 0, c_fl3 = 0, c_hl = 0, c_l = 0;
};

BoundConstants bound_constants(const NormParams& p);

// The three rate factors; r1 and r3 need alpha > 0, r2 needs eps > 1/3.
double rate_r1(const NormParams& p, double alpha);
double rate_r2(const NormParams& p);
double rate_r3(const NormParams& p, double alpha);
// Picks r1 / r2 / r3 as the model case requires.
double rate_factor(const NormParams& p, const ModelCase& mc);

enum class ThresholdMode { paper_split, sharp };
ThresholdMode parse_threshold_mode(const std::string& s);

// Left side of the closing inequality with the bootstrap size set to 1.
double closing_function(const BoundConstants& c, double r, const ModelCase& mc, double amplitude);

struct SplitStep {
    std::string name;
    double solved = 0;     // root of the partial equation
    double coarsened = 0;  // last closed-form upper expression in the chain
    double published = 0;  // printed bound (includes the alpha power)
};

struct ThresholdResult {
    double lambda = 0;
    bool bracket_failed = false;
    bool paper_chain = false;  // true when the published chain was reproduced
    double residual = 0;       // |g(lambda) - 1| in sharp mode
    int iterations = 0;
    std::vector<SplitStep> steps;
};

ThresholdResult solve_amplitude_threshold(const BoundConstants& c, const NormParams& p,
                                          const ModelCase& mc, ThresholdMode mode);

struct InitialNorms {
    double y_n = 0;
    double y_dx13_n = 0;
    double y_w = 0;
    double mass = 0;
    double linf_n = 0;
};

struct BootstrapSizes {
    double size = 0;      // Q (uncoupled) or K (coupled)
    double size_inf = 0;  // Q_inf or K_inf
};

BootstrapSizes bootstrap_sizes(const InitialNorms& in, const ModelCase& mc);

struct ConstantReport {
    NormParams params;
    ModelCase model;
    BoundConstants c;
    double r1 = 0, r2 = 0, r3 = 0;  // zero when not defined for the case
    ThresholdResult paper;
    ThresholdResult sharp;
    bool has_bootstrap = false;
    BootstrapSizes bootstrap;
};

ConstantReport constant_report(const NormParams& p, const ModelCase& mc,
                               const InitialNorms* initial = nullptr);

struct AuditEntry {
    std::string inequality;
    double lhs = 0;
    double rhs = 0;
    bool pass = false;
    std::string relation;  // "<", "<=" or "=="
};

std::vector<AuditEntry> verify_paper_chain();

std::string report_json(const ConstantReport& r, const std::vector<AuditEntry>* audit);

}  // namespace pks
