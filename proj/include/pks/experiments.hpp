#pragma once

#include <limits>
#include <string>
#include <vector>

#include "pks/solver.hpp"

namespace pks {

// Gaussian bump (M / (2 pi s^2)) exp(-|x - x0|^2 / (2 s^2)), periodized, projected
// to the dealiased band, with the mean fixed so that the total mass is exactly M.
// sigma <= 0 selects lx / 32; NaN centres select the box centre.
SpectralField reference_bump(const GridSpec& g, double mass, double sigma = 0.0,
                             double x0 = std::numeric_limits<double>::quiet_NaN(),
                             double y0 = std::numeric_limits<double>::quiet_NaN());

enum class DecayModel { sheared, exponential };

struct DecayFit {
    double rate = 0;       // c in log|a| = b - c phi(t)
    double intercept = 0;  // b
    double r_squared = 0;
    int samples = 0;
};

// Least squares on log|a|. sheared: phi(t) = (k^2 t + k^2 t^3 / 3) / A, the exact
// exponent of mode (k, 0) under the rescaled linear system; exponential: phi(t) = t.
DecayFit decay_rate_fit(const std::vector<double>& t, const std::vector<double>& amp, DecayModel model,
                        double k = 1.0, double amplitude = 1.0);

// First time the series falls to amp[0] / e, by linear interpolation of log|a|;
// NaN when it never does.
double efolding_time(const std::vector<double>& t, const std::vector<double>& amp);

// Fit of log y = b + s log x.
struct PowerFit {
    double slope = 0;
    double intercept = 0;
    double r_squared = 0;
};
PowerFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

struct MassRow {
    double mass_scale = 0;  // multiple of 8 pi
    double mass = 0;
    RunStatus status = RunStatus::completed;
    std::string criterion;
    double detection_time = 0;
    double max_linf = 0;
    double initial_linf = 0;
    long long steps = 0;
    std::string error;  // set when the run threw
};

// One run per mass with the reference bump; the template's frame, amplitude and
// horizon are used as given (the no-flow probe uses the physical frame with A = 0).
std::vector<MassRow> critical_mass_study(const std::vector<double>& mass_scales, const SimConfig& tmpl,
                                         int jobs = 1);

struct SweepPlan {
    SimConfig base;
    std::vector<double> amplitudes;
    double mass_scale = 1.5;
    double horizon = 20.0;
    int jobs = 1;
};

void validate(const SweepPlan& p);

struct SweepRow {
    double amplitude = 0;
    RunStatus status = RunStatus::completed;
    std::string criterion;
    double detection_time = 0;
    double initial_linf = 0;
    double max_linf = 0;
    double xnorm_n = 0;
    double xnorm_dx13_n = 0;
    double xnorm_w = 0;
    long long steps = 0;
    std::string error;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<RunResult> runs;
    bool has_threshold = false;
    double empirical_threshold = 0;  // A*
    bool monotone_consistent = true;
};

SweepResult suppression_sweep(const SweepPlan& plan, bool keep_runs = false);

// Margin of the Moser-type L-infinity bound for one snapshot (running sups taken
// as the current values).
double moser_bound_monitor(const SpectralField& n, double mass, double initial_linf, double alpha,
                           double phase = 0.0);

// Running version for a time series.
class MoserMonitor {
public:
    MoserMonitor(double mass, double initial_linf, double alpha);
    double update(const SpectralField& n, Transform& tf, double phase = 0.0);
    double sup_grad_c_l4() const { return sup_grad_; }
    double sup_n_l2() const { return sup_l2_; }

private:
    double mass_, linf0_, alpha_;
    double sup_grad_ = 0, sup_l2_ = 0;
};

std::string sweep_plan_json(const SweepPlan& p);
SweepPlan sweep_plan_from_json(const std::string& text, const SimConfig& defaults);

// Writes plan.json, runs/*.csv, summary.csv and report.md into dir.
void write_sweep_directory(const std::string& dir, const SweepPlan& plan, const SweepResult& res);
void write_mass_directory(const std::string& dir, const std::vector<double>& scales, const SimConfig& tmpl,
                          const std::vector<MassRow>& rows);

std::string sweep_summary_csv(const SweepResult& res);
std::string mass_summary_csv(const std::vector<MassRow>& rows);

}  // namespace pks
