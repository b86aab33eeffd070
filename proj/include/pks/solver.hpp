#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pks/physics.hpp"
#include "pks/spectral.hpp"
#include "pks/threshold.hpp"

namespace pks {

// rescaled: d_t f + y d_x f = (1/A)(Lap f - N), time in rescaled units.
// physical: d_t f + A y d_x f = Lap f - N, the unrescaled system; A = 0 removes the flow.
enum class Frame { rescaled, physical };
Frame parse_frame(const std::string& s);
std::string frame_name(Frame f);

struct SimConfig {
    double amplitude = 100.0;
    double alpha = 0.0;
    bool coupled = false;
    Frame frame = Frame::rescaled;
    GridSpec grid;
    double dt = 0.05;
    double t_end = 10.0;
    double remap_threshold = 0.5;  // fraction of the vertical Nyquist index
    double blowup_linf = 1.0;  // below the resolved peak of the reference bump on the default grid
    double blowup_tail = 0.1;
    double cfl = 0.5;
    int max_halvings = 10;
    NormParams norm_params = paper_norm_params(ModelCase{0.0, false});  // matches alpha above
    int sample_every = 10;
    bool nonlinear = true;  // false: linear (sheared heat) evolution only
    // Lattice labels (i, j) of modes to track, given in the lab frame at t = 0.
    std::vector<std::pair<int, int>> tracked_modes;
    bool moser_monitor = true;

    // Shear rate and diffusion coefficient of the general form
    // d_t f + sigma y d_x f = nu (Lap f - N).
    double shear_rate() const;
    double diffusivity() const;
    // Rescaled time per unit solver time (A in the physical frame, 1 otherwise).
    double rescaled_time_factor() const;
};

void validate(const SimConfig& c);

// Exact integrating factor of the sheared heat equation, in the convention
// exp(-(1/A) int_0^dt (k^2 + (xi0 + k (s + tau))^2) dtau).
double linear_propagator(double k, double xi0, double s, double dt, double amplitude);
// int_0^dt (k^2 + (xi0 + rate tau)^2) dtau, expanded to avoid cancellation.
double sheared_heat_integral(double k, double xi0, double rate, double dt);

struct SimState {
    SpectralField n;
    SpectralField w;  // empty coefficient array when uncoupled
    bool has_w = false;
    double t = 0;
    double phase = 0;        // comoving shear phase in lattice units, in [0, remap window)
    long long shift = 0;     // total lattice shift applied by remaps
    long long steps = 0;
    long long remaps = 0;
    NormAccumulator acc_n;
    NormAccumulator acc_dx13;
    NormAccumulator acc_w;
};

SimState initial_state(const SimConfig& c, const SpectralField& n0, const SpectralField* w0 = nullptr);

// Comoving storage row of the mode with lab label (i, j) at t = 0; false when
// the mode has left the stored range.
bool comoving_row(const SimState& s, int i, int j, int& row);

// Shift the comoving rows by `shift` lattice units per horizontal index; the
// physical field is unchanged apart from content pushed out of the stored range.
// Non-integer shifts are rejected.
void remap_shear(SimState& s, double shift);
// Phase at which the solver remaps for this configuration.
double remap_phase(const SimConfig& c);

enum class StepStatus { ok, cfl_abort, non_finite };

struct StepInfo {
    StepStatus status = StepStatus::ok;
    double dt_used = 0;
    int halvings = 0;
    double max_speed = 0;
};

// Lawson integrating-factor RK4 with the exact sheared-heat propagator.
class Stepper {
public:
    explicit Stepper(const SimConfig& c);
    // One step of size at most dt_max; updates accumulators and remaps when due.
    StepInfo step(SimState& s, double dt_max);
    Transform& transform() { return ev_.transform(); }
    FluxEvaluator& evaluator() { return ev_; }
    const SimConfig& config() const { return cfg_; }

private:
    struct Fields {
        std::vector<cplx> n, w;
    };
    void rhs(const Fields& f, double phase, Fields& out);
    void propagators(double phase0, double h);

    SimConfig cfg_;
    FluxEvaluator ev_;
    SpectralField fn_, fw_, c_, out_n_, out_w_;
    // exp(-I) - 1 over [0, h/2], [h/2, h] and [0, h]
    std::vector<double> e_half_, e_half2_, e_full_;
    Fields u0_, k1_, k2_, k3_, k4_, stage_;
    double last_speed_ = 0;
};

enum class RunStatus { completed, blowup, numerical_failure };
std::string status_name(RunStatus s);

struct BlowupCheck {
    bool flagged = false;
    std::string criterion;  // "linf" or "tail"
    double linf = 0;
    double min_value = 0;
    double tail = 0;
};

BlowupCheck detect_blowup(const SimState& s, const SimConfig& c, Transform& tf);
BlowupCheck detect_blowup(const std::vector<double>& n_phys, const SpectralField& n, const SimConfig& c);

struct Sample {
    double t = 0;
    double mass = 0;
    double linf_n = 0;
    double min_n = 0;
    double l2_n = 0;
    double xnorm_n = 0;
    double xnorm_dx13_n = 0;
    double xnorm_w = 0;
    std::vector<double> modes;
    double moser_margin = 0;
    double grad_c_l4 = 0;
    double tail = 0;
    double dt = 0;
};

struct RunResult {
    RunStatus status = RunStatus::completed;
    std::string criterion;  // blow-up criterion or failure reason
    double detection_time = 0;
    std::vector<Sample> samples;
    std::vector<std::string> mode_labels;
    SimState final_state;
    double initial_mass = 0;
    double initial_linf = 0;
    double max_linf = 0;
    double max_mass_drift = 0;       // relative
    double max_hermitian_defect = 0;  // relative to the largest coefficient
    double max_parseval_defect = 0;   // relative
    double min_dt = 0;
    long long cfl_halvings = 0;
    int negativity_warnings = 0;
    int moser_negative_samples = 0;
    std::vector<std::string> warnings;
};

struct RunHooks {
    std::function<void(const SimState&, const Sample&)> on_sample;
};

RunResult run(const SimConfig& c, const SpectralField& n0, const SpectralField* w0 = nullptr,
              const RunHooks* hooks = nullptr);

std::string run_csv(const RunResult& r);
std::string run_summary_json(const RunResult& r, const SimConfig& c);
std::string config_json(const SimConfig& c);

}  // namespace pks
