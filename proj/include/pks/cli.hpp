#pragma once

#include <iosfwd>
#include <string>

namespace pks {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_blowup = 3, exit_numerical = 4 };

// Entry point of the pkslab command line; output goes to `out`, diagnostics to `err`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct OracleResult {
    double max_rel_error = 0;
    double max_spurious = 0;  // largest coefficient outside the evolved mode
    double final_exact = 0;
    double final_numeric = 0;
    long long steps = 0;
    long long remaps = 0;
    bool left_range = false;
};

// Linear run of the single mode with lattice labels (i, j) in the rescaled frame,
// compared after every step with the closed-form sheared-heat factor.
OracleResult linear_oracle(int i, int j, double amplitude, double t_end, double dt, int nx = 128, int ny = 128);

}  // namespace pks
