#pragma once

#include <string>
#include <vector>

#include "diras/circuits.hpp"

namespace diras {

/// One CLI invocation: scenario (preset name or netlist path), solver mode
/// and its parameters, output directory.
struct RunSpec {
    std::string scenario = "ex1";
    std::string mode = "monolithic"; ///< monolithic | di | di-aitken |
                                     ///< di-aitken-pipelined | emt-ts |
                                     ///< nonlinear | spectral
    double dt = 1e-3;
    double t_end = 0.05;
    Eigen::Index window = 3;     ///< pipelined steps per window
    double dt_ts = 2e-3;
    double dt_emt = 2e-5;
    std::vector<int> modes{-1, 0, 1};
    double freq_ts = 50.0;       ///< base phasor frequency [Hz]
    double rtol = 1e-10;
    double atol = 1e-12;
    int max_iter = 200;
    std::string out_dir = ".";
    std::string partition_file;  ///< required for netlist scenarios in split modes
    std::string sweep_dt;        ///< "lo:hi[:n]" spectral sweep
    PaperParams params;
};

/// Executes the run and writes its output files. Returns the process exit
/// code (0 on success, the error code of a diras::Error otherwise) and
/// prints failures to stderr.
int run(const RunSpec& spec);

} // namespace diras
