#pragma once

#include <vector>

#include "diras/aitken.hpp"
#include "diras/dae.hpp"
#include "diras/partition.hpp"

namespace diras {

/// Conductance whose value follows the current through the element itself:
/// G(i) = 1 / (g0 + alpha * i), refreshed once per time step.
struct NonlinearConductance {
    Eigen::Index row;     ///< row of the conductance branch equation
    Eigen::Index col_p;   ///< positive node voltage column
    Eigen::Index col_q;   ///< negative node voltage column
    Eigen::Index current; ///< state index of the element current it depends on
    double g0 = 0.0;
    double alpha = 0.0;

    double value_at(double i) const { return 1.0 / (g0 + alpha * i); }
};

/// Freezes every nonlinear coefficient at the previous accepted state and
/// returns the step's linear system. Throws CoefficientBlowup when a
/// denominator g0 + alpha*i falls below 1e-12.
CombinedSystem linearize_step(const CombinedSystem& base,
                              const std::vector<NonlinearConductance>& elements,
                              const Vector& prev_state);

/// Per-step interface operator record.
struct SteppedOperator {
    Eigen::Index step = 0;
    double rho = 0.0;
    Complex lambda_max;
};

struct NonlinearResult {
    Trajectory traj;
    std::vector<SteppedOperator> spectra;
    std::vector<InterfaceOperator> operators; ///< P^n per step (numeric)
};

/// Accelerated run for the weakly nonlinear system: each step linearizes at
/// the previous accepted state, rebuilds P^{n+1} from n_G+1 sweeps,
/// accelerates, and finishes with one local solve.
NonlinearResult solve_nonlinear_accelerated(const CombinedSystem& base,
                                            const std::vector<NonlinearConductance>& elements,
                                            const OverlapPartition& part, const Vector& x0,
                                            double dt, double t_end);

/// Frozen-coefficient reference: monolithic backward Euler with the same
/// per-step linearization rule. The oracle for the accelerated run.
Trajectory solve_nonlinear_monolithic(const CombinedSystem& base,
                                      const std::vector<NonlinearConductance>& elements,
                                      const Vector& x0, double dt, double t_end);

/// Per-step spectral log CSV: `step,rho,lambda_re,lambda_im`.
void write_spectra_csv(std::ostream& os, const std::vector<SteppedOperator>& spectra);

} // namespace diras
