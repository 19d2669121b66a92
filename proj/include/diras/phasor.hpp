#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "diras/aitken.hpp"
#include "diras/dae.hpp"
#include "diras/partition.hpp"
#include "diras/ras.hpp"

namespace diras {

/// Dynamic-phasor configuration for the TS side of a heterogeneous run.
struct PhasorConfig {
    double omega0 = 0.0;            ///< base angular frequency, T = 2*pi/omega0
    std::vector<int> modes{-1, 0, 1};
    double dt_emt = 0.0;
    Eigen::Index m = 1;             ///< dt_ts = m * dt_emt
    bool interp_linear = false;     ///< blend phasor coefficients across the window

    double dt_ts() const { return static_cast<double>(m) * dt_emt; }
    double period() const;
    /// Samples per period; throws BadPhasorConfig unless T is an integer
    /// multiple of dt_emt and m <= N.
    Eigen::Index period_samples() const;
    Eigen::Index mode_count() const { return static_cast<Eigen::Index>(modes.size()); }
};

/// One period of interface samples at dt_emt spacing, newest last.
struct EmtHistory {
    std::vector<Vector> samples;
    double end_time = 0.0;
    double dt = 0.0;
};

/// Per-variable complex mode coefficients; rows = variables, cols = modes
/// in PhasorConfig::modes order.
using PhasorState = Eigen::MatrixXcd;

/// Windowed Fourier analysis over exactly one period, phase-referenced by
/// absolute sample times so recombination at the window end is exact.
PhasorState f_mod(const EmtHistory& hist, const PhasorConfig& cfg);

/// Recombination Re sum_k z_k exp(i k w0 t) at absolute time t.
Vector r_mod(const PhasorState& ph, const PhasorConfig& cfg, double t);

/// Per-mode forcing for a phasor-expanded system: mode index -> b(t) block.
using ModeForcing = std::function<Eigen::VectorXcd(double t, int mode)>;

/// Expands a linear DAE into its dynamic-phasor form: every retained mode
/// gets a re/im copy of the system, differential rows pick up the ik*w0
/// frequency shift. Variable layout: per mode [x_re x_im], then per mode
/// [y_re y_im].
LinearDae ts_dae(const LinearDae& sub, const PhasorConfig& cfg, const ModeForcing& forcing = {});

/// Heterogeneous EMT-TS engine on a two-way partition: the TS partition
/// advances by dt_ts in phasor variables, the EMT partition by m sub-steps
/// of dt_emt, exchanging interface data once per TS step. A sweep solves
/// the TS side on the iterate-k EMT history, then the EMT side on the fresh
/// TS interface, which keeps the TS-interface error dynamics one-step linear.
class MultirateEngine {
  public:
    struct Iterate {
        Vector ts_stack;                ///< stacked phasor solution of the TS block
        std::vector<Vector> emt_states; ///< m local EMT solutions across the window
    };

    struct StepInfo {
        int sweeps = 0;
        double rho = 0.0;              ///< spectral radius of the TS-interface operator
        double stationarity = 0.0;     ///< interface movement under one extra sweep
    };

    MultirateEngine(const CombinedSystem& sys, const OverlapPartition& part,
                    const PhasorConfig& cfg, const Vector& x0, std::size_t ts_part = 1);

    /// Trial iterate at the pending TS step, warm-started from the accepted state.
    Iterate initial_iterate() const;

    /// One multirate RAS iteration at the pending TS step.
    Iterate sweep(const Iterate& it) const;

    /// Reduced real coordinates of the TS-owned interface phasors.
    Vector ts_interface_reduced(const Iterate& it) const;
    Eigen::Index reduced_dim() const { return reduced_dim_; }

    /// Aitken on the TS interface followed by the finishing EMT/TS resolves;
    /// accepts the step. P is built on the first call and reused afterwards.
    StepInfo step_accelerated();

    /// Accepted circuit state at the last completed TS boundary.
    const Vector& accepted_state() const { return z_accepted_; }
    double time() const { return t_; }

    const std::optional<InterfaceOperator>& ts_operator() const { return p_ts_; }

    /// Accepted EMT sub-step samples (time, local EMT state), for CSV output.
    const std::vector<std::pair<double, Vector>>& emt_trace() const { return emt_trace_; }
    /// Accepted TS phasor states per TS step.
    const std::vector<std::pair<double, PhasorState>>& ts_trace() const { return ts_trace_; }

    const IndexSet& emt_vars() const { return emt_loc_.rows; }
    const IndexSet& ts_vars() const { return ts_rows_; }
    const IndexSet& ts_interface_vars() const { return w0e_; }

  private:
    Vector ts_solve(const std::vector<Vector>& history_samples, double t_new) const;
    std::vector<Vector> emt_chain(const PhasorState& ifc_new, const PhasorState& ifc_old) const;
    PhasorState ts_phasors(const Vector& ts_stack, const std::vector<Eigen::Index>& pos) const;
    std::vector<Vector> merged_history(const std::vector<Vector>& emt_states) const;
    Vector reduce(const PhasorState& ph) const;
    PhasorState expand(const Vector& reduced, Eigen::Index nvars) const;
    std::vector<Eigen::Index> all_ts_pos() const;

    const CombinedSystem& sys_;
    const OverlapPartition& part_;
    PhasorConfig cfg_;
    std::size_t ts_part_;
    std::size_t emt_part_;

    LocalSystem emt_loc_;   ///< EMT local system at dt_emt
    IndexSet ts_rows_;      ///< TS partition vertex set
    IndexSet w1e_;          ///< TS externals (EMT-owned history variables)
    IndexSet w0e_;          ///< EMT externals (TS-owned interface variables)
    std::vector<Eigen::Index> w1e_pos_in_emt_;
    std::vector<Eigen::Index> w0e_pos_in_ts_;
    std::vector<Eigen::Index> base_pos_emt_; ///< owned rows of the EMT local solution

    Matrix ts_at_;      ///< stacked TS step matrix
    LuFactor ts_lu_;
    Matrix ts_et_;      ///< stacked coupling to the history phasors
    Eigen::Index nloc_ts_ = 0;
    Eigen::Index reduced_dim_ = 0;
    std::vector<std::pair<int, int>> reduced_layout_; ///< (mode index, 0=re/1=im)

    double t_ = 0.0;
    Vector z_accepted_;       ///< global circuit state at t_
    Vector ts_stack_accepted_;
    std::deque<Vector> history_; ///< N accepted interface samples ending at t_
    std::optional<InterfaceOperator> p_ts_;

    std::vector<std::pair<double, Vector>> emt_trace_;
    std::vector<std::pair<double, PhasorState>> ts_trace_;
};

/// Aitken fixed point from a sequence of reduced TS-interface iterates
/// (not differences); needs dim+1 iterates minimum.
Vector accelerate_ts_interface(const std::vector<Vector>& iterates);

/// Phasor magnitude CSV: one row per TS step, `t,<var>_k<mode>,...`.
void write_phasor_csv(std::ostream& os, const std::vector<std::pair<double, PhasorState>>& trace,
                      const std::vector<std::string>& var_names, const PhasorConfig& cfg);

} // namespace diras
