#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "diras/ras.hpp"

namespace diras {

/// Unit-eigenvalue guard tolerance for (I - P) invertibility.
inline constexpr double kUnitEigTol = 1e-8;

/// Interface error operator P with its spectrum.
struct InterfaceOperator {
    enum class Source { analytic, numeric, per_step_nonlinear };

    Matrix p_mat;
    std::vector<Complex> eigs;
    double rho = 0.0;
    bool has_unit_eigenvalue = false;
    bool rank_deficient = false;    ///< set by numeric_p on a deficient history
    Eigen::Index history_rank = 0;  ///< numerical rank of the difference history
    Source source = Source::numeric;

    Eigen::Index size() const { return p_mat.rows(); }
};

InterfaceOperator make_interface_operator(Matrix p, InterfaceOperator::Source source);

/// Closed-form assembly of P for exactly two partitions:
/// block (j, 1-j) is -Sel_j At_{1-j}^{-1} Et_{1-j}, the response of the
/// neighbor's local solve at the W_{j,e} vertices. Throws NotTwoPartitions.
InterfaceOperator analytic_p_two_partitions(const std::vector<LocalSystem>& locals,
                                            const OverlapPartition& part,
                                            const InterfaceMap& gamma);

/// Builds P from iterate differences e^k = zG^(k) - zG^(k-1). Requires at
/// least size+1 differences; uses the newest size+1, pairing columns
/// [e^{K} ... e^{K-size+1}] = P [e^{K-1} ... e^{K-size}]. A numerically
/// rank-deficient history yields the minimum-norm least-squares operator
/// with rank_deficient set.
InterfaceOperator numeric_p(const std::vector<Vector>& err_history);

/// Fixed point of the affine interface map: (I-P)^{-1} (zk - P zkm1).
/// Throws UnitEigenvalue when 1 is within kUnitEigTol of the spectrum.
Vector accelerate(const InterfaceOperator& p, const Vector& zk, const Vector& zkm1);

/// Sequential time-step engine: numeric P built once on the first step
/// (n_G+1 sweeps), later steps accelerated after a single sweep.
class SequentialAccelerator {
  public:
    enum class Mode { first_step, reuse_p };

    SequentialAccelerator(const CombinedSystem& sys, const OverlapPartition& part, double dt);

    /// Advances one step from the accepted state z_prev to time t.
    Vector solve_step(const Vector& z_prev, double t, Mode mode);

    bool has_operator() const { return op_.has_value(); }
    const InterfaceOperator& op() const { return *op_; }
    const std::vector<DiIterRecord>& log() const { return log_; }

  private:
    const CombinedSystem& sys_;
    const OverlapPartition& part_;
    double dt_;
    std::vector<LocalSystem> locals_;
    std::optional<InterfaceMap> gamma_; ///< empty on the no-interface path
    std::optional<InterfaceOperator> op_;
    std::vector<DiIterRecord> log_;
    Eigen::Index step_index_ = 0;
};

struct AcceleratedResult {
    Trajectory traj;
    std::optional<InterfaceOperator> op;
    std::vector<DiIterRecord> log;
};

/// Full accelerated run: first step builds P, remaining steps reuse it.
AcceleratedResult solve_accelerated(const CombinedSystem& sys, const OverlapPartition& part,
                                    const Vector& x0, double dt, double t_end);

/// Pipelined window operator: block lower-triangular with P on the diagonal
/// and lag blocks coupling step j-a into step j. The schematic form keeps
/// only lag 1; lags >= 2 are generally nonzero and are kept here.
struct PipelineOperator {
    Eigen::Index m = 0;
    Eigen::Index ng = 0;
    std::vector<Matrix> lag_blocks; ///< lag_blocks[0] = P, [a] = lag-a coupling

    Matrix full() const; ///< dense (m*ng) x (m*ng) operator
};

/// Lag-a interface coupling blocks R_G S^a T R_G^T for a = 1..m-1, where
/// T = I - M^{-1} At and S = M^{-1} Idiff. Derived by probing the chained
/// step map rather than assuming the schematic identity coupling.
std::vector<Matrix> probe_lag_blocks(const CombinedSystem& sys, const OverlapPartition& part,
                                     const InterfaceMap& gamma, double dt, Eigen::Index m);

PipelineOperator build_pipeline(const InterfaceOperator& p, Eigen::Index m,
                                const std::vector<Matrix>& lag_blocks);

/// One pipelined iteration over an m-step window: steps are processed in
/// order, each local solve reading its own step's previous iterate at the
/// interface and the fresh differential state of the preceding step.
std::vector<Vector> pipeline_sweep(const std::vector<LocalSystem>& locals,
                                   const OverlapPartition& part, const CombinedSystem& sys,
                                   const Vector& x_window_start,
                                   const std::vector<double>& step_times,
                                   const std::vector<Vector>& window_iter, double dt);

/// Accelerated m-step window advance used by the pipelined strategy.
AcceleratedResult solve_pipelined(const CombinedSystem& sys, const OverlapPartition& part,
                                  const Vector& x0, double dt, double t_end, Eigen::Index m);

/// Eigenvalue report with convergence classification.
struct SpectralReport {
    std::vector<Complex> eigs;
    double rho = 0.0;
    bool has_unit_eigenvalue = false;
    std::string classification; ///< converges | stagnates | diverges
    std::optional<double> dt0;  ///< closed-form threshold when known
    std::optional<double> dt;   ///< time step the report was computed at
};

SpectralReport spectral_report(const InterfaceOperator& p, std::optional<double> dt,
                               std::optional<double> dt0_closed_form);

void write_spectral_json(std::ostream& os, const SpectralReport& rep);
void write_spectral_json(std::ostream& os, const std::vector<SpectralReport>& reps);

} // namespace diras
