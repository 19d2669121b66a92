#pragma once

#include <vector>

#include "diras/dae.hpp"
#include "diras/partition.hpp"

namespace diras {

/// One partition's backward-Euler subsystem
///   At_i z_i = bt_i - Et_i z_{i,e}
/// with At_i and Et_i row-scaled like step_matrix: differential rows get a
/// dt factor plus the identity, algebraic rows are taken from Ab unchanged.
struct LocalSystem {
    std::size_t part_id = 0;
    double dt = 0.0;
    IndexSet rows;       ///< W_i^p (ascending)
    IndexSet ext;        ///< W_{i,e}^p (ascending)
    Matrix a_tilde;      ///< n_i x n_i
    Matrix e_tilde;      ///< n_i x n_{i,e}
    LuFactor lu;         ///< factorization of a_tilde
    std::vector<bool> row_is_diff; ///< per local row
};

/// Which previous-step differential state feeds bt^{n+1}.
enum class StepSource {
    accepted, ///< x^{n,*} = accepted/accelerated previous step (sequential strategy)
    pipeline, ///< x^{n,*} = previous step's current window iterate (pipelined strategy)
};

LocalSystem build_local(const CombinedSystem& sys, const OverlapPartition& part, double dt,
                        std::size_t i);

std::vector<LocalSystem> build_all_locals(const CombinedSystem& sys, const OverlapPartition& part,
                                          double dt);

/// Row-scaled right-hand side bt^{n+1} = [x_prev + dt*b1(t); b2(t)].
Vector scaled_rhs(const CombinedSystem& sys, const Vector& z_prev_step, double dt, double t);

/// One dynamic-iteration sweep: every partition solves its local system
/// reading external values from z_iter, and the base-masked prolongations
/// are summed. Pure function of its inputs.
Vector di_sweep(const std::vector<LocalSystem>& locals, const OverlapPartition& part,
                const Vector& bt, const Vector& z_iter);

/// Dense I - M_RAS^{-1} At with M_RAS^{-1} = sum Rt_i^{0T} At_i^{-1} R_i^p.
/// Test/analysis path; the sweep itself stays matrix-free.
Matrix richardson_matrix(const CombinedSystem& sys, const OverlapPartition& part, double dt);

/// Dense M_RAS^{-1} (applied to the identity).
Matrix ras_preconditioner(const CombinedSystem& sys, const OverlapPartition& part, double dt);

/// Affine interface update z_G <- P z_G + c.
Vector interface_iterate(const Matrix& p_mat, const Vector& zg, const Vector& c);

/// Plain (non-accelerated) DI controls.
struct DiOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    int max_iter = 200;
};

/// Per-iteration convergence record: `step,iter,err_inf,err_ratio`.
struct DiIterRecord {
    Eigen::Index step;
    int iter;
    double err_inf;
    double err_ratio;
};

struct DiResult {
    Trajectory traj;
    std::vector<DiIterRecord> log;
    bool converged = true; ///< false when some step hit max_iter
};

/// Fixed-step run where each step is solved by plain DI sweeps, warm-started
/// from the previous accepted state.
DiResult di_solve(const CombinedSystem& sys, const OverlapPartition& part, const Vector& x0,
                  double dt, double t_end, const DiOptions& opt = {});

void write_convergence_csv(std::ostream& os, const std::vector<DiIterRecord>& log);

} // namespace diras
