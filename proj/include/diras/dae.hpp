#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "diras/linalg.hpp"

namespace diras {

/// Forcing terms of the semi-explicit system at one time instant.
struct ForcingValue {
    Vector b1; ///< differential right-hand side, length n1
    Vector b2; ///< algebraic right-hand side, length n2
};

using ForcingFn = std::function<ForcingValue(double t)>;

ForcingFn zero_forcing(Eigen::Index n1, Eigen::Index n2);

/// Semi-explicit linear DAE
///   x'(t) + A x(t) + B y(t) = b1(t),  x(0) = x0
///   C x(t) + D y(t)         = b2(t)
/// with D nonsingular.
struct LinearDae {
    Matrix a_mat; ///< n1 x n1
    Matrix b_mat; ///< n1 x n2
    Matrix c_mat; ///< n2 x n1
    Matrix d_mat; ///< n2 x n2
    ForcingFn forcing;
    Vector x0;

    Eigen::Index n1() const { return a_mat.rows(); }
    Eigen::Index n2() const { return d_mat.rows(); }
    Eigen::Index size() const { return n1() + n2(); }
};

/// Throws DimensionMismatch unless all block shapes are consistent.
void check_dimensions(const LinearDae& dae);

/// Combined first-order form: Id z' + Ab z = b with z = [x; y],
/// Id = diag(I_{n1}, 0) encoded as diff_mask.
struct CombinedSystem {
    Matrix big_a;                ///< n x n block matrix [[A,B],[C,D]]
    std::vector<bool> diff_mask; ///< true on the n1 differential rows
    std::function<Vector(double)> forcing; ///< concatenated [b1; b2]

    Eigen::Index size() const { return big_a.rows(); }
    Eigen::Index n_diff() const;
};

/// Fixed-step trajectory of full-state vectors.
struct Trajectory {
    double dt = 0.0;
    std::vector<double> times;
    std::vector<Vector> states;

    Eigen::Index steps() const { return static_cast<Eigen::Index>(states.size()) - 1; }
};

CombinedSystem combine(const LinearDae& dae);

/// y0 = D^{-1} (b2(0) - C x0). Throws SingularD.
Vector consistent_y0(const LinearDae& dae);

/// Backward Euler on the combined system:
///   (Id + dt*Ab) z^{n+1} = Id z^n + dt b(t^{n+1}).
/// The first state is [x0; y0] with y0 from the t=0 constraint.
Trajectory monolithic_solve(const CombinedSystem& sys, const Vector& x0, double dt, double t_end);

/// Step matrix in the row-scaled form used throughout: differential rows of
/// Ab are multiplied by dt and get the backward-Euler identity, algebraic
/// rows are kept as-is. Same solution set as (Id + dt*Ab).
Matrix step_matrix(const CombinedSystem& sys, double dt);

/// Right-hand side matching step_matrix:
/// differential rows x_prev + dt*b1(t), algebraic rows b2(t).
Vector step_rhs(const CombinedSystem& sys, const Vector& z_prev, double dt, double t);

/// inf-norm of Id (z_new - z_old)/dt + Ab z_new - b(t_new); the discrete residual.
double be_residual(const CombinedSystem& sys, const Vector& z_old, const Vector& z_new, double dt,
                   double t_new);

/// inf-norm of the algebraic constraint rows C x + D y - b2(t).
double algebraic_residual(const CombinedSystem& sys, const Vector& z, double t);

/// CSV with header `t,<name_0>,...`; values printed with round-trip precision.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const std::vector<std::string>& var_names);

} // namespace diras
