#include "diras/dae.hpp"

#include <cmath>
#include <cstdio>

#include "diras/errors.hpp"

namespace diras {

ForcingFn zero_forcing(Eigen::Index n1, Eigen::Index n2) {
    return [n1, n2](double) { return ForcingValue{Vector::Zero(n1), Vector::Zero(n2)}; };
}

void check_dimensions(const LinearDae& dae) {
    const Eigen::Index n1 = dae.a_mat.rows();
    const Eigen::Index n2 = dae.d_mat.rows();
    if (dae.a_mat.cols() != n1 || dae.b_mat.rows() != n1 || dae.b_mat.cols() != n2 ||
        dae.c_mat.rows() != n2 || dae.c_mat.cols() != n1 || dae.d_mat.cols() != n2)
        throw DimensionMismatch("LinearDae blocks are not (n1,n2)-consistent");
    if (dae.x0.size() != n1) throw DimensionMismatch("x0 length differs from n1");
}

Eigen::Index CombinedSystem::n_diff() const {
    Eigen::Index k = 0;
    for (bool d : diff_mask) k += d ? 1 : 0;
    return k;
}

CombinedSystem combine(const LinearDae& dae) {
    check_dimensions(dae);
    const Eigen::Index n1 = dae.n1();
    const Eigen::Index n2 = dae.n2();
    CombinedSystem sys;
    sys.big_a.setZero(n1 + n2, n1 + n2);
    sys.big_a.topLeftCorner(n1, n1) = dae.a_mat;
    sys.big_a.topRightCorner(n1, n2) = dae.b_mat;
    sys.big_a.bottomLeftCorner(n2, n1) = dae.c_mat;
    sys.big_a.bottomRightCorner(n2, n2) = dae.d_mat;
    sys.diff_mask.assign(static_cast<std::size_t>(n1 + n2), false);
    for (Eigen::Index i = 0; i < n1; ++i) sys.diff_mask[static_cast<std::size_t>(i)] = true;
    ForcingFn f = dae.forcing ? dae.forcing : zero_forcing(n1, n2);
    sys.forcing = [f, n1, n2](double t) {
        ForcingValue v = f(t);
        if (v.b1.size() != n1 || v.b2.size() != n2)
            throw DimensionMismatch("forcing value has wrong block lengths");
        Vector b(n1 + n2);
        b.head(n1) = v.b1;
        b.tail(n2) = v.b2;
        return b;
    };
    return sys;
}

namespace {

/// Solves D y = rhs. A singular D is accepted as long as the system is
/// consistent (index-2 circuits: a derived constraint ties differential
/// variables instead); the minimum-norm solution is returned then.
Vector solve_algebraic(const Matrix& d, const Vector& rhs) {
    LuFactor lu(d);
    if (!lu.singular()) return lu.solve(rhs);
    Eigen::JacobiSVD<Matrix> svd(d, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-12);
    Vector y = svd.solve(rhs);
    const double res = (d * y - rhs).cwiseAbs().maxCoeff();
    if (res > 1e-9 * (1.0 + rhs.cwiseAbs().maxCoeff()))
        throw SingularD("algebraic block singular and constraint inconsistent");
    return y;
}

} // namespace

Vector consistent_y0(const LinearDae& dae) {
    check_dimensions(dae);
    ForcingFn f = dae.forcing ? dae.forcing : zero_forcing(dae.n1(), dae.n2());
    return solve_algebraic(dae.d_mat, f(0.0).b2 - dae.c_mat * dae.x0);
}

Matrix step_matrix(const CombinedSystem& sys, double dt) {
    const Eigen::Index n = sys.size();
    Matrix m = sys.big_a;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (sys.diff_mask[static_cast<std::size_t>(i)]) {
            m.row(i) *= dt;
            m(i, i) += 1.0;
        }
    }
    return m;
}

Vector step_rhs(const CombinedSystem& sys, const Vector& z_prev, double dt, double t) {
    const Eigen::Index n = sys.size();
    Vector b = sys.forcing(t);
    Vector rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        rhs(i) = sys.diff_mask[static_cast<std::size_t>(i)] ? z_prev(i) + dt * b(i) : b(i);
    }
    return rhs;
}

Trajectory monolithic_solve(const CombinedSystem& sys, const Vector& x0, double dt, double t_end) {
    if (dt <= 0.0) throw DimensionMismatch("dt must be positive");
    const Eigen::Index n = sys.size();
    const Eigen::Index n1 = sys.n_diff();
    if (x0.size() != n1) throw InconsistentInitialState("x0 length differs from differential count");

    // Initial algebraic state from the t=0 constraint rows.
    const Eigen::Index n2 = n - n1;
    Vector z0(n);
    z0.head(n1) = x0;
    if (n2 > 0) {
        Matrix d = sys.big_a.bottomRightCorner(n2, n2);
        Vector b0 = sys.forcing(0.0);
        try {
            z0.tail(n2) =
                solve_algebraic(d, Vector(b0.tail(n2) - sys.big_a.bottomLeftCorner(n2, n1) * x0));
        } catch (const SingularD&) {
            throw InconsistentInitialState("x0 admits no algebraic state at t=0");
        }
    }

    LuFactor lu(step_matrix(sys, dt));
    if (lu.singular()) throw SingularStepMatrix("Id + dt*A singular at this dt");

    Trajectory traj;
    traj.dt = dt;
    traj.times.push_back(0.0);
    traj.states.push_back(z0);
    const auto steps = static_cast<Eigen::Index>(std::ceil(t_end / dt - 1e-9));
    for (Eigen::Index k = 1; k <= steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        traj.states.push_back(lu.solve(step_rhs(sys, traj.states.back(), dt, t)));
        traj.times.push_back(t);
    }
    return traj;
}

double be_residual(const CombinedSystem& sys, const Vector& z_old, const Vector& z_new, double dt,
                   double t_new) {
    const Eigen::Index n = sys.size();
    Vector b = sys.forcing(t_new);
    Vector r = sys.big_a * z_new - b;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (sys.diff_mask[static_cast<std::size_t>(i)]) r(i) += (z_new(i) - z_old(i)) / dt;
    }
    return r.cwiseAbs().maxCoeff();
}

double algebraic_residual(const CombinedSystem& sys, const Vector& z, double t) {
    const Eigen::Index n = sys.size();
    Vector b = sys.forcing(t);
    double r = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!sys.diff_mask[static_cast<std::size_t>(i)])
            r = std::max(r, std::abs(sys.big_a.row(i).dot(z) - b(i)));
    }
    return r;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const std::vector<std::string>& var_names) {
    const Eigen::Index n = traj.states.empty() ? 0 : traj.states.front().size();
    os << "t";
    for (Eigen::Index i = 0; i < n; ++i) {
        os << ',';
        if (i < static_cast<Eigen::Index>(var_names.size()))
            os << var_names[static_cast<std::size_t>(i)];
        else
            os << 'z' << i;
    }
    os << '\n';
    char buf[32];
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", traj.times[k]);
        os << buf;
        for (Eigen::Index i = 0; i < n; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", traj.states[k](i));
            os << ',' << buf;
        }
        os << '\n';
    }
}

} // namespace diras
