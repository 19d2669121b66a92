#include "diras/ras.hpp"

#include <cstdio>
#include <ostream>

#include "diras/errors.hpp"

namespace diras {

namespace {

Matrix scaled_step_rows(const CombinedSystem& sys, double dt, const IndexSet& rows,
                        const IndexSet& cols) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Eigen::Index gr = rows[r];
        const bool diff = sys.diff_mask[static_cast<std::size_t>(gr)];
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const Eigen::Index gc = cols[c];
            double v = sys.big_a(gr, gc) * (diff ? dt : 1.0);
            if (diff && gr == gc) v += 1.0;
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
        }
    }
    return m;
}

} // namespace

LocalSystem build_local(const CombinedSystem& sys, const OverlapPartition& part, double dt,
                        std::size_t i) {
    if (dt <= 0.0) throw DimensionMismatch("dt must be positive");
    LocalSystem loc;
    loc.part_id = i;
    loc.dt = dt;
    loc.rows = part.extended[i];
    loc.ext = part.external[i];
    loc.a_tilde = scaled_step_rows(sys, dt, loc.rows, loc.rows);
    loc.e_tilde = scaled_step_rows(sys, dt, loc.rows, loc.ext);
    loc.lu = LuFactor(loc.a_tilde);
    if (loc.lu.singular())
        throw SingularLocalMatrix("partition " + std::to_string(i) + " local step matrix");
    loc.row_is_diff.reserve(loc.rows.size());
    for (Eigen::Index g : loc.rows)
        loc.row_is_diff.push_back(part.diff_mask[static_cast<std::size_t>(g)]);
    return loc;
}

std::vector<LocalSystem> build_all_locals(const CombinedSystem& sys, const OverlapPartition& part,
                                          double dt) {
    std::vector<LocalSystem> locals;
    locals.reserve(part.parts());
    for (std::size_t i = 0; i < part.parts(); ++i) locals.push_back(build_local(sys, part, dt, i));
    return locals;
}

Vector scaled_rhs(const CombinedSystem& sys, const Vector& z_prev_step, double dt, double t) {
    const Eigen::Index n = sys.size();
    Vector b = sys.forcing(t);
    Vector rhs(n);
    for (Eigen::Index g = 0; g < n; ++g) {
        rhs(g) = sys.diff_mask[static_cast<std::size_t>(g)] ? z_prev_step(g) + dt * b(g) : b(g);
    }
    return rhs;
}

Vector di_sweep(const std::vector<LocalSystem>& locals, const OverlapPartition& part,
                const Vector& bt, const Vector& z_iter) {
    Vector z_next = Vector::Zero(part.n);
    for (const LocalSystem& loc : locals) {
        Vector rhs(static_cast<Eigen::Index>(loc.rows.size()));
        for (std::size_t r = 0; r < loc.rows.size(); ++r)
            rhs(static_cast<Eigen::Index>(r)) = bt(loc.rows[r]);
        if (!loc.ext.empty()) {
            Vector ze(static_cast<Eigen::Index>(loc.ext.size()));
            for (std::size_t c = 0; c < loc.ext.size(); ++c)
                ze(static_cast<Eigen::Index>(c)) = z_iter(loc.ext[c]);
            rhs -= loc.e_tilde * ze;
        }
        Vector zi = loc.lu.solve(rhs);
        const auto& pos = part.base_pos_in_extended[loc.part_id];
        const auto& base = part.base[loc.part_id];
        for (std::size_t k = 0; k < base.size(); ++k) z_next(base[k]) = zi(pos[k]);
    }
    return z_next;
}

Matrix ras_preconditioner(const CombinedSystem& sys, const OverlapPartition& part, double dt) {
    const Eigen::Index n = sys.size();
    auto locals = build_all_locals(sys, part, dt);
    Matrix minv = Matrix::Zero(n, n);
    for (const LocalSystem& loc : locals) {
        // Columns of At_i^{-1} R_i^p, prolonged through Rt_i^{0T}.
        Matrix ri = Matrix::Zero(static_cast<Eigen::Index>(loc.rows.size()), n);
        for (std::size_t r = 0; r < loc.rows.size(); ++r)
            ri(static_cast<Eigen::Index>(r), loc.rows[r]) = 1.0;
        Matrix x = loc.lu.solve(ri);
        const auto& pos = part.base_pos_in_extended[loc.part_id];
        const auto& base = part.base[loc.part_id];
        for (std::size_t k = 0; k < base.size(); ++k) minv.row(base[k]) += x.row(pos[k]);
    }
    return minv;
}

Matrix richardson_matrix(const CombinedSystem& sys, const OverlapPartition& part, double dt) {
    const Eigen::Index n = sys.size();
    Matrix at = step_matrix(sys, dt);
    return Matrix::Identity(n, n) - ras_preconditioner(sys, part, dt) * at;
}

Vector interface_iterate(const Matrix& p_mat, const Vector& zg, const Vector& c) {
    if (p_mat.rows() != zg.size() || p_mat.cols() != zg.size() || c.size() != zg.size())
        throw DimensionMismatch("interface iterate dimensions");
    return p_mat * zg + c;
}

DiResult di_solve(const CombinedSystem& sys, const OverlapPartition& part, const Vector& x0,
                  double dt, double t_end, const DiOptions& opt) {
    auto locals = build_all_locals(sys, part, dt);

    // Consistent initial state via the monolithic initializer.
    Trajectory mono = monolithic_solve(sys, x0, dt, 0.0);
    DiResult res;
    res.traj.dt = dt;
    res.traj.times.push_back(0.0);
    res.traj.states.push_back(mono.states.front());

    const auto steps = static_cast<Eigen::Index>(std::ceil(t_end / dt - 1e-9));
    for (Eigen::Index kstep = 1; kstep <= steps; ++kstep) {
        const double t = static_cast<double>(kstep) * dt;
        const Vector& z_prev = res.traj.states.back();
        Vector bt = scaled_rhs(sys, z_prev, dt, t);
        Vector z = z_prev; // warm start
        double prev_err = 0.0;
        bool ok = false;
        for (int it = 1; it <= opt.max_iter; ++it) {
            Vector z_new = di_sweep(locals, part, bt, z);
            const double err = (z_new - z).cwiseAbs().maxCoeff();
            res.log.push_back({kstep, it, err, it > 1 && prev_err > 0.0 ? err / prev_err : 0.0});
            prev_err = err;
            z = std::move(z_new);
            if (err <= opt.rtol * z.cwiseAbs().maxCoeff() + opt.atol) {
                ok = true;
                break;
            }
        }
        if (!ok) res.converged = false;
        res.traj.states.push_back(z);
        res.traj.times.push_back(t);
    }
    return res;
}

void write_convergence_csv(std::ostream& os, const std::vector<DiIterRecord>& log) {
    os << "step,iter,err_inf,err_ratio\n";
    char buf[32];
    for (const auto& r : log) {
        os << r.step << ',' << r.iter << ',';
        std::snprintf(buf, sizeof buf, "%.17g", r.err_inf);
        os << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", r.err_ratio);
        os << buf << '\n';
    }
}

} // namespace diras
