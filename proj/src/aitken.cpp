#include "diras/aitken.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "diras/errors.hpp"

namespace diras {

InterfaceOperator make_interface_operator(Matrix p, InterfaceOperator::Source source) {
    InterfaceOperator op;
    op.p_mat = std::move(p);
    op.eigs = eigenvalues(op.p_mat);
    op.rho = spectral_radius(op.eigs);
    op.has_unit_eigenvalue = min_distance_to_one(op.eigs) <= kUnitEigTol;
    op.source = source;
    return op;
}

InterfaceOperator analytic_p_two_partitions(const std::vector<LocalSystem>& locals,
                                            const OverlapPartition& part,
                                            const InterfaceMap& gamma) {
    if (part.parts() != 2 || locals.size() != 2)
        throw NotTwoPartitions("analytic P needs exactly two partitions");
    const Eigen::Index ng = gamma.size();
    Matrix p = Matrix::Zero(ng, ng);

    for (std::size_t j = 0; j < 2; ++j) {
        const std::size_t o = 1 - j; // neighbor whose local solve updates W_{j,e}
        const LocalSystem& loc = locals[o];
        if (loc.ext.empty()) continue;
        Matrix x = loc.lu.solve(loc.e_tilde); // At_o^{-1} Et_o
        const Eigen::Index col0 = gamma.block_lo[o];
        for (std::size_t r = 0; r < part.external[j].size(); ++r) {
            const Eigen::Index v = part.external[j][r];
            auto it = std::lower_bound(loc.rows.begin(), loc.rows.end(), v);
            if (it == loc.rows.end() || *it != v)
                throw NotTwoPartitions("external vertex not solved by the neighbor partition");
            const auto pv = static_cast<Eigen::Index>(it - loc.rows.begin());
            p.row(gamma.block_lo[j] + static_cast<Eigen::Index>(r))
                .segment(col0, static_cast<Eigen::Index>(loc.ext.size())) = -x.row(pv);
        }
    }
    return make_interface_operator(std::move(p), InterfaceOperator::Source::analytic);
}

InterfaceOperator numeric_p(const std::vector<Vector>& err_history) {
    if (err_history.empty()) throw RankDeficientHistory("empty error history");
    const Eigen::Index ng = err_history.front().size();
    if (static_cast<Eigen::Index>(err_history.size()) < ng + 1)
        throw RankDeficientHistory("need n_G+1 iterate differences");

    const std::size_t kmax = err_history.size() - 1; // newest difference index
    Matrix e_prev(ng, ng), e_next(ng, ng);
    for (Eigen::Index c = 0; c < ng; ++c) {
        // Newest-first column convention: [e^{K} ... ] = P [e^{K-1} ... ].
        e_next.col(c) = err_history[kmax - static_cast<std::size_t>(c)];
        e_prev.col(c) = err_history[kmax - 1 - static_cast<std::size_t>(c)];
    }

    Eigen::JacobiSVD<Matrix> svd(e_prev, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    const double cutoff = 1e-12 * (sv.size() > 0 ? sv(0) : 0.0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) ++rank;

    // P = E_next * pinv(E_prev); exact when E_prev has full rank.
    Matrix sinv = Matrix::Zero(ng, ng);
    for (Eigen::Index i = 0; i < rank; ++i) sinv(i, i) = 1.0 / sv(i);
    Matrix p = e_next * (svd.matrixV() * sinv * svd.matrixU().transpose());

    InterfaceOperator op = make_interface_operator(std::move(p), InterfaceOperator::Source::numeric);
    op.rank_deficient = rank < ng;
    op.history_rank = rank;
    return op;
}

Vector accelerate(const InterfaceOperator& p, const Vector& zk, const Vector& zkm1) {
    if (p.size() != zk.size() || p.size() != zkm1.size())
        throw DimensionMismatch("accelerate operand sizes");
    if (p.has_unit_eigenvalue)
        throw UnitEigenvalue("1 is an eigenvalue of P within tolerance");
    const Eigen::Index ng = p.size();
    LuFactor lu(Matrix(Matrix::Identity(ng, ng) - p.p_mat));
    if (lu.singular()) throw UnitEigenvalue("I - P numerically singular");
    return lu.solve(Vector(zk - p.p_mat * zkm1));
}

SequentialAccelerator::SequentialAccelerator(const CombinedSystem& sys,
                                             const OverlapPartition& part, double dt)
    : sys_(sys), part_(part), dt_(dt), locals_(build_all_locals(sys, part, dt)) {
    bool any_external = false;
    for (const auto& e : part.external) any_external |= !e.empty();
    if (any_external) gamma_ = interface_map(part);
}

Vector SequentialAccelerator::solve_step(const Vector& z_prev, double t, Mode mode) {
    ++step_index_;
    Vector bt = scaled_rhs(sys_, z_prev, dt_, t);

    if (!gamma_) {
        // Degenerate no-interface path: one local solve is the exact step.
        return di_sweep(locals_, part_, bt, z_prev);
    }
    const Eigen::Index ng = gamma_->size();

    Vector z = z_prev; // warm start
    Vector zg_prev = gamma_->restrict_global(z);
    std::vector<Vector> diffs;
    int iter = 0;

    auto sweep_once = [&] {
        Vector z_new = di_sweep(locals_, part_, bt, z);
        Vector zg_new = gamma_->restrict_global(z_new);
        diffs.push_back(zg_new - zg_prev);
        ++iter;
        const double err = diffs.back().cwiseAbs().maxCoeff();
        const double prev = diffs.size() > 1 ? diffs[diffs.size() - 2].cwiseAbs().maxCoeff() : 0.0;
        log_.push_back({step_index_, iter, err, prev > 0.0 ? err / prev : 0.0});
        zg_prev = zg_new;
        z = std::move(z_new);
    };

    if (mode == Mode::first_step || !op_) {
        for (Eigen::Index k = 0; k < ng + 1; ++k) sweep_once();
        // Extra sweeps recover rank lost to transients; a structurally
        // deficient history (components that never move, e.g. a pinned
        // ground voltage on the interface) stops improving and the
        // minimum-norm operator is kept. The finishing solve below
        // validates it either way.
        InterfaceOperator op = numeric_p(diffs);
        while (op.rank_deficient && static_cast<Eigen::Index>(diffs.size()) < 2 * ng + 1) {
            sweep_once();
            InterfaceOperator refined = numeric_p(diffs);
            const bool stalled = refined.history_rank <= op.history_rank;
            op = std::move(refined);
            if (stalled) break;
        }
        op_ = std::move(op);
    } else {
        sweep_once();
    }

    // zg_prev is zG^(K); reconstruct zG^(K-1) from the last difference.
    Vector zg_k = zg_prev;
    Vector zg_km1 = zg_k - diffs.back();
    Vector zg_inf = accelerate(*op_, zg_k, zg_km1);

    // One more local solve driven by the accelerated interface values. Its
    // interface must reproduce the fixed point; anything else means the
    // operator was built from a defective history.
    Vector z_ext = z;
    for (Eigen::Index k = 0; k < ng; ++k)
        z_ext(gamma_->gamma[static_cast<std::size_t>(k)]) = zg_inf(k);
    Vector z_fin = di_sweep(locals_, part_, bt, z_ext);
    const double drift = (gamma_->restrict_global(z_fin) - zg_inf).cwiseAbs().maxCoeff();
    if (drift > 1e-7 * (1.0 + zg_inf.cwiseAbs().maxCoeff()))
        throw RankDeficientHistory("accelerated interface is not a fixed point");
    return z_fin;
}

AcceleratedResult solve_accelerated(const CombinedSystem& sys, const OverlapPartition& part,
                                    const Vector& x0, double dt, double t_end) {
    Trajectory init = monolithic_solve(sys, x0, dt, 0.0);
    SequentialAccelerator engine(sys, part, dt);

    AcceleratedResult res;
    res.traj.dt = dt;
    res.traj.times.push_back(0.0);
    res.traj.states.push_back(init.states.front());

    const auto steps = static_cast<Eigen::Index>(std::ceil(t_end / dt - 1e-9));
    for (Eigen::Index k = 1; k <= steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const auto mode = engine.has_operator() ? SequentialAccelerator::Mode::reuse_p
                                                : SequentialAccelerator::Mode::first_step;
        res.traj.states.push_back(engine.solve_step(res.traj.states.back(), t, mode));
        res.traj.times.push_back(t);
    }
    if (engine.has_operator()) res.op = engine.op();
    res.log = engine.log();
    return res;
}

Matrix PipelineOperator::full() const {
    Matrix big = Matrix::Zero(m * ng, m * ng);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(lag_blocks.size()); ++a) {
            if (j - a < 0) break;
            big.block(j * ng, (j - a) * ng, ng, ng) = lag_blocks[static_cast<std::size_t>(a)];
        }
    }
    return big;
}

std::vector<Matrix> probe_lag_blocks(const CombinedSystem& sys, const OverlapPartition& part,
                                     const InterfaceMap& gamma, double dt, Eigen::Index m) {
    const Eigen::Index n = sys.size();
    Matrix minv = ras_preconditioner(sys, part, dt);
    Matrix t_full = Matrix::Identity(n, n) - minv * step_matrix(sys, dt);
    Matrix rg = materialize(gamma, n);

    // S maps a step's differential state into the next step's update.
    Matrix s = minv;
    for (Eigen::Index c = 0; c < n; ++c)
        if (!sys.diff_mask[static_cast<std::size_t>(c)]) s.col(c).setZero();

    std::vector<Matrix> lags;
    Matrix acc = t_full * rg.transpose(); // S^0 T R_G^T
    for (Eigen::Index a = 1; a < m; ++a) {
        acc = s * acc;
        lags.push_back(rg * acc);
    }
    return lags;
}

PipelineOperator build_pipeline(const InterfaceOperator& p, Eigen::Index m,
                                const std::vector<Matrix>& lag_blocks) {
    if (m < 1) throw DimensionMismatch("pipeline window must have m >= 1");
    PipelineOperator pl;
    pl.m = m;
    pl.ng = p.size();
    pl.lag_blocks.push_back(p.p_mat);
    for (const Matrix& b : lag_blocks) {
        if (b.rows() != pl.ng || b.cols() != pl.ng)
            throw DimensionMismatch("lag block dimensions");
        if (static_cast<Eigen::Index>(pl.lag_blocks.size()) >= m) break;
        pl.lag_blocks.push_back(b);
    }
    return pl;
}

std::vector<Vector> pipeline_sweep(const std::vector<LocalSystem>& locals,
                                   const OverlapPartition& part, const CombinedSystem& sys,
                                   const Vector& x_window_start,
                                   const std::vector<double>& step_times,
                                   const std::vector<Vector>& window_iter, double dt) {
    std::vector<Vector> next;
    next.reserve(window_iter.size());
    Vector x_prev = x_window_start; // full previous state (differential part used)
    for (std::size_t j = 0; j < window_iter.size(); ++j) {
        Vector bt = scaled_rhs(sys, x_prev, dt, step_times[j]);
        next.push_back(di_sweep(locals, part, bt, window_iter[j]));
        x_prev = next.back();
    }
    return next;
}

AcceleratedResult solve_pipelined(const CombinedSystem& sys, const OverlapPartition& part,
                                  const Vector& x0, double dt, double t_end, Eigen::Index m) {
    if (m < 1) throw DimensionMismatch("pipeline window must have m >= 1");
    Trajectory init = monolithic_solve(sys, x0, dt, 0.0);
    auto locals = build_all_locals(sys, part, dt);
    InterfaceMap gamma = interface_map(part);
    const Eigen::Index ng = gamma.size();

    // Window operator: diagonal P and the deeper lag couplings, all probed
    // from the dense step map.
    Matrix rg = materialize(gamma, sys.size());
    Matrix t_full = richardson_matrix(sys, part, dt);
    InterfaceOperator p = make_interface_operator(Matrix(rg * t_full * rg.transpose()),
                                                  InterfaceOperator::Source::analytic);
    PipelineOperator pl = build_pipeline(p, m, probe_lag_blocks(sys, part, gamma, dt, m));
    Matrix big = pl.full();
    InterfaceOperator pbig = make_interface_operator(std::move(big),
                                                     InterfaceOperator::Source::analytic);

    AcceleratedResult res;
    res.traj.dt = dt;
    res.traj.times.push_back(0.0);
    res.traj.states.push_back(init.states.front());
    res.op = p;

    const auto steps = static_cast<Eigen::Index>(std::ceil(t_end / dt - 1e-9));
    Eigen::Index done = 0;
    while (done < steps) {
        const Eigen::Index mw = std::min<Eigen::Index>(m, steps - done);
        std::vector<double> times;
        for (Eigen::Index j = 1; j <= mw; ++j)
            times.push_back(static_cast<double>(done + j) * dt);
        const Vector z_start = res.traj.states.back();

        std::vector<Vector> w0(static_cast<std::size_t>(mw), z_start);
        std::vector<Vector> w1 = pipeline_sweep(locals, part, sys, z_start, times, w0, dt);

        Vector zg0(mw * ng), zg1(mw * ng);
        for (Eigen::Index j = 0; j < mw; ++j) {
            zg0.segment(j * ng, ng) = gamma.restrict_global(w0[static_cast<std::size_t>(j)]);
            zg1.segment(j * ng, ng) = gamma.restrict_global(w1[static_cast<std::size_t>(j)]);
        }

        InterfaceOperator pwin = pbig;
        if (mw != m) {
            PipelineOperator plw = build_pipeline(p, mw, pl.lag_blocks.size() > 1
                                                             ? std::vector<Matrix>(pl.lag_blocks.begin() + 1,
                                                                                   pl.lag_blocks.end())
                                                             : std::vector<Matrix>{});
            pwin = make_interface_operator(plw.full(), InterfaceOperator::Source::analytic);
        }
        Vector zg_inf = accelerate(pwin, zg1, zg0);

        // Finishing local solves, stepping through the window in order.
        Vector x_prev = z_start;
        for (Eigen::Index j = 0; j < mw; ++j) {
            Vector z_ext = w1[static_cast<std::size_t>(j)];
            for (Eigen::Index k = 0; k < ng; ++k)
                z_ext(gamma.gamma[static_cast<std::size_t>(k)]) = zg_inf(j * ng + k);
            Vector bt = scaled_rhs(sys, x_prev, dt, times[static_cast<std::size_t>(j)]);
            Vector z = di_sweep(locals, part, bt, z_ext);
            res.traj.states.push_back(z);
            res.traj.times.push_back(times[static_cast<std::size_t>(j)]);
            x_prev = std::move(z);
        }
        done += mw;
    }
    return res;
}

SpectralReport spectral_report(const InterfaceOperator& p, std::optional<double> dt,
                               std::optional<double> dt0_closed_form) {
    SpectralReport rep;
    rep.eigs = p.eigs;
    rep.rho = p.rho;
    rep.has_unit_eigenvalue = p.has_unit_eigenvalue;
    rep.dt = dt;
    rep.dt0 = dt0_closed_form;
    if (std::abs(rep.rho - 1.0) <= kUnitEigTol)
        rep.classification = "stagnates";
    else
        rep.classification = rep.rho < 1.0 ? "converges" : "diverges";
    return rep;
}

namespace {

nlohmann::json report_json(const SpectralReport& rep) {
    nlohmann::json j;
    auto& eig = j["eigenvalues"];
    eig = nlohmann::json::array();
    for (const auto& l : rep.eigs) eig.push_back({{"re", l.real()}, {"im", l.imag()}});
    j["rho"] = rep.rho;
    j["has_unit_eigenvalue"] = rep.has_unit_eigenvalue;
    j["classification"] = rep.classification;
    if (rep.dt) j["dt"] = *rep.dt;
    if (rep.dt0) j["dt0"] = *rep.dt0;
    return j;
}

} // namespace

void write_spectral_json(std::ostream& os, const SpectralReport& rep) {
    os << report_json(rep).dump(2) << '\n';
}

void write_spectral_json(std::ostream& os, const std::vector<SpectralReport>& reps) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : reps) j.push_back(report_json(r));
    os << j.dump(2) << '\n';
}

} // namespace diras
