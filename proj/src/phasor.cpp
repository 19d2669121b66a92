#include "diras/phasor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "diras/errors.hpp"

namespace diras {

double PhasorConfig::period() const { return 2.0 * std::numbers::pi / omega0; }

Eigen::Index PhasorConfig::period_samples() const {
    if (omega0 <= 0.0 || dt_emt <= 0.0 || m < 1)
        throw BadPhasorConfig("need omega0 > 0, dt_emt > 0, m >= 1");
    const double t = period();
    const double ratio = t / dt_emt;
    const auto n = static_cast<Eigen::Index>(std::llround(ratio));
    if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio)
        throw BadPhasorConfig("period is not an integer multiple of dt_emt");
    if (m > n) throw BadPhasorConfig("dt_ts exceeds one period");
    return n;
}

PhasorState f_mod(const EmtHistory& hist, const PhasorConfig& cfg) {
    const Eigen::Index n = cfg.period_samples();
    if (static_cast<Eigen::Index>(hist.samples.size()) != n)
        throw HistoryNotFull("history holds " + std::to_string(hist.samples.size()) +
                             " samples, need " + std::to_string(n));
    const Eigen::Index nvars = hist.samples.front().size();
    PhasorState ph = PhasorState::Zero(nvars, cfg.mode_count());
    for (Eigen::Index j = 0; j < n; ++j) {
        const double tj = hist.end_time - static_cast<double>(n - 1 - j) * hist.dt;
        const Vector& s = hist.samples[static_cast<std::size_t>(j)];
        for (Eigen::Index mi = 0; mi < cfg.mode_count(); ++mi) {
            const double k = static_cast<double>(cfg.modes[static_cast<std::size_t>(mi)]);
            const Complex w = std::polar(1.0 / static_cast<double>(n), -k * cfg.omega0 * tj);
            for (Eigen::Index v = 0; v < nvars; ++v) ph(v, mi) += s(v) * w;
        }
    }
    return ph;
}

Vector r_mod(const PhasorState& ph, const PhasorConfig& cfg, double t) {
    Vector out = Vector::Zero(ph.rows());
    for (Eigen::Index mi = 0; mi < cfg.mode_count(); ++mi) {
        const double k = static_cast<double>(cfg.modes[static_cast<std::size_t>(mi)]);
        const Complex w = std::polar(1.0, k * cfg.omega0 * t);
        for (Eigen::Index v = 0; v < ph.rows(); ++v) out(v) += (ph(v, mi) * w).real();
    }
    return out;
}

LinearDae ts_dae(const LinearDae& sub, const PhasorConfig& cfg, const ModeForcing& forcing) {
    check_dimensions(sub);
    const Eigen::Index n1 = sub.n1();
    const Eigen::Index n2 = sub.n2();
    const Eigen::Index q = cfg.mode_count();

    LinearDae out;
    out.a_mat = Matrix::Zero(2 * q * n1, 2 * q * n1);
    out.b_mat = Matrix::Zero(2 * q * n1, 2 * q * n2);
    out.c_mat = Matrix::Zero(2 * q * n2, 2 * q * n1);
    out.d_mat = Matrix::Zero(2 * q * n2, 2 * q * n2);
    out.x0 = Vector::Zero(2 * q * n1);

    for (Eigen::Index mi = 0; mi < q; ++mi) {
        const double k = static_cast<double>(cfg.modes[static_cast<std::size_t>(mi)]);
        const double w = k * cfg.omega0;
        const Eigen::Index od = 2 * n1 * mi; // differential offset (re block)
        const Eigen::Index oa = 2 * n2 * mi; // algebraic offset
        out.a_mat.block(od, od, n1, n1) = sub.a_mat;
        out.a_mat.block(od + n1, od + n1, n1, n1) = sub.a_mat;
        out.a_mat.block(od, od + n1, n1, n1) -= w * Matrix::Identity(n1, n1);
        out.a_mat.block(od + n1, od, n1, n1) += w * Matrix::Identity(n1, n1);
        out.b_mat.block(od, oa, n1, n2) = sub.b_mat;
        out.b_mat.block(od + n1, oa + n2, n1, n2) = sub.b_mat;
        out.c_mat.block(oa, od, n2, n1) = sub.c_mat;
        out.c_mat.block(oa + n2, od + n1, n2, n1) = sub.c_mat;
        out.d_mat.block(oa, oa, n2, n2) = sub.d_mat;
        out.d_mat.block(oa + n2, oa + n2, n2, n2) = sub.d_mat;
    }

    std::vector<int> modes = cfg.modes;
    out.forcing = [forcing, modes, n1, n2, q](double t) {
        ForcingValue f{Vector::Zero(2 * q * n1), Vector::Zero(2 * q * n2)};
        if (forcing) {
            for (Eigen::Index mi = 0; mi < q; ++mi) {
                Eigen::VectorXcd bk = forcing(t, modes[static_cast<std::size_t>(mi)]);
                if (bk.size() != n1 + n2)
                    throw DimensionMismatch("mode forcing must have length n1+n2");
                f.b1.segment(2 * n1 * mi, n1) = bk.head(n1).real();
                f.b1.segment(2 * n1 * mi + n1, n1) = bk.head(n1).imag();
                f.b2.segment(2 * n2 * mi, n2) = bk.tail(n2).real();
                f.b2.segment(2 * n2 * mi + n2, n2) = bk.tail(n2).imag();
            }
        }
        return f;
    };
    return out;
}

namespace {

std::vector<Eigen::Index> positions_in(const IndexSet& subset, const IndexSet& within,
                                       const char* what) {
    std::vector<Eigen::Index> pos;
    pos.reserve(subset.size());
    for (Eigen::Index v : subset) {
        auto it = std::lower_bound(within.begin(), within.end(), v);
        if (it == within.end() || *it != v)
            throw BadPhasorConfig(std::string("partition layout: ") + what);
        pos.push_back(static_cast<Eigen::Index>(it - within.begin()));
    }
    return pos;
}

} // namespace

MultirateEngine::MultirateEngine(const CombinedSystem& sys, const OverlapPartition& part,
                                 const PhasorConfig& cfg, const Vector& x0, std::size_t ts_part)
    : sys_(sys), part_(part), cfg_(cfg), ts_part_(ts_part), emt_part_(1 - ts_part),
      emt_loc_(build_local(sys, part, cfg.dt_emt, 1 - ts_part)) {
    if (part.parts() != 2) throw NotTwoPartitions("multirate engine needs two partitions");
    cfg_.period_samples(); // validates the grid

    LocalSystem ts_loc = build_local(sys, part, cfg_.dt_ts(), ts_part_);
    ts_rows_ = ts_loc.rows;
    w1e_ = part.external[ts_part_];
    w0e_ = part.external[emt_part_];
    w1e_pos_in_emt_ = positions_in(w1e_, emt_loc_.rows, "TS externals not inside the EMT block");
    w0e_pos_in_ts_ = positions_in(w0e_, ts_rows_, "EMT externals not inside the TS block");

    // Stacked phasor step matrix: one re/im pair per retained mode, with the
    // k*w0 frequency shift coupling the pair on differential rows.
    const Eigen::Index q = cfg_.mode_count();
    nloc_ts_ = static_cast<Eigen::Index>(ts_rows_.size());
    const auto ne = static_cast<Eigen::Index>(w1e_.size());
    ts_at_ = Matrix::Zero(2 * q * nloc_ts_, 2 * q * nloc_ts_);
    ts_et_ = Matrix::Zero(2 * q * nloc_ts_, 2 * q * ne);
    for (Eigen::Index mi = 0; mi < q; ++mi) {
        const double w = static_cast<double>(cfg_.modes[static_cast<std::size_t>(mi)]) * cfg_.omega0;
        const Eigen::Index o = 2 * nloc_ts_ * mi;
        const Eigen::Index oc = 2 * ne * mi;
        ts_at_.block(o, o, nloc_ts_, nloc_ts_) = ts_loc.a_tilde;
        ts_at_.block(o + nloc_ts_, o + nloc_ts_, nloc_ts_, nloc_ts_) = ts_loc.a_tilde;
        for (Eigen::Index r = 0; r < nloc_ts_; ++r) {
            if (!ts_loc.row_is_diff[static_cast<std::size_t>(r)]) continue;
            ts_at_(o + r, o + nloc_ts_ + r) -= w * cfg_.dt_ts();
            ts_at_(o + nloc_ts_ + r, o + r) += w * cfg_.dt_ts();
        }
        ts_et_.block(o, oc, nloc_ts_, ne) = ts_loc.e_tilde;
        ts_et_.block(o + nloc_ts_, oc + ne, nloc_ts_, ne) = ts_loc.e_tilde;
    }
    ts_lu_ = LuFactor(ts_at_);
    if (ts_lu_.singular()) throw SingularLocalMatrix("stacked phasor step matrix");

    // Independent real coordinates of a conjugate-symmetric mode set.
    for (Eigen::Index mi = 0; mi < q; ++mi) {
        const int k = cfg_.modes[static_cast<std::size_t>(mi)];
        if (k == 0) {
            reduced_layout_.emplace_back(static_cast<int>(mi), 0);
        } else if (k > 0) {
            reduced_layout_.emplace_back(static_cast<int>(mi), 0);
            reduced_layout_.emplace_back(static_cast<int>(mi), 1);
        } else if (std::find(cfg_.modes.begin(), cfg_.modes.end(), -k) == cfg_.modes.end()) {
            reduced_layout_.emplace_back(static_cast<int>(mi), 0);
            reduced_layout_.emplace_back(static_cast<int>(mi), 1);
        }
    }
    reduced_dim_ = static_cast<Eigen::Index>(w0e_.size() * reduced_layout_.size());

    // Consistent initial global state; phasors seeded on mode 0, history constant.
    Trajectory init = monolithic_solve(sys, x0, cfg_.dt_emt, 0.0);
    z_accepted_ = init.states.front();
    ts_stack_accepted_ = Vector::Zero(2 * q * nloc_ts_);
    for (Eigen::Index mi = 0; mi < q; ++mi) {
        if (cfg_.modes[static_cast<std::size_t>(mi)] != 0) continue;
        for (Eigen::Index r = 0; r < nloc_ts_; ++r)
            ts_stack_accepted_(2 * nloc_ts_ * mi + r) = z_accepted_(ts_rows_[static_cast<std::size_t>(r)]);
    }
    Vector sample(static_cast<Eigen::Index>(w1e_.size()));
    for (std::size_t k = 0; k < w1e_.size(); ++k) sample(static_cast<Eigen::Index>(k)) = z_accepted_(w1e_[k]);
    history_.assign(static_cast<std::size_t>(cfg_.period_samples()), sample);
}

MultirateEngine::Iterate MultirateEngine::initial_iterate() const {
    Iterate it;
    it.ts_stack = ts_stack_accepted_;
    Vector z_loc(static_cast<Eigen::Index>(emt_loc_.rows.size()));
    for (std::size_t r = 0; r < emt_loc_.rows.size(); ++r)
        z_loc(static_cast<Eigen::Index>(r)) = z_accepted_(emt_loc_.rows[r]);
    it.emt_states.assign(static_cast<std::size_t>(cfg_.m), z_loc);
    return it;
}

std::vector<Vector> MultirateEngine::merged_history(const std::vector<Vector>& emt_states) const {
    const auto n = static_cast<std::size_t>(cfg_.period_samples());
    const auto m = static_cast<std::size_t>(cfg_.m);
    std::vector<Vector> hist;
    hist.reserve(n);
    // Accepted samples on (t_{n+1}-T, t_n], then the window's m trial samples.
    for (std::size_t j = m; j < n; ++j) hist.push_back(history_[j]);
    for (std::size_t s = 0; s < m; ++s) {
        Vector smp(static_cast<Eigen::Index>(w1e_.size()));
        for (std::size_t k = 0; k < w1e_.size(); ++k)
            smp(static_cast<Eigen::Index>(k)) = emt_states[s](w1e_pos_in_emt_[k]);
        hist.push_back(std::move(smp));
    }
    return hist;
}

Vector MultirateEngine::ts_solve(const std::vector<Vector>& history_samples, double t_new) const {
    PhasorState ext = f_mod({history_samples, t_new, cfg_.dt_emt}, cfg_);
    const Eigen::Index q = cfg_.mode_count();
    const auto ne = static_cast<Eigen::Index>(w1e_.size());
    Vector ext_stack(2 * q * ne);
    for (Eigen::Index mi = 0; mi < q; ++mi) {
        for (Eigen::Index v = 0; v < ne; ++v) {
            ext_stack(2 * ne * mi + v) = ext(v, mi).real();
            ext_stack(2 * ne * mi + ne + v) = ext(v, mi).imag();
        }
    }

    Vector rhs = Vector::Zero(2 * q * nloc_ts_);
    const Vector b = sys_.forcing(t_new);
    for (Eigen::Index mi = 0; mi < q; ++mi) {
        const bool dc = cfg_.modes[static_cast<std::size_t>(mi)] == 0;
        const Eigen::Index o = 2 * nloc_ts_ * mi;
        for (Eigen::Index r = 0; r < nloc_ts_; ++r) {
            const Eigen::Index g = ts_rows_[static_cast<std::size_t>(r)];
            const bool diff = sys_.diff_mask[static_cast<std::size_t>(g)];
            double v_re = diff ? ts_stack_accepted_(o + r) : 0.0;
            const double v_im = diff ? ts_stack_accepted_(o + nloc_ts_ + r) : 0.0;
            // Any forcing on TS rows is carried on the DC mode, held over the step.
            if (dc) v_re += diff ? cfg_.dt_ts() * b(g) : b(g);
            rhs(o + r) = v_re;
            rhs(o + nloc_ts_ + r) = v_im;
        }
    }
    rhs -= ts_et_ * ext_stack;
    return ts_lu_.solve(rhs);
}

std::vector<Vector> MultirateEngine::emt_chain(const PhasorState& ifc_new,
                                               const PhasorState& ifc_old) const {
    Vector z_loc(static_cast<Eigen::Index>(emt_loc_.rows.size()));
    for (std::size_t r = 0; r < emt_loc_.rows.size(); ++r)
        z_loc(static_cast<Eigen::Index>(r)) = z_accepted_(emt_loc_.rows[r]);

    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(cfg_.m));
    for (Eigen::Index s = 1; s <= cfg_.m; ++s) {
        const double ts = t_ + static_cast<double>(s) * cfg_.dt_emt;
        PhasorState ph = ifc_new;
        if (cfg_.interp_linear) {
            const double a = static_cast<double>(s) / static_cast<double>(cfg_.m);
            ph = ifc_old + a * (ifc_new - ifc_old);
        }
        const Vector ext = r_mod(ph, cfg_, ts);
        const Vector b = sys_.forcing(ts);
        Vector rhs(static_cast<Eigen::Index>(emt_loc_.rows.size()));
        for (std::size_t r = 0; r < emt_loc_.rows.size(); ++r) {
            const Eigen::Index g = emt_loc_.rows[r];
            rhs(static_cast<Eigen::Index>(r)) =
                sys_.diff_mask[static_cast<std::size_t>(g)]
                    ? z_loc(static_cast<Eigen::Index>(r)) + cfg_.dt_emt * b(g)
                    : b(g);
        }
        rhs -= emt_loc_.e_tilde * ext;
        z_loc = emt_loc_.lu.solve(rhs);
        out.push_back(z_loc);
    }
    return out;
}

PhasorState MultirateEngine::ts_phasors(const Vector& ts_stack,
                                        const std::vector<Eigen::Index>& pos) const {
    PhasorState ph(static_cast<Eigen::Index>(pos.size()), cfg_.mode_count());
    for (Eigen::Index mi = 0; mi < cfg_.mode_count(); ++mi) {
        const Eigen::Index o = 2 * nloc_ts_ * mi;
        for (std::size_t v = 0; v < pos.size(); ++v)
            ph(static_cast<Eigen::Index>(v), mi) =
                Complex{ts_stack(o + pos[v]), ts_stack(o + nloc_ts_ + pos[v])};
    }
    return ph;
}

std::vector<Eigen::Index> MultirateEngine::all_ts_pos() const {
    std::vector<Eigen::Index> pos(static_cast<std::size_t>(nloc_ts_));
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<Eigen::Index>(i);
    return pos;
}

MultirateEngine::Iterate MultirateEngine::sweep(const Iterate& it) const {
    Iterate next;
    next.ts_stack = ts_solve(merged_history(it.emt_states), t_ + cfg_.dt_ts());
    const PhasorState ifc_new = ts_phasors(next.ts_stack, w0e_pos_in_ts_);
    const PhasorState ifc_old = ts_phasors(ts_stack_accepted_, w0e_pos_in_ts_);
    next.emt_states = emt_chain(ifc_new, ifc_old);
    return next;
}

Vector MultirateEngine::reduce(const PhasorState& ph) const {
    Vector out(static_cast<Eigen::Index>(ph.rows() * static_cast<Eigen::Index>(reduced_layout_.size())));
    Eigen::Index k = 0;
    for (Eigen::Index v = 0; v < ph.rows(); ++v) {
        for (const auto& [mi, comp] : reduced_layout_) {
            const Complex z = ph(v, mi);
            out(k++) = comp == 0 ? z.real() : z.imag();
        }
    }
    return out;
}

PhasorState MultirateEngine::expand(const Vector& reduced, Eigen::Index nvars) const {
    PhasorState ph = PhasorState::Zero(nvars, cfg_.mode_count());
    Eigen::Index k = 0;
    for (Eigen::Index v = 0; v < nvars; ++v) {
        for (const auto& [mi, comp] : reduced_layout_) {
            Complex& z = ph(v, mi);
            z = comp == 0 ? Complex{reduced(k), z.imag()} : Complex{z.real(), reduced(k)};
            ++k;
        }
    }
    // Conjugate partners of the retained positive modes.
    for (Eigen::Index mi = 0; mi < cfg_.mode_count(); ++mi) {
        const int kk = cfg_.modes[static_cast<std::size_t>(mi)];
        if (kk >= 0) continue;
        auto it = std::find(cfg_.modes.begin(), cfg_.modes.end(), -kk);
        if (it == cfg_.modes.end()) continue;
        const auto pj = static_cast<Eigen::Index>(it - cfg_.modes.begin());
        for (Eigen::Index v = 0; v < nvars; ++v) ph(v, mi) = std::conj(ph(v, pj));
    }
    return ph;
}

Vector MultirateEngine::ts_interface_reduced(const Iterate& it) const {
    return reduce(ts_phasors(it.ts_stack, w0e_pos_in_ts_));
}

MultirateEngine::StepInfo MultirateEngine::step_accelerated() {
    StepInfo info;
    Iterate it = initial_iterate();
    std::vector<Vector> reds{ts_interface_reduced(it)};
    auto one_sweep = [&] {
        it = sweep(it);
        reds.push_back(ts_interface_reduced(it));
        ++info.sweeps;
    };

    if (!p_ts_) {
        for (Eigen::Index k = 0; k < reduced_dim_ + 1; ++k) one_sweep();
        std::vector<Vector> diffs;
        for (std::size_t k = 1; k < reds.size(); ++k) diffs.push_back(reds[k] - reds[k - 1]);
        // As in the homogeneous engine: extra sweeps only while they still
        // raise the history rank, then keep the minimum-norm operator.
        InterfaceOperator op = numeric_p(diffs);
        while (op.rank_deficient &&
               static_cast<Eigen::Index>(diffs.size()) < 2 * reduced_dim_ + 1) {
            one_sweep();
            diffs.push_back(reds[reds.size() - 1] - reds[reds.size() - 2]);
            InterfaceOperator refined = numeric_p(diffs);
            const bool stalled = refined.history_rank <= op.history_rank;
            op = std::move(refined);
            if (stalled) break;
        }
        p_ts_ = std::move(op);
    } else {
        one_sweep();
    }
    info.rho = p_ts_->rho;

    Vector r_inf = accelerate(*p_ts_, reds[reds.size() - 1], reds[reds.size() - 2]);
    PhasorState ifc_inf = expand(r_inf, static_cast<Eigen::Index>(w0e_.size()));
    const PhasorState ifc_old = ts_phasors(ts_stack_accepted_, w0e_pos_in_ts_);

    // Finishing resolves: EMT on the accelerated interface, then TS on the
    // resulting history.
    std::vector<Vector> emt_fin = emt_chain(ifc_inf, ifc_old);
    const double t_new = t_ + cfg_.dt_ts();
    Vector ts_fin = ts_solve(merged_history(emt_fin), t_new);
    info.stationarity =
        (reduce(ts_phasors(ts_fin, w0e_pos_in_ts_)) - r_inf).cwiseAbs().maxCoeff();

    // Accept: history window, traces and the global state at the boundary.
    for (std::size_t s = 0; s < emt_fin.size(); ++s) {
        Vector smp(static_cast<Eigen::Index>(w1e_.size()));
        for (std::size_t k = 0; k < w1e_.size(); ++k)
            smp(static_cast<Eigen::Index>(k)) = emt_fin[s](w1e_pos_in_emt_[k]);
        history_.push_back(std::move(smp));
        history_.pop_front();
        emt_trace_.emplace_back(t_ + static_cast<double>(s + 1) * cfg_.dt_emt, emt_fin[s]);
    }
    t_ = t_new;
    ts_stack_accepted_ = std::move(ts_fin);

    const PhasorState ts_all = ts_phasors(ts_stack_accepted_, all_ts_pos());
    ts_trace_.emplace_back(t_, ts_all);
    const Vector ts_vals = r_mod(ts_all, cfg_, t_);
    const auto& base_ts = part_.base[ts_part_];
    const auto& base_emt = part_.base[emt_part_];
    for (std::size_t k = 0; k < base_emt.size(); ++k)
        z_accepted_(base_emt[k]) = emt_fin.back()(part_.base_pos_in_extended[emt_part_][k]);
    for (std::size_t k = 0; k < base_ts.size(); ++k) {
        auto itr = std::lower_bound(ts_rows_.begin(), ts_rows_.end(), base_ts[k]);
        z_accepted_(base_ts[k]) = ts_vals(static_cast<Eigen::Index>(itr - ts_rows_.begin()));
    }
    return info;
}

Vector accelerate_ts_interface(const std::vector<Vector>& iterates) {
    if (iterates.size() < 2) throw RankDeficientHistory("need at least two TS interface iterates");
    std::vector<Vector> diffs;
    for (std::size_t k = 1; k < iterates.size(); ++k)
        diffs.push_back(iterates[k] - iterates[k - 1]);
    InterfaceOperator op = numeric_p(diffs);
    return accelerate(op, iterates[iterates.size() - 1], iterates[iterates.size() - 2]);
}

void write_phasor_csv(std::ostream& os, const std::vector<std::pair<double, PhasorState>>& trace,
                      const std::vector<std::string>& var_names, const PhasorConfig& cfg) {
    os << "t";
    for (const auto& name : var_names) {
        for (int k : cfg.modes) {
            os << ',' << name << "_k" << (k < 0 ? "m" : "p") << std::abs(k);
        }
    }
    os << '\n';
    char buf[32];
    for (const auto& [t, ph] : trace) {
        std::snprintf(buf, sizeof buf, "%.17g", t);
        os << buf;
        for (Eigen::Index v = 0; v < ph.rows(); ++v) {
            for (Eigen::Index mi = 0; mi < ph.cols(); ++mi) {
                std::snprintf(buf, sizeof buf, "%.17g", std::abs(ph(v, mi)));
                os << ',' << buf;
            }
        }
        os << '\n';
    }
}

} // namespace diras
