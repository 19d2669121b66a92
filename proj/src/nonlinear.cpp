#include "diras/nonlinear.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "diras/errors.hpp"

namespace diras {

CombinedSystem linearize_step(const CombinedSystem& base,
                              const std::vector<NonlinearConductance>& elements,
                              const Vector& prev_state) {
    CombinedSystem sys = base;
    for (const NonlinearConductance& el : elements) {
        const double den = el.g0 + el.alpha * prev_state(el.current);
        if (std::abs(den) <= 1e-12)
            throw CoefficientBlowup("conductance denominator g0 + alpha*i vanished");
        const double g = 1.0 / den;
        sys.big_a(el.row, el.col_p) = g;
        sys.big_a(el.row, el.col_q) = -g;
    }
    return sys;
}

Trajectory solve_nonlinear_monolithic(const CombinedSystem& base,
                                      const std::vector<NonlinearConductance>& elements,
                                      const Vector& x0, double dt, double t_end) {
    // Initial state from the t=0 constraint with coefficients frozen at i=0.
    CombinedSystem sys0 = linearize_step(base, elements, Vector::Zero(base.size()));
    Trajectory traj = monolithic_solve(sys0, x0, dt, 0.0);

    const auto steps = static_cast<Eigen::Index>(std::ceil(t_end / dt - 1e-9));
    for (Eigen::Index k = 1; k <= steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const Vector& z_prev = traj.states.back();
        CombinedSystem sys = linearize_step(base, elements, z_prev);
        LuFactor lu(step_matrix(sys, dt));
        if (lu.singular()) throw SingularStepMatrix("nonlinear step matrix");
        traj.states.push_back(lu.solve(step_rhs(sys, z_prev, dt, t)));
        traj.times.push_back(t);
    }
    return traj;
}

NonlinearResult solve_nonlinear_accelerated(const CombinedSystem& base,
                                            const std::vector<NonlinearConductance>& elements,
                                            const OverlapPartition& part, const Vector& x0,
                                            double dt, double t_end) {
    CombinedSystem sys0 = linearize_step(base, elements, Vector::Zero(base.size()));
    NonlinearResult res;
    res.traj = monolithic_solve(sys0, x0, dt, 0.0);
    res.traj.dt = dt;

    const auto steps = static_cast<Eigen::Index>(std::ceil(t_end / dt - 1e-9));
    for (Eigen::Index k = 1; k <= steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const Vector& z_prev = res.traj.states.back();
        CombinedSystem sys = linearize_step(base, elements, z_prev);

        // The step operator depends on the frozen coefficients, so the
        // engine (and its P) is rebuilt for every step.
        SequentialAccelerator engine(sys, part, dt);
        Vector z;
        try {
            z = engine.solve_step(z_prev, t, SequentialAccelerator::Mode::first_step);
        } catch (const Error& e) {
            throw Error(e.code(), "step " + std::to_string(k) + ": " + e.what());
        }
        res.traj.states.push_back(std::move(z));
        res.traj.times.push_back(t);

        if (engine.has_operator()) {
            const InterfaceOperator& op = engine.op();
            Complex lmax;
            double best = -1.0;
            for (const Complex& l : op.eigs)
                if (std::abs(l) > best) best = std::abs(l), lmax = l;
            res.spectra.push_back({k, op.rho, lmax});
            InterfaceOperator rec = op;
            rec.source = InterfaceOperator::Source::per_step_nonlinear;
            res.operators.push_back(std::move(rec));
        }
    }
    return res;
}

void write_spectra_csv(std::ostream& os, const std::vector<SteppedOperator>& spectra) {
    os << "step,rho,lambda_re,lambda_im\n";
    char buf[32];
    for (const auto& s : spectra) {
        os << s.step << ',';
        std::snprintf(buf, sizeof buf, "%.17g", s.rho);
        os << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", s.lambda_max.real());
        os << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", s.lambda_max.imag());
        os << buf << '\n';
    }
}

} // namespace diras
