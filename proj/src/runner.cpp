#include "diras/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "diras/aitken.hpp"
#include "diras/errors.hpp"
#include "diras/nonlinear.hpp"
#include "diras/phasor.hpp"
#include "diras/ras.hpp"

namespace diras {

namespace {

struct ResolvedScenario {
    CircuitDae circuit;
    OverlapPartition partition;
    std::vector<NonlinearConductance> nonlinear;
    std::optional<PaperCircuit> preset; ///< set for built-in scenarios
    bool has_partition = false;
};

ResolvedScenario resolve(const RunSpec& spec) {
    ResolvedScenario rs;
    try {
        PaperCircuit pc = paper_circuit(circuit_id_from_name(spec.scenario), spec.params);
        rs.circuit = pc.circuit;
        rs.partition = pc.partition;
        rs.nonlinear = pc.nonlinear;
        rs.preset = std::move(pc);
        rs.has_partition = true;
        return rs;
    } catch (const UnknownCircuitId&) {
        // fall through to netlist file
    }
    std::ifstream in(spec.scenario);
    if (!in) throw SpecParse("no such scenario or netlist file: " + spec.scenario);
    rs.circuit = assemble(parse_netlist(in));
    if (!spec.partition_file.empty()) {
        std::ifstream pin(spec.partition_file);
        if (!pin) throw IoError("cannot open partition file " + spec.partition_file);
        PartitionSpec ps = read_partition_json(pin);
        CombinedSystem sys = combine(rs.circuit.dae);
        if (ps.n != sys.size()) throw SpecParse("partition size differs from circuit size");
        std::vector<IndexSet> base = ps.base;
        rs.partition = grow_overlap(AdjacencyGraph::from_matrix(sys.big_a), base, ps.p,
                                    sys.diff_mask);
        rs.has_partition = true;
    }
    return rs;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/" + name;
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path);
    return os;
}

void sweep_grid(const std::string& text, double& lo, double& hi, int& count) {
    std::istringstream ss(text);
    std::string tok;
    std::vector<std::string> parts;
    while (std::getline(ss, tok, ':')) parts.push_back(tok);
    if (parts.size() < 2 || parts.size() > 3) throw SpecParse("sweep-dt wants lo:hi[:n]");
    try {
        lo = std::stod(parts[0]);
        hi = std::stod(parts[1]);
        count = parts.size() == 3 ? std::stoi(parts[2]) : 50;
    } catch (const std::exception&) {
        throw SpecParse("bad sweep-dt value: " + text);
    }
    if (!(lo > 0.0) || !(hi > lo) || count < 2) throw SpecParse("bad sweep-dt range");
}

InterfaceOperator dense_p(const CombinedSystem& sys, const OverlapPartition& part,
                          const InterfaceMap& gamma, double dt) {
    Matrix rg = materialize(gamma, sys.size());
    return make_interface_operator(Matrix(rg * richardson_matrix(sys, part, dt) * rg.transpose()),
                                   InterfaceOperator::Source::analytic);
}

void run_spectral(const RunSpec& spec, const ResolvedScenario& rs) {
    CombinedSystem sys = combine(rs.circuit.dae);
    InterfaceMap gamma = interface_map(rs.partition);
    std::optional<double> dt0;
    if (rs.preset) dt0 = analytic_dt0(*rs.preset);

    auto os = open_out(spec.out_dir, "spectral.json");
    if (spec.sweep_dt.empty()) {
        write_spectral_json(os, spectral_report(dense_p(sys, rs.partition, gamma, spec.dt),
                                                spec.dt, dt0));
        return;
    }
    double lo = 0.0, hi = 0.0;
    int count = 0;
    sweep_grid(spec.sweep_dt, lo, hi, count);
    std::vector<SpectralReport> reps;
    for (int i = 0; i < count; ++i) {
        const double dt = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
        reps.push_back(spectral_report(dense_p(sys, rs.partition, gamma, dt), dt, dt0));
    }
    write_spectral_json(os, reps);
}

void run_emt_ts(const RunSpec& spec, const ResolvedScenario& rs) {
    CombinedSystem sys = combine(rs.circuit.dae);
    PhasorConfig cfg;
    cfg.omega0 = 2.0 * std::numbers::pi * spec.freq_ts;
    cfg.modes = spec.modes;
    cfg.dt_emt = spec.dt_emt;
    const double ratio = spec.dt_ts / spec.dt_emt;
    cfg.m = static_cast<Eigen::Index>(std::llround(ratio));
    if (cfg.m < 1 || std::abs(ratio - static_cast<double>(cfg.m)) > 1e-9 * ratio)
        throw BadPhasorConfig("dt_ts must be an integer multiple of dt_emt");

    MultirateEngine engine(sys, rs.partition, cfg, rs.circuit.dae.x0);
    const auto steps = static_cast<Eigen::Index>(std::ceil(spec.t_end / cfg.dt_ts() - 1e-9));
    for (Eigen::Index k = 0; k < steps; ++k) engine.step_accelerated();

    std::vector<std::string> emt_names, ts_names;
    for (Eigen::Index g : engine.emt_vars())
        emt_names.push_back(rs.circuit.var_names[static_cast<std::size_t>(g)]);
    for (Eigen::Index g : engine.ts_vars())
        ts_names.push_back(rs.circuit.var_names[static_cast<std::size_t>(g)]);

    auto em = open_out(spec.out_dir, "emt_trajectory.csv");
    Trajectory etr;
    etr.dt = cfg.dt_emt;
    for (const auto& [t, z] : engine.emt_trace()) {
        etr.times.push_back(t);
        etr.states.push_back(z);
    }
    write_trajectory_csv(em, etr, emt_names);

    auto ph = open_out(spec.out_dir, "ts_phasors.csv");
    write_phasor_csv(ph, engine.ts_trace(), ts_names, cfg);
}

int run_checked(const RunSpec& spec) {
    ResolvedScenario rs = resolve(spec);
    const bool needs_partition = spec.mode != "monolithic";
    if (needs_partition && !rs.has_partition)
        throw SpecParse("mode '" + spec.mode + "' needs a partition (preset or --partition)");

    if (spec.mode == "monolithic") {
        CombinedSystem sys = combine(rs.circuit.dae);
        Trajectory traj = rs.nonlinear.empty()
                              ? monolithic_solve(sys, rs.circuit.dae.x0, spec.dt, spec.t_end)
                              : solve_nonlinear_monolithic(sys, rs.nonlinear, rs.circuit.dae.x0,
                                                           spec.dt, spec.t_end);
        auto os = open_out(spec.out_dir, "trajectory.csv");
        write_trajectory_csv(os, traj, rs.circuit.var_names);
        return 0;
    }
    if (spec.mode == "di") {
        CombinedSystem sys = combine(rs.circuit.dae);
        DiOptions opt{spec.rtol, spec.atol, spec.max_iter};
        DiResult res = di_solve(sys, rs.partition, rs.circuit.dae.x0, spec.dt, spec.t_end, opt);
        auto os = open_out(spec.out_dir, "trajectory.csv");
        write_trajectory_csv(os, res.traj, rs.circuit.var_names);
        auto cs = open_out(spec.out_dir, "convergence.csv");
        write_convergence_csv(cs, res.log);
        if (!res.converged) {
            std::cerr << "di: iteration did not reach tolerance within max-iter\n";
            return Error(3, "").code();
        }
        return 0;
    }
    if (spec.mode == "di-aitken" || spec.mode == "di-aitken-pipelined") {
        CombinedSystem sys = combine(rs.circuit.dae);
        AcceleratedResult res =
            spec.mode == "di-aitken"
                ? solve_accelerated(sys, rs.partition, rs.circuit.dae.x0, spec.dt, spec.t_end)
                : solve_pipelined(sys, rs.partition, rs.circuit.dae.x0, spec.dt, spec.t_end,
                                  spec.window);
        auto os = open_out(spec.out_dir, "trajectory.csv");
        write_trajectory_csv(os, res.traj, rs.circuit.var_names);
        auto cs = open_out(spec.out_dir, "convergence.csv");
        write_convergence_csv(cs, res.log);
        if (res.op) {
            auto ss = open_out(spec.out_dir, "spectral.json");
            std::optional<double> dt0;
            if (rs.preset) dt0 = analytic_dt0(*rs.preset);
            write_spectral_json(ss, spectral_report(*res.op, spec.dt, dt0));
        }
        return 0;
    }
    if (spec.mode == "nonlinear") {
        if (rs.nonlinear.empty())
            throw SpecParse("scenario has no nonlinear elements; use scenario 'nonlinear'");
        CombinedSystem sys = combine(rs.circuit.dae);
        NonlinearResult res = solve_nonlinear_accelerated(sys, rs.nonlinear, rs.partition,
                                                          rs.circuit.dae.x0, spec.dt, spec.t_end);
        auto os = open_out(spec.out_dir, "trajectory.csv");
        write_trajectory_csv(os, res.traj, rs.circuit.var_names);
        auto ss = open_out(spec.out_dir, "spectra.csv");
        write_spectra_csv(ss, res.spectra);
        return 0;
    }
    if (spec.mode == "emt-ts") {
        run_emt_ts(spec, rs);
        return 0;
    }
    if (spec.mode == "spectral") {
        run_spectral(spec, rs);
        return 0;
    }
    throw SpecParse("unknown mode '" + spec.mode + "'");
}

} // namespace

int run(const RunSpec& spec) {
    try {
        return run_checked(spec);
    } catch (const Error& e) {
        std::cerr << "error " << e.code() << ": " << e.what() << '\n';
        return e.code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace diras
