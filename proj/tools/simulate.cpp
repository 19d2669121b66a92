#include <CLI11.hpp>

#include "diras/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Dynamic iteration with restricted additive Schwarz splitting for RLC circuits"};
    app.require_subcommand(1);

    diras::RunSpec spec;
    auto* run = app.add_subcommand("run", "run a solver mode on a scenario or netlist file");
    run->add_option("scenario", spec.scenario,
                    "built-in scenario (ex1, ex2, ex2-swapped, emt-ts, emt-ts-disturbed,"
                    " nonlinear) or a netlist file path")
        ->required();
    run->add_option("--mode", spec.mode,
                    "monolithic | di | di-aitken | di-aitken-pipelined | emt-ts | nonlinear |"
                    " spectral");
    run->add_option("--dt", spec.dt, "time step [s]");
    run->add_option("--t-end", spec.t_end, "end time [s]");
    run->add_option("--window", spec.window, "pipelined steps per window");
    run->add_option("--dt-ts", spec.dt_ts, "phasor-side time step [s]");
    run->add_option("--dt-emt", spec.dt_emt, "waveform-side time step [s]");
    run->add_option("--ts-modes", spec.modes, "retained phasor modes");
    run->add_option("--ts-freq", spec.freq_ts, "base phasor frequency [Hz]");
    run->add_option("--rtol", spec.rtol, "plain iteration relative tolerance");
    run->add_option("--atol", spec.atol, "plain iteration absolute tolerance");
    run->add_option("--max-iter", spec.max_iter, "plain iteration cap per step");
    run->add_option("--out", spec.out_dir, "output directory");
    run->add_option("--partition", spec.partition_file, "partition JSON for netlist scenarios");
    run->add_option("--sweep-dt", spec.sweep_dt, "spectral sweep grid lo:hi[:n]");
    run->add_option("--l1", spec.params.l1, "override inductance L1 [H]");
    run->add_option("--l2", spec.params.l2, "override inductance L2 [H]");
    run->add_option("--c", spec.params.c, "override capacitance C [F]");
    run->add_option("--g", spec.params.g, "override conductance G [S]");
    run->add_option("--r1", spec.params.r1, "override resistance R1 [ohm]");
    run->add_option("--r2", spec.params.r2, "override resistance R2 [ohm]");
    run->add_option("--c1", spec.params.c1, "override capacitance C1 [F]");
    run->add_option("--c2", spec.params.c2, "override capacitance C2 [F]");
    run->add_option("--e-amp", spec.params.e_amp, "voltage source amplitude [V]");
    run->add_option("--freq", spec.params.freq_hz, "source frequency [Hz]");
    run->add_option("--zs", spec.params.zs, "voltage source series impedance [ohm]");
    run->add_option("--ei-amp", spec.params.ei_amp, "current source amplitude [A]");
    run->add_option("--g0", spec.params.g0, "nonlinear conductance base 1/G0");
    run->add_option("--alpha", spec.params.alpha, "nonlinear conductance current gain");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 80; // SpecParse
    }
    return diras::run(spec);
}
