#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "diras/dae.hpp"
#include "diras/nonlinear.hpp"
#include "diras/partition.hpp"

namespace diras {

enum class ElementKind { resistor, conductance, inductor, capacitor, vsource, isource };

/// amp * window(t) * cos(omega t); window multiplies the amplitude by
/// `factor` on [from, to) and is 1 elsewhere.
struct SourceWave {
    double amp = 0.0;
    double omega = 0.0;
    double from = 0.0;
    double to = 0.0;
    double factor = 1.0;

    double value(double t) const;
};

struct Element {
    ElementKind kind = ElementKind::resistor;
    std::string name;
    std::string node_p;
    std::string node_q;
    double value = 0.0; ///< R [ohm], G [S], L [H] or C [F]
    SourceWave wave;    ///< sources only
    double zs = 0.0;    ///< voltage-source series impedance
};

/// Element list over named nodes with one designated ground node.
/// Branch equations are oriented p -> q: the element current leaves node_p.
struct Netlist {
    std::vector<std::string> nodes; ///< declaration order
    std::string ground;
    std::vector<Element> elements;

    void ensure_node(const std::string& name);
};

struct AuxDef {
    std::string aux;    ///< auxiliary differential variable
    std::string node_p; ///< aux = e(node_p) - e(node_q)
    std::string node_q;
};

/// Assembled circuit with named unknowns. Differential block first
/// (inductor currents in element order, then capacitor aux voltages),
/// then node voltages in node order, then element algebraic currents.
struct CircuitDae {
    LinearDae dae;
    std::vector<std::string> var_names;
    std::vector<AuxDef> aux_defs;
    std::map<std::string, Eigen::Index> var_index;

    Eigen::Index index_of(const std::string& name) const;
};

CircuitDae assemble(const Netlist& net);

/// Built-in example circuits.
enum class PaperCircuitId { ex1, ex2, ex2_swapped, emt_ts, emt_ts_disturbed, ex2_nonlinear };

PaperCircuitId circuit_id_from_name(const std::string& name);

struct PaperParams {
    double l1 = 0.0; ///< 0 = use the preset default
    double l2 = 0.0;
    double c = 0.0;
    double g = 0.0;
    double r1 = 0.0, r2 = 0.0, c1 = 0.0, c2 = 0.0; ///< ring circuit only
    double e_amp = -1.0;                            ///< <0 = preset default
    double freq_hz = -1.0;
    double zs = -1.0;
    double ei_amp = -1.0;
    double g0 = 0.0, alpha = 0.0; ///< nonlinear conductance
};

struct PaperCircuit {
    PaperCircuitId id;
    CircuitDae circuit;
    OverlapPartition partition;
    std::vector<NonlinearConductance> nonlinear; ///< ex2_nonlinear only
    double l1 = 0.0, l2 = 0.0, c = 0.0, g = 0.0; ///< resolved parameter set
};

/// Builds a preset circuit together with its two-way partition.
PaperCircuit paper_circuit(PaperCircuitId id, const PaperParams& params = {});

/// Closed-form time-step threshold where rho(P) crosses 1, when one exists
/// for the resolved parameter set.
std::optional<double> analytic_dt0(const PaperCircuit& pc);

/// Netlist text format (one element per line, `#` comments):
///   ground <node>
///   R|G|L|C <name> <n+> <n-> <value>
///   VSRC <name> <n+> <n-> <amp> <freq_hz> <zs>
///   ISRC <name> <n+> <n-> <amp> <freq_hz>
/// Throws NetlistParse with the offending line number.
Netlist parse_netlist(std::istream& is);

} // namespace diras
