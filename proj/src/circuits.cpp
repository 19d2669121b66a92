#include "diras/circuits.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <sstream>

#include "diras/errors.hpp"

namespace diras {

double SourceWave::value(double t) const {
    double a = amp;
    if (t >= from && t < to) a *= factor;
    return a * std::cos(omega * t);
}

void Netlist::ensure_node(const std::string& name) {
    if (std::find(nodes.begin(), nodes.end(), name) == nodes.end()) nodes.push_back(name);
}

Eigen::Index CircuitDae::index_of(const std::string& name) const {
    auto it = var_index.find(name);
    if (it == var_index.end()) throw UnknownCircuitId("no variable named " + name);
    return it->second;
}

CircuitDae assemble(const Netlist& net) {
    if (net.ground.empty() ||
        std::find(net.nodes.begin(), net.nodes.end(), net.ground) == net.nodes.end())
        throw SingularAlgebraicBlock("netlist has no ground node");
    for (const Element& el : net.elements) {
        for (const std::string* nd : {&el.node_p, &el.node_q})
            if (std::find(net.nodes.begin(), net.nodes.end(), *nd) == net.nodes.end())
                throw FloatingNode("element " + el.name + " references unknown node " + *nd);
    }

    CircuitDae cd;
    std::vector<std::string> diff_names, alg_names;

    // Differential unknowns: inductor currents, then capacitor aux voltages.
    for (const Element& el : net.elements)
        if (el.kind == ElementKind::inductor) diff_names.push_back("i_" + el.name);
    for (const Element& el : net.elements) {
        if (el.kind == ElementKind::capacitor) {
            diff_names.push_back("v_" + el.name);
            cd.aux_defs.push_back({"v_" + el.name, el.node_p, el.node_q});
        }
    }
    // Algebraic unknowns: node voltages, then element currents.
    for (const std::string& nd : net.nodes) alg_names.push_back(nd);
    for (const Element& el : net.elements)
        if (el.kind != ElementKind::inductor) alg_names.push_back("i_" + el.name);

    const auto n1 = static_cast<Eigen::Index>(diff_names.size());
    const auto n2 = static_cast<Eigen::Index>(alg_names.size());
    cd.var_names = diff_names;
    cd.var_names.insert(cd.var_names.end(), alg_names.begin(), alg_names.end());
    for (Eigen::Index i = 0; i < n1 + n2; ++i)
        cd.var_index[cd.var_names[static_cast<std::size_t>(i)]] = i;

    LinearDae& dae = cd.dae;
    dae.a_mat = Matrix::Zero(n1, n1);
    dae.b_mat = Matrix::Zero(n1, n2);
    dae.c_mat = Matrix::Zero(n2, n1);
    dae.d_mat = Matrix::Zero(n2, n2);
    dae.x0 = Vector::Zero(n1);

    auto diff_row = [&](const std::string& name) { return cd.index_of(name); };
    auto alg_row = [&](const std::string& name) { return cd.index_of(name) - n1; };

    std::vector<bool> node_touched(net.nodes.size(), false);
    auto touch = [&](const std::string& nd) {
        auto it = std::find(net.nodes.begin(), net.nodes.end(), nd);
        node_touched[static_cast<std::size_t>(it - net.nodes.begin())] = true;
    };

    // KCL contribution of a branch current leaving node_p and entering node_q.
    // Skips the ground row, which is replaced by the pinning equation.
    auto kcl = [&](const Element& el, Eigen::Index cur_idx, bool cur_is_diff) {
        for (int s = 0; s < 2; ++s) {
            const std::string& nd = s == 0 ? el.node_p : el.node_q;
            const double sign = s == 0 ? 1.0 : -1.0;
            if (nd == net.ground) continue;
            const Eigen::Index r = alg_row(nd);
            if (cur_is_diff)
                dae.c_mat(r, cur_idx) += sign;
            else
                dae.d_mat(r, cur_idx - n1) += sign;
        }
        touch(el.node_p);
        touch(el.node_q);
    };

    struct SourceRow {
        Eigen::Index row; ///< algebraic row index
        SourceWave wave;
    };
    std::vector<SourceRow> sources;

    for (const Element& el : net.elements) {
        const Eigen::Index p = alg_row(el.node_p); // node voltage column within y
        const Eigen::Index q = alg_row(el.node_q);
        switch (el.kind) {
            case ElementKind::inductor: {
                // di/dt - (e_p - e_q)/L = 0
                const Eigen::Index r = diff_row("i_" + el.name);
                dae.b_mat(r, p) -= 1.0 / el.value;
                dae.b_mat(r, q) += 1.0 / el.value;
                kcl(el, r, true);
                break;
            }
            case ElementKind::capacitor: {
                // du/dt - i/C = 0 and u - e_p + e_q = 0
                const Eigen::Index ru = diff_row("v_" + el.name);
                const Eigen::Index ic = cd.index_of("i_" + el.name);
                dae.b_mat(ru, ic - n1) -= 1.0 / el.value;
                const Eigen::Index rc = alg_row("i_" + el.name);
                dae.c_mat(rc, ru) = 1.0;
                dae.d_mat(rc, p) -= 1.0;
                dae.d_mat(rc, q) += 1.0;
                kcl(el, ic, false);
                break;
            }
            case ElementKind::resistor: {
                // e_p - e_q - R i = 0
                const Eigen::Index r = alg_row("i_" + el.name);
                dae.d_mat(r, p) += 1.0;
                dae.d_mat(r, q) -= 1.0;
                dae.d_mat(r, cd.index_of("i_" + el.name) - n1) -= el.value;
                kcl(el, cd.index_of("i_" + el.name), false);
                break;
            }
            case ElementKind::conductance: {
                // G e_p - G e_q - i = 0
                const Eigen::Index r = alg_row("i_" + el.name);
                dae.d_mat(r, p) += el.value;
                dae.d_mat(r, q) -= el.value;
                dae.d_mat(r, cd.index_of("i_" + el.name) - n1) -= 1.0;
                kcl(el, cd.index_of("i_" + el.name), false);
                break;
            }
            case ElementKind::vsource: {
                // e_p - e_q - Zs i = E(t)
                const Eigen::Index r = alg_row("i_" + el.name);
                dae.d_mat(r, p) += 1.0;
                dae.d_mat(r, q) -= 1.0;
                dae.d_mat(r, cd.index_of("i_" + el.name) - n1) -= el.zs;
                sources.push_back({r, el.wave});
                kcl(el, cd.index_of("i_" + el.name), false);
                break;
            }
            case ElementKind::isource: {
                // i = E_i(t)
                const Eigen::Index r = alg_row("i_" + el.name);
                dae.d_mat(r, cd.index_of("i_" + el.name) - n1) += 1.0;
                sources.push_back({r, el.wave});
                kcl(el, cd.index_of("i_" + el.name), false);
                break;
            }
        }
    }

    // Ground pinning row.
    dae.d_mat(alg_row(net.ground), alg_row(net.ground)) = 1.0;
    touch(net.ground);

    for (std::size_t i = 0; i < net.nodes.size(); ++i)
        if (!node_touched[i] && net.nodes[i] != net.ground)
            throw FloatingNode("node " + net.nodes[i] + " has no incident element");

    dae.forcing = [sources, n1, n2](double t) {
        ForcingValue f{Vector::Zero(n1), Vector::Zero(n2)};
        for (const SourceRow& s : sources) f.b2(s.row) = s.wave.value(t);
        return f;
    };

    // A singular D alone is legitimate (index-2 circuits, e.g. an inductor
    // in series with a current source); true ill-posedness shows up in the
    // combined step matrix instead.
    if (LuFactor(step_matrix(combine(dae), 1e-3)).singular())
        throw SingularAlgebraicBlock("combined step matrix is singular");
    return cd;
}

PaperCircuitId circuit_id_from_name(const std::string& name) {
    if (name == "ex1") return PaperCircuitId::ex1;
    if (name == "ex2") return PaperCircuitId::ex2;
    if (name == "ex2-swapped") return PaperCircuitId::ex2_swapped;
    if (name == "emt-ts") return PaperCircuitId::emt_ts;
    if (name == "emt-ts-disturbed") return PaperCircuitId::emt_ts_disturbed;
    if (name == "nonlinear") return PaperCircuitId::ex2_nonlinear;
    throw UnknownCircuitId(name);
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double pick(double user, double preset) { return user > 0.0 ? user : preset; }
double pick_or(double user, double preset) { return user >= 0.0 ? user : preset; }

OverlapPartition partition_for(const CircuitDae& cd, const std::vector<std::string>& base0_names,
                               int p) {
    const CombinedSystem sys = combine(cd.dae);
    AdjacencyGraph g = AdjacencyGraph::from_matrix(sys.big_a);
    IndexSet b0, b1;
    std::vector<bool> in0(static_cast<std::size_t>(sys.size()), false);
    for (const auto& name : base0_names) {
        const Eigen::Index v = cd.index_of(name);
        in0[static_cast<std::size_t>(v)] = true;
        b0.push_back(v);
    }
    for (Eigen::Index v = 0; v < sys.size(); ++v)
        if (!in0[static_cast<std::size_t>(v)]) b1.push_back(v);
    return grow_overlap(g, {b0, b1}, p, sys.diff_mask);
}

} // namespace

PaperCircuit paper_circuit(PaperCircuitId id, const PaperParams& params) {
    PaperCircuit pc;
    pc.id = id;
    Netlist net;

    switch (id) {
        case PaperCircuitId::ex1:
        case PaperCircuitId::ex2:
        case PaperCircuitId::ex2_swapped:
        case PaperCircuitId::ex2_nonlinear: {
            const bool ex1 = id == PaperCircuitId::ex1;
            double l1_def = 0.4, l2_def = 0.5;
            if (id == PaperCircuitId::ex2) l1_def = 0.4, l2_def = 0.3;
            if (id == PaperCircuitId::ex2_swapped) l1_def = 0.5, l2_def = 0.7;
            if (id == PaperCircuitId::ex2_nonlinear) l1_def = 0.6, l2_def = 0.7;
            pc.l1 = pick(params.l1, l1_def);
            pc.l2 = pick(params.l2, l2_def);
            pc.c = pick(params.c, 1e-6);
            const double g0 = pick(params.g0, 10.0);
            const double alpha = pick(params.alpha, 2000.0);
            pc.g = id == PaperCircuitId::ex2_nonlinear ? 1.0 / g0 : pick(params.g, 2e-3);
            const double e_amp =
                pick_or(params.e_amp, id == PaperCircuitId::ex2_nonlinear ? 0.01 : 1.0);
            const double freq = pick_or(params.freq_hz, 50.0);
            const double zs = pick_or(params.zs, 0.0);
            const double ei = pick_or(params.ei_amp, 0.0);

            for (const char* nd : {"e1", "e2", "e3", "er"}) net.ensure_node(nd);
            net.ground = "er";
            // The L1 branch orientation reproduces the interface operator of
            // the worked examples entrywise.
            if (ex1)
                net.elements.push_back({ElementKind::inductor, "L1", "e2", "e1", pc.l1, {}, 0.0});
            else
                net.elements.push_back({ElementKind::inductor, "L1", "er", "e1", pc.l1, {}, 0.0});
            net.elements.push_back({ElementKind::inductor, "L2", "e2", "er", pc.l2, {}, 0.0});
            net.elements.push_back({ElementKind::capacitor, "C1", "e3", "e2", pc.c, {}, 0.0});
            net.elements.push_back({ElementKind::conductance, "G1", "e1", "e2", pc.g, {}, 0.0});
            net.elements.push_back(
                {ElementKind::vsource, "EV", "e1", "e3", 0.0, {e_amp, kTwoPi * freq}, zs});
            net.elements.push_back(
                {ElementKind::isource, "EI", "e3", "er", 0.0, {ei, kTwoPi * freq}, 0.0});

            pc.circuit = assemble(net);
            pc.partition = partition_for(pc.circuit, {"i_L1"}, 0);
            if (id == PaperCircuitId::ex2_nonlinear) {
                NonlinearConductance nc;
                nc.row = pc.circuit.index_of("i_G1");
                nc.col_p = pc.circuit.index_of("e1");
                nc.col_q = pc.circuit.index_of("e2");
                nc.current = pc.circuit.index_of("i_G1");
                nc.g0 = g0;
                nc.alpha = alpha;
                pc.nonlinear.push_back(nc);
            }
            break;
        }
        case PaperCircuitId::emt_ts:
        case PaperCircuitId::emt_ts_disturbed: {
            const bool disturbed = id == PaperCircuitId::emt_ts_disturbed;
            pc.l1 = pick(params.l1, disturbed ? 0.07 : 0.7);
            pc.l2 = pick(params.l2, disturbed ? 0.07 : 0.7);
            const double c1 = pick(params.c1, disturbed ? 1e-5 : 1e-6);
            const double c2 = pick(params.c2, disturbed ? 1e-7 : 1e-6);
            const double r1 = pick(params.r1, disturbed ? 7.0 : 77.0);
            const double r2 = pick(params.r2, disturbed ? 7.0 : 77.0);
            const double e_amp = pick_or(params.e_amp, 5.0);
            const double freq = pick_or(params.freq_hz, 50.0);
            const double zs = pick_or(params.zs, 1e-6);
            pc.c = c1;
            pc.g = 0.0;

            for (const char* nd : {"v1", "v2", "v3", "v4", "v5", "v6", "v7"}) net.ensure_node(nd);
            net.ground = "v1";
            SourceWave wave{e_amp, kTwoPi * freq};
            if (disturbed) {
                wave.from = 0.02;
                wave.to = 0.021;
                wave.factor = 1.5;
            }
            net.elements.push_back({ElementKind::vsource, "EV", "v2", "v1", 0.0, wave, zs});
            net.elements.push_back({ElementKind::inductor, "L1", "v3", "v2", pc.l1, {}, 0.0});
            net.elements.push_back({ElementKind::resistor, "R1", "v4", "v3", r1, {}, 0.0});
            net.elements.push_back({ElementKind::capacitor, "C1", "v5", "v4", c1, {}, 0.0});
            net.elements.push_back({ElementKind::resistor, "R2", "v6", "v5", r2, {}, 0.0});
            net.elements.push_back({ElementKind::inductor, "L2", "v7", "v6", pc.l2, {}, 0.0});
            net.elements.push_back({ElementKind::capacitor, "C2", "v1", "v7", c2, {}, 0.0});

            pc.circuit = assemble(net);
            pc.partition =
                partition_for(pc.circuit, {"v1", "v2", "v3", "v4", "i_EV", "i_L1", "i_R1"}, 0);
            break;
        }
    }
    return pc;
}

std::optional<double> analytic_dt0(const PaperCircuit& pc) {
    switch (pc.id) {
        case PaperCircuitId::ex1: {
            const double lg = pc.l1 * pc.g;
            return (lg + std::sqrt(lg * lg + 4.0 * pc.l1 * pc.c)) / 2.0;
        }
        case PaperCircuitId::ex2:
        case PaperCircuitId::ex2_swapped: {
            const double dl = pc.l1 - pc.l2;
            if (dl <= 0.0) return std::nullopt; // diverges for every time step
            const double dlg = dl * pc.g;
            return (dlg + std::sqrt(dlg * dlg + 4.0 * dl * pc.c)) / 2.0;
        }
        default: return std::nullopt;
    }
}

Netlist parse_netlist(std::istream& is) {
    Netlist net;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw NetlistParse("line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string kw;
        if (!(ls >> kw)) continue;
        std::transform(kw.begin(), kw.end(), kw.begin(), [](unsigned char ch) {
            return static_cast<char>(std::toupper(ch));
        });
        if (kw == "GROUND") {
            std::string nd;
            if (!(ls >> nd)) fail("ground needs a node name");
            net.ensure_node(nd);
            net.ground = nd;
            continue;
        }
        Element el;
        if (kw == "R")
            el.kind = ElementKind::resistor;
        else if (kw == "G")
            el.kind = ElementKind::conductance;
        else if (kw == "L")
            el.kind = ElementKind::inductor;
        else if (kw == "C")
            el.kind = ElementKind::capacitor;
        else if (kw == "VSRC")
            el.kind = ElementKind::vsource;
        else if (kw == "ISRC")
            el.kind = ElementKind::isource;
        else
            fail("unknown element keyword '" + kw + "'");

        if (!(ls >> el.name >> el.node_p >> el.node_q)) fail("expected: name n+ n-");
        net.ensure_node(el.node_p);
        net.ensure_node(el.node_q);
        if (el.kind == ElementKind::vsource || el.kind == ElementKind::isource) {
            double amp = 0.0, freq = 0.0;
            if (!(ls >> amp >> freq)) fail("source needs amp and freq");
            el.wave.amp = amp;
            el.wave.omega = kTwoPi * freq;
            if (el.kind == ElementKind::vsource && !(ls >> el.zs)) fail("VSRC needs zs");
        } else {
            if (!(ls >> el.value)) fail("element needs a value");
            if (el.value <= 0.0) fail("element value must be positive");
        }
        std::string extra;
        if (ls >> extra) fail("unexpected token '" + extra + "'");
        net.elements.push_back(std::move(el));
    }
    if (net.ground.empty()) throw NetlistParse("no ground line");
    return net;
}

} // namespace diras
