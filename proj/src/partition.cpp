#include "diras/partition.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "diras/errors.hpp"

namespace diras {

AdjacencyGraph AdjacencyGraph::from_matrix(const Matrix& m, double tol) {
    AdjacencyGraph g;
    g.n = m.rows();
    std::vector<std::set<Eigen::Index>> nb(static_cast<std::size_t>(g.n));
    for (Eigen::Index i = 0; i < g.n; ++i) {
        for (Eigen::Index j = 0; j < g.n; ++j) {
            if (i == j) continue; // self-loops ignored for neighbor expansion
            if (std::abs(m(i, j)) > tol) {
                nb[static_cast<std::size_t>(i)].insert(j);
                nb[static_cast<std::size_t>(j)].insert(i); // coupling treated as two-way
            }
        }
    }
    g.neighbors.resize(static_cast<std::size_t>(g.n));
    for (std::size_t i = 0; i < nb.size(); ++i)
        g.neighbors[i].assign(nb[i].begin(), nb[i].end());
    return g;
}

namespace {

IndexSet grow_once(const AdjacencyGraph& g, const IndexSet& w) {
    std::set<Eigen::Index> s(w.begin(), w.end());
    for (Eigen::Index v : w)
        for (Eigen::Index u : g.neighbors[static_cast<std::size_t>(v)]) s.insert(u);
    return IndexSet(s.begin(), s.end());
}

} // namespace

OverlapPartition grow_overlap(const AdjacencyGraph& g, const std::vector<IndexSet>& base, int p,
                              const std::vector<bool>& diff_mask) {
    if (p < 0) throw NotACover("overlap depth must be >= 0");
    if (static_cast<Eigen::Index>(diff_mask.size()) != g.n)
        throw DimensionMismatch("diff_mask length differs from vertex count");

    std::vector<int> owner(static_cast<std::size_t>(g.n), -1);
    for (std::size_t i = 0; i < base.size(); ++i) {
        for (Eigen::Index v : base[i]) {
            if (v < 0 || v >= g.n) throw NotACover("base vertex out of range");
            if (owner[static_cast<std::size_t>(v)] != -1)
                throw NotACover("base sets are not disjoint");
            owner[static_cast<std::size_t>(v)] = static_cast<int>(i);
        }
    }
    for (int o : owner)
        if (o == -1) throw NotACover("base sets do not cover all vertices");

    OverlapPartition part;
    part.n = g.n;
    part.p = p;
    part.diff_mask = diff_mask;
    part.base = base;
    for (auto& b : part.base) std::sort(b.begin(), b.end());
    part.extended.resize(base.size());
    part.external.resize(base.size());
    part.swallowed.assign(base.size(), false);
    part.base_pos_in_extended.resize(base.size());

    for (std::size_t i = 0; i < base.size(); ++i) {
        IndexSet w = part.base[i];
        for (int k = 0; k < p; ++k) w = grow_once(g, w);
        part.extended[i] = w;
        IndexSet w1 = grow_once(g, w);
        if (static_cast<Eigen::Index>(w1.size()) == g.n) part.swallowed[i] = true;
        IndexSet ext;
        std::set_difference(w1.begin(), w1.end(), w.begin(), w.end(), std::back_inserter(ext));
        part.external[i] = std::move(ext);

        auto& pos = part.base_pos_in_extended[i];
        for (Eigen::Index v : part.base[i]) {
            auto it = std::lower_bound(part.extended[i].begin(), part.extended[i].end(), v);
            pos.push_back(static_cast<Eigen::Index>(it - part.extended[i].begin()));
        }
    }
    return part;
}

namespace {

Vector gather(const Vector& v, const IndexSet& idx) {
    Vector out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Eigen::Index>(k)) = v(idx[k]);
    return out;
}

IndexSet filter_diff(const IndexSet& idx, const std::vector<bool>& mask, bool want_diff) {
    IndexSet out;
    for (Eigen::Index v : idx)
        if (mask[static_cast<std::size_t>(v)] == want_diff) out.push_back(v);
    return out;
}

} // namespace

Vector OverlapPartition::restrict_vec(std::size_t i, Restrict which, const Vector& v) const {
    switch (which) {
        case Restrict::extended: return gather(v, extended[i]);
        case Restrict::external: return gather(v, external[i]);
        case Restrict::extended_diff: return gather(v, filter_diff(extended[i], diff_mask, true));
        case Restrict::extended_alg: return gather(v, filter_diff(extended[i], diff_mask, false));
        case Restrict::external_diff: return gather(v, filter_diff(external[i], diff_mask, true));
        case Restrict::external_alg: return gather(v, filter_diff(external[i], diff_mask, false));
        case Restrict::base_masked: {
            Vector out = Vector::Zero(static_cast<Eigen::Index>(extended[i].size()));
            for (std::size_t k = 0; k < base[i].size(); ++k)
                out(base_pos_in_extended[i][k]) = v(base[i][k]);
            return out;
        }
    }
    throw UnknownSelector("unrecognized restriction selector");
}

InterfaceMap interface_map(const OverlapPartition& part) {
    InterfaceMap m;
    for (std::size_t i = 0; i < part.parts(); ++i) {
        m.block_lo.push_back(static_cast<Eigen::Index>(m.gamma.size()));
        for (Eigen::Index v : part.external[i]) {
            m.gamma.push_back(v);
            m.owner.push_back(static_cast<int>(i));
        }
    }
    if (m.gamma.empty()) throw EmptyInterface("all external sets are empty");
    return m;
}

Vector InterfaceMap::restrict_global(const Vector& z) const {
    Vector out(size());
    for (Eigen::Index k = 0; k < size(); ++k) out(k) = z(gamma[static_cast<std::size_t>(k)]);
    return out;
}

Vector InterfaceMap::prolong(const Vector& zg, Eigen::Index n) const {
    Vector out = Vector::Zero(n);
    for (Eigen::Index k = 0; k < size(); ++k) out(gamma[static_cast<std::size_t>(k)]) += zg(k);
    return out;
}

namespace {

Matrix rows_from_indices(const IndexSet& idx, Eigen::Index n) {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(idx.size()), n);
    for (std::size_t k = 0; k < idx.size(); ++k) m(static_cast<Eigen::Index>(k), idx[k]) = 1.0;
    return m;
}

} // namespace

Matrix materialize(const OverlapPartition& part, std::size_t i, Restrict which) {
    switch (which) {
        case Restrict::extended: return rows_from_indices(part.extended[i], part.n);
        case Restrict::external: return rows_from_indices(part.external[i], part.n);
        case Restrict::extended_diff:
            return rows_from_indices(filter_diff(part.extended[i], part.diff_mask, true), part.n);
        case Restrict::extended_alg:
            return rows_from_indices(filter_diff(part.extended[i], part.diff_mask, false), part.n);
        case Restrict::external_diff:
            return rows_from_indices(filter_diff(part.external[i], part.diff_mask, true), part.n);
        case Restrict::external_alg:
            return rows_from_indices(filter_diff(part.external[i], part.diff_mask, false), part.n);
        case Restrict::base_masked: {
            Matrix m = Matrix::Zero(static_cast<Eigen::Index>(part.extended[i].size()), part.n);
            for (std::size_t k = 0; k < part.base[i].size(); ++k)
                m(part.base_pos_in_extended[i][k], part.base[i][k]) = 1.0;
            return m;
        }
    }
    throw UnknownSelector("unrecognized restriction selector");
}

Matrix materialize(const InterfaceMap& gamma, Eigen::Index n) {
    Matrix m = Matrix::Zero(gamma.size(), n);
    for (Eigen::Index k = 0; k < gamma.size(); ++k)
        m(k, gamma.gamma[static_cast<std::size_t>(k)]) = 1.0;
    return m;
}

void write_partition_json(std::ostream& os, const OverlapPartition& part,
                          const std::vector<std::string>& names) {
    nlohmann::json j;
    j["n"] = part.n;
    j["p"] = part.p;
    j["diff_mask"] = part.diff_mask;
    j["base"] = part.base;
    j["names"] = names;
    os << j.dump(2) << '\n';
}

PartitionSpec read_partition_json(std::istream& is) {
    nlohmann::json j;
    try {
        is >> j;
        PartitionSpec spec;
        spec.n = j.at("n").get<Eigen::Index>();
        spec.p = j.at("p").get<int>();
        spec.diff_mask = j.at("diff_mask").get<std::vector<bool>>();
        spec.base = j.at("base").get<std::vector<IndexSet>>();
        if (j.contains("names")) spec.names = j.at("names").get<std::vector<std::string>>();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw SpecParse(std::string("partition file: ") + e.what());
    }
}

} // namespace diras
