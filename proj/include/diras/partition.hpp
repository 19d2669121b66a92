#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "diras/linalg.hpp"

namespace diras {

/// Undirected sparsity graph of a square matrix: vertex i is unknown i
/// (and equation row i), edges link structurally coupled unknowns.
struct AdjacencyGraph {
    Eigen::Index n = 0;
    std::vector<std::vector<Eigen::Index>> neighbors; ///< sorted, no self-loops

    static AdjacencyGraph from_matrix(const Matrix& m, double tol = 0.0);
};

using IndexSet = std::vector<Eigen::Index>; ///< always kept sorted ascending

/// Restriction-operator families of an overlapping partition. All operators
/// are stored as index lists; applying one is an index gather.
enum class Restrict {
    extended,      ///< R_i^p : components on W_i^p
    base_masked,   ///< Rt_i^0: local length n_i, zero outside W_i^0
    external,      ///< R_{i,e}^p : components on W_{i,e}^p
    extended_diff, ///< differential sub-rows of R_i^p
    extended_alg,  ///< algebraic sub-rows of R_i^p
    external_diff,
    external_alg,
};

struct OverlapPartition {
    Eigen::Index n = 0;
    int p = 0;
    std::vector<bool> diff_mask;
    std::vector<IndexSet> base;     ///< W_i^0, disjoint cover
    std::vector<IndexSet> extended; ///< W_i^p
    std::vector<IndexSet> external; ///< W_{i,e}^p = W_i^{p+1} \ W_i^p
    std::vector<bool> swallowed;    ///< true when W_i^{p+1} was the full vertex set

    std::size_t parts() const { return base.size(); }

    /// Positions (within the extended list) of the base vertices; used by
    /// the masked prolongation Rt_i^0T.
    std::vector<std::vector<Eigen::Index>> base_pos_in_extended;

    Vector restrict_vec(std::size_t i, Restrict which, const Vector& v) const;
};

/// Grows base sets by p neighbor rings and records external sets.
/// Throws NotACover when base is not a disjoint cover of [0, n).
OverlapPartition grow_overlap(const AdjacencyGraph& g, const std::vector<IndexSet>& base, int p,
                              const std::vector<bool>& diff_mask);

/// Interface gamma = [W_{0,e}^p, ..., W_{N-1,e}^p] in partition order,
/// ascending vertex order inside each block.
struct InterfaceMap {
    IndexSet gamma;
    std::vector<int> owner;             ///< partition whose external set the slot came from
    std::vector<Eigen::Index> block_lo; ///< start offset of each partition block
    Eigen::Index size() const { return static_cast<Eigen::Index>(gamma.size()); }

    Vector restrict_global(const Vector& z) const;
    /// Scatter-add gamma values into a length-n vector (R_Gamma^T).
    Vector prolong(const Vector& zg, Eigen::Index n) const;
};

InterfaceMap interface_map(const OverlapPartition& part);

/// Dense 0/1 matrix of a restriction family; test/analysis use only.
Matrix materialize(const OverlapPartition& part, std::size_t i, Restrict which);
Matrix materialize(const InterfaceMap& gamma, Eigen::Index n);

/// Partition description file (JSON): vertex names, base membership, p,
/// differential mask. Schema documented in the README.
void write_partition_json(std::ostream& os, const OverlapPartition& part,
                          const std::vector<std::string>& names);
struct PartitionSpec {
    Eigen::Index n = 0;
    int p = 0;
    std::vector<bool> diff_mask;
    std::vector<IndexSet> base;
    std::vector<std::string> names;
};
PartitionSpec read_partition_json(std::istream& is);

} // namespace diras
