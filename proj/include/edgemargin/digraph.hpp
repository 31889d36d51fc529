#pragma once

#include "edgemargin/errors.hpp"
#include "edgemargin/matrix.hpp"

#include <optional>
#include <string>
#include <vector>

namespace edgemargin {

using NodeId = int; // 1-based
using EdgeId = int; // index into Digraph::edges()

struct Edge {
    NodeId tail = 0;
    NodeId head = 0;
    double weight = 0.0;
};

/// Weighted digraph: node set {1..n} plus an ordered directed edge list.
/// The single source of truth for all derived matrices. Immutable after
/// construction; construction rejects self-loops, parallel edges,
/// non-positive nominal weights and out-of-range node ids.
class Digraph {
public:
    Digraph(int n, std::vector<Edge> edges, std::vector<std::string> labels = {});

    int node_count() const { return n_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(EdgeId e) const { return edges_.at(static_cast<size_t>(e)); }

    bool has_labels() const { return !labels_.empty(); }
    /// Stored label, or the decimal node id when none were supplied.
    std::string label(NodeId v) const;
    /// Node id for a label (only when labels were supplied).
    std::optional<NodeId> node_by_label(const std::string& label) const;

    std::optional<EdgeId> find_edge(NodeId tail, NodeId head) const;

    std::vector<int> out_degrees() const;
    std::vector<int> in_degrees() const;
    double out_weight_sum(NodeId v) const;

private:
    int n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::string> labels_;
};

/// E, A and W of a digraph: the +1/-1 node-edge incidence, the 0/1
/// matrix selecting each edge's tail row, and the diagonal edge weights.
struct IncidenceSet {
    Matrix incidence;      // n x m, one +1 (tail) and one -1 (head) per column
    Matrix out_incidence;  // n x m, 1 at the tail row per column
    Matrix weight_diag;    // m x m diagonal
};

IncidenceSet build_incidence(const Digraph& g);

/// A * W * E^T (n x n); rows of zero-out-degree nodes vanish,
/// and the all-ones vector is always in the right null space.
Matrix graph_laplacian(const IncidenceSet& inc);

/// E^T * A * W (m x m), the edge-state counterpart of graph_laplacian.
Matrix edge_laplacian(const IncidenceSet& inc);

struct ReachabilityReport {
    std::vector<NodeId> globally_reachable; // sorted; nodes every other node can reach
    bool is_acyclic = false;
    bool is_simple_cycle = false;
    bool has_in_branching = false;
};

ReachabilityReport reachability(const Digraph& g);

/// A rooted in-branching G_tau plus the bookkeeping to relabel edges so
/// the branching edges come first and edge k exits node k (root last).
/// Original ids are never mutated; the permutation maps between views.
struct BranchingDecomposition {
    NodeId root = 0;
    std::vector<EdgeId> tau_edges;       // n-1 edges; position k <-> relabeled edge k+1
    std::vector<EdgeId> c_edges;         // remaining m-n+1 edges
    std::vector<NodeId> parent_of_edge;  // per edge id: its tail node
    std::vector<EdgeId> sibling_in_tau;  // per edge id: tau edge sharing its tail, -1 if none
    std::vector<int> permutation;        // edge id -> position in [tau_edges | c_edges]
    std::vector<NodeId> node_label;      // node id -> relabeled id in 1..n (root -> n)

    int tau_position(EdgeId e) const { return permutation[static_cast<size_t>(e)]; }
    bool is_tau_edge(EdgeId e) const {
        return permutation[static_cast<size_t>(e)] < static_cast<int>(tau_edges.size());
    }
};

/// Reverse-BFS in-branching from the root (default: the smallest
/// globally reachable node id). Each non-root node keeps the outgoing
/// edge whose head is nearest the root, ties to the smallest edge id.
BranchingDecomposition find_in_branching(const Digraph& g, std::optional<NodeId> root = {});

struct StructureCheck {
    std::string name;
    bool applicable = true;
    bool satisfied = true;
};

struct StructureReport {
    int rank_graph_laplacian = 0;
    int null_dim_edge_laplacian = 0;
    int null_dim_weighted_out_incidence = 0;
    std::vector<int> out_degrees;
    std::vector<StructureCheck> checks;

    bool all_satisfied() const;
};

/// Numeric rank/null-space census of the graph's matrices plus the
/// structural relations they are expected to satisfy.
StructureReport structure_report(const Digraph& g);

bool weakly_connected(const Digraph& g);

} // namespace edgemargin
