#include "edgemargin/digraph.hpp"

#include "edgemargin/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>

namespace edgemargin {

namespace {

std::vector<std::vector<std::pair<NodeId, EdgeId>>> out_adjacency(const Digraph& g) {
    std::vector<std::vector<std::pair<NodeId, EdgeId>>> adj(g.node_count() + 1);
    for (EdgeId e = 0; e < g.edge_count(); ++e)
        adj[g.edge(e).tail].emplace_back(g.edge(e).head, e);
    return adj;
}

std::vector<std::vector<std::pair<NodeId, EdgeId>>> in_adjacency(const Digraph& g) {
    std::vector<std::vector<std::pair<NodeId, EdgeId>>> adj(g.node_count() + 1);
    for (EdgeId e = 0; e < g.edge_count(); ++e)
        adj[g.edge(e).head].emplace_back(g.edge(e).tail, e);
    return adj;
}

/// Directed BFS distance from every node TO target (walks edges backwards).
std::vector<int> distances_to(const Digraph& g, NodeId target) {
    std::vector<int> dist(g.node_count() + 1, -1);
    const auto rev = in_adjacency(g);
    std::deque<NodeId> queue{target};
    dist[target] = 0;
    while (!queue.empty()) {
        const NodeId v = queue.front();
        queue.pop_front();
        for (const auto& [u, e] : rev[v]) {
            (void)e;
            if (dist[u] < 0) {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    return dist;
}

} // namespace

Digraph::Digraph(int n, std::vector<Edge> edges, std::vector<std::string> labels)
    : n_(n), edges_(std::move(edges)), labels_(std::move(labels)) {
    if (n_ <= 0) throw GraphError("digraph needs at least one node");
    if (!labels_.empty() && static_cast<int>(labels_.size()) != n_)
        throw GraphError("label count does not match node count");
    std::set<std::pair<NodeId, NodeId>> seen;
    for (const Edge& e : edges_) {
        if (e.tail < 1 || e.tail > n_ || e.head < 1 || e.head > n_)
            throw GraphError("edge endpoint out of range");
        if (e.tail == e.head) throw GraphError("self-loops are not allowed");
        if (!(e.weight > 0.0) || !std::isfinite(e.weight))
            throw GraphError("nominal edge weights must be finite and positive");
        if (!seen.insert({e.tail, e.head}).second)
            throw GraphError("parallel edges are not allowed");
    }
}

std::string Digraph::label(NodeId v) const {
    if (v < 1 || v > n_) throw GraphError("node id out of range");
    if (labels_.empty()) return std::to_string(v);
    return labels_[static_cast<size_t>(v) - 1];
}

std::optional<NodeId> Digraph::node_by_label(const std::string& label) const {
    for (size_t i = 0; i < labels_.size(); ++i)
        if (labels_[i] == label) return static_cast<NodeId>(i + 1);
    if (labels_.empty()) {
        // fall back to decimal ids
        try {
            const int v = std::stoi(label);
            if (v >= 1 && v <= n_ && std::to_string(v) == label) return v;
        } catch (...) {
        }
    }
    return std::nullopt;
}

std::optional<EdgeId> Digraph::find_edge(NodeId tail, NodeId head) const {
    for (EdgeId e = 0; e < edge_count(); ++e)
        if (edges_[static_cast<size_t>(e)].tail == tail &&
            edges_[static_cast<size_t>(e)].head == head)
            return e;
    return std::nullopt;
}

std::vector<int> Digraph::out_degrees() const {
    std::vector<int> deg(static_cast<size_t>(n_) + 1, 0);
    for (const Edge& e : edges_) ++deg[static_cast<size_t>(e.tail)];
    return deg;
}

std::vector<int> Digraph::in_degrees() const {
    std::vector<int> deg(static_cast<size_t>(n_) + 1, 0);
    for (const Edge& e : edges_) ++deg[static_cast<size_t>(e.head)];
    return deg;
}

double Digraph::out_weight_sum(NodeId v) const {
    double s = 0.0;
    for (const Edge& e : edges_)
        if (e.tail == v) s += e.weight;
    return s;
}

IncidenceSet build_incidence(const Digraph& g) {
    const int n = g.node_count();
    const int m = g.edge_count();
    IncidenceSet inc{Matrix(n, m), Matrix(n, m), Matrix(m, m)};
    for (EdgeId e = 0; e < m; ++e) {
        const Edge& ed = g.edge(e);
        inc.incidence(ed.tail - 1, e) = 1.0;
        inc.incidence(ed.head - 1, e) = -1.0;
        inc.out_incidence(ed.tail - 1, e) = 1.0;
        inc.weight_diag(e, e) = ed.weight;
    }
    return inc;
}

Matrix graph_laplacian(const IncidenceSet& inc) {
    return inc.out_incidence * inc.weight_diag * inc.incidence.transposed();
}

Matrix edge_laplacian(const IncidenceSet& inc) {
    return inc.incidence.transposed() * inc.out_incidence * inc.weight_diag;
}

ReachabilityReport reachability(const Digraph& g) {
    const int n = g.node_count();
    const int m = g.edge_count();
    ReachabilityReport rep;

    for (NodeId v = 1; v <= n; ++v) {
        const auto dist = distances_to(g, v);
        bool all = true;
        for (NodeId u = 1; u <= n; ++u)
            if (dist[u] < 0) {
                all = false;
                break;
            }
        if (all) rep.globally_reachable.push_back(v);
    }
    rep.has_in_branching = !rep.globally_reachable.empty();

    // acyclicity via Kahn's algorithm
    std::vector<int> indeg = g.in_degrees();
    std::deque<NodeId> queue;
    for (NodeId v = 1; v <= n; ++v)
        if (indeg[static_cast<size_t>(v)] == 0) queue.push_back(v);
    const auto adj = out_adjacency(g);
    int removed = 0;
    while (!queue.empty()) {
        const NodeId v = queue.front();
        queue.pop_front();
        ++removed;
        for (const auto& [u, e] : adj[v]) {
            (void)e;
            if (--indeg[static_cast<size_t>(u)] == 0) queue.push_back(u);
        }
    }
    rep.is_acyclic = removed == n;

    if (m == n && n >= 2) {
        const auto outd = g.out_degrees();
        const auto ind = g.in_degrees();
        bool regular = true;
        for (NodeId v = 1; v <= n; ++v)
            if (outd[static_cast<size_t>(v)] != 1 || ind[static_cast<size_t>(v)] != 1)
                regular = false;
        rep.is_simple_cycle = regular && weakly_connected(g);
    }
    return rep;
}

BranchingDecomposition find_in_branching(const Digraph& g, std::optional<NodeId> root_opt) {
    const ReachabilityReport rep = reachability(g);
    if (!rep.has_in_branching)
        throw NoInBranching("graph has no globally reachable node");

    NodeId root;
    if (root_opt) {
        root = *root_opt;
        if (!std::binary_search(rep.globally_reachable.begin(), rep.globally_reachable.end(), root))
            throw RootNotReachable("requested root is not globally reachable");
    } else {
        root = rep.globally_reachable.front();
    }

    const int n = g.node_count();
    const int m = g.edge_count();
    const auto dist = distances_to(g, root);

    BranchingDecomposition dec;
    dec.root = root;
    dec.parent_of_edge.resize(static_cast<size_t>(m));
    dec.sibling_in_tau.assign(static_cast<size_t>(m), -1);
    dec.permutation.assign(static_cast<size_t>(m), -1);
    dec.node_label.assign(static_cast<size_t>(n) + 1, 0);
    for (EdgeId e = 0; e < m; ++e) dec.parent_of_edge[static_cast<size_t>(e)] = g.edge(e).tail;

    // one outgoing edge per non-root node: head nearest the root, then smallest edge id
    std::vector<EdgeId> tau_of_node(static_cast<size_t>(n) + 1, -1);
    for (NodeId v = 1; v <= n; ++v) {
        if (v == root) continue;
        EdgeId best = -1;
        for (EdgeId e = 0; e < m; ++e) {
            if (g.edge(e).tail != v) continue;
            const NodeId h = g.edge(e).head;
            if (dist[h] < 0) continue;
            if (best < 0 || dist[h] < dist[g.edge(best).head]) best = e;
        }
        // dist[v] is finite because root is globally reachable; best lands
        // on a head strictly closer to the root
        if (best < 0) throw GraphError("internal: no branching edge for a reachable node");
        tau_of_node[static_cast<size_t>(v)] = best;
    }

    std::vector<NodeId> non_root;
    for (NodeId v = 1; v <= n; ++v)
        if (v != root) non_root.push_back(v);
    std::sort(non_root.begin(), non_root.end(), [&](NodeId a, NodeId b) {
        if (dist[a] != dist[b]) return dist[a] < dist[b];
        return a < b;
    });

    std::vector<bool> in_tau(static_cast<size_t>(m), false);
    for (size_t k = 0; k < non_root.size(); ++k) {
        const NodeId v = non_root[k];
        const EdgeId e = tau_of_node[static_cast<size_t>(v)];
        dec.tau_edges.push_back(e);
        in_tau[static_cast<size_t>(e)] = true;
        dec.permutation[static_cast<size_t>(e)] = static_cast<int>(k);
        dec.node_label[static_cast<size_t>(v)] = static_cast<NodeId>(k + 1);
    }
    dec.node_label[static_cast<size_t>(root)] = n;

    int pos = n - 1;
    for (EdgeId e = 0; e < m; ++e) {
        if (in_tau[static_cast<size_t>(e)]) continue;
        dec.c_edges.push_back(e);
        dec.permutation[static_cast<size_t>(e)] = pos++;
        const NodeId tail = g.edge(e).tail;
        dec.sibling_in_tau[static_cast<size_t>(e)] = tau_of_node[static_cast<size_t>(tail)];
    }
    return dec;
}

bool weakly_connected(const Digraph& g) {
    const int n = g.node_count();
    std::vector<std::vector<NodeId>> adj(static_cast<size_t>(n) + 1);
    for (const Edge& e : g.edges()) {
        adj[static_cast<size_t>(e.tail)].push_back(e.head);
        adj[static_cast<size_t>(e.head)].push_back(e.tail);
    }
    std::vector<bool> seen(static_cast<size_t>(n) + 1, false);
    std::deque<NodeId> queue{1};
    seen[1] = true;
    int count = 0;
    while (!queue.empty()) {
        const NodeId v = queue.front();
        queue.pop_front();
        ++count;
        for (NodeId u : adj[static_cast<size_t>(v)])
            if (!seen[static_cast<size_t>(u)]) {
                seen[static_cast<size_t>(u)] = true;
                queue.push_back(u);
            }
    }
    return count == n;
}

bool StructureReport::all_satisfied() const {
    for (const StructureCheck& c : checks)
        if (c.applicable && !c.satisfied) return false;
    return true;
}

StructureReport structure_report(const Digraph& g) {
    const int n = g.node_count();
    const int m = g.edge_count();
    const IncidenceSet inc = build_incidence(g);
    const Matrix lg = graph_laplacian(inc);
    const Matrix le = edge_laplacian(inc);
    const Matrix aw = inc.out_incidence * inc.weight_diag;
    const ReachabilityReport rep = reachability(g);
    const bool connected = weakly_connected(g);

    StructureReport out;
    out.out_degrees = g.out_degrees();
    out.rank_graph_laplacian = rank(lg);
    out.null_dim_edge_laplacian = m - rank(le);
    out.null_dim_weighted_out_incidence = m - rank(aw);

    int r_active = 0; // nodes with at least one outgoing edge
    bool any_deg_above_1 = false;
    bool any_sink = false;
    for (NodeId v = 1; v <= n; ++v) {
        const int d = out.out_degrees[static_cast<size_t>(v)];
        if (d >= 1) ++r_active;
        if (d > 1) any_deg_above_1 = true;
        if (d == 0) any_sink = true;
    }

    auto add = [&](std::string name, bool applicable, bool satisfied) {
        out.checks.push_back({std::move(name), applicable, satisfied});
    };

    // duplicate tail columns in A exactly when some out-degree exceeds 1,
    // established by comparing the actual matrix columns
    bool dup_cols = false;
    for (int a = 0; a < m && !dup_cols; ++a)
        for (int b = a + 1; b < m && !dup_cols; ++b) {
            bool same = true;
            for (int i = 0; i < n; ++i)
                if (inc.out_incidence(i, a) != inc.out_incidence(i, b)) same = false;
            dup_cols = same;
        }
    add("duplicate_out_incidence_columns_iff_outdegree_above_1", true, dup_cols == any_deg_above_1);

    add("edge_laplacian_null_at_least_edges_minus_active_tails", true,
        out.null_dim_edge_laplacian >= m - r_active);

    // null(A W) sits inside null(edge Laplacian)
    {
        bool inside = true;
        const Matrix null_aw = null_space_orthonormal(aw, default_rank_tolerance(aw));
        if (!null_aw.empty()) {
            const Matrix image = le * null_aw;
            inside = image.max_abs() <= 1e-8 * std::max(1.0, le.max_abs());
        }
        add("weighted_out_incidence_null_inside_edge_laplacian_null", true, inside);
    }

    if (connected) {
        if (any_sink) {
            add("edge_laplacian_null_matches_out_incidence_null_with_sink", true,
                out.null_dim_edge_laplacian == out.null_dim_weighted_out_incidence);
        } else {
            add("edge_laplacian_null_strictly_larger_without_sink", true,
                out.null_dim_edge_laplacian >= out.null_dim_weighted_out_incidence + 1);
        }
    }

    if (rep.globally_reachable.size() >= 2) {
        const bool all_active = r_active == n;
        add("multiple_roots_imply_every_node_has_outgoing_edge", true, all_active);

        // solve A x = ones by selecting one outgoing edge per node, then verify
        bool ones_in_range = all_active;
        if (all_active) {
            std::vector<double> x(static_cast<size_t>(m), 0.0);
            std::vector<bool> covered(static_cast<size_t>(n) + 1, false);
            for (EdgeId e = 0; e < m; ++e) {
                const NodeId t = g.edge(e).tail;
                if (!covered[static_cast<size_t>(t)]) {
                    covered[static_cast<size_t>(t)] = true;
                    x[static_cast<size_t>(e)] = 1.0;
                }
            }
            const std::vector<double> image = mat_vec(inc.out_incidence, x);
            for (double v : image)
                if (std::fabs(v - 1.0) > 1e-12) ones_in_range = false;
        }
        add("multiple_roots_imply_ones_in_out_incidence_range", true, ones_in_range);
    }

    if (rep.has_in_branching) {
        add("graph_laplacian_rank_nodes_minus_1", true, out.rank_graph_laplacian == n - 1);
        add("edge_laplacian_null_dim_edges_minus_nodes_plus_1", true,
            out.null_dim_edge_laplacian == m - n + 1);

        double min_re = std::numeric_limits<double>::infinity();
        for (const Complex& z : eigenvalues(lg)) min_re = std::min(min_re, z.real());
        add("graph_laplacian_spectrum_in_closed_right_half_plane", true, min_re >= -1e-9);
    }

    {
        const double zero_tol = 1e-7 * std::max(1.0, lg.max_abs());
        const auto nz_g = drop_zeros(eigenvalues(lg), zero_tol);
        const auto nz_e = drop_zeros(eigenvalues(le), zero_tol);
        add("graph_and_edge_laplacian_share_nonzero_spectrum", true,
            same_multiset(nz_g, nz_e, 1e-8 * std::max(1.0, lg.max_abs())));
    }

    return out;
}

} // namespace edgemargin
