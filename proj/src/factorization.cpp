#include "edgemargin/factorization.hpp"

#include "edgemargin/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace edgemargin {

namespace {

/// Undirected adjacency over the branching edges:
/// node -> (neighbour, tau position, +1 when leaving along the edge direction).
struct TreeHop {
    NodeId to;
    int tau_pos;
    int direction;
};

std::vector<std::vector<TreeHop>> tau_tree(const Digraph& g, const BranchingDecomposition& dec) {
    std::vector<std::vector<TreeHop>> adj(static_cast<size_t>(g.node_count()) + 1);
    for (size_t k = 0; k < dec.tau_edges.size(); ++k) {
        const Edge& e = g.edge(dec.tau_edges[k]);
        adj[static_cast<size_t>(e.tail)].push_back({e.head, static_cast<int>(k), +1});
        adj[static_cast<size_t>(e.head)].push_back({e.tail, static_cast<int>(k), -1});
    }
    return adj;
}

} // namespace

std::vector<int> signed_path(const Digraph& g, const BranchingDecomposition& dec, EdgeId c_edge) {
    const int n = g.node_count();
    const Edge& ce = g.edge(c_edge);
    const auto adj = tau_tree(g, dec);

    // BFS through the unoriented branching from the edge's tail
    std::vector<int> prev_node(static_cast<size_t>(n) + 1, -1);
    std::vector<int> prev_hop(static_cast<size_t>(n) + 1, -1);
    std::vector<int> prev_dir(static_cast<size_t>(n) + 1, 0);
    std::deque<NodeId> queue{ce.tail};
    prev_node[static_cast<size_t>(ce.tail)] = ce.tail;
    while (!queue.empty() && prev_node[static_cast<size_t>(ce.head)] < 0) {
        const NodeId v = queue.front();
        queue.pop_front();
        for (const TreeHop& hop : adj[static_cast<size_t>(v)]) {
            if (prev_node[static_cast<size_t>(hop.to)] >= 0) continue;
            prev_node[static_cast<size_t>(hop.to)] = v;
            prev_hop[static_cast<size_t>(hop.to)] = hop.tau_pos;
            prev_dir[static_cast<size_t>(hop.to)] = hop.direction;
            queue.push_back(hop.to);
        }
    }
    if (prev_node[static_cast<size_t>(ce.head)] < 0)
        throw GraphError("internal: branching does not span the complement edge");

    std::vector<int> path(static_cast<size_t>(n) - 1, 0);
    for (NodeId v = ce.head; v != ce.tail; v = prev_node[static_cast<size_t>(v)])
        path[static_cast<size_t>(prev_hop[static_cast<size_t>(v)])] = prev_dir[static_cast<size_t>(v)];
    return path;
}

Factorization factorize(const Digraph& g, const BranchingDecomposition& dec) {
    const int n = g.node_count();
    const int m = g.edge_count();
    const int n_tau = n - 1;
    const int n_c = m - n_tau;

    Factorization fac;
    fac.incidence = Matrix(n, m);
    fac.out_incidence = Matrix(n, m);
    fac.weight_diag = Matrix(m, m);
    for (EdgeId e = 0; e < m; ++e) {
        const Edge& ed = g.edge(e);
        const int col = dec.permutation[static_cast<size_t>(e)];
        const int tail_row = dec.node_label[static_cast<size_t>(ed.tail)] - 1;
        const int head_row = dec.node_label[static_cast<size_t>(ed.head)] - 1;
        fac.incidence(tail_row, col) = 1.0;
        fac.incidence(head_row, col) = -1.0;
        fac.out_incidence(tail_row, col) = 1.0;
        fac.weight_diag(col, col) = ed.weight;
    }
    fac.incidence_tau = fac.incidence.sub_block(0, 0, n, n_tau);
    fac.out_incidence_tau = fac.out_incidence.sub_block(0, 0, n, n_tau);

    // R = [I | combinatorial signed paths]
    fac.r = Matrix(n_tau, m);
    for (int k = 0; k < n_tau; ++k) fac.r(k, k) = 1.0;
    fac.signed_paths.reserve(static_cast<size_t>(n_c));
    for (int j = 0; j < n_c; ++j) {
        auto path = signed_path(g, dec, dec.c_edges[static_cast<size_t>(j)]);
        for (int k = 0; k < n_tau; ++k) fac.r(k, n_tau + j) = static_cast<double>(path[static_cast<size_t>(k)]);
        fac.signed_paths.push_back(std::move(path));
    }

    // least-squares form of the trailing block, kept for cross-checking
    if (n_c > 0) {
        const Matrix et = fac.incidence_tau.transposed();
        const Matrix normal = et * fac.incidence_tau;
        const Matrix rhs = et * fac.incidence.sub_block(0, n_tau, n, n_c);
        try {
            fac.t_tau = solve_linear(normal, rhs);
        } catch (const SingularMatrix&) {
            throw IllConditioned("factorize: normal matrix of the branching incidence is singular");
        }
    } else {
        fac.t_tau = Matrix(n_tau, 0);
    }

    // tail-selector factorization, defined only for a single globally
    // reachable node (equivalently: the root has no outgoing edge)
    const bool single_root = g.out_degrees()[static_cast<size_t>(dec.root)] == 0;
    if (single_root) {
        Matrix t_tilde(n_tau, n_c);
        for (int j = 0; j < n_c; ++j) {
            const EdgeId ce = dec.c_edges[static_cast<size_t>(j)];
            const EdgeId sib = dec.sibling_in_tau[static_cast<size_t>(ce)];
            if (sib < 0)
                throw GraphError("internal: complement edge without sibling despite single root");
            t_tilde(dec.tau_position(sib), j) = 1.0;
        }
        Matrix r_tilde(n_tau, m);
        for (int k = 0; k < n_tau; ++k) r_tilde(k, k) = 1.0;
        for (int j = 0; j < n_c; ++j)
            for (int k = 0; k < n_tau; ++k) r_tilde(k, n_tau + j) = t_tilde(k, j);
        fac.t_tilde = std::move(t_tilde);
        fac.r_tilde = std::move(r_tilde);
    }

    // orthonormal basis of null(R) from the cycle-space vectors [-T; I]
    if (n_c > 0) {
        Matrix cycles(m, n_c);
        for (int j = 0; j < n_c; ++j) {
            for (int k = 0; k < n_tau; ++k) cycles(k, j) = -fac.r(k, n_tau + j);
            cycles(n_tau + j, j) = 1.0;
        }
        fac.null_basis = orthonormalize_columns(cycles);
    } else {
        fac.null_basis = Matrix(m, 0);
    }
    return fac;
}

std::vector<double> Factorization::weights() const {
    std::vector<double> w(static_cast<size_t>(edge_count()));
    for (int i = 0; i < edge_count(); ++i) w[static_cast<size_t>(i)] = weight_diag(i, i);
    return w;
}

Matrix reduced_matrix(const Digraph& g, const BranchingDecomposition& dec,
                      const Factorization& fac) {
    (void)g;
    (void)dec;
    return fac.incidence_tau.transposed() * fac.out_incidence * fac.weight_diag *
           fac.r.transposed();
}

SimilarityResidual similarity_check_graph(const Digraph& g, const BranchingDecomposition& dec,
                                          const Factorization& fac) {
    (void)g;
    (void)dec;
    const int n = fac.node_count();
    const Matrix lap = fac.out_incidence * fac.weight_diag * fac.incidence.transposed();

    const Matrix et = fac.incidence_tau.transposed();
    const Matrix basis = solve_linear(et * fac.incidence_tau, et); // (E^T E)^-1 E^T
    Matrix s(n, n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k + 1 < n; ++k) s(i, k) = basis(k, i); // E (E^T E)^-1
        s(i, n - 1) = 1.0 / n;
    }
    Matrix s_inv(n, n);
    for (int k = 0; k + 1 < n; ++k)
        for (int i = 0; i < n; ++i) s_inv(k, i) = fac.incidence_tau(i, k);
    for (int i = 0; i < n; ++i) s_inv(n - 1, i) = 1.0;

    const Matrix reduced = s_inv * lap * s;
    SimilarityResidual res;
    res.off_block = n > 1 ? reduced.sub_block(0, n - 1, n - 1, 1).max_abs() : 0.0;
    res.inverse_residual = (s_inv * s - Matrix::identity(n)).max_abs();
    return res;
}

SimilarityResidual similarity_check_edge(const Digraph& g, const BranchingDecomposition& dec,
                                         const Factorization& fac) {
    (void)g;
    (void)dec;
    const int n = fac.node_count();
    const int m = fac.edge_count();
    const int n_tau = n - 1;
    const int n_c = m - n_tau;
    const Matrix lap = fac.incidence.transposed() * fac.out_incidence * fac.weight_diag;

    const Matrix rt = fac.r.transposed();
    const Matrix left = solve_linear(fac.r * rt, fac.r); // (R R^T)^-1 R
    Matrix v(m, m);
    Matrix v_inv(m, m);
    for (int i = 0; i < m; ++i) {
        for (int k = 0; k < n_tau; ++k) {
            v(i, k) = rt(i, k);
            v_inv(k, i) = left(k, i);
        }
        for (int j = 0; j < n_c; ++j) {
            v(i, n_tau + j) = fac.null_basis(i, j);
            v_inv(n_tau + j, i) = fac.null_basis(i, j);
        }
    }
    const Matrix reduced = v_inv * lap * v;
    SimilarityResidual res;
    res.off_block = n_c > 0 ? reduced.sub_block(n_tau, 0, n_c, m).max_abs() : 0.0;
    res.inverse_residual = (v_inv * v - Matrix::identity(m)).max_abs();
    return res;
}

CycleSimilarityResiduals similarity_check_cycle(const Digraph& g,
                                                const BranchingDecomposition& dec,
                                                const Factorization& fac) {
    (void)dec;
    if (!reachability(g).is_simple_cycle)
        throw NotSimpleCycle("cycle similarity check requires a simple directed cycle");
    const int n = fac.node_count();
    const int m = fac.edge_count(); // equals n for a cycle
    const int n_tau = n - 1;

    const std::vector<double> w = fac.weights();
    double conductance = 0.0; // sum of 1/w_i
    for (double wi : w) conductance += 1.0 / wi;

    CycleSimilarityResiduals out;

    // graph side: S1 = [W E_tau (E_tau^T W E_tau)^-1 | ones/conductance]
    {
        const Matrix lap = fac.out_incidence * fac.weight_diag * fac.incidence.transposed();
        const Matrix we_tau = fac.weight_diag * fac.incidence_tau; // W is m x m = n x n here
        const Matrix gram = fac.incidence_tau.transposed() * we_tau;
        const Matrix head = we_tau * inverse(gram);
        Matrix s1(n, n);
        Matrix s1_inv(n, n);
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < n_tau; ++k) {
                s1(i, k) = head(i, k);
                s1_inv(k, i) = fac.incidence_tau(i, k);
            }
            s1(i, n - 1) = 1.0 / conductance;
            s1_inv(n - 1, i) = 1.0 / w[static_cast<size_t>(i)]; // row i of W^-1 acts on node i
        }
        const Matrix reduced = s1_inv * lap * s1;
        out.graph.off_block = std::max(reduced.sub_block(0, n - 1, n_tau, 1).max_abs(),
                                       reduced.sub_block(n - 1, 0, 1, n_tau).max_abs());
        out.graph.inverse_residual = (s1_inv * s1 - Matrix::identity(n)).max_abs();
    }

    // edge side: S2 = [R^T | W^-1 ones]
    {
        const Matrix lap = fac.incidence.transposed() * fac.out_incidence * fac.weight_diag;
        const Matrix rt = fac.r.transposed();
        const Matrix rw = fac.r * fac.weight_diag;
        const Matrix left = solve_linear(rw * rt, rw); // (R W R^T)^-1 R W
        Matrix s2(m, m);
        Matrix s2_inv(m, m);
        for (int i = 0; i < m; ++i) {
            for (int k = 0; k < n_tau; ++k) {
                s2(i, k) = rt(i, k);
                s2_inv(k, i) = left(k, i);
            }
            s2(i, m - 1) = 1.0 / w[static_cast<size_t>(i)];
            s2_inv(m - 1, i) = 1.0 / conductance;
        }
        const Matrix reduced = s2_inv * lap * s2;
        out.edge.off_block = std::max(reduced.sub_block(0, m - 1, n_tau, 1).max_abs(),
                                      reduced.sub_block(m - 1, 0, 1, n_tau).max_abs());
        out.edge.inverse_residual = (s2_inv * s2 - Matrix::identity(m)).max_abs();
    }
    return out;
}

} // namespace edgemargin
