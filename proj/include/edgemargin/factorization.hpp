#pragma once

#include "edgemargin/digraph.hpp"
#include "edgemargin/matrix.hpp"

#include <optional>
#include <vector>

namespace edgemargin {

/// Incidence factorization of a digraph relative to a rooted
/// in-branching. All matrices live in the permuted view: edge columns
/// ordered [tau_edges | c_edges], node rows ordered by the relabeling
/// in which branching edge k exits node k and the root is node n.
///
/// R = [I  T] reproduces the incidence matrix as E = E_tau * R; its
/// trailing columns are the signed path vectors of the complement
/// edges, built combinatorially on the branching tree and cross-checked
/// against the least-squares expression for T. When the graph has
/// exactly one globally reachable node the analogous tail-selector
/// factorization A = A_tau * R_tilde exists as well, with each
/// complement column replicating its sibling's standard basis column.
struct Factorization {
    // permuted incidence data
    Matrix incidence;          // n x m
    Matrix out_incidence;      // n x m
    Matrix weight_diag;        // m x m
    Matrix incidence_tau;      // n x (n-1), first columns of incidence
    Matrix out_incidence_tau;  // n x (n-1)

    Matrix r;                          // (n-1) x m, [I | signed paths]
    Matrix t_tau;                      // (n-1) x (m-n+1), least-squares form
    std::optional<Matrix> r_tilde;     // (n-1) x m, only with a single globally reachable node
    std::optional<Matrix> t_tilde;     // trailing columns of r_tilde
    Matrix null_basis;                 // m x (m-n+1), orthonormal basis of null(R)
    std::vector<std::vector<int>> signed_paths; // per c-edge, entries in {-1,0,+1}

    int node_count() const { return incidence.rows(); }
    int edge_count() const { return incidence.cols(); }

    /// Weight vector in permuted edge order.
    std::vector<double> weights() const;
};

/// Build the factorization for a digraph and one of its in-branching
/// decompositions. Throws IllConditioned when the normal-matrix solve
/// behind the least-squares form fails (malformed decomposition).
Factorization factorize(const Digraph& g, const BranchingDecomposition& dec);

/// Signed path vector of one complement edge: the unique unoriented
/// tree path in the branching from the edge's tail to its head, with
/// +1/-1 marking forward/backward traversal of each branching edge.
std::vector<int> signed_path(const Digraph& g, const BranchingDecomposition& dec, EdgeId c_edge);

/// E_tau^T * A * W * R^T, the system matrix of the branching-edge
/// dynamics. Its eigenvalues are the nonzero graph Laplacian
/// eigenvalues; with positive weights they sit in the open right half
/// plane.
Matrix reduced_matrix(const Digraph& g, const BranchingDecomposition& dec,
                      const Factorization& fac);

struct SimilarityResidual {
    double off_block = 0.0;         // norm of the block that must vanish
    double inverse_residual = 0.0;  // ||S_inv * S - I||_max
};

/// Transform the graph Laplacian with S = [E_tau (E_tau^T E_tau)^-1, ones/n]
/// and report how far the upper-right block is from zero.
SimilarityResidual similarity_check_graph(const Digraph& g, const BranchingDecomposition& dec,
                                          const Factorization& fac);

/// Transform the edge Laplacian with V = [R^T, N_tau] and report how far
/// the trailing rows are from zero.
SimilarityResidual similarity_check_edge(const Digraph& g, const BranchingDecomposition& dec,
                                         const Factorization& fac);

/// Cycle-only transforms that reduce both Laplacians to block diagonal
/// form; off_block is the larger of the two off-diagonal block norms.
struct CycleSimilarityResiduals {
    SimilarityResidual graph;
    SimilarityResidual edge;
};
CycleSimilarityResiduals similarity_check_cycle(const Digraph& g,
                                                const BranchingDecomposition& dec,
                                                const Factorization& fac);

} // namespace edgemargin
