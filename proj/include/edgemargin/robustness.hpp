#pragma once

#include "edgemargin/digraph.hpp"
#include "edgemargin/factorization.hpp"
#include "edgemargin/matrix.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace edgemargin {

/// State-space realization of the scalar transfer function seen by an
/// additive perturbation of one edge weight: the branching-edge dynamics
/// with the perturbed edge's weight channel pulled out as feedback.
/// Closing the loop with gain delta reproduces the dynamics with
/// W + delta * P_i P_i^T in place of W.
struct UncertainEdgeSystem {
    Matrix a_mat;  // (n-1)x(n-1), -E_tau^T A W R^T; Hurwitz for positive weights
    Matrix b_vec;  // (n-1)x1,     -E_tau^T A P_i
    Matrix c_vec;  // 1x(n-1),      P_i^T R^T
    EdgeId perturbed_edge = -1;
    int permuted_index = -1;
};

UncertainEdgeSystem build_uncertain_system(const Digraph& g, const BranchingDecomposition& dec,
                                           const Factorization& fac, EdgeId edge);

/// M(s) = c (sI - a)^-1 b, one complex linear solve per call.
/// Throws SingularAtS when s hits a pole.
Complex eval_transfer(const UncertainEdgeSystem& sys, Complex s);

struct GainMarginResult {
    double gain = 0.0;           // 1/|M| at the binding phase crossover; +inf when none
    double crossover_freq = 0.0; // rad/s
    double m_at_crossover = 0.0; // M there (real and negative)
    bool has_crossover = false;
};

/// Gain margin of M(s): omega = 0 is checked first (M(0) is real),
/// further negative-real-axis crossings are located by sign-change
/// bisection of Im M(j*omega) on a log grid scaled by the spectral
/// radius of a_mat. The crossing with the largest |M| binds.
GainMarginResult gain_margin(const UncertainEdgeSystem& sys);

enum class BoundMethod { nyquist_gm, dag_closed_form, cycle_closed_form };

const char* to_string(BoundMethod m);

/// Admissible additive perturbation interval for one edge weight,
/// always containing 0.
struct PerturbationBound {
    EdgeId edge = -1;
    double delta_min = 0.0; // may be -inf
    double delta_max = 0.0; // may be +inf
    BoundMethod method = BoundMethod::nyquist_gm;
    double crossover_freq = 0.0;
    double m_at_crossover = 0.0;
    // cycle only: series resistance (sum of reciprocal weights) of the
    // path left when the perturbed edge is removed
    std::optional<double> equivalent_resistance;
};

/// Closed-form bound for an acyclic graph with a single globally
/// reachable node, computed two ways and cross-asserted: the resolvent
/// formula through (R_tilde W R^T)^-1 and the sum of the out-edge
/// weights at the perturbed edge's tail. Throws NotAcyclic /
/// MultipleGloballyReachable when the graph is outside the class.
PerturbationBound dag_bound(const Digraph& g, const BranchingDecomposition& dec,
                            const Factorization& fac, EdgeId edge);

struct ShermanMorrisonResult {
    Matrix inverse; // (R_tilde W R^T)^-1
    // per complement-edge step, the branching rows whose entries changed
    std::vector<std::vector<int>> updated_rows;
};

/// (R_tilde W R^T)^-1 built incrementally from W_tau^-1, one rank-one
/// update per complement edge. Throws DegenerateUpdate when an update
/// denominator vanishes, MultipleGloballyReachable when R_tilde is not
/// defined. The weight matrix is a parameter so perturbed weights can be
/// analyzed.
ShermanMorrisonResult sherman_morrison_inverse(const Factorization& fac,
                                               const Matrix& weight_diag);

/// Closed-form bound for a simple directed cycle: the perturbed weight
/// must stay above the negative reciprocal of the series resistance of
/// the remaining path. Unbounded above. Throws NotSimpleCycle.
PerturbationBound cycle_bound(const Digraph& g, EdgeId edge);

/// Applicable bound for one edge plus the Nyquist companion whenever a
/// closed form was used.
struct EdgeRobustness {
    PerturbationBound bound;
    std::optional<PerturbationBound> nyquist;
};

EdgeRobustness bound_for_edge(const Digraph& g, EdgeId edge);

/// Every edge's bound, most vulnerable first (smallest |delta_min|,
/// ties by edge id).
std::vector<std::pair<EdgeId, EdgeRobustness>> rank_edges(const Digraph& g);

} // namespace edgemargin
