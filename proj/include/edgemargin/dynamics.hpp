#pragma once

#include "edgemargin/digraph.hpp"
#include "edgemargin/robustness.hpp"

#include <optional>
#include <vector>

namespace edgemargin {

/// Fixed-step trajectory of the node states, with the running spread
/// (max - min per sample). Integration stops early when the spread
/// passes the overflow guard.
struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> states; // node states in input order
    std::vector<double> spread;
    bool overflowed = false;
    bool edge_picture_checked = false;
    double max_edge_state_mismatch = 0.0; // against E_tau^T x, co-integrated
};

/// Spread level treated as divergence.
inline constexpr double kOverflowSpread = 1e6;

/// 1e-3 over the spectral radius of the nominal graph Laplacian.
double default_time_step(const Digraph& g);

/// 50 over the smallest positive real part in the nominal spectrum.
double default_horizon(const Digraph& g);

/// Integrate x' = -L x with the classical 4th-order scheme, applying
/// delta additively to one edge weight when given. When the graph has an
/// in-branching the branching-edge system is integrated alongside and
/// compared against E_tau^T x each step.
Trajectory simulate(const Digraph& g, const std::vector<double>& x0,
                    std::optional<EdgeId> edge, double delta, double t_end, double dt);

enum class OutcomeKind { consensus, clustering, divergence };

const char* to_string(OutcomeKind k);

struct Outcome {
    OutcomeKind kind = OutcomeKind::consensus;
    double consensus_value = 0.0; // when kind == consensus
    int cluster_count = 0;        // when kind == clustering
    double final_spread = 0.0;
    // spectrum-based classification of the same run, for cross-checking
    OutcomeKind spectral_kind = OutcomeKind::consensus;
};

/// Rule-based classification of a finished trajectory plus the
/// spectral verdict from the perturbed branching-edge matrix.
Outcome classify(const Trajectory& traj, const Digraph& g, std::optional<EdgeId> edge,
                 double delta);

struct FrequencyResponseSample {
    double omega = 0.0;
    Complex value;
};

/// Nyquist locus of the perturbation loop at gain delta: omega = 0
/// followed by n_points log-spaced frequencies. Values use the
/// negative-feedback loop convention, so the locus touches (-1, 0)
/// exactly when delta sits at the stability boundary.
std::vector<FrequencyResponseSample> nyquist_samples(const UncertainEdgeSystem& sys,
                                                     double delta, int n_points);

} // namespace edgemargin
