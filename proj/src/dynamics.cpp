#include "edgemargin/dynamics.hpp"

#include "edgemargin/factorization.hpp"
#include "edgemargin/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace edgemargin {

namespace {

/// Graph Laplacian with delta applied additively to one edge weight.
Matrix perturbed_graph_laplacian(const Digraph& g, std::optional<EdgeId> edge, double delta) {
    const int n = g.node_count();
    Matrix lap(n, n);
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
        const Edge& ed = g.edge(e);
        const double w = ed.weight + (edge && *edge == e ? delta : 0.0);
        lap(ed.tail - 1, ed.tail - 1) += w;
        lap(ed.tail - 1, ed.head - 1) -= w;
    }
    return lap;
}

Matrix perturbed_reduced_matrix(const Factorization& fac, const BranchingDecomposition& dec,
                                std::optional<EdgeId> edge, double delta) {
    Matrix w = fac.weight_diag;
    if (edge) {
        const int p = dec.permutation[static_cast<size_t>(*edge)];
        w(p, p) += delta;
    }
    return fac.incidence_tau.transposed() * fac.out_incidence * w * fac.r.transposed();
}

void rk4_step(const Matrix& minus_a, std::vector<double>& x, double dt,
              std::vector<double>& k1, std::vector<double>& k2, std::vector<double>& k3,
              std::vector<double>& k4, std::vector<double>& tmp) {
    const size_t n = x.size();
    k1 = mat_vec(minus_a, x);
    for (size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
    k2 = mat_vec(minus_a, tmp);
    for (size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
    k3 = mat_vec(minus_a, tmp);
    for (size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
    k4 = mat_vec(minus_a, tmp);
    for (size_t i = 0; i < n; ++i)
        x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

double spread_of(const std::vector<double>& x) {
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    return *hi - *lo;
}

} // namespace

double default_time_step(const Digraph& g) {
    const double rho = spectral_radius(graph_laplacian(build_incidence(g)));
    return rho > 0.0 ? 1e-3 / rho : 1e-3;
}

double default_horizon(const Digraph& g) {
    const Matrix lap = graph_laplacian(build_incidence(g));
    const double scale = std::max(1.0, lap.max_abs());
    double min_pos = std::numeric_limits<double>::infinity();
    for (const Complex& z : eigenvalues(lap))
        if (z.real() > 1e-9 * scale) min_pos = std::min(min_pos, z.real());
    return std::isfinite(min_pos) ? 50.0 / min_pos : 1.0;
}

Trajectory simulate(const Digraph& g, const std::vector<double>& x0,
                    std::optional<EdgeId> edge, double delta, double t_end, double dt) {
    const int n = g.node_count();
    if (static_cast<int>(x0.size()) != n)
        throw GraphError("simulate: initial state size does not match node count");
    if (!(dt > 0.0) || !(t_end >= dt))
        throw GraphError("simulate: need dt > 0 and t_end >= dt");
    if (edge && (*edge < 0 || *edge >= g.edge_count()))
        throw GraphError("simulate: edge id out of range");

    const Matrix minus_lap = perturbed_graph_laplacian(g, edge, delta).scaled(-1.0);

    // branching-edge picture, co-integrated when available
    bool with_edges = false;
    Matrix minus_reduced;
    Matrix incidence_tau;
    std::vector<int> node_label;
    if (reachability(g).has_in_branching && n >= 2) {
        const BranchingDecomposition dec = find_in_branching(g);
        const Factorization fac = factorize(g, dec);
        minus_reduced = perturbed_reduced_matrix(fac, dec, edge, delta).scaled(-1.0);
        incidence_tau = fac.incidence_tau;
        node_label = dec.node_label;
        with_edges = true;
    }

    auto edge_states_of = [&](const std::vector<double>& x) {
        std::vector<double> perm(static_cast<size_t>(n));
        for (NodeId v = 1; v <= n; ++v)
            perm[static_cast<size_t>(node_label[static_cast<size_t>(v)]) - 1] =
                x[static_cast<size_t>(v) - 1];
        return mat_vec(incidence_tau.transposed(), perm);
    };

    Trajectory traj;
    traj.edge_picture_checked = with_edges;
    const long steps = std::lround(t_end / dt);

    std::vector<double> x = x0;
    std::vector<double> xt;
    if (with_edges) xt = edge_states_of(x);

    std::vector<double> k1, k2, k3, k4, tmp(x.size());
    std::vector<double> ek1, ek2, ek3, ek4, etmp(xt.size());

    auto record = [&](double t) {
        traj.times.push_back(t);
        traj.states.push_back(x);
        traj.spread.push_back(spread_of(x));
        if (with_edges) {
            const std::vector<double> expect = edge_states_of(x);
            for (size_t i = 0; i < xt.size(); ++i)
                traj.max_edge_state_mismatch =
                    std::max(traj.max_edge_state_mismatch, std::fabs(xt[i] - expect[i]));
        }
    };

    record(0.0);
    for (long k = 1; k <= steps; ++k) {
        rk4_step(minus_lap, x, dt, k1, k2, k3, k4, tmp);
        if (with_edges) rk4_step(minus_reduced, xt, dt, ek1, ek2, ek3, ek4, etmp);

        bool finite = true;
        for (double v : x)
            if (!std::isfinite(v)) finite = false;
        if (!finite || spread_of(x) > kOverflowSpread) {
            traj.overflowed = true;
            if (finite) record(static_cast<double>(k) * dt);
            break;
        }
        record(static_cast<double>(k) * dt);
    }
    return traj;
}

const char* to_string(OutcomeKind k) {
    switch (k) {
        case OutcomeKind::consensus: return "consensus";
        case OutcomeKind::clustering: return "clustering";
        case OutcomeKind::divergence: return "divergence";
    }
    return "unknown";
}

Outcome classify(const Trajectory& traj, const Digraph& g, std::optional<EdgeId> edge,
                 double delta) {
    if (traj.spread.empty()) throw GraphError("classify: empty trajectory");
    Outcome out;
    out.final_spread = traj.spread.back();

    const size_t count = traj.spread.size();
    const size_t i90 = count > 10 ? (count * 9) / 10 : 0;

    bool grew_monotonically = count - i90 >= 2;
    for (size_t i = i90 + 1; i < count && grew_monotonically; ++i)
        if (traj.spread[i] < traj.spread[i - 1]) grew_monotonically = false;
    grew_monotonically =
        grew_monotonically && traj.spread.back() > traj.spread[i90] * (1.0 + 1e-9);

    const bool tail_decreasing = traj.spread.back() <= traj.spread[i90] + 1e-12;

    if (!traj.overflowed && out.final_spread < 1e-6 && tail_decreasing) {
        out.kind = OutcomeKind::consensus;
        double sum = 0.0;
        for (double v : traj.states.back()) sum += v;
        out.consensus_value = sum / static_cast<double>(traj.states.back().size());
    } else if (traj.overflowed || grew_monotonically) {
        out.kind = OutcomeKind::divergence;
    } else {
        out.kind = OutcomeKind::clustering;
        std::vector<double> fin = traj.states.back();
        std::sort(fin.begin(), fin.end());
        int clusters = 1;
        for (size_t i = 1; i < fin.size(); ++i)
            if (fin[i] - fin[i - 1] > 1e-3) ++clusters;
        out.cluster_count = clusters;
    }

    // spectral cross-check on the perturbed branching-edge matrix
    const BranchingDecomposition dec = find_in_branching(g);
    const Factorization fac = factorize(g, dec);
    const Matrix reduced = perturbed_reduced_matrix(fac, dec, edge, delta);
    double min_re = std::numeric_limits<double>::infinity();
    double min_abs_re = std::numeric_limits<double>::infinity();
    for (const Complex& z : eigenvalues(reduced)) {
        min_re = std::min(min_re, z.real());
        min_abs_re = std::min(min_abs_re, std::fabs(z.real()));
    }
    if (min_re < -1e-9)
        out.spectral_kind = OutcomeKind::divergence;
    else if (min_abs_re <= 1e-9)
        out.spectral_kind = OutcomeKind::clustering;
    else
        out.spectral_kind = OutcomeKind::consensus;
    return out;
}

std::vector<FrequencyResponseSample> nyquist_samples(const UncertainEdgeSystem& sys,
                                                     double delta, int n_points) {
    if (n_points < 2) throw GraphError("nyquist_samples: need at least two points");
    double rho = spectral_radius(sys.a_mat);
    if (!(rho > 0.0)) rho = 1.0;

    std::vector<FrequencyResponseSample> samples;
    samples.reserve(static_cast<size_t>(n_points) + 1);

    // negative-feedback loop locus: instability onset touches (-1, 0)
    auto loop_at = [&](double omega) {
        return -delta * eval_transfer(sys, Complex(0.0, omega));
    };

    samples.push_back({0.0, loop_at(0.0)});
    const double lo = 1e-4 * rho;
    const double hi = 1e4 * rho;
    const double step = std::pow(hi / lo, 1.0 / (n_points - 1));
    for (int k = 0; k < n_points; ++k) {
        const double omega = lo * std::pow(step, k);
        samples.push_back({omega, loop_at(omega)});
    }
    return samples;
}

} // namespace edgemargin
