#include "edgemargin/robustness.hpp"

#include "edgemargin/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace edgemargin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kGridPoints = 2000;
constexpr double kGridLow = 1e-6;
constexpr double kGridHigh = 1e3;
constexpr double kBisectRel = 1e-10;

std::vector<double> column_of(const Matrix& m, int j) {
    std::vector<double> v(static_cast<size_t>(m.rows()));
    for (int i = 0; i < m.rows(); ++i) v[static_cast<size_t>(i)] = m(i, j);
    return v;
}

} // namespace

const char* to_string(BoundMethod m) {
    switch (m) {
        case BoundMethod::nyquist_gm: return "nyquist_gm";
        case BoundMethod::dag_closed_form: return "dag_closed_form";
        case BoundMethod::cycle_closed_form: return "cycle_closed_form";
    }
    return "unknown";
}

UncertainEdgeSystem build_uncertain_system(const Digraph& g, const BranchingDecomposition& dec,
                                           const Factorization& fac, EdgeId edge) {
    if (edge < 0 || edge >= g.edge_count())
        throw GraphError("build_uncertain_system: edge id out of range");
    const int n_tau = fac.node_count() - 1;
    const int p = dec.permutation[static_cast<size_t>(edge)];

    UncertainEdgeSystem sys;
    sys.perturbed_edge = edge;
    sys.permuted_index = p;

    const Matrix et_a = fac.incidence_tau.transposed() * fac.out_incidence;
    sys.a_mat = (et_a * fac.weight_diag * fac.r.transposed()).scaled(-1.0);
    sys.b_vec = Matrix(n_tau, 1);
    for (int i = 0; i < n_tau; ++i) sys.b_vec(i, 0) = -et_a(i, p);
    sys.c_vec = Matrix(1, n_tau);
    for (int i = 0; i < n_tau; ++i) sys.c_vec(0, i) = fac.r(i, p);
    return sys;
}

Complex eval_transfer(const UncertainEdgeSystem& sys, Complex s) {
    const std::vector<double> b = column_of(sys.b_vec, 0);
    const std::vector<Complex> z = solve_shifted(sys.a_mat, s, b);
    Complex out(0.0, 0.0);
    for (int k = 0; k < sys.c_vec.cols(); ++k) out += sys.c_vec(0, k) * z[static_cast<size_t>(k)];
    return out;
}

GainMarginResult gain_margin(const UncertainEdgeSystem& sys) {
    GainMarginResult best;
    best.gain = kInf;

    auto consider = [&](double omega, Complex m) {
        if (m.real() >= 0.0) return;
        const double mag = std::abs(m);
        if (mag <= 0.0) return;
        const double gm = 1.0 / mag;
        if (!best.has_crossover || gm < best.gain) {
            best.has_crossover = true;
            best.gain = gm;
            best.crossover_freq = omega;
            best.m_at_crossover = m.real();
        }
    };

    // omega = 0 first: M(0) is real for a real state space
    consider(0.0, eval_transfer(sys, Complex(0.0, 0.0)));

    double rho = spectral_radius(sys.a_mat);
    if (!(rho > 0.0)) rho = 1.0;
    const double lo = kGridLow * rho;
    const double hi = kGridHigh * rho;
    const double step = std::pow(hi / lo, 1.0 / (kGridPoints - 1));

    auto at = [&](double omega) { return eval_transfer(sys, Complex(0.0, omega)); };

    double w_prev = lo;
    Complex m_prev = at(w_prev);
    if (std::fabs(m_prev.imag()) <= 1e-14 * (1.0 + std::abs(m_prev))) consider(w_prev, m_prev);
    for (int k = 1; k < kGridPoints; ++k) {
        const double w_cur = lo * std::pow(step, k);
        const Complex m_cur = at(w_cur);
        if (std::fabs(m_cur.imag()) <= 1e-14 * (1.0 + std::abs(m_cur))) {
            consider(w_cur, m_cur);
        } else if (m_prev.imag() * m_cur.imag() < 0.0) {
            // bisect the bracket on Im M
            double a = w_prev, b = w_cur;
            double fa = m_prev.imag();
            while (b - a > kBisectRel * b) {
                const double mid = 0.5 * (a + b);
                const double fm = at(mid).imag();
                if (fa * fm <= 0.0) {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            const double w_root = 0.5 * (a + b);
            consider(w_root, at(w_root));
        }
        w_prev = w_cur;
        m_prev = m_cur;
    }

    if (!best.has_crossover) {
        best.gain = kInf;
        best.crossover_freq = std::numeric_limits<double>::quiet_NaN();
        best.m_at_crossover = 0.0;
    }
    return best;
}

PerturbationBound dag_bound(const Digraph& g, const BranchingDecomposition& dec,
                            const Factorization& fac, EdgeId edge) {
    const ReachabilityReport rep = reachability(g);
    if (!rep.is_acyclic) throw NotAcyclic("dag_bound: graph has a directed cycle");
    if (!fac.r_tilde)
        throw MultipleGloballyReachable("dag_bound: more than one globally reachable node");

    const int p = dec.permutation[static_cast<size_t>(edge)];
    const Matrix d = inverse(*fac.r_tilde * fac.weight_diag * fac.r.transposed());

    // alpha = r_p^T D rtilde_p; the bound is 1/|alpha|
    double alpha = 0.0;
    for (int i = 0; i < d.rows(); ++i)
        for (int j = 0; j < d.cols(); ++j)
            alpha += fac.r(i, p) * d(i, j) * (*fac.r_tilde)(j, p);
    if (alpha == 0.0) throw IllConditioned("dag_bound: degenerate resolvent value");
    const double bound_resolvent = 1.0 / std::fabs(alpha);

    const double bound_out_sum = g.out_weight_sum(g.edge(edge).tail);
    if (std::fabs(bound_resolvent - bound_out_sum) > 1e-9 * std::max(1.0, bound_out_sum))
        throw Error("dag_bound: resolvent and out-weight forms disagree");

    PerturbationBound b;
    b.edge = edge;
    b.method = BoundMethod::dag_closed_form;
    b.delta_min = -bound_out_sum;
    b.delta_max = kInf;
    b.crossover_freq = 0.0;
    b.m_at_crossover = -alpha;
    return b;
}

ShermanMorrisonResult sherman_morrison_inverse(const Factorization& fac,
                                               const Matrix& weight_diag) {
    if (!fac.r_tilde)
        throw MultipleGloballyReachable(
            "sherman_morrison_inverse: tail-selector factorization undefined");
    const int n_tau = fac.node_count() - 1;
    const int m = fac.edge_count();

    ShermanMorrisonResult out;
    out.inverse = Matrix(n_tau, n_tau);
    for (int k = 0; k < n_tau; ++k) out.inverse(k, k) = 1.0 / weight_diag(k, k);

    std::vector<double> dr(static_cast<size_t>(n_tau));  // D * rtilde
    std::vector<double> rd(static_cast<size_t>(n_tau));  // r^T * D
    for (int p = n_tau; p < m; ++p) {
        const double w = weight_diag(p, p);
        Matrix& d = out.inverse;
        double denom = 1.0;
        for (int i = 0; i < n_tau; ++i) {
            double s_dr = 0.0, s_rd = 0.0;
            for (int j = 0; j < n_tau; ++j) {
                s_dr += d(i, j) * (*fac.r_tilde)(j, p);
                s_rd += fac.r(j, p) * d(j, i);
            }
            dr[static_cast<size_t>(i)] = s_dr;
            rd[static_cast<size_t>(i)] = s_rd;
        }
        double r_dr = 0.0;
        for (int i = 0; i < n_tau; ++i) r_dr += fac.r(i, p) * dr[static_cast<size_t>(i)];
        denom += w * r_dr;
        if (std::fabs(denom) < 1e-12)
            throw DegenerateUpdate("sherman_morrison_inverse: vanishing update denominator");

        std::vector<int> touched;
        const double ref = std::max(1.0, d.max_abs());
        for (int i = 0; i < n_tau; ++i) {
            bool row_changed = false;
            const double f = w * dr[static_cast<size_t>(i)] / denom;
            for (int j = 0; j < n_tau; ++j) {
                const double delta = f * rd[static_cast<size_t>(j)];
                if (delta != 0.0) {
                    d(i, j) -= delta;
                    if (std::fabs(delta) > 1e-14 * ref) row_changed = true;
                }
            }
            if (row_changed) touched.push_back(i);
        }
        out.updated_rows.push_back(std::move(touched));
    }
    return out;
}

PerturbationBound cycle_bound(const Digraph& g, EdgeId edge) {
    if (!reachability(g).is_simple_cycle)
        throw NotSimpleCycle("cycle_bound: graph is not a simple directed cycle");
    if (edge < 0 || edge >= g.edge_count())
        throw GraphError("cycle_bound: edge id out of range");

    const double w_j = g.edge(edge).weight;
    double series_resistance = 0.0; // sum of 1/w over the remaining path
    for (EdgeId e = 0; e < g.edge_count(); ++e)
        if (e != edge) series_resistance += 1.0 / g.edge(e).weight;

    PerturbationBound b;
    b.edge = edge;
    b.method = BoundMethod::cycle_closed_form;
    b.delta_min = -w_j - 1.0 / series_resistance;
    b.delta_max = kInf;
    b.crossover_freq = 0.0;
    b.m_at_crossover = -series_resistance / (1.0 + w_j * series_resistance);
    b.equivalent_resistance = series_resistance;
    return b;
}

namespace {

PerturbationBound nyquist_bound(EdgeId edge, const GainMarginResult& gm) {
    PerturbationBound b;
    b.edge = edge;
    b.method = BoundMethod::nyquist_gm;
    b.delta_min = gm.has_crossover ? -gm.gain : -kInf;
    b.delta_max = gm.has_crossover ? gm.gain : kInf;
    b.crossover_freq = gm.crossover_freq;
    b.m_at_crossover = gm.m_at_crossover;
    return b;
}

EdgeRobustness bound_for_edge_prepared(const Digraph& g, const ReachabilityReport& rep,
                                       const BranchingDecomposition& dec,
                                       const Factorization& fac, EdgeId edge) {
    const UncertainEdgeSystem sys = build_uncertain_system(g, dec, fac, edge);
    const PerturbationBound nyq = nyquist_bound(edge, gain_margin(sys));

    EdgeRobustness out;
    if (rep.is_simple_cycle) {
        out.bound = cycle_bound(g, edge);
        out.nyquist = nyq;
    } else if (rep.is_acyclic && fac.r_tilde) {
        out.bound = dag_bound(g, dec, fac, edge);
        out.nyquist = nyq;
    } else {
        out.bound = nyq;
    }
    return out;
}

} // namespace

EdgeRobustness bound_for_edge(const Digraph& g, EdgeId edge) {
    const ReachabilityReport rep = reachability(g);
    if (!rep.has_in_branching)
        throw NoInBranching("bound_for_edge: graph has no globally reachable node");
    const BranchingDecomposition dec = find_in_branching(g);
    const Factorization fac = factorize(g, dec);
    return bound_for_edge_prepared(g, rep, dec, fac, edge);
}

std::vector<std::pair<EdgeId, EdgeRobustness>> rank_edges(const Digraph& g) {
    const ReachabilityReport rep = reachability(g);
    if (!rep.has_in_branching)
        throw NoInBranching("rank_edges: graph has no globally reachable node");
    const BranchingDecomposition dec = find_in_branching(g);
    const Factorization fac = factorize(g, dec);

    std::vector<std::pair<EdgeId, EdgeRobustness>> out;
    out.reserve(static_cast<size_t>(g.edge_count()));
    for (EdgeId e = 0; e < g.edge_count(); ++e)
        out.emplace_back(e, bound_for_edge_prepared(g, rep, dec, fac, e));

    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        const double ma = std::fabs(a.second.bound.delta_min);
        const double mb = std::fabs(b.second.bound.delta_min);
        if (ma != mb) return ma < mb;
        return a.first < b.first;
    });
    return out;
}

} // namespace edgemargin
