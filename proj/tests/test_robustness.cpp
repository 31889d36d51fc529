#include <doctest.h>

#include "edgemargin/linalg.hpp"
#include "edgemargin/robustness.hpp"
#include "oracle.hpp"
#include "test_graphs.hpp"

#include <cmath>
#include <random>

using namespace edgemargin;

namespace {

Digraph unit_cycle(int n) {
    std::vector<Edge> edges;
    for (NodeId v = 1; v <= n; ++v) edges.push_back({v, v % n + 1, 1.0});
    return Digraph(n, std::move(edges));
}

struct Prepared {
    Digraph g;
    BranchingDecomposition dec;
    Factorization fac;
};

Prepared prepare(Digraph g) {
    BranchingDecomposition dec = find_in_branching(g);
    Factorization fac = factorize(g, dec);
    return {std::move(g), std::move(dec), std::move(fac)};
}

} // namespace

TEST_CASE("single edge transfer function is -1/(s+w)") {
    const auto p = prepare(Digraph(2, {{1, 2, 2.0}}));
    const UncertainEdgeSystem sys = build_uncertain_system(p.g, p.dec, p.fac, 0);
    CHECK(sys.a_mat(0, 0) == doctest::Approx(-2.0));

    const Complex m0 = eval_transfer(sys, Complex(0.0, 0.0));
    CHECK(m0.real() == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(std::fabs(m0.imag()) <= 1e-15);

    const Complex mj = eval_transfer(sys, Complex(0.0, 1.0));
    // -1/(j+2) = (-2+j)/5
    CHECK(mj.real() == doctest::Approx(-0.4).epsilon(1e-12));
    CHECK(mj.imag() == doctest::Approx(0.2).epsilon(1e-12));

    CHECK_THROWS_AS(eval_transfer(sys, Complex(-2.0, 0.0)), SingularAtS);

    const auto gm = gain_margin(sys);
    CHECK(gm.gain == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(gm.crossover_freq == 0.0);
    CHECK(gm.m_at_crossover == doctest::Approx(-0.5).epsilon(1e-9));
}

TEST_CASE("static feedback through the pulled-out channel reproduces the perturbed system") {
    std::mt19937 rng(83);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 6);
        const Digraph g = testing::random_branching_digraph(rng, n, 2 * n + 2);
        const auto p = prepare(g);
        std::uniform_int_distribution<EdgeId> pick(0, g.edge_count() - 1);
        const EdgeId edge = pick(rng);
        std::uniform_real_distribution<double> deltas(-2.0, 2.0);
        const double delta = deltas(rng);

        const UncertainEdgeSystem sys = build_uncertain_system(p.g, p.dec, p.fac, edge);
        const Matrix closed = sys.a_mat + sys.b_vec.scaled(delta) * sys.c_vec;

        Matrix w = p.fac.weight_diag;
        w(sys.permuted_index, sys.permuted_index) += delta;
        const Matrix direct = (p.fac.incidence_tau.transposed() * p.fac.out_incidence * w *
                               p.fac.r.transposed()).scaled(-1.0);
        CHECK((closed - direct).max_abs() <= 1e-12);
    }
}

TEST_CASE("unit 3-cycle: M(0), gain margin, and closed form all line up") {
    const Digraph g = unit_cycle(3);
    const auto p = prepare(g);
    const UncertainEdgeSystem sys = build_uncertain_system(p.g, p.dec, p.fac, 0);

    const Complex m0 = eval_transfer(sys, Complex(0.0, 0.0));
    CHECK(m0.real() == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));

    const auto gm = gain_margin(sys);
    CHECK(gm.gain == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(gm.crossover_freq == 0.0);

    const PerturbationBound b = cycle_bound(g, 0);
    CHECK(b.delta_min == doctest::Approx(-1.5).epsilon(1e-12));
    CHECK(std::isinf(b.delta_max));
    CHECK(*b.equivalent_resistance == doctest::Approx(2.0));
    CHECK(b.m_at_crossover == doctest::Approx(-2.0 / 3.0));
}

TEST_CASE("general cycle M(0) matches the closed-form expression") {
    std::mt19937 rng(89);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 6);
        const Digraph g = testing::random_cycle(rng, n);
        const auto p = prepare(g);
        std::uniform_int_distribution<EdgeId> pick(0, n - 1);
        const EdgeId edge = pick(rng);
        const UncertainEdgeSystem sys = build_uncertain_system(p.g, p.dec, p.fac, edge);

        double series = 0.0;
        for (EdgeId e = 0; e < n; ++e)
            if (e != edge) series += 1.0 / g.edge(e).weight;
        const double expected = -series / (1.0 + g.edge(edge).weight * series);
        CHECK(eval_transfer(sys, Complex(0.0, 0.0)).real() ==
              doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("transfer function is strictly proper") {
    std::mt19937 rng(97);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 5);
        const Digraph g = testing::random_branching_digraph(rng, n, 2 * n);
        const auto p = prepare(g);
        const UncertainEdgeSystem sys = build_uncertain_system(p.g, p.dec, p.fac, 0);
        const double rho = spectral_radius(sys.a_mat);
        CHECK(std::abs(eval_transfer(sys, Complex(0.0, 1e6 * rho))) < 1e-3);
    }
}

TEST_CASE("acyclic bound: an edge with no sibling tolerates exactly its own weight") {
    const Digraph path(3, {{1, 2, 2.0}, {2, 3, 3.0}});
    const auto p = prepare(path);
    const PerturbationBound b = dag_bound(p.g, p.dec, p.fac, 0);
    CHECK(b.delta_min == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(std::isinf(b.delta_max));
    CHECK(b.method == BoundMethod::dag_closed_form);
}

TEST_CASE("acyclic bound equals the out-weight sum and the spectral referee agrees") {
    const Digraph g(3, {{1, 3, 2.0}, {1, 2, 3.0}, {2, 3, 1.0}});
    const auto p = prepare(g);
    const EdgeId edge = *g.find_edge(1, 3);
    const PerturbationBound b = dag_bound(p.g, p.dec, p.fac, edge);
    CHECK(b.delta_min == doctest::Approx(-5.0).epsilon(1e-9));

    const double critical = testing::critical_negative_delta(g, edge);
    CHECK(b.delta_min == doctest::Approx(critical).epsilon(1e-6));
}

TEST_CASE("acyclic bound rejects graphs outside its class") {
    const Digraph cyc = unit_cycle(3);
    const auto p = prepare(cyc);
    CHECK_THROWS_AS(dag_bound(p.g, p.dec, p.fac, 0), NotAcyclic);
}

TEST_CASE("acyclic bound, gain margin, and referee agree on random graphs") {
    std::mt19937 rng(101);
    for (int trial = 0; trial < 15; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 6);
        const Digraph g = testing::random_dag_single_sink(rng, n, 2 * n + 2);
        const auto p = prepare(g);
        std::uniform_int_distribution<EdgeId> pick(0, g.edge_count() - 1);
        const EdgeId edge = pick(rng);

        const PerturbationBound b = dag_bound(p.g, p.dec, p.fac, edge);
        const double out_sum = g.out_weight_sum(g.edge(edge).tail);
        CHECK(std::fabs(-b.delta_min - out_sum) <= 1e-9);

        const auto gm = gain_margin(build_uncertain_system(p.g, p.dec, p.fac, edge));
        CHECK(gm.gain == doctest::Approx(out_sum).epsilon(1e-6));

        const double critical = testing::critical_negative_delta(g, edge);
        CHECK(b.delta_min == doctest::Approx(critical).epsilon(1e-5));
    }
}

TEST_CASE("rank-one update chain reproduces the direct inverse") {
    std::mt19937 rng(103);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 6);
        const Digraph g = testing::random_dag_single_sink(rng, n, 2 * n + 3);
        const auto p = prepare(g);

        const auto sm = sherman_morrison_inverse(p.fac, p.fac.weight_diag);
        const Matrix direct =
            inverse(*p.fac.r_tilde * p.fac.weight_diag * p.fac.r.transposed());
        CHECK((sm.inverse - direct).max_abs() <= 1e-10);

        // rows may only change if they host the sibling added now or changed before
        std::vector<bool> touched(static_cast<size_t>(n - 1), false);
        for (size_t step = 0; step < sm.updated_rows.size(); ++step) {
            const EdgeId ce = p.dec.c_edges[step];
            const EdgeId sib = p.dec.sibling_in_tau[static_cast<size_t>(ce)];
            REQUIRE(sib >= 0);
            const int sib_row = p.dec.tau_position(sib);
            for (int row : sm.updated_rows[step]) {
                const bool allowed = row == sib_row || touched[static_cast<size_t>(row)];
                CHECK(allowed);
            }
            touched[static_cast<size_t>(sib_row)] = true;
        }
    }
}

TEST_CASE("first rank-one update merges sibling weights on the diagonal") {
    // one complement edge 1->3 sharing its tail with branching edge 1->2
    const Digraph g(3, {{1, 2, 1.0}, {2, 3, 1.0}, {1, 3, 1.0}});
    const auto p = prepare(g);
    REQUIRE(p.dec.c_edges.size() == 1);
    const EdgeId sib = p.dec.sibling_in_tau[static_cast<size_t>(p.dec.c_edges[0])];
    const int j = p.dec.tau_position(sib);

    const auto sm = sherman_morrison_inverse(p.fac, p.fac.weight_diag);
    CHECK(sm.inverse(j, j) == doctest::Approx(0.5).epsilon(1e-12));
    REQUIRE(sm.updated_rows.size() == 1);
    CHECK(sm.updated_rows[0] == std::vector<int>{j});

    // no complement edges: the inverse is just the reciprocal branching weights
    const auto path = prepare(Digraph(3, {{1, 2, 2.0}, {2, 3, 4.0}}));
    const auto sm2 = sherman_morrison_inverse(path.fac, path.fac.weight_diag);
    CHECK(sm2.updated_rows.empty());
    for (int k = 0; k < 2; ++k)
        CHECK(sm2.inverse(k, k) ==
              doctest::Approx(1.0 / path.fac.weight_diag(k, k)).epsilon(1e-15));
}

TEST_CASE("rank-one update reports a vanishing denominator") {
    const Digraph g(3, {{1, 2, 1.0}, {2, 3, 1.0}, {1, 3, 1.0}});
    const auto p = prepare(g);
    // drive the complement weight to cancel its sibling exactly
    Matrix w = p.fac.weight_diag;
    const int c_pos = p.dec.tau_position(p.dec.c_edges[0]);
    w(c_pos, c_pos) = -1.0;
    CHECK_THROWS_AS(sherman_morrison_inverse(p.fac, w), DegenerateUpdate);
}

TEST_CASE("cycle bound pinned values") {
    CHECK(cycle_bound(unit_cycle(4), 2).delta_min == doctest::Approx(-4.0 / 3.0).epsilon(1e-12));

    const Digraph weighted(3, {{1, 2, 1.0}, {2, 3, 2.0}, {3, 1, 2.0}});
    CHECK(cycle_bound(weighted, 0).delta_min == doctest::Approx(-2.0).epsilon(1e-12));

    CHECK_THROWS_AS(cycle_bound(Digraph(3, {{1, 2, 1.0}, {2, 3, 1.0}}), 0), NotSimpleCycle);
}

TEST_CASE("homogeneous cycle bound follows -w*n/(n-1) and the referee") {
    for (int n = 3; n <= 8; ++n) {
        const double w = 1.7;
        std::vector<Edge> edges;
        for (NodeId v = 1; v <= n; ++v) edges.push_back({v, v % n + 1, w});
        const Digraph g(n, std::move(edges));
        const PerturbationBound b = cycle_bound(g, 0);
        CHECK(b.delta_min == doctest::Approx(-w * n / (n - 1.0)).epsilon(1e-12));
        CHECK(b.delta_min ==
              doctest::Approx(testing::critical_negative_delta(g, 0)).epsilon(1e-6));
    }
}

TEST_CASE("cycle gain margin binds at zero frequency") {
    std::mt19937 rng(107);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 8);
        const Digraph g = testing::random_cycle(rng, n);
        const auto p = prepare(g);
        std::uniform_int_distribution<EdgeId> pick(0, n - 1);
        const EdgeId edge = pick(rng);

        const PerturbationBound b = cycle_bound(g, edge);
        const auto gm = gain_margin(build_uncertain_system(p.g, p.dec, p.fac, edge));
        CHECK(gm.gain == doctest::Approx(-b.delta_min).epsilon(1e-6));
        CHECK(gm.crossover_freq <= 1e-5);
    }
}

TEST_CASE("dispatcher picks the closed form and carries the margin alongside") {
    const EdgeRobustness cyc = bound_for_edge(unit_cycle(3), 0);
    CHECK(cyc.bound.method == BoundMethod::cycle_closed_form);
    REQUIRE(cyc.nyquist.has_value());
    CHECK(cyc.nyquist->method == BoundMethod::nyquist_gm);
    CHECK(cyc.nyquist->delta_max == doctest::Approx(-cyc.bound.delta_min).epsilon(1e-6));

    const Digraph dag(3, {{1, 3, 2.0}, {1, 2, 3.0}, {2, 3, 1.0}});
    const EdgeRobustness d = bound_for_edge(dag, 0);
    CHECK(d.bound.method == BoundMethod::dag_closed_form);
    CHECK(d.nyquist.has_value());

    // a cycle with an extra chord is neither acyclic nor a simple cycle
    const Digraph general(3, {{1, 2, 1.0}, {2, 3, 1.0}, {3, 1, 1.0}, {1, 3, 0.5}});
    const EdgeRobustness gen = bound_for_edge(general, 0);
    CHECK(gen.bound.method == BoundMethod::nyquist_gm);
    CHECK_FALSE(gen.nyquist.has_value());

    CHECK_THROWS_AS(bound_for_edge(Digraph(4, {{1, 2, 1.0}, {3, 4, 1.0}}), 0), NoInBranching);
}

TEST_CASE("perturbations inside the symmetric margin never destabilize") {
    std::mt19937 rng(109);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 5);
        const Digraph g = testing::random_branching_digraph(rng, n, 2 * n + 2);
        const auto p = prepare(g);
        std::uniform_int_distribution<EdgeId> pick(0, g.edge_count() - 1);
        const EdgeId edge = pick(rng);
        const auto gm = gain_margin(build_uncertain_system(p.g, p.dec, p.fac, edge));
        if (!gm.has_crossover) continue;

        for (int k = 0; k < 20; ++k) {
            const double delta = gm.gain * 0.999 * (2.0 * (k + 0.5) / 20.0 - 1.0);
            CHECK(testing::perturbed_stable(g, p.dec, p.fac, edge, delta));
        }
    }
}

TEST_CASE("gain margin never certifies past the spectral referee") {
    std::mt19937 rng(113);
    for (int trial = 0; trial < 12; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 5);
        const Digraph g = testing::random_branching_digraph(rng, n, 2 * n + 2);
        std::uniform_int_distribution<EdgeId> pick(0, g.edge_count() - 1);
        const EdgeId edge = pick(rng);
        const auto rob = bound_for_edge(g, edge);
        const PerturbationBound& nyq = rob.nyquist ? *rob.nyquist : rob.bound;
        if (std::isinf(nyq.delta_min)) continue;
        const double critical = testing::critical_negative_delta(g, edge);
        CHECK(nyq.delta_min >= critical - 1e-6 * std::max(1.0, std::fabs(critical)));
    }
}

TEST_CASE("edge ranking orders by the tolerated negative perturbation") {
    // ties on a unit cycle resolve by edge id
    const auto ranked_cycle = rank_edges(unit_cycle(4));
    REQUIRE(ranked_cycle.size() == 4);
    for (size_t i = 0; i < 4; ++i) CHECK(ranked_cycle[i].first == static_cast<EdgeId>(i));

    // the two-parent DAG: the light parent's edges are more vulnerable
    const Digraph dag(4, {{1, 2, 0.2}, {1, 4, 0.3}, {2, 4, 2.0}, {3, 4, 1.0}, {3, 2, 1.5}});
    const auto ranked = rank_edges(dag);
    REQUIRE(ranked.size() == 5);
    // parent sums: node1 = 0.5, node2 = 2.0, node3 = 2.5
    CHECK(dag.edge(ranked[0].first).tail == 1);
    CHECK(dag.edge(ranked[1].first).tail == 1);
    CHECK(std::fabs(ranked[0].second.bound.delta_min) <=
          std::fabs(ranked.back().second.bound.delta_min));

    // most vulnerable edge matches the smallest referee critical value
    std::mt19937 rng(127);
    const Digraph g = testing::random_branching_digraph(rng, 5, 10);
    const auto ranking = rank_edges(g);
    double best = std::numeric_limits<double>::infinity();
    for (EdgeId e = 0; e < g.edge_count(); ++e)
        best = std::min(best, std::fabs(testing::critical_negative_delta(g, e)));
    CHECK(std::fabs(ranking.front().second.bound.delta_min) ==
          doctest::Approx(best).epsilon(1e-5));
}

TEST_CASE("the margin is insensitive to which root anchors the branching") {
    // multiple globally reachable nodes leave the root genuinely free
    std::mt19937 rng(151);
    for (int trial = 0; trial < 6; ++trial) {
        const int n = 4 + static_cast<int>(rng() % 3);
        std::vector<Edge> edges;
        for (NodeId v = 1; v <= n; ++v) edges.push_back({v, v % n + 1, testing::random_weight(rng)});
        edges.push_back({1, 3, testing::random_weight(rng)});
        const Digraph g(n, std::move(edges));
        const ReachabilityReport rep = reachability(g);
        REQUIRE(rep.globally_reachable.size() >= 2);

        std::uniform_int_distribution<EdgeId> pick(0, g.edge_count() - 1);
        const EdgeId edge = pick(rng);
        double reference = 0.0;
        bool first = true;
        for (NodeId root : rep.globally_reachable) {
            const BranchingDecomposition dec = find_in_branching(g, root);
            const Factorization fac = factorize(g, dec);
            const auto gm = gain_margin(build_uncertain_system(g, dec, fac, edge));
            if (first) {
                reference = gm.gain;
                first = false;
            } else if (std::isinf(reference)) {
                CHECK(std::isinf(gm.gain));
            } else {
                CHECK(gm.gain == doctest::Approx(reference).epsilon(1e-8));
            }
        }
    }
}
