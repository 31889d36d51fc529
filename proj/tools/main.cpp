#include "edgemargin/dynamics.hpp"
#include "edgemargin/edge_list.hpp"
#include "edgemargin/linalg.hpp"
#include "edgemargin/robustness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>

using json = nlohmann::ordered_json;
using namespace edgemargin;

namespace {

// exit codes shared with the documentation
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kImpossible = 2;
constexpr int kNumeric = 3;

json finite_or_tag(double v) {
    if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
    return json(v);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw GraphError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

EdgeId resolve_edge(const Digraph& g, const std::vector<std::string>& labels) {
    const auto tail = g.node_by_label(labels[0]);
    const auto head = g.node_by_label(labels[1]);
    if (!tail) throw GraphError("unknown node label '" + labels[0] + "'");
    if (!head) throw GraphError("unknown node label '" + labels[1] + "'");
    const auto e = g.find_edge(*tail, *head);
    if (!e) throw GraphError("no edge " + labels[0] + " -> " + labels[1] + " in the input");
    return *e;
}

json edge_json(const Digraph& g, EdgeId e) {
    const Edge& ed = g.edge(e);
    return json{{"tail", g.label(ed.tail)},
                {"head", g.label(ed.head)},
                {"index", e},
                {"weight", ed.weight}};
}

json bound_json(const Digraph& g, const PerturbationBound& b) {
    json out{{"edge", edge_json(g, b.edge)},
             {"method", to_string(b.method)},
             {"delta_min", finite_or_tag(b.delta_min)},
             {"delta_max", finite_or_tag(b.delta_max)},
             {"min_admissible_weight", finite_or_tag(g.edge(b.edge).weight + b.delta_min)},
             {"crossover_freq", std::isnan(b.crossover_freq) ? json(nullptr)
                                                             : json(b.crossover_freq)},
             {"m_at_crossover", b.m_at_crossover}};
    if (b.equivalent_resistance) out["equivalent_resistance"] = *b.equivalent_resistance;
    return out;
}

json robustness_json(const Digraph& g, const EdgeRobustness& rob) {
    json out = bound_json(g, rob.bound);
    if (rob.nyquist) out["nyquist"] = bound_json(g, *rob.nyquist);
    return out;
}

std::string graph_class(const ReachabilityReport& rep) {
    if (rep.is_simple_cycle) return "simple_cycle";
    if (rep.is_acyclic && rep.globally_reachable.size() == 1) return "acyclic_single_root";
    return "general";
}

int cmd_analyze(const std::string& path) {
    const Digraph g = parse_edge_list(read_file(path));
    const ReachabilityReport rep = reachability(g);

    json out;
    json reachable = json::array();
    for (NodeId v : rep.globally_reachable) reachable.push_back(g.label(v));
    out["graph"] = {{"nodes", g.node_count()},
                    {"edges", g.edge_count()},
                    {"class", graph_class(rep)},
                    {"is_acyclic", rep.is_acyclic},
                    {"is_simple_cycle", rep.is_simple_cycle},
                    {"has_in_branching", rep.has_in_branching},
                    {"globally_reachable", reachable}};

    if (!rep.has_in_branching) {
        out["error"] = {{"kind", "no_in_branching"},
                        {"message", "no node is reachable from every other node, so the "
                                    "consensus protocol cannot agree and no analysis is "
                                    "possible"}};
        std::cout << out.dump(2) << "\n";
        return kImpossible;
    }

    const BranchingDecomposition dec = find_in_branching(g);
    out["root"] = g.label(dec.root);

    const StructureReport st = structure_report(g);
    json degrees = json::object();
    for (NodeId v = 1; v <= g.node_count(); ++v)
        degrees[g.label(v)] = st.out_degrees[static_cast<size_t>(v)];
    json checks = json::array();
    for (const StructureCheck& c : st.checks)
        checks.push_back({{"name", c.name}, {"satisfied", c.satisfied}});
    out["structure"] = {{"rank_graph_laplacian", st.rank_graph_laplacian},
                        {"null_dim_edge_laplacian", st.null_dim_edge_laplacian},
                        {"null_dim_weighted_out_incidence", st.null_dim_weighted_out_incidence},
                        {"out_degrees", degrees},
                        {"checks", checks}};

    json warnings = json::array();
    if (rep.globally_reachable.size() > 1 && !rep.is_simple_cycle)
        warnings.push_back("multiple globally reachable nodes: only the Nyquist margin applies");
    if (!rep.is_simple_cycle && !rep.is_acyclic && rep.globally_reachable.size() == 1)
        warnings.push_back("graph is neither acyclic nor a simple cycle: closed forms unavailable");

    // bounds in input order; the rank subcommand orders by vulnerability
    std::vector<json> bounds(static_cast<size_t>(g.edge_count()));
    for (const auto& [e, rob] : rank_edges(g))
        bounds[static_cast<size_t>(e)] = robustness_json(g, rob);
    out["bounds"] = bounds;
    out["warnings"] = warnings;

    std::cout << out.dump(2) << "\n";
    return kOk;
}

int cmd_bound(const std::string& path, const std::vector<std::string>& edge_labels) {
    const Digraph g = parse_edge_list(read_file(path));
    const EdgeId e = resolve_edge(g, edge_labels);
    std::cout << robustness_json(g, bound_for_edge(g, e)).dump(2) << "\n";
    return kOk;
}

int cmd_rank(const std::string& path) {
    const Digraph g = parse_edge_list(read_file(path));
    json ranking = json::array();
    for (const auto& [e, rob] : rank_edges(g)) {
        (void)e;
        ranking.push_back(robustness_json(g, rob));
    }
    std::cout << json{{"ranking", ranking}}.dump(2) << "\n";
    return kOk;
}

std::vector<double> parse_initial_state(const std::string& text, int n) {
    std::vector<double> x0;
    if (text == "spread") {
        // deterministic zero-mean ramp
        for (int i = 1; i <= n; ++i) x0.push_back(i - 0.5 * (n + 1));
        return x0;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            x0.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw GraphError("cannot parse initial state entry '" + item + "'");
        }
    }
    if (static_cast<int>(x0.size()) != n)
        throw GraphError("initial state needs exactly one value per node");
    return x0;
}

int cmd_simulate(const std::string& path, const std::vector<std::string>& edge_labels,
                 double delta, const std::string& x0_text, double t_end_opt, double dt_opt,
                 const std::string& out_path) {
    const Digraph g = parse_edge_list(read_file(path));
    std::optional<EdgeId> edge;
    if (!edge_labels.empty()) edge = resolve_edge(g, edge_labels);

    const std::vector<double> x0 = parse_initial_state(x0_text, g.node_count());
    const double dt = dt_opt > 0.0 ? dt_opt : default_time_step(g);
    const double t_end = t_end_opt > 0.0 ? t_end_opt : default_horizon(g);

    const Trajectory traj = simulate(g, x0, edge, delta, t_end, dt);
    const Outcome outcome = classify(traj, g, edge, delta);

    if (!out_path.empty()) {
        std::ofstream csv(out_path);
        if (!csv) throw GraphError("cannot write '" + out_path + "'");
        csv << "t";
        for (int i = 1; i <= g.node_count(); ++i) csv << ",x_" << i;
        csv << ",spread\n";
        char buf[32];
        for (size_t k = 0; k < traj.times.size(); ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g", traj.times[k]);
            csv << buf;
            for (double v : traj.states[k]) {
                std::snprintf(buf, sizeof(buf), "%.17g", v);
                csv << ',' << buf;
            }
            std::snprintf(buf, sizeof(buf), "%.17g", traj.spread[k]);
            csv << ',' << buf << '\n';
        }
    }

    json out{{"outcome", to_string(outcome.kind)},
             {"spectral_outcome", to_string(outcome.spectral_kind)},
             {"final_spread", outcome.final_spread},
             {"samples", traj.times.size()},
             {"t_end", t_end},
             {"dt", dt},
             {"overflowed", traj.overflowed}};
    if (outcome.kind == OutcomeKind::consensus) out["consensus_value"] = outcome.consensus_value;
    if (outcome.kind == OutcomeKind::clustering) out["cluster_count"] = outcome.cluster_count;
    if (traj.edge_picture_checked)
        out["max_edge_state_mismatch"] = traj.max_edge_state_mismatch;
    if (!out_path.empty()) out["trajectory_csv"] = out_path;
    std::cout << out.dump(2) << "\n";
    return kOk;
}

int cmd_nyquist(const std::string& path, const std::vector<std::string>& edge_labels,
                double delta, int points, const std::string& out_path) {
    const Digraph g = parse_edge_list(read_file(path));
    const EdgeId e = resolve_edge(g, edge_labels);
    const BranchingDecomposition dec = find_in_branching(g);
    const Factorization fac = factorize(g, dec);
    const UncertainEdgeSystem sys = build_uncertain_system(g, dec, fac, e);

    std::ostringstream csv;
    csv << "omega,re,im\n";
    char buf[32];
    for (const FrequencyResponseSample& s : nyquist_samples(sys, delta, points)) {
        std::snprintf(buf, sizeof(buf), "%.17g", s.omega);
        csv << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", s.value.real());
        csv << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", s.value.imag());
        csv << buf << '\n';
    }
    if (out_path.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream file(out_path);
        if (!file) throw GraphError("cannot write '" + out_path + "'");
        file << csv.str();
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// hidden selftest: randomized consistency checks, seeded by EDGEMARGIN_SEED
// ---------------------------------------------------------------------------

unsigned selftest_seed() {
    if (const char* env = std::getenv("EDGEMARGIN_SEED")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return 20240611u;
}

Digraph selftest_dag(std::mt19937& rng, int n, int max_m) {
    std::uniform_real_distribution<double> weight(0.1, 3.0);
    std::vector<Edge> edges;
    std::set<std::pair<NodeId, NodeId>> seen;
    for (NodeId v = 1; v < n; ++v) {
        std::uniform_int_distribution<NodeId> pick(v + 1, n);
        const NodeId h = pick(rng);
        if (seen.insert({v, h}).second) edges.push_back({v, h, weight(rng)});
    }
    std::uniform_int_distribution<NodeId> tail(1, n - 1);
    for (int attempts = 0; attempts < 4 * max_m; ++attempts) {
        if (static_cast<int>(edges.size()) >= max_m) break;
        const NodeId t = tail(rng);
        std::uniform_int_distribution<NodeId> pick(t + 1, n);
        const NodeId h = pick(rng);
        if (seen.insert({t, h}).second) edges.push_back({t, h, weight(rng)});
    }
    return Digraph(n, std::move(edges));
}

int cmd_selftest(int count) {
    std::mt19937 rng(selftest_seed());
    std::uniform_int_distribution<int> sizes(3, 8);
    int failures = 0;
    json checks = json::array();

    auto report = [&](const char* name, bool ok) {
        checks.push_back({{"name", name}, {"passed", ok}});
        if (!ok) ++failures;
    };

    for (int trial = 0; trial < count; ++trial) {
        const int n = sizes(rng);
        const Digraph g = selftest_dag(rng, n, std::min(2 * n, 16));
        const BranchingDecomposition dec = find_in_branching(g);
        const Factorization fac = factorize(g, dec);

        const bool reconstructs =
            (fac.incidence - fac.incidence_tau * fac.r).max_abs() <= 1e-10 &&
            fac.r_tilde.has_value() &&
            (fac.out_incidence - fac.out_incidence_tau * *fac.r_tilde).max_abs() <= 1e-10;
        report("incidence_factorizations_reconstruct", reconstructs);

        const auto sm = sherman_morrison_inverse(fac, fac.weight_diag);
        const Matrix direct = inverse(*fac.r_tilde * fac.weight_diag * fac.r.transposed());
        report("rank_one_updates_match_direct_inverse",
               (sm.inverse - direct).max_abs() <= 1e-10);

        std::uniform_int_distribution<EdgeId> pick(0, g.edge_count() - 1);
        const EdgeId e = pick(rng);
        const PerturbationBound b = dag_bound(g, dec, fac, e);
        const auto gm = gain_margin(build_uncertain_system(g, dec, fac, e));
        report("margin_matches_out_weight_sum",
               std::fabs(gm.gain + b.delta_min) <= 1e-6 * std::max(1.0, gm.gain));
    }

    std::uniform_int_distribution<int> cycle_sizes(3, 10);
    std::uniform_real_distribution<double> weight(0.1, 3.0);
    for (int trial = 0; trial < count; ++trial) {
        const int n = cycle_sizes(rng);
        std::vector<Edge> edges;
        for (NodeId v = 1; v <= n; ++v) edges.push_back({v, v % n + 1, weight(rng)});
        const Digraph g(n, std::move(edges));
        std::uniform_int_distribution<EdgeId> pick(0, n - 1);
        const EdgeId e = pick(rng);

        const PerturbationBound b = cycle_bound(g, e);
        double series = 0.0;
        for (EdgeId i = 0; i < n; ++i)
            if (i != e) series += 1.0 / g.edge(i).weight;
        report("cycle_bound_matches_series_resistance",
               std::fabs(b.delta_min + g.edge(e).weight + 1.0 / series) <= 1e-12);

        const BranchingDecomposition dec = find_in_branching(g);
        const Factorization fac = factorize(g, dec);
        const auto gm = gain_margin(build_uncertain_system(g, dec, fac, e));
        report("cycle_margin_binds_at_zero_frequency",
               std::fabs(gm.gain + b.delta_min) <= 1e-6 * std::max(1.0, gm.gain) &&
                   gm.crossover_freq <= 1e-5);
    }

    json out{{"seed", selftest_seed()},
             {"graphs", 2 * count},
             {"failures", failures},
             {"checks", checks}};
    std::cout << out.dump(2) << "\n";
    return failures == 0 ? kOk : kNumeric;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"edgemargin: how far can one edge weight of a directed consensus network "
                 "be perturbed before agreement breaks"};
    app.require_subcommand(1);

    std::string file;
    std::vector<std::string> edge_labels;
    std::string x0_text = "spread";
    std::string out_path;
    double delta = 0.0;
    double t_end = 0.0;
    double dt = 0.0;
    int points = 512;
    int selftest_count = 25;

    CLI::App* analyze = app.add_subcommand("analyze", "structure census and per-edge bounds");
    analyze->add_option("file", file, "edge list file")->required();

    CLI::App* bound = app.add_subcommand("bound", "perturbation bound for one edge");
    bound->add_option("file", file, "edge list file")->required();
    bound->add_option("--edge", edge_labels, "edge as TAIL HEAD labels")
        ->expected(2)
        ->required();

    CLI::App* rank = app.add_subcommand("rank", "edges ordered most vulnerable first");
    rank->add_option("file", file, "edge list file")->required();

    CLI::App* sim = app.add_subcommand("simulate", "integrate the protocol and classify");
    sim->add_option("file", file, "edge list file")->required();
    sim->add_option("--edge", edge_labels, "perturbed edge as TAIL HEAD labels")->expected(2);
    sim->add_option("--delta", delta, "additive weight perturbation");
    sim->add_option("--x0", x0_text, "comma-separated initial states, or 'spread'");
    sim->add_option("--t-end", t_end, "horizon (default: 50 over the slowest mode)");
    sim->add_option("--dt", dt, "step (default: 1e-3 over the spectral radius)");
    sim->add_option("--out", out_path, "trajectory CSV path");

    CLI::App* nyq = app.add_subcommand("nyquist", "loop locus samples for one edge");
    nyq->add_option("file", file, "edge list file")->required();
    nyq->add_option("--edge", edge_labels, "edge as TAIL HEAD labels")->expected(2)->required();
    nyq->add_option("--delta", delta, "loop gain (weight perturbation)");
    nyq->add_option("--points", points, "log-grid point count")->check(CLI::PositiveNumber);
    nyq->add_option("--out", out_path, "CSV path (stdout when omitted)");

    CLI::App* selftest = app.add_subcommand("selftest", "randomized consistency checks");
    selftest->add_option("--count", selftest_count, "graphs per family")
        ->check(CLI::PositiveNumber);
    selftest->group(""); // hidden

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (analyze->parsed()) return cmd_analyze(file);
        if (bound->parsed()) return cmd_bound(file, edge_labels);
        if (rank->parsed()) return cmd_rank(file);
        if (sim->parsed())
            return cmd_simulate(file, edge_labels, delta, x0_text, t_end, dt, out_path);
        if (nyq->parsed()) return cmd_nyquist(file, edge_labels, delta, points, out_path);
        if (selftest->parsed()) return cmd_selftest(selftest_count);
    } catch (const ParseError& e) {
        std::cout << json{{"error", {{"kind", "parse"}, {"line", e.line()}, {"message", e.what()}}}}
                         .dump(2)
                  << "\n";
        return kUsage;
    } catch (const NoInBranching& e) {
        std::cout << json{{"error", {{"kind", "no_in_branching"}, {"message", e.what()}}}}.dump(2)
                  << "\n";
        return kImpossible;
    } catch (const RootNotReachable& e) {
        std::cout << json{{"error", {{"kind", "root_not_reachable"}, {"message", e.what()}}}}
                         .dump(2)
                  << "\n";
        return kImpossible;
    } catch (const GraphError& e) {
        std::cout << json{{"error", {{"kind", "usage"}, {"message", e.what()}}}}.dump(2) << "\n";
        return kUsage;
    } catch (const Error& e) {
        std::cout << json{{"error", {{"kind", "numeric"}, {"message", e.what()}}}}.dump(2) << "\n";
        return kNumeric;
    } catch (const std::exception& e) {
        std::cout << json{{"error", {{"kind", "internal"}, {"message", e.what()}}}}.dump(2)
                  << "\n";
        return kNumeric;
    }
    return kUsage;
}
