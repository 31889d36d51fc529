#include "edgemargin/edge_list.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace edgemargin {

Digraph parse_edge_list(const std::string& text) {
    std::vector<Edge> edges;
    std::vector<std::string> labels;
    std::map<std::string, NodeId> ids;
    std::set<std::pair<NodeId, NodeId>> seen;

    auto intern = [&](const std::string& label) {
        const auto it = ids.find(label);
        if (it != ids.end()) return it->second;
        labels.push_back(label);
        const NodeId v = static_cast<NodeId>(labels.size());
        ids.emplace(label, v);
        return v;
    };

    std::istringstream stream(text);
    std::string line;
    int lineno = 0;
    while (std::getline(stream, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);

        std::istringstream fields(line);
        std::string tail, head, weight_text;
        if (!(fields >> tail)) continue; // blank
        if (!(fields >> head >> weight_text))
            throw ParseError(lineno, "expected `tail head weight`");
        std::string extra;
        if (fields >> extra) throw ParseError(lineno, "unexpected trailing field '" + extra + "'");

        double weight = 0.0;
        try {
            size_t used = 0;
            weight = std::stod(weight_text, &used);
            if (used != weight_text.size()) throw std::invalid_argument("trailing junk");
        } catch (const std::exception&) {
            throw ParseError(lineno, "weight '" + weight_text + "' is not a number");
        }
        if (!std::isfinite(weight) || weight <= 0.0)
            throw ParseError(lineno, "weight must be a finite positive number");
        if (tail == head) throw ParseError(lineno, "self-loop on '" + tail + "'");

        const NodeId t = intern(tail);
        const NodeId h = intern(head);
        if (!seen.insert({t, h}).second)
            throw ParseError(lineno, "duplicate edge " + tail + " -> " + head);
        edges.push_back({t, h, weight});
    }
    if (labels.empty()) throw ParseError(lineno, "no edges in input");
    const int n = static_cast<int>(labels.size());
    return Digraph(n, std::move(edges), std::move(labels));
}

std::string serialize_edge_list(const Digraph& g) {
    std::string out;
    char buf[64];
    for (const Edge& e : g.edges()) {
        std::snprintf(buf, sizeof(buf), "%.17g", e.weight);
        out += g.label(e.tail);
        out += ' ';
        out += g.label(e.head);
        out += ' ';
        out += buf;
        out += '\n';
    }
    return out;
}

} // namespace edgemargin
