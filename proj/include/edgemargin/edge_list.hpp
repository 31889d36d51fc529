#pragma once

#include "edgemargin/digraph.hpp"

#include <string>

namespace edgemargin {

/// Parse the plain-text edge list grammar: one `tail head weight` record
/// per line, `#` starts a comment, blank lines ignored. Nodes are
/// numbered by first appearance and keep their labels. Throws ParseError
/// (with the line number) on malformed records, non-positive weights,
/// self-loops and duplicate directed pairs.
Digraph parse_edge_list(const std::string& text);

/// Inverse of parse_edge_list up to comments and spacing; weights are
/// printed with full round-trip precision.
std::string serialize_edge_list(const Digraph& g);

} // namespace edgemargin
