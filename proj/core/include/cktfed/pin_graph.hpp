#pragma once

#include "cktfed/netlist.hpp"

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cktfed {

struct Edge {
    int u = 0;
    int v = 0;

    auto operator<=>(const Edge&) const = default;
};

/// Undirected multigraph over token-named nodes. Nodes are kept sorted and
/// edges are stored with u < v, sorted, so equal graphs compare equal.
struct CircuitGraph {
    std::vector<std::string> nodes;
    std::vector<Edge> edges;
    std::string origin;

    int index_of(std::string_view token) const;
    bool contains(std::string_view token) const { return index_of(token) >= 0; }
    std::vector<int> degrees() const;
    /// Neighbor lists with multiplicity, each sorted ascending.
    std::vector<std::vector<int>> adjacency() const;
    bool connected() const;
    std::vector<int> component_labels() const;

    bool operator==(const CircuitGraph&) const = default;
};

class GraphBuilder {
public:
    explicit GraphBuilder(std::string origin = {}) : origin_(std::move(origin)) {}

    void add_node(std::string token);
    /// Adds both endpoints; throws on a self-loop.
    void add_edge(std::string a, std::string b);

    /// `collapse_parallel` merges repeated node pairs into one edge.
    CircuitGraph build(bool collapse_parallel) const;

private:
    std::string origin_;
    std::vector<std::string> nodes_;
    std::vector<std::pair<std::string, std::string>> edges_;
};

/// Star connection contributed by one net.
struct NetStar {
    std::string net;
    std::string anchor;
    std::vector<std::string> leaves;
};

/// Per-net star edges: anchor is the terminal node for terminal nets, else the
/// lexicographically smallest member pin token.
std::vector<NetStar> net_stars(const Circuit& circuit);

/// Device pins cycled (single edge for two-pin devices) plus per-net stars.
/// An edge produced by both a device cycle and a star is kept once.
CircuitGraph build_pin_graph(const Circuit& circuit);

struct EdgeSavings {
    long pruned_edges = 0;
    long naive_edges = 0;
};

/// Pruned edge count vs. the device-node + pairwise-net representation.
EdgeSavings edge_savings(const Circuit& circuit);

std::string dump_graph(const CircuitGraph& graph);
CircuitGraph parse_graph_dump(std::string_view text);

} // namespace cktfed
