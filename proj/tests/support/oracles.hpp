#pragma once

// Brute-force reference implementations. Deliberately naive: every answer is
// produced by exhaustive enumeration and shares no code with the library.

#include <cktfed/netlist.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using EdgeList = std::vector<std::pair<int, int>>;

struct SmallGraph {
    std::vector<std::string> labels;
    EdgeList edges;  // multigraph, any orientation
};

/// Tries every label-preserving node permutation; edge multiplicities must match.
bool isomorphic(const SmallGraph& a, const SmallGraph& b);

/// Smallest serialization over all label-preserving relabelings.
std::string canonical_string(const SmallGraph& g);

/// Every connected edge subset (1..max_edges edges) of every graph, grouped by
/// canonical string; value = number of corpus graphs containing the class.
std::map<std::string, int> frequent_subgraphs(const std::vector<SmallGraph>& corpus, int max_edges);

/// Minimum number of extra edge copies (each original edge used 0..2 more
/// times) that makes every degree even.
int min_duplication(int n_nodes, const EdgeList& edges);

/// All simple graphs on `n` nodes with at most `max_edges` edges that are
/// connected over all n nodes.
std::vector<EdgeList> connected_graphs(int n, int max_edges);

bool connected(int n_nodes, const EdgeList& edges);

/// One representative per isomorphism class of connected simple graphs with
/// 1..max_edges edges, grown one edge at a time and deduplicated by canonical
/// string with node degrees as labels.
std::vector<SmallGraph> connected_graphs_up_to_iso(int max_edges);

/// Undirected edge set of the pruned pin graph, built straight from the
/// netlist by hand: device rings plus anchor stars.
std::vector<std::pair<std::string, std::string>> pin_graph_edges(const cktfed::Circuit& c);

/// Pairwise net cliques + pairwise pin edges per device + device-node spokes.
long naive_edge_count(const cktfed::Circuit& c);

/// Connected components of device pins under pairwise net cliques, as a map
/// from pin token to smallest pin token in its component.
std::map<std::string, std::string> pairwise_components(const cktfed::Circuit& c);

/// Hand-rolled 64-bit LCG, independent of the library's RNG helpers.
struct Lcg {
    std::uint64_t s;
    explicit Lcg(std::uint64_t seed) : s(seed * 2862933555777941757ULL + 3037000493ULL) {}
    std::uint64_t next() {
        s = s * 6364136223846793005ULL + 1442695040888963407ULL;
        return s >> 17;
    }
    int below(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
};

/// Random connected small labeled graph: a random tree plus extra edges.
SmallGraph random_labeled_graph(Lcg& rng, int max_nodes, int max_edges, int n_labels);

} // namespace oracle
