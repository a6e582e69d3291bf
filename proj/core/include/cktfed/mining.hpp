#pragma once

#include "cktfed/pin_graph.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace cktfed {

/// Node-labeled simple graph, the input alphabet of the miner.
struct LabeledGraph {
    std::vector<std::string> labels;
    std::vector<std::pair<int, int>> edges;
};

/// Kind-labeled view of a circuit graph. Terminal nodes are dropped unless
/// `include_terminals` is set; parallel edges collapse.
LabeledGraph to_labeled(const CircuitGraph& graph, bool include_terminals = true);

/// One DFS-code edge. `from < to` marks a forward edge.
struct DfsEdge {
    int from = 0;
    int to = 0;
    std::string from_label;
    std::string to_label;

    bool forward() const { return from < to; }
    bool operator==(const DfsEdge&) const = default;
};

using DfsCode = std::vector<DfsEdge>;

/// gSpan DFS lexicographic order.
bool dfs_edge_less(const DfsEdge& a, const DfsEdge& b);
bool dfs_code_less(const DfsCode& a, const DfsCode& b);
std::string to_string(const DfsCode& code);
DfsCode parse_dfs_code(const std::string& text);

/// Minimum DFS code of a connected labeled graph.
DfsCode canonical_code(const LabeledGraph& graph);
/// The graph spelled by a DFS code; node i is DFS index i.
LabeledGraph code_graph(const DfsCode& code);

struct SubgraphPattern {
    std::string pattern_id;  // "SG<k>"
    DfsCode canonical_code;
    double support = 0.0;
    int support_count = 0;
    std::vector<std::string> node_labels;
    std::vector<std::pair<int, int>> edges;

    std::size_t edge_count() const { return edges.size(); }
};

struct MiningOptions {
    double min_support = 0.25;
    int max_edges = 8;
};

/// gSpan with graph-level support; patterns sorted by (support desc, edge
/// count desc, canonical code asc) and numbered SG1, SG2, ...
std::vector<SubgraphPattern> mine_frequent_subgraphs(const std::vector<LabeledGraph>& corpus,
                                                     const MiningOptions& options = {});

/// Label-preserving embedding of a pattern into a host graph.
struct Occurrence {
    const CircuitGraph* host = nullptr;
    std::vector<int> image;  // pattern node -> host node
};

/// All embeddings (up to `limit`) of a pattern into a host, in lexicographic image order.
std::vector<Occurrence> find_occurrences(const SubgraphPattern& pattern, const CircuitGraph& host,
                                         std::size_t limit = 100000);

struct NodeIsolation {
    std::set<int> isolated;
    std::set<int> non_isolated;
};

/// A node is isolated iff in every occurrence its image has no edge leaving the image set.
NodeIsolation classify_pattern_nodes(const SubgraphPattern& pattern, const std::vector<Occurrence>& occurrences);

struct SimplifiedPattern {
    std::string pattern_id;
    int pattern_number = 0;
    DfsCode canonical_code;
    double support = 0.0;
    std::vector<int> boundary_nodes;             // pattern node indices, canonical order
    std::vector<std::string> boundary_labels;
    std::vector<std::string> roles;              // per boundary node: "VDD", "termA", ...
    std::vector<std::string> interface_tokens;   // pattern_id + role
    std::vector<std::pair<int, int>> simplified_edges;  // over boundary positions
    // Expansion: the full original pattern.
    std::vector<std::string> node_labels;
    std::vector<std::pair<int, int>> edges;
    std::vector<int> device_groups;              // per pattern node, local device index
    double isolated_fraction = 0.0;
};

/// Keeps the non-isolated nodes and joins them in a closed cycle.
SimplifiedPattern simplify_pattern(const SubgraphPattern& pattern, const std::set<int>& isolated,
                                   const Occurrence* representative = nullptr);

struct PatternLibrary {
    std::vector<SimplifiedPattern> patterns;

    const SimplifiedPattern* find(int pattern_number) const;
    bool empty() const { return patterns.empty(); }
};

struct LibraryOptions {
    double min_support = 0.25;
    double min_isolated_fraction = 0.5;
    int max_edges = 8;
};

struct LibraryBuildReport {
    std::vector<SubgraphPattern> mined;
    std::vector<std::pair<std::string, std::string>> rejected;  // pattern id, reason
    std::vector<std::string> kept;  // mined id behind each library pattern, in library order
};

/// Mines the corpus and keeps the patterns eligible for substitution,
/// renumbered SG1.. in mined order.
PatternLibrary build_pattern_library(const std::vector<CircuitGraph>& corpus, const LibraryOptions& options,
                                     LibraryBuildReport* report = nullptr);

struct SubstitutionRecord {
    int pattern_number = 0;
    int instance = 1;
    std::vector<std::string> image_tokens;      // per pattern node
    std::vector<std::string> interface_tokens;  // per boundary node
};

struct SubstitutionResult {
    CircuitGraph graph;
    std::vector<SubstitutionRecord> records;
};

/// Greedy, largest pattern first, non-overlapping replacement of occurrences
/// by subcircuit interface tokens.
SubstitutionResult substitute_patterns(const CircuitGraph& graph, const PatternLibrary& library);

/// Exact inverse of `substitute_patterns` using its records.
CircuitGraph reverse_substitution(const CircuitGraph& graph, const std::vector<SubstitutionRecord>& records,
                                  const PatternLibrary& library);

/// Expands subcircuit tokens from the library with fresh device ids.
CircuitGraph expand_subcircuits(const CircuitGraph& graph, const PatternLibrary& library);

std::string render_library(const PatternLibrary& library);
PatternLibrary parse_library(const std::string& text);
void save_library(const std::filesystem::path& path, const PatternLibrary& library);
PatternLibrary load_library(const std::filesystem::path& path);

} // namespace cktfed
