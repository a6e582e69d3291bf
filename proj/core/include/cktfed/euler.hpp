#pragma once

#include "cktfed/mining.hpp"
#include "cktfed/netlist.hpp"
#include "cktfed/pin_graph.hpp"

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace cktfed {

/// Closed walk over node tokens. A closed walk repeats its start as the last
/// token, so its length is edge count + 1. `tag` is the optional type tag.
struct TokenSequence {
    std::vector<std::string> tokens;
    bool closed = true;
    std::string tag;

    std::size_t size() const { return tokens.size(); }
    bool empty() const { return tokens.empty(); }
    bool operator==(const TokenSequence&) const = default;
};

std::set<std::string> odd_vertices(const CircuitGraph& graph);

struct Eulerization {
    CircuitGraph multigraph;
    std::vector<std::pair<std::string, std::string>> duplicated;
    bool exact = true;  // false when the greedy pairing fallback was used
};

/// Largest odd-vertex count solved by the exact pairing DP.
inline constexpr int kExactPairingLimit = 20;

/// Chinese-postman even-ization with unit edge weights.
Eulerization eulerize(const CircuitGraph& graph, int exact_limit = kExactPairingLimit);

/// Hierholzer walk from `start`; neighbors visited in token order for seed 0,
/// in a seeded shuffled order otherwise.
TokenSequence eulerian_circuit(const CircuitGraph& multigraph, const std::string& start, std::uint64_t seed = 0);

/// The start token used by `encode`: "VDD" if present, else the smallest node.
std::string default_start(const CircuitGraph& graph);

TokenSequence encode(const Circuit& circuit, const PatternLibrary* library = nullptr);

/// Reads a walk back into a simple graph. Subcircuit tokens are expanded when
/// a library is given and kept as nodes otherwise.
CircuitGraph decode(const TokenSequence& sequence, const PatternLibrary* library = nullptr);

/// Up to k distinct walks of the same circuit, the first being `encode`.
std::vector<TokenSequence> augment(const Circuit& circuit, int k, const PatternLibrary* library = nullptr,
                                   std::uint64_t seed = 0);

double compression_rate(const TokenSequence& before, const TokenSequence& after);

/// Reference encoding with device hub nodes, per-device pin cliques, per-net
/// pin cliques and unmatched odd-vertex pairing. Used only for comparison.
CircuitGraph legacy_graph(const Circuit& circuit);
TokenSequence legacy_encode(const Circuit& circuit);

// Sequence files: one walk per line, optional leading "<TYPE>" tag token.
std::string format_sequence(const TokenSequence& sequence);
TokenSequence parse_sequence_line(const std::string& line);
void write_sequences(const std::filesystem::path& path, const std::vector<TokenSequence>& sequences);
std::vector<TokenSequence> read_sequences(const std::filesystem::path& path);

} // namespace cktfed
