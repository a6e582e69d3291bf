#pragma once

#include "cktfed/pin_graph.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cktfed {

/// Node labels by token kind ("NMOS.D", "VDD", ...), the alphabet used for
/// novelty and round-trip comparisons.
std::vector<std::string> kind_labels(const CircuitGraph& graph);

/// Weisfeiler-Lehman style refinement hash over kind labels. Isomorphic
/// graphs always hash equal; the converse is checked by `isomorphic`.
std::uint64_t wl_hash(const CircuitGraph& graph, int rounds = 3);

/// Exact label-preserving isomorphism test (edge multiplicities respected).
bool isomorphic(const CircuitGraph& a, const CircuitGraph& b);
bool isomorphic(const CircuitGraph& a, const std::vector<std::string>& labels_a, const CircuitGraph& b,
                const std::vector<std::string>& labels_b);

} // namespace cktfed
