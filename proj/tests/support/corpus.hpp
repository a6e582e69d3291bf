#pragma once

#include <cktfed/euler.hpp>
#include <cktfed/netlist.hpp>

#include <cstdint>
#include <vector>

namespace testing_corpus {

std::vector<cktfed::Circuit> fixtures();

/// Seeded random circuits with 3..max_devices devices, types cycling through
/// all eleven circuit types.
std::vector<cktfed::Circuit> random_circuits(int count, std::uint64_t seed, int max_devices = 8);

/// Encoded random circuits; the synthetic stand-in corpus for model runs.
std::vector<cktfed::TokenSequence> desk_corpus(int count, std::uint64_t seed, int max_devices = 8);

} // namespace testing_corpus
