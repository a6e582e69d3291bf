#include "corpus.hpp"

namespace testing_corpus {

std::vector<cktfed::Circuit> fixtures() {
    std::vector<cktfed::Circuit> out;
    for (const auto& p : cktfed::list_netlists(CKTFED_FIXTURE_DIR)) out.push_back(cktfed::load_netlist(p));
    return out;
}

std::vector<cktfed::Circuit> random_circuits(int count, std::uint64_t seed, int max_devices) {
    std::vector<cktfed::Circuit> out;
    for (int i = 0; i < count; ++i) {
        const std::uint64_t s = seed * 100003 + static_cast<std::uint64_t>(i);
        const int n = 3 + static_cast<int>(s % static_cast<std::uint64_t>(max_devices - 2));
        out.push_back(cktfed::generate_random_circuit(s, n, cktfed::circuit_type_at(i % cktfed::kCircuitTypeCount)));
    }
    return out;
}

std::vector<cktfed::TokenSequence> desk_corpus(int count, std::uint64_t seed, int max_devices) {
    std::vector<cktfed::TokenSequence> out;
    for (const auto& c : random_circuits(count, seed, max_devices)) out.push_back(cktfed::encode(c));
    return out;
}

} // namespace testing_corpus
