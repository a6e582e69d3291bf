#include <cktfed/euler.hpp>
#include <cktfed/error.hpp>
#include <cktfed/mining.hpp>

#include <benchmark/benchmark.h>

#include <filesystem>

using namespace cktfed;

namespace {

std::vector<Circuit> fixtures() {
    std::vector<Circuit> out;
    for (const auto& e : std::filesystem::directory_iterator(CKTFED_FIXTURE_DIR))
        if (e.path().extension() == ".ckt") out.push_back(load_netlist(e.path()));
    return out;
}

void quiet() {
    set_warning_handler([](std::string_view) {});
}

void BM_BuildPinGraph(benchmark::State& state) {
    auto cs = fixtures();
    for (auto _ : state)
        for (const auto& c : cs) benchmark::DoNotOptimize(build_pin_graph(c));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(cs.size()));
}
BENCHMARK(BM_BuildPinGraph);

void BM_Encode(benchmark::State& state) {
    quiet();
    auto cs = fixtures();
    for (auto _ : state)
        for (const auto& c : cs) benchmark::DoNotOptimize(encode(c));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(cs.size()));
}
BENCHMARK(BM_Encode);

// Exact pairing cost grows as 2^k in the number of odd vertices.
void BM_EulerizeRandom(benchmark::State& state) {
    quiet();
    const int devices = static_cast<int>(state.range(0));
    auto c = generate_random_circuit(7, devices, CircuitType::Other);
    auto g = build_pin_graph(c);
    state.counters["odd"] = static_cast<double>(odd_vertices(g).size());
    for (auto _ : state) benchmark::DoNotOptimize(eulerize(g));
}
BENCHMARK(BM_EulerizeRandom)->Arg(4)->Arg(8)->Arg(12)->Arg(16);

void BM_MineFixtures(benchmark::State& state) {
    std::vector<CircuitGraph> graphs;
    for (const auto& c : fixtures()) graphs.push_back(build_pin_graph(c));
    LibraryOptions opt;
    opt.max_edges = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(build_pattern_library(graphs, opt));
}
BENCHMARK(BM_MineFixtures)->Arg(4)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

} // namespace
