#include <cktfed/fed.hpp>

#include <benchmark/benchmark.h>

using namespace cktfed;

namespace {

Batch synthetic_batch(int vocab, int batch, int len) {
    Batch b;
    for (int s = 0; s < batch; ++s) {
        std::vector<int> seq{kBosId};
        for (int t = 0; t < len - 2; ++t) seq.push_back(kSpecialCount + (s * 13 + t * 7) % (vocab - kSpecialCount));
        seq.push_back(kEosId);
        b.push_back(std::move(seq));
    }
    return b;
}

void BM_LossAndGrad(benchmark::State& state, const char* preset) {
    auto cfg = model_preset(preset, 120);
    auto p = init_model(cfg, 0);
    auto batch = synthetic_batch(120, 16, static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad<float>(cfg, p.values, batch));
    state.SetItemsProcessed(state.iterations() * 16 * state.range(0));
}
BENCHMARK_CAPTURE(BM_LossAndGrad, micro, "micro")->Arg(32)->Arg(64);
BENCHMARK_CAPTURE(BM_LossAndGrad, desk, "desk")->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_FedAvg(benchmark::State& state) {
    auto p = init_model(model_preset("desk", 120), 0);
    std::vector<ClientUpdate> ups;
    for (int c = 0; c < state.range(0); ++c)
        ups.push_back({c, std::vector<double>(p.size(), 1e-3 * (c + 1)), 10, 0.0});
    for (auto _ : state) benchmark::DoNotOptimize(fedavg_aggregate(p, ups));
}
BENCHMARK(BM_FedAvg)->Arg(4)->Arg(8)->Arg(16);

} // namespace
