#include "check.hpp"
#include "corpus.hpp"

#include <cktfed/fed.hpp>

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

using namespace cktfed;

namespace {

struct Setup {
    std::vector<TokenSequence> corpus;
    Vocabulary vocab;
    ModelParams init;
};

const Setup& setup() {
    static const Setup s = [] {
        Setup out;
        out.corpus = testing_corpus::desk_corpus(60, 17, 5);
        out.vocab = build_vocab(out.corpus);
        out.init = init_model(model_preset("micro", out.vocab.size()), 1);
        return out;
    }();
    return s;
}

FedConfig small_config(int clients) {
    FedConfig c;
    c.n_clients = clients;
    c.rounds = 3;
    c.local_steps = 4;
    c.batch = 4;
    c.lr = 0.05;
    c.seed = 11;
    return c;
}

double norm(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace

TEST_CASE("config validation") {
    FedConfig c;
    CHECK_NOTHROW(c.validate());
    c.n_clients = 0;
    CHECK_ERROR_CODE(c.validate(), ErrorCode::InvalidConfig);
    c = {};
    c.rounds = 0;
    CHECK_ERROR_CODE(c.validate(), ErrorCode::InvalidConfig);
    c = {};
    c.local_steps = 0;
    CHECK_ERROR_CODE(c.validate(), ErrorCode::InvalidConfig);
    CHECK(parse_partition_scheme("unbalanced") == PartitionScheme::Unbalanced);
    CHECK(to_string(PartitionScheme::Specialized) == "specialized");
    CHECK_ERROR_CODE(parse_partition_scheme("iid"), ErrorCode::InvalidConfig);
}

TEST_CASE("partitions are disjoint and cover the selection") {
    std::vector<TokenSequence> corpus(300);
    for (std::size_t i = 0; i < corpus.size(); ++i)
        corpus[i].tag = i % 3 == 0 ? "<OPAMP>" : (i % 3 == 1 ? "<LDO>" : "<VCO>");
    for (auto scheme : {PartitionScheme::Balanced, PartitionScheme::Unbalanced, PartitionScheme::Specialized}) {
        for (double frac : {1.0 / 3.0, 2.0 / 3.0, 1.0}) {
            FedConfig c;
            c.n_clients = 6;
            c.scheme = scheme;
            c.dataset_fraction = frac;
            auto shards = partition_dataset(corpus, c);
            REQUIRE(shards.size() == 6);
            std::vector<std::size_t> all;
            for (const auto& s : shards) {
                CHECK_FALSE(s.empty());
                all.insert(all.end(), s.begin(), s.end());
            }
            std::sort(all.begin(), all.end());
            CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
            CHECK(all.size() == static_cast<std::size_t>(std::llround(frac * 300)));
            CHECK(partition_dataset(corpus, c) == shards);
        }
    }
    FedConfig bal;
    bal.n_clients = 6;
    for (const auto& s : partition_dataset(corpus, bal)) CHECK(s.size() == 50);

    FedConfig one;
    one.n_clients = 1;
    CHECK(partition_dataset(corpus, one)[0].size() == 300);

    FedConfig spec;
    spec.n_clients = 3;
    spec.scheme = PartitionScheme::Specialized;
    auto shards = partition_dataset(corpus, spec);
    std::map<std::string, int> counts;
    for (auto i : shards[0]) ++counts[corpus[i].tag];
    int top = 0;
    for (auto& [tag, n] : counts) top = std::max(top, n);
    CHECK(top >= 0.8 * static_cast<double>(shards[0].size()) - 1e-9);

    FedConfig many;
    many.n_clients = 301;
    CHECK_ERROR_CODE(partition_dataset(corpus, many), ErrorCode::TooFewSamples);
}

TEST_CASE("holdout") {
    auto h = holdout_split(100, 0.1, 3);
    CHECK(h.validation.size() == 10);
    CHECK(h.train.size() == 90);
    std::vector<std::size_t> all = h.train;
    all.insert(all.end(), h.validation.begin(), h.validation.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < 100; ++i) CHECK(all[i] == i);
    CHECK(holdout_split(100, 0.1, 3).validation == h.validation);
}

TEST_CASE("local updates") {
    const auto& s = setup();
    auto data = prepare_federation(s.corpus, s.vocab, small_config(2));
    TrainOptions opt{.steps = 4, .batch = 4, .lr = 0.0, .seed = 3};
    auto zero = local_update(0, data.clients[0], s.init, opt);
    CHECK(norm(zero.delta) == 0.0);
    CHECK(zero.n_samples == data.clients[0].size());

    opt.lr = 0.05;
    auto a = local_update(0, data.clients[0], s.init, opt);
    auto b = local_update(1, data.clients[0], s.init, opt);
    CHECK(std::isfinite(norm(a.delta)));
    CHECK(norm(a.delta) > 0);
    CHECK(a.delta == b.delta);
    // delta reproduces the locally trained float parameters exactly
    auto local = train_steps(s.init, data.clients[0], opt).params;
    for (std::size_t i = 0; i < a.delta.size(); ++i)
        CHECK(static_cast<float>(static_cast<double>(s.init.values[i]) + a.delta[i]) == local.values[i]);
}

TEST_CASE("fedavg arithmetic") {
    ModelParams g;
    g.config = ModelConfig{1, 1, 2, 2, 4, false};
    g.values = {1.0f, 2.0f, -1.0f};
    ClientUpdate up{0, {0.5, -0.25, 1.0}, 3, 0.0};
    ClientUpdate down{1, {-0.5, 0.25, -1.0}, 3, 0.0};
    CHECK(fedavg_aggregate(g, {up, down}).values == g.values);

    CHECK(fedavg_aggregate(g, {up}).values == std::vector<float>{1.5f, 1.75f, 0.0f});

    ClientUpdate none{1, {0.0, 0.0, 0.0}, 1, 0.0};
    auto w = fedavg_aggregate(g, {up, none});
    CHECK(w.values[0] == doctest::Approx(1.0 + 0.75 * 0.5));
    CHECK(w.values[1] == doctest::Approx(2.0 - 0.75 * 0.25));
    CHECK(fedavg_aggregate(g, {none, none}).values == g.values);

    // order independent
    ClientUpdate third{2, {0.1, 0.2, 0.3}, 5, 0.0};
    CHECK(fedavg_aggregate(g, {up, none, third}).values == fedavg_aggregate(g, {third, up, none}).values);

    CHECK_ERROR_CODE(fedavg_aggregate(g, {}), ErrorCode::NoUpdates);
    CHECK_ERROR_CODE(fedavg_aggregate(g, {ClientUpdate{0, {1.0}, 1, 0.0}}), ErrorCode::ManifestMismatch);
}

TEST_CASE("single client federation equals centralized training") {
    const auto& s = setup();
    auto cfg = small_config(1);
    auto data = prepare_federation(s.corpus, s.vocab, cfg);
    auto fed = run_federation(cfg, s.init, data);
    auto central = run_centralized(cfg, s.init, data);
    CHECK(fed.params == central.params);
    CHECK(fed.logs.size() == 3);

    // and both equal one long sequential run
    auto direct = train_steps(s.init, data.clients[0],
                              {.steps = cfg.rounds * cfg.local_steps, .batch = cfg.batch, .lr = cfg.lr,
                               .seed = client_seed(cfg.seed, 0)});
    CHECK(direct.params == fed.params);
}

TEST_CASE("federation replay and logs") {
    const auto& s = setup();
    auto cfg = small_config(4);
    auto data = prepare_federation(s.corpus, s.vocab, cfg);
    CHECK(data.validation.size() == 6);
    auto a = run_federation(cfg, s.init, data);
    auto b = run_federation(cfg, s.init, data);
    CHECK(a.params == b.params);
    REQUIRE(a.logs.size() == 3);
    for (int r = 0; r < 3; ++r) {
        CHECK(a.logs[r].round == r + 1);
        CHECK(a.logs[r].clients == std::vector<int>{0, 1, 2, 3});
        CHECK(a.logs[r].client_losses.size() == 4);
        CHECK(std::isfinite(a.logs[r].validation_loss));
        CHECK(round_log_json(a.logs[r]) == round_log_json(b.logs[r]));
    }
    auto j = round_log_json(a.logs[0]);
    CHECK(j.find("\"round\":1") != std::string::npos);
    CHECK(j.find('\n') == std::string::npos);

    FedHooks skip;
    skip.excluded = {2};
    auto c = run_federation(cfg, s.init, data, skip);
    CHECK(c.logs[0].clients == std::vector<int>{0, 1, 3});
}
