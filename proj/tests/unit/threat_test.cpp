#include "check.hpp"
#include "corpus.hpp"

#include <cktfed/threat.hpp>

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace cktfed;

namespace {

double norm(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

ClientUpdate update(int id, std::vector<double> d) { return ClientUpdate{id, std::move(d), 10, 0.0}; }

struct Small {
    std::vector<TokenSequence> corpus = testing_corpus::desk_corpus(80, 23, 5);
    Vocabulary vocab = build_vocab(corpus);
    ModelParams init = init_model(model_preset("micro", vocab.size()), 2);
    FedConfig cfg = [] {
        FedConfig c;
        c.n_clients = 4;
        c.rounds = 12;
        c.local_steps = 5;
        c.batch = 8;
        c.lr = 0.05;
        c.seed = 5;
        return c;
    }();
    FederationData data = prepare_federation(corpus, vocab, cfg);
};

const Small& small() {
    static const Small s;
    return s;
}

} // namespace

TEST_CASE("scaling") {
    auto u = update(3, {0.1, -0.2, 0.3, 0.05});
    CHECK(scale_attack(u, 1.0).delta == u.delta);
    CHECK(norm(scale_attack(u, 10.0).delta) == doctest::Approx(10.0 * norm(u.delta)).epsilon(1e-12));
    CHECK(norm(scale_attack(u, 5.0).delta) == doctest::Approx(5.0 * norm(u.delta)).epsilon(1e-12));
    CHECK(scale_attack(u, 10.0).n_samples == u.n_samples);
    auto twice = scale_attack(scale_attack(u, 2.0), 3.0);
    auto once = scale_attack(u, 6.0);
    for (std::size_t i = 0; i < u.delta.size(); ++i) CHECK(twice.delta[i] == doctest::Approx(once.delta[i]));
}

TEST_CASE("attack spec") {
    AttackSpec s;
    CHECK_NOTHROW(s.validate());
    s.factor = 0;
    CHECK_ERROR_CODE(s.validate(), ErrorCode::InvalidConfig);
    s = {};
    s.poison_fraction = 1.5;
    CHECK_ERROR_CODE(s.validate(), ErrorCode::InvalidConfig);
    s = {};
    s.token_replace_prob = 0.0;
    CHECK_ERROR_CODE(s.validate(), ErrorCode::InvalidConfig);
    CHECK(parse_attack_kind("scale_update") == AttackKind::ScaleUpdate);
    CHECK_ERROR_CODE(parse_attack_kind("flood"), ErrorCode::InvalidConfig);
}

TEST_CASE("token poisoning") {
    const auto& s = small();
    const auto& shard = s.data.clients[0];
    CHECK(token_poison(shard, 0.0, 0.5, s.vocab, 1) == shard);
    CHECK(token_poison(shard, 0.5, 0.0, s.vocab, 1) == shard);

    Batch one{shard[0]};
    auto copy = one;
    auto hit = token_poison(one, 1.0, 1.0, s.vocab, 4);
    CHECK(one == copy);
    REQUIRE(hit[0].size() == one[0].size());
    for (std::size_t i = 0; i < one[0].size(); ++i) {
        if (Vocabulary::is_special(one[0][i])) {
            CHECK(hit[0][i] == one[0][i]);
        } else {
            CHECK(hit[0][i] != one[0][i]);
            CHECK_FALSE(Vocabulary::is_special(hit[0][i]));
            CHECK(hit[0][i] < s.vocab.size());
        }
    }

    auto part = token_poison(shard, 0.3, 1.0, s.vocab, 9);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < shard.size(); ++i) changed += part[i] != shard[i];
    CHECK(changed == static_cast<std::size_t>(std::llround(0.3 * static_cast<double>(shard.size()))));
    CHECK(token_poison(shard, 0.3, 1.0, s.vocab, 9) == part);

    AttackSpec spec;
    spec.kind = AttackKind::TokenPoison;
    spec.targets = {1};
    auto poisoned = apply_data_poisoning(s.data, spec, s.vocab);
    CHECK(poisoned.clients[0] == s.data.clients[0]);
    CHECK_FALSE(poisoned.clients[1] == s.data.clients[1]);
    CHECK(poisoned.validation == s.data.validation);
}

TEST_CASE("detector symmetry and normalization") {
    DetectorState st;
    std::vector<double> w{0.0, 0.0, 0.0};
    CHECK_ERROR_CODE(detector_score(st, {update(0, {1, 2, 3})}, w), ErrorCode::HistoryEmpty);

    auto zeros = detector_observe(st, {update(0, {1, 2, 3}), update(1, {1, 2, 3}), update(2, {1, 2, 3})}, w);
    CHECK(zeros == std::vector<double>{0, 0, 0});
    for (int r = 1; r < 5; ++r) {
        w = {0.1 * r, 0.2 * r, -0.1 * r};
        const std::vector<double> g{1.0 + r, 2.0, 3.0 - r};
        auto s = detector_observe(st, {update(0, g), update(1, g), update(2, g)}, w);
        for (double x : s) CHECK(x == doctest::Approx(1.0 / 3.0));
    }
}

TEST_CASE("window one without curvature is the normalized change") {
    DetectorOptions opt;
    opt.window = 1;
    opt.zero_curvature = true;
    DetectorState st(opt);
    std::vector<double> w{0, 0};
    detector_observe(st, {update(0, {1, 0}), update(1, {0, 1}), update(2, {1, 1})}, w);
    auto s = detector_observe(st, {update(0, {2, 0}), update(1, {0, 4}), update(2, {1, 1})}, w);
    // changes 1, 3, 0
    CHECK(s[0] == doctest::Approx(0.25));
    CHECK(s[1] == doctest::Approx(0.75));
    CHECK(s[2] == doctest::Approx(0.0));
    auto t = detector_observe(st, {update(0, {2, 0}), update(1, {0, 4}), update(2, {1, 3})}, w);
    CHECK(t[2] == doctest::Approx(1.0));
}

TEST_CASE("flagging") {
    CHECK(flag_clients({0.2, 0.2, 0.2, 0.2}).empty());
    std::vector<double> s(7, 0.01);
    s.push_back(0.93);
    CHECK(flag_clients(s) == std::set<int>{7});
    CHECK(flag_clients({0.5}).empty());
    std::vector<double> noise(8, 0.5);
    CHECK(flag_clients(s, 2.0, &noise).empty());
    std::fill(noise.begin(), noise.end(), 0.01);
    CHECK(flag_clients(s, 2.0, &noise) == std::set<int>{7});
}

TEST_CASE("scale attacker stands out") {
    const auto& s = small();
    AttackSpec spec;
    spec.kind = AttackKind::ScaleUpdate;
    spec.targets = {2};
    spec.factor = 10.0;
    DetectorState st;
    auto hooks = defense_hooks(st, attack_hooks(spec));
    auto run = run_federation(s.cfg, s.init, s.data, hooks);
    bool top = false;
    for (const auto& log : run.logs) {
        CHECK(log.attacked == std::vector<int>{2});
        if (log.round > 1) {
            auto it = std::max_element(log.scores.begin(), log.scores.end());
            if (it - log.scores.begin() == 2) top = true;
            CHECK(std::accumulate(log.scores.begin(), log.scores.end(), 0.0) == doctest::Approx(1.0));
        }
    }
    CHECK(top);
    CHECK(std::find(run.logs.back().flagged.begin(), run.logs.back().flagged.end(), 2) != run.logs.back().flagged.end());
}

TEST_CASE("recovery") {
    const auto& s = small();
    auto clean = run_federation(s.cfg, s.init, s.data);
    auto same = remove_and_recover(s.cfg, s.init, s.data, {});
    CHECK(same.params == clean.params);
    for (const auto& l : same.logs) CHECK(l.phase == "recovery");
    auto without = remove_and_recover(s.cfg, s.init, s.data, {1});
    CHECK(without.logs[0].clients == std::vector<int>{0, 2, 3});
    CHECK_ERROR_CODE(remove_and_recover(s.cfg, s.init, s.data, {0, 1, 2, 3}), ErrorCode::AllClientsFlagged);
}
