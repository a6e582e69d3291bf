#include "check.hpp"

#include <cktfed/config.hpp>

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace cktfed;

TEST_CASE("defaults") {
    auto c = parse_config("");
    CHECK(c.model_preset == "desk");
    CHECK(c.fed.n_clients == 4);
    CHECK(c.fed.rounds == 50);
    CHECK(c.fed.local_steps == 20);
    CHECK(c.fed.batch == 16);
    CHECK(c.attack.kind == AttackKind::None);
    CHECK_FALSE(c.defense_enabled);
    CHECK(c.augment == 1);
}

TEST_CASE("parsing") {
    auto c = parse_config(R"(
# federated run
corpus = circuits      # relative to the file
model.preset = micro
model.tie_embeddings = yes
fed.n_clients = 8
fed.lr = 0.02
fed.partition = specialized
fed.optimizer = adam
attack.kind = scale_update
attack.targets = 1, 5
attack.factor = 5
defense.enabled = true
defense.window = 6
seed = 42
)",
                          "/data/exp");
    CHECK(c.corpus == std::filesystem::path("/data/exp/circuits"));
    CHECK(c.model_preset == "micro");
    CHECK(c.tie_embeddings);
    CHECK(c.fed.n_clients == 8);
    CHECK(c.fed.lr == 0.02);
    CHECK(c.fed.scheme == PartitionScheme::Specialized);
    CHECK(c.fed.optimizer == Optimizer::Adam);
    CHECK(c.attack.targets == std::set<int>{1, 5});
    CHECK(c.attack.factor == 5.0);
    CHECK(c.defense_enabled);
    CHECK(c.defense.window == 6);
    CHECK(c.fed.seed == 42);
    CHECK(c.model_config(50).tie_embeddings);
    CHECK(c.model_config(50).vocab_size == 50);

    auto abs = parse_config("log = /tmp/x.jsonl", "/data/exp");
    CHECK(abs.log == std::filesystem::path("/tmp/x.jsonl"));
}

TEST_CASE("rejections") {
    CHECK_ERROR_CODE(parse_config("fed.clients = 3"), ErrorCode::InvalidConfig);
    CHECK_ERROR_CODE(parse_config("fed.n_clients = three"), ErrorCode::InvalidConfig);
    CHECK_ERROR_CODE(parse_config("fed.n_clients = 0"), ErrorCode::InvalidConfig);
    CHECK_ERROR_CODE(parse_config("fed.lr"), ErrorCode::InvalidConfig);
    CHECK_ERROR_CODE(parse_config("model.preset = giant"), ErrorCode::InvalidConfig);
    CHECK_ERROR_CODE(parse_config("defense.enabled = maybe"), ErrorCode::InvalidConfig);
    CHECK_ERROR_CODE(parse_config("attack.kind = scale_update\nattack.factor = -1"), ErrorCode::InvalidConfig);
    try {
        parse_config("fed.batch = 1.5");
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("fed.batch") != std::string::npos);
    }
}

TEST_CASE("overrides and key list") {
    ExperimentConfig c;
    set_config_value(c, "fed.rounds", "7");
    CHECK(c.fed.rounds == 7);
    CHECK_ERROR_CODE(set_config_value(c, "nope", "1"), ErrorCode::InvalidConfig);
    std::set<std::string> keys;
    for (const auto& k : config_keys()) CHECK(keys.insert(k.key).second);
    CHECK(keys.count("fed.local_steps"));
    CHECK(keys.count("defense.threshold"));
}

TEST_CASE("load from file") {
    auto dir = std::filesystem::temp_directory_path() / "cktfed_config_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "run.cfg");
        out << "corpus = ../nets\nfed.rounds = 3\n";
    }
    auto c = load_config(dir / "run.cfg");
    CHECK(c.corpus == (dir.parent_path() / "nets").lexically_normal());
    CHECK(c.fed.rounds == 3);
    CHECK_ERROR_CODE(load_config(dir / "missing.cfg"), ErrorCode::IoError);
    std::filesystem::remove_all(dir);
}
