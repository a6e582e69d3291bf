#include "check.hpp"
#include "corpus.hpp"

#include <cktfed/metrics.hpp>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <regex>

using namespace cktfed;

namespace {

std::vector<TokenSequence> fixture_sequences() {
    std::vector<TokenSequence> out;
    for (const auto& c : testing_corpus::fixtures()) out.push_back(encode(c));
    return out;
}

// Renames every device id by appending a digit, keeping the graph.
TokenSequence relabel(const TokenSequence& s) {
    static const std::regex dev("^([A-Z]+?)([0-9]+)([A-Z])$");
    TokenSequence out = s;
    for (auto& t : out.tokens) {
        std::smatch m;
        if (std::regex_match(t, m, dev)) t = m[1].str() + m[2].str() + "7" + m[3].str();
    }
    return out;
}

} // namespace

TEST_CASE("fixtures are valid") {
    for (const auto& s : fixture_sequences()) {
        auto r = validity_check(s);
        CHECK_MESSAGE(r.valid, s.tag);
    }
}

TEST_CASE("validity failures") {
    auto r = validity_check(TokenSequence{{"NM1D", "NM1G", "NM1D"}, true, ""});
    CHECK_FALSE(r.valid);
    CHECK(r.has(ValidityFailure::IncompletePins));
    CHECK(r.has(ValidityFailure::NoSupply));
    CHECK(r.has(ValidityFailure::NoIO));
    CHECK(r.has(ValidityFailure::DanglingDevice));
    CHECK_FALSE(r.has(ValidityFailure::Disconnected));
    CHECK_FALSE(r.has(ValidityFailure::DecodeError));

    auto bad = validity_check(TokenSequence{{"NM1D", "NM1D"}, true, ""});
    CHECK(bad.failures == std::vector<ValidityFailure>{ValidityFailure::DecodeError});
    CHECK_FALSE(bad.detail.empty());

    auto v = build_vocab({TokenSequence{{"R1A", "R1B"}, true, ""}});
    CHECK(validity_check(TokenSequence{{"R1A", "R2B"}, true, ""}, &v).has(ValidityFailure::DecodeError));
    CHECK(to_string(ValidityFailure::NoIO) == "NoIO");
}

TEST_CASE("novelty") {
    auto train = fixture_sequences();
    auto same = novelty(train, train);
    CHECK(same.diff_fraction == 0.0);
    CHECK(same.unique_fraction == 1.0);
    CHECK(same.evaluated == train.size());

    std::vector<TokenSequence> renamed;
    for (const auto& s : train) renamed.push_back(relabel(s));
    CHECK(renamed[0].tokens != train[0].tokens);
    CHECK(novelty(renamed, train).diff_fraction == 0.0);

    std::vector<TokenSequence> fresh;
    for (const auto& c : testing_corpus::random_circuits(10, 77, 3)) fresh.push_back(encode(c));
    std::vector<TokenSequence> big(train.begin(), train.begin() + 3);
    auto disjoint = novelty(fresh, big);
    CHECK(disjoint.diff_fraction == 1.0);

    auto dup = novelty({train[0], train[0], TokenSequence{{"A1X"}, true, ""}}, train);
    CHECK(dup.evaluated == 2);
    CHECK(dup.undecodable == 1);
    CHECK(dup.unique_fraction == 0.5);
}

TEST_CASE("mmd") {
    std::vector<CircuitGraph> graphs;
    for (const auto& c : testing_corpus::fixtures()) graphs.push_back(build_pin_graph(c));
    CHECK(mmd(graphs, graphs) < 1e-12);
    std::vector<CircuitGraph> a(graphs.begin(), graphs.begin() + 6), b(graphs.begin() + 6, graphs.end());
    CHECK(mmd(a, b) == doctest::Approx(mmd(b, a)).epsilon(1e-12));
    CHECK_ERROR_CODE(mmd({}, graphs), ErrorCode::EmptySet);

    std::vector<std::vector<double>> x;
    for (int i = 0; i < 30; ++i) x.push_back({std::sin(i * 1.7), std::cos(i * 0.9)});
    double last = 0.0;
    for (double shift : {0.5, 1.0, 2.0, 4.0}) {
        auto y = x;
        for (auto& p : y) p[0] += shift;
        const double m = mmd_descriptors(x, y);
        CHECK(m > last);
        last = m;
    }
    CHECK(graph_descriptor(graphs[0]).size() == 16);
}

TEST_CASE("scalability and versatility") {
    CHECK(scalability({}) == 0);
    CHECK(versatility({}) == 0);
    auto seqs = fixture_sequences();
    std::size_t most = 0;
    std::set<std::string> tags;
    for (const auto& c : testing_corpus::fixtures()) {
        most = std::max(most, c.devices.size());
        tags.insert("<" + std::string(to_string(c.type)) + ">");
    }
    CHECK(scalability(seqs) == static_cast<int>(most));
    CHECK(versatility(seqs) == static_cast<int>(tags.size()));
}

TEST_CASE("rank reward") {
    // Every combination against the rank score table.
    for (bool valid : {false, true})
        for (bool relevant : {false, true})
            for (bool high : {false, true}) {
                const double expect = !valid ? -1.0 : !relevant ? -0.5 : high ? 1.0 : 0.5;
                CHECK(rank_reward(valid, relevant, high) == expect);
            }
}

TEST_CASE("heterogeneity") {
    auto corpus = testing_corpus::desk_corpus(24, 5, 4);
    auto vocab = build_vocab(corpus);
    Batch all;
    for (const auto& s : corpus) all.push_back(sequence_ids(vocab, s));
    Batch half1(all.begin(), all.begin() + 12), half2(all.begin() + 12, all.end());
    auto params = init_model(model_preset("micro", vocab.size()), 3);

    auto stats = heterogeneity_stats({half1, half1}, params, 20);
    REQUIRE(stats.size() == 2);
    CHECK(stats[0].mean == stats[1].mean);
    CHECK(stats[0].mse == stats[1].mse);
    CHECK(stats[0].densities == stats[1].densities);

    for (const auto& s : heterogeneity_stats({half1, half2}, params, 20)) {
        double area = 0.0;
        for (std::size_t i = 0; i < s.densities.size(); ++i) area += s.densities[i] * (s.bin_edges[i + 1] - s.bin_edges[i]);
        CHECK(area == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(s.entries > 0);
    }

    auto zero = params;
    std::fill(zero.values.begin(), zero.values.end(), 0.0f);
    for (const auto& s : heterogeneity_stats({half1, half2}, zero, 10)) {
        CHECK(s.mean == 0.0);
        CHECK(s.mse == 0.0);
    }
    auto csv = heterogeneity_csv(stats);
    CHECK(csv.rfind("client,mean,mse\n0,", 0) == 0);
    CHECK_ERROR_CODE(heterogeneity_stats({half1, {}}, params), ErrorCode::EmptyClient);
    CHECK_ERROR_CODE(heterogeneity_stats({half1}, params, 0), ErrorCode::InvalidArgument);
}

TEST_CASE("compression summary") {
    auto s = compression_summary(testing_corpus::fixtures());
    CHECK(s.count == 12);
    CHECK(s.min >= 1.0);
    CHECK(s.min <= s.mean);
    CHECK(s.mean <= s.max);
}

TEST_CASE("evaluation report") {
    auto train = fixture_sequences();
    std::vector<TokenSequence> gen(train.begin(), train.begin() + 4);
    gen.push_back(TokenSequence{{"NM1D", "NM1G", "NM1D"}, true, ""});
    auto r = evaluate(gen, train);
    CHECK(r.generated == 5);
    CHECK(r.valid == 4);
    CHECK(r.validity_rate == doctest::Approx(0.8));
    CHECK(r.failure_counts.at("NoSupply") == 1);
    CHECK(r.novelty.diff_fraction == doctest::Approx(0.2));
    auto j = nlohmann::json::parse(render_report(r));
    CHECK(j["generated"] == 5);
    CHECK(j["validity_rate"].get<double>() == doctest::Approx(0.8));
    CHECK(j.contains("mmd"));
    CHECK(j["compression"].is_null());
}
