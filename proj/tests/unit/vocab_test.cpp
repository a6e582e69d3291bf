#include "check.hpp"
#include "corpus.hpp"

#include <cktfed/vocab.hpp>

#include <doctest.h>

#include <algorithm>
#include <filesystem>

using namespace cktfed;

TEST_CASE("minimal vocabulary") {
    auto v = build_vocab({TokenSequence{{"R1A", "R1B", "R1A"}, true, "<OPAMP>"}});
    CHECK(v.size() == 7);
    CHECK(v.token(kPadId) == "<PAD>");
    CHECK(v.token(kBosId) == "<BOS>");
    CHECK(v.token(kEosId) == "<EOS>");
    CHECK(v.token(kUnkId) == "<UNK>");
    CHECK(v.token(4) == "<OPAMP>");
    CHECK(v.token(5) == "R1A");
    CHECK(v.token(6) == "R1B");
    CHECK_ERROR_CODE(build_vocab({}), ErrorCode::EmptyCorpus);
}

TEST_CASE("order independence and determinism") {
    auto corpus = testing_corpus::desk_corpus(40, 2);
    auto v = build_vocab(corpus);
    std::reverse(corpus.begin(), corpus.end());
    CHECK(build_vocab(corpus) == v);
    CHECK(render_vocab(build_vocab(corpus)) == render_vocab(v));
    auto sorted = std::vector<std::string>(v.tokens().begin() + kSpecialCount, v.tokens().end());
    // tags first, then the body in lexicographic order
    auto body = std::find_if(sorted.begin(), sorted.end(), [](const std::string& t) { return t.front() != '<'; });
    CHECK(std::is_sorted(sorted.begin(), body));
    CHECK(std::is_sorted(body, sorted.end()));
}

TEST_CASE("id round trip") {
    auto corpus = testing_corpus::desk_corpus(40, 2);
    auto v = build_vocab(corpus);
    for (const auto& s : corpus) {
        CHECK(decode_ids(v, encode_ids(v, s.tokens)) == s.tokens);
        CHECK(ids_to_sequence(v, sequence_ids(v, s)) == s);
    }
    for (int id = 0; id < v.size(); ++id) CHECK(v.id(v.token(id)) == id);

    CHECK(v.id("NM999Z") == kUnkId);
    CHECK(decode_ids(v, {kUnkId}) == std::vector<std::string>{"<UNK>"});
    CHECK_ERROR_CODE(v.token(v.size()), ErrorCode::IdOutOfRange);
    CHECK_ERROR_CODE(decode_ids(v, {-1}), ErrorCode::IdOutOfRange);
}

TEST_CASE("sequence ids frame") {
    auto v = build_vocab({TokenSequence{{"R1A", "R1B", "R1A"}, true, "<LDO>"}});
    CHECK(sequence_ids(v, TokenSequence{{"R1A", "R1B", "R1A"}, true, "<LDO>"}) == std::vector<int>{1, 4, 5, 6, 5, 2});
    CHECK(sequence_ids(v, TokenSequence{{"R1B"}, true, ""}) == std::vector<int>{1, 6, 2});
}

TEST_CASE("vocab file") {
    auto v = build_vocab(testing_corpus::desk_corpus(10, 8));
    auto text = render_vocab(v);
    CHECK(text.rfind("0\t<PAD>\n", 0) == 0);
    CHECK(parse_vocab(text) == v);
    auto path = std::filesystem::temp_directory_path() / "cktfed_vocab_test.vocab";
    save_vocab(path, v);
    CHECK(load_vocab(path) == v);
    std::filesystem::remove(path);
    CHECK_ERROR_CODE(parse_vocab("0\t<BOS>\n"), ErrorCode::FormatError);
}
