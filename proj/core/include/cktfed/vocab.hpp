#pragma once

#include "cktfed/euler.hpp"

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace cktfed {

inline constexpr int kPadId = 0;
inline constexpr int kBosId = 1;
inline constexpr int kEosId = 2;
inline constexpr int kUnkId = 3;
inline constexpr int kSpecialCount = 4;

/// Token/id bijection. Ids: specials, then type tags, then corpus tokens in
/// lexicographic order.
class Vocabulary {
public:
    Vocabulary();
    explicit Vocabulary(std::vector<std::string> id_to_token);

    int size() const { return static_cast<int>(tokens_.size()); }
    int id(const std::string& token) const;  // kUnkId when absent
    bool contains(const std::string& token) const { return ids_.count(token) != 0; }
    const std::string& token(int id) const;
    const std::vector<std::string>& tokens() const { return tokens_; }
    static bool is_special(int id) { return id >= 0 && id < kSpecialCount; }

    bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
};

Vocabulary build_vocab(const std::vector<TokenSequence>& corpus);

std::vector<int> encode_ids(const Vocabulary& vocab, const std::vector<std::string>& tokens);
std::vector<std::string> decode_ids(const Vocabulary& vocab, const std::vector<int>& ids);

/// Model input for a sequence: BOS, tag (if any), walk tokens, EOS.
std::vector<int> sequence_ids(const Vocabulary& vocab, const TokenSequence& sequence);
/// Inverse of `sequence_ids`; specials are dropped and a leading tag is split off.
TokenSequence ids_to_sequence(const Vocabulary& vocab, const std::vector<int>& ids);

std::string render_vocab(const Vocabulary& vocab);
Vocabulary parse_vocab(const std::string& text);
void save_vocab(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary load_vocab(const std::filesystem::path& path);

} // namespace cktfed
