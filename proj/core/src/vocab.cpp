#include "cktfed/vocab.hpp"

#include "cktfed/error.hpp"
#include "cktfed/token.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace cktfed {

namespace {
const std::vector<std::string> kSpecials = {"<PAD>", "<BOS>", "<EOS>", "<UNK>"};
}

Vocabulary::Vocabulary() : Vocabulary(kSpecials) {}

Vocabulary::Vocabulary(std::vector<std::string> id_to_token) : tokens_(std::move(id_to_token)) {
    if (tokens_.size() < kSpecialCount || !std::equal(kSpecials.begin(), kSpecials.end(), tokens_.begin()))
        throw Error(ErrorCode::FormatError, "vocabulary must start with <PAD> <BOS> <EOS> <UNK>");
    for (int i = 0; i < size(); ++i)
        if (!ids_.emplace(tokens_[i], i).second)
            throw Error(ErrorCode::FormatError, "duplicate vocabulary token " + tokens_[i]);
}

int Vocabulary::id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || id >= size()) throw Error(ErrorCode::IdOutOfRange, "token id " + std::to_string(id) + " out of range");
    return tokens_[id];
}

Vocabulary build_vocab(const std::vector<TokenSequence>& corpus) {
    if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot build a vocabulary from an empty corpus");
    std::set<std::string> tags, body;
    for (const auto& s : corpus) {
        if (!s.tag.empty()) tags.insert(s.tag);
        for (const auto& t : s.tokens) {
            if (std::find(kSpecials.begin(), kSpecials.end(), t) != kSpecials.end()) continue;
            (classify_token(t).kind == TokenKind::TypeTag ? tags : body).insert(t);
        }
    }
    std::vector<std::string> ids = kSpecials;
    ids.insert(ids.end(), tags.begin(), tags.end());
    for (const auto& t : body)
        if (!tags.count(t)) ids.push_back(t);
    return Vocabulary(std::move(ids));
}

std::vector<int> encode_ids(const Vocabulary& vocab, const std::vector<std::string>& tokens) {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(vocab.id(t));
    return out;
}

std::vector<std::string> decode_ids(const Vocabulary& vocab, const std::vector<int>& ids) {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (int i : ids) out.push_back(vocab.token(i));
    return out;
}

std::vector<int> sequence_ids(const Vocabulary& vocab, const TokenSequence& sequence) {
    std::vector<int> out{kBosId};
    if (!sequence.tag.empty()) out.push_back(vocab.id(sequence.tag));
    for (const auto& t : sequence.tokens) out.push_back(vocab.id(t));
    out.push_back(kEosId);
    return out;
}

TokenSequence ids_to_sequence(const Vocabulary& vocab, const std::vector<int>& ids) {
    TokenSequence seq;
    for (int id : ids) {
        if (id == kEosId) break;
        if (Vocabulary::is_special(id)) continue;
        const auto& t = vocab.token(id);
        if (seq.tokens.empty() && seq.tag.empty() && classify_token(t).kind == TokenKind::TypeTag) seq.tag = t;
        else seq.tokens.push_back(t);
    }
    seq.closed = seq.tokens.size() > 2 && seq.tokens.front() == seq.tokens.back();
    return seq;
}

std::string render_vocab(const Vocabulary& vocab) {
    std::string out;
    for (int i = 0; i < vocab.size(); ++i) out += std::to_string(i) + '\t' + vocab.token(i) + '\n';
    return out;
}

Vocabulary parse_vocab(const std::string& text) {
    std::vector<std::string> tokens;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw Error(ErrorCode::FormatError, "vocab line without tab: " + line);
        if (std::stoi(line.substr(0, tab)) != static_cast<int>(tokens.size()))
            throw Error(ErrorCode::FormatError, "vocab ids must be consecutive from 0");
        tokens.push_back(line.substr(tab + 1));
    }
    return Vocabulary(std::move(tokens));
}

void save_vocab(const std::filesystem::path& path, const Vocabulary& vocab) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << render_vocab(vocab);
}

Vocabulary load_vocab(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_vocab(ss.str());
}

} // namespace cktfed
