#include "cktfed/fed.hpp"

#include "cktfed/error.hpp"
#include "cktfed/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

namespace cktfed {

std::string_view to_string(PartitionScheme scheme) {
    switch (scheme) {
    case PartitionScheme::Balanced: return "balanced";
    case PartitionScheme::Unbalanced: return "unbalanced";
    case PartitionScheme::Specialized: return "specialized";
    }
    return "balanced";
}

PartitionScheme parse_partition_scheme(std::string_view name) {
    for (auto s : {PartitionScheme::Balanced, PartitionScheme::Unbalanced, PartitionScheme::Specialized})
        if (to_string(s) == name) return s;
    throw Error(ErrorCode::InvalidConfig, "unknown partition scheme '" + std::string(name) + "'");
}

void FedConfig::validate() const {
    auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
    if (n_clients < 1) bad("n_clients must be >= 1");
    if (rounds < 1) bad("rounds must be >= 1");
    if (local_steps < 1) bad("local_steps must be >= 1");
    if (batch < 1) bad("batch must be >= 1");
    if (!(lr >= 0.0) || !std::isfinite(lr)) bad("lr must be a finite value >= 0");
    if (!(dataset_fraction > 0.0 && dataset_fraction <= 1.0)) bad("dataset_fraction must be in (0, 1]");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) bad("validation_fraction must be in [0, 1)");
    if (clip_norm < 0.0) bad("clip_norm must be >= 0");
}

namespace {

template <class T>
void shuffle_with(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

} // namespace

HoldoutSplit holdout_split(std::size_t n, double validation_fraction, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(derive_seed(seed, 0x401d));
    shuffle_with(idx, rng);
    auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n)));
    if (validation_fraction > 0.0 && n_val == 0 && n > 1) n_val = 1;
    HoldoutSplit s;
    s.validation.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    std::sort(s.validation.begin(), s.validation.end());
    std::sort(s.train.begin(), s.train.end());
    return s;
}

std::vector<std::vector<std::size_t>> partition_dataset(const std::vector<TokenSequence>& corpus,
                                                        const FedConfig& config) {
    config.validate();
    const auto k = static_cast<std::size_t>(config.n_clients);
    std::mt19937_64 rng(derive_seed(config.seed, 0x9a27));
    std::vector<std::size_t> pool(corpus.size());
    std::iota(pool.begin(), pool.end(), 0);
    shuffle_with(pool, rng);
    auto keep = static_cast<std::size_t>(std::llround(config.dataset_fraction * static_cast<double>(corpus.size())));
    pool.resize(std::min(keep, pool.size()));
    if (pool.size() < k)
        throw Error(ErrorCode::TooFewSamples, std::to_string(pool.size()) + " sequences cannot feed " +
                                                  std::to_string(k) + " clients");

    std::vector<std::vector<std::size_t>> shards(k);
    switch (config.scheme) {
    case PartitionScheme::Balanced: {
        std::size_t pos = 0;
        for (std::size_t c = 0; c < k; ++c) {
            std::size_t size = pool.size() / k + (c < pool.size() % k ? 1 : 0);
            shards[c].assign(pool.begin() + static_cast<std::ptrdiff_t>(pos),
                             pool.begin() + static_cast<std::ptrdiff_t>(pos + size));
            pos += size;
        }
        break;
    }
    case PartitionScheme::Unbalanced: {
        std::gamma_distribution<double> gamma(0.5, 1.0);
        std::vector<double> p(k);
        for (auto& x : p) x = gamma(rng) + 1e-12;
        const double total = std::accumulate(p.begin(), p.end(), 0.0);
        const std::size_t spare = pool.size() - k;
        std::vector<std::size_t> sizes(k, 1);
        std::vector<std::pair<double, std::size_t>> frac;
        std::size_t used = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const double want = p[c] / total * static_cast<double>(spare);
            const auto whole = static_cast<std::size_t>(std::floor(want));
            sizes[c] += whole;
            used += whole;
            frac.emplace_back(-(want - static_cast<double>(whole)), c);
        }
        std::sort(frac.begin(), frac.end());
        for (std::size_t i = 0; used < spare; ++i, ++used) sizes[frac[i % k].second]++;
        std::size_t pos = 0;
        for (std::size_t c = 0; c < k; ++c) {
            shards[c].assign(pool.begin() + static_cast<std::ptrdiff_t>(pos),
                             pool.begin() + static_cast<std::ptrdiff_t>(pos + sizes[c]));
            pos += sizes[c];
        }
        break;
    }
    case PartitionScheme::Specialized: {
        std::map<std::string, std::vector<std::size_t>> by_type;
        for (auto i : pool) by_type[corpus[i].tag].push_back(i);
        std::vector<std::size_t> rest;
        std::size_t t = 0;
        for (auto& [tag, items] : by_type) {
            const std::size_t owner = t++ % k;
            const auto own = static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(items.size())));
            shards[owner].insert(shards[owner].end(), items.begin(), items.begin() + static_cast<std::ptrdiff_t>(own));
            rest.insert(rest.end(), items.begin() + static_cast<std::ptrdiff_t>(own), items.end());
        }
        shuffle_with(rest, rng);
        // Remainder goes to the currently smallest shard first, then round-robin.
        for (auto i : rest) {
            auto smallest = std::min_element(shards.begin(), shards.end(),
                                             [](const auto& a, const auto& b) { return a.size() < b.size(); });
            if (smallest->empty()) smallest->push_back(i);
            else shards[rng() % k].push_back(i);
        }
        for (const auto& s : shards)
            if (s.empty()) throw Error(ErrorCode::TooFewSamples, "specialized partition left a client without data");
        break;
    }
    }
    for (auto& s : shards) std::sort(s.begin(), s.end());
    return shards;
}

FederationData prepare_federation(const std::vector<TokenSequence>& corpus, const Vocabulary& vocab,
                                  const FedConfig& config) {
    config.validate();
    if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "federation corpus is empty");
    auto split = holdout_split(corpus.size(), config.validation_fraction, config.seed);
    std::vector<TokenSequence> train;
    for (auto i : split.train) train.push_back(corpus[i]);
    FederationData out;
    for (auto i : split.validation) out.validation.push_back(sequence_ids(vocab, corpus[i]));
    auto shards = partition_dataset(train, config);
    for (auto& shard : shards) {
        Batch b;
        std::vector<std::size_t> global_idx;
        for (auto i : shard) {
            b.push_back(sequence_ids(vocab, train[i]));
            global_idx.push_back(split.train[i]);
        }
        out.clients.push_back(std::move(b));
        out.client_indices.push_back(std::move(global_idx));
    }
    return out;
}

std::uint64_t client_seed(std::uint64_t seed, int client) {
    return derive_seed(seed, 0xc11e47000ULL + static_cast<std::uint64_t>(client));
}

ClientUpdate local_update(int client_id, const Batch& data, const ModelParams& global, const TrainOptions& options) {
    if (data.empty()) throw Error(ErrorCode::EmptyClient, "client " + std::to_string(client_id) + " has no data");
    auto r = train_steps(global, data, options);
    ClientUpdate u;
    u.client_id = client_id;
    u.n_samples = data.size();
    u.local_loss = r.mean_loss.value_or(0.0);
    u.delta.resize(global.values.size());
    for (std::size_t i = 0; i < u.delta.size(); ++i)
        u.delta[i] = static_cast<double>(r.params.values[i]) - static_cast<double>(global.values[i]);
    return u;
}

ModelParams fedavg_aggregate(const ModelParams& global, const std::vector<ClientUpdate>& updates) {
    if (updates.empty()) throw Error(ErrorCode::NoUpdates, "no client updates to aggregate");
    std::vector<const ClientUpdate*> order;
    double total = 0.0;
    for (const auto& u : updates) {
        if (u.delta.size() != global.values.size())
            throw Error(ErrorCode::ManifestMismatch, "update from client " + std::to_string(u.client_id) + " has the wrong size");
        order.push_back(&u);
        total += static_cast<double>(u.n_samples);
    }
    if (total <= 0.0) throw Error(ErrorCode::NoUpdates, "client updates carry no samples");
    std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->client_id < b->client_id; });
    std::vector<double> w;
    for (auto* u : order) w.push_back(static_cast<double>(u->n_samples) / total);
    ModelParams out = global;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < order.size(); ++j) acc += w[j] * order[j]->delta[i];
        out.values[i] = static_cast<float>(static_cast<double>(global.values[i]) + acc);
    }
    return out;
}

FedResult run_federation(const FedConfig& config, const ModelParams& init, const FederationData& data,
                         const FedHooks& hooks) {
    config.validate();
    std::vector<int> active;
    for (int c = 0; c < static_cast<int>(data.clients.size()); ++c)
        if (std::find(hooks.excluded.begin(), hooks.excluded.end(), c) == hooks.excluded.end()) active.push_back(c);
    if (active.empty()) throw Error(ErrorCode::AllClientsFlagged, "every client is excluded");
    FedResult result{init, {}};
    for (int r = 0; r < config.rounds; ++r) {
        RoundLog log;
        log.round = r + 1;
        log.phase = hooks.phase;
        std::vector<ClientUpdate> updates;
        for (int c : active) {
            TrainOptions opt{config.local_steps, config.batch, config.lr, client_seed(config.seed, c),
                             static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(config.local_steps),
                             config.optimizer, config.clip_norm};
            auto u = local_update(c, data.clients[c], result.params, opt);
            log.clients.push_back(c);
            log.client_losses.push_back(u.local_loss);
            if (hooks.attack && hooks.attack(r, u)) log.attacked.push_back(c);
            updates.push_back(std::move(u));
        }
        if (hooks.defense) log.flagged = hooks.defense(r, updates, result.params, log.scores);
        result.params = fedavg_aggregate(result.params, updates);
        log.validation_loss = data.validation.empty() ? 0.0 : evaluate_loss(result.params, data.validation);
        result.logs.push_back(std::move(log));
    }
    return result;
}

FedResult run_centralized(const FedConfig& config, const ModelParams& init, const FederationData& data) {
    config.validate();
    Batch all;
    for (const auto& c : data.clients) all.insert(all.end(), c.begin(), c.end());
    if (all.empty()) throw Error(ErrorCode::EmptyClient, "no training data");
    FedResult result{init, {}};
    for (int r = 0; r < config.rounds; ++r) {
        TrainOptions opt{config.local_steps, config.batch, config.lr, client_seed(config.seed, 0),
                         static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(config.local_steps),
                         config.optimizer, config.clip_norm};
        auto t = train_steps(result.params, all, opt);
        result.params = std::move(t.params);
        RoundLog log;
        log.round = r + 1;
        log.phase = "centralized";
        log.clients = {0};
        log.client_losses = {t.mean_loss.value_or(0.0)};
        log.validation_loss = data.validation.empty() ? 0.0 : evaluate_loss(result.params, data.validation);
        result.logs.push_back(std::move(log));
    }
    return result;
}

std::string round_log_json(const RoundLog& log) {
    nlohmann::json j;
    j["round"] = log.round;
    j["phase"] = log.phase;
    j["clients"] = log.clients;
    j["client_losses"] = log.client_losses;
    j["validation_loss"] = log.validation_loss;
    j["attacked"] = log.attacked;
    j["flagged"] = log.flagged;
    j["scores"] = log.scores;
    return j.dump();
}

void write_round_logs(const std::filesystem::path& path, const std::vector<RoundLog>& logs, bool append) {
    std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    for (const auto& l : logs) out << round_log_json(l) << '\n';
}

} // namespace cktfed
