#pragma once

#include "cktfed/euler.hpp"
#include "cktfed/lm.hpp"
#include "cktfed/vocab.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace cktfed {

enum class PartitionScheme { Balanced, Unbalanced, Specialized };

std::string_view to_string(PartitionScheme scheme);
PartitionScheme parse_partition_scheme(std::string_view name);

struct FedConfig {
    int n_clients = 4;
    int rounds = 50;
    int local_steps = 20;
    int batch = 16;
    double lr = 0.05;
    PartitionScheme scheme = PartitionScheme::Balanced;
    double dataset_fraction = 1.0;
    double validation_fraction = 0.1;
    std::uint64_t seed = 0;
    Optimizer optimizer = Optimizer::Sgd;
    double clip_norm = 0.0;

    /// Throws InvalidConfig.
    void validate() const;
};

/// Global holdout: indices of the validation and training sequences.
struct HoldoutSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

HoldoutSplit holdout_split(std::size_t n, double validation_fraction, std::uint64_t seed);

/// Client shards as indices into `corpus`. Shards are disjoint and together
/// cover the fraction-selected corpus. Specialization uses sequence tags.
std::vector<std::vector<std::size_t>> partition_dataset(const std::vector<TokenSequence>& corpus,
                                                        const FedConfig& config);

/// Per-client training data and the shared validation set, as model ids.
struct FederationData {
    std::vector<Batch> clients;
    Batch validation;
    std::vector<std::vector<std::size_t>> client_indices;  // into the corpus
};

FederationData prepare_federation(const std::vector<TokenSequence>& corpus, const Vocabulary& vocab,
                                  const FedConfig& config);

struct ClientUpdate {
    int client_id = 0;
    std::vector<double> delta;  // local - global, exact for float parameters
    std::size_t n_samples = 0;
    double local_loss = 0.0;
};

/// Seed used by client `client` for its batch schedule.
std::uint64_t client_seed(std::uint64_t seed, int client);

ClientUpdate local_update(int client_id, const Batch& data, const ModelParams& global, const TrainOptions& options);

/// global + sum_i (n_i / sum n) delta_i, summed in client-id order.
ModelParams fedavg_aggregate(const ModelParams& global, const std::vector<ClientUpdate>& updates);

struct RoundLog {
    int round = 0;  // 1-based
    std::string phase = "train";  // "train", "recovery" or "centralized"
    std::vector<int> clients;
    std::vector<double> client_losses;
    double validation_loss = 0.0;
    std::vector<int> attacked;
    std::vector<int> flagged;
    std::vector<double> scores;
};

struct FedHooks {
    /// Called for every client update before aggregation; returns true when the update was attacked.
    std::function<bool(int round, ClientUpdate& update)> attack;
    /// Sees the round's updates and the pre-aggregation global model; returns flagged client ids
    /// and may fill per-client scores.
    std::function<std::vector<int>(int round, const std::vector<ClientUpdate>& updates, const ModelParams& global,
                                   std::vector<double>& scores)>
        defense;
    /// Clients whose shards are left out entirely.
    std::vector<int> excluded;
    std::string phase = "train";
};

struct FedResult {
    ModelParams params;
    std::vector<RoundLog> logs;
};

FedResult run_federation(const FedConfig& config, const ModelParams& init, const FederationData& data,
                         const FedHooks& hooks = {});

/// Sequential training on the union of client shards with the batch schedule of
/// a single client, rounds * local_steps steps in total.
FedResult run_centralized(const FedConfig& config, const ModelParams& init, const FederationData& data);

std::string round_log_json(const RoundLog& log);
void write_round_logs(const std::filesystem::path& path, const std::vector<RoundLog>& logs, bool append = false);

} // namespace cktfed
