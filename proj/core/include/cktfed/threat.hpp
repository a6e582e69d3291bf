#pragma once

#include "cktfed/fed.hpp"

#include <cstdint>
#include <deque>
#include <set>
#include <string_view>
#include <vector>

namespace cktfed {

enum class AttackKind { None, ScaleUpdate, TokenPoison };

std::string_view to_string(AttackKind kind);
AttackKind parse_attack_kind(std::string_view name);

struct AttackSpec {
    AttackKind kind = AttackKind::None;
    std::set<int> targets;
    double factor = 10.0;
    double poison_fraction = 0.3;
    double token_replace_prob = 0.5;
    std::uint64_t seed = 0;

    /// Throws InvalidConfig.
    void validate() const;
};

ClientUpdate scale_attack(const ClientUpdate& update, double factor);

/// Copy of `dataset` where a seeded `fraction` of sequences has each
/// non-special token replaced, with probability `prob`, by a different
/// non-special token.
Batch token_poison(const Batch& dataset, double fraction, double prob, const Vocabulary& vocab, std::uint64_t seed);

/// Applies a poisoning spec to the targeted client shards.
FederationData apply_data_poisoning(const FederationData& data, const AttackSpec& spec, const Vocabulary& vocab);

/// Hook for run_federation implementing the update-scaling attack.
FedHooks attack_hooks(const AttackSpec& spec);

struct DetectorOptions {
    int window = 10;
    double threshold = 10.0;
    bool zero_curvature = false;
    int min_scored_rounds = 2;
};

struct DetectorState {
    explicit DetectorState(DetectorOptions opts = {}) : options(opts) {}

    DetectorOptions options;
    int rounds_seen = 0;
    int scored_rounds = 0;
    std::vector<double> prev_weights;
    std::vector<double> prev_mean;
    std::vector<std::vector<double>> prev_updates;            // by client id
    std::deque<std::pair<std::vector<double>, std::vector<double>>> pairs;  // (dw, dg_mean)
    std::vector<std::deque<double>> distances;                // normalized, by client id
};

/// Scores the round's updates against history and records them. Throws
/// HistoryEmpty when no earlier round has been recorded.
std::vector<double> detector_score(DetectorState& state, const std::vector<ClientUpdate>& updates,
                                   const std::vector<double>& global_weights);

/// Records the round and returns scores, all zero on the first round.
std::vector<double> detector_observe(DetectorState& state, const std::vector<ClientUpdate>& updates,
                                     const std::vector<double>& global_weights);

/// Per-client standard deviation of the normalized distances in the window.
std::vector<double> detector_noise(const DetectorState& state);

/// 1-D 2-means split; flags the high cluster when its gap over the pooled std
/// reaches `threshold`. `noise`, when given, supplies per-client std estimates.
std::set<int> flag_clients(const std::vector<double>& scores, double threshold = 10.0,
                           const std::vector<double>* noise = nullptr);

/// Defense hook for run_federation; the state must outlive the run.
FedHooks defense_hooks(DetectorState& state, FedHooks base = {});

/// Reruns the federation without the flagged clients' shards.
FedResult remove_and_recover(const FedConfig& config, const ModelParams& init, const FederationData& data,
                             const std::set<int>& flagged);

} // namespace cktfed
