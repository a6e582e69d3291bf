#pragma once

#include "cktfed/euler.hpp"
#include "cktfed/lm.hpp"
#include "cktfed/mining.hpp"
#include "cktfed/vocab.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cktfed {

enum class ValidityFailure { DecodeError, IncompletePins, Disconnected, NoSupply, NoIO, DanglingDevice };

std::string_view to_string(ValidityFailure failure);

struct ValidityReport {
    bool valid = false;
    std::vector<ValidityFailure> failures;
    std::string detail;  // decode error message, if any

    bool has(ValidityFailure f) const;
};

/// Structural checks in a fixed order; every check runs and every failure is
/// reported. Tokens outside `vocab` (when given) count as decode errors.
ValidityReport validity_check(const TokenSequence& sequence, const Vocabulary* vocab = nullptr,
                              const PatternLibrary* library = nullptr);

struct NoveltyResult {
    double diff_fraction = 0.0;    // generated graphs isomorphic to no training graph
    double unique_fraction = 0.0;  // isomorphism classes among generated / generated
    std::size_t evaluated = 0;
    std::size_t undecodable = 0;
};

NoveltyResult novelty(const std::vector<TokenSequence>& generated, const std::vector<TokenSequence>& training,
                      const PatternLibrary* library = nullptr);

/// Fixed-length descriptor: node count, edge count, normalized device-class
/// histogram (7 classes), degree fractions for degrees 1..5 and 6+, terminal count.
std::vector<double> graph_descriptor(const CircuitGraph& graph);

/// sqrt(max(unbiased MMD^2, 0)) with an RBF kernel; bandwidth is the median
/// pairwise distance of the pooled descriptors.
double mmd_descriptors(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b);
double mmd(const std::vector<CircuitGraph>& a, const std::vector<CircuitGraph>& b);

/// Largest number of distinct devices in a decodable sequence.
int scalability(const std::vector<TokenSequence>& sequences, const PatternLibrary* library = nullptr);
/// Distinct type tags among valid sequences.
int versatility(const std::vector<TokenSequence>& sequences, const PatternLibrary* library = nullptr);

double rank_reward(bool valid, bool relevant, bool high_perf);

struct CompressionSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Legacy-over-pruned sequence length ratios for a set of circuits.
CompressionSummary compression_summary(const std::vector<Circuit>& circuits, const PatternLibrary* library = nullptr);

enum class MseBaseline { Global, PerClient };

struct HeterogeneityStats {
    int client = 0;
    std::size_t entries = 0;
    double mean = 0.0;
    double mse = 0.0;
    std::vector<double> bin_edges;
    std::vector<double> densities;
};

std::vector<HeterogeneityStats> heterogeneity_stats(const std::vector<Batch>& clients, const ModelParams& params,
                                                    int bins = 50, MseBaseline baseline = MseBaseline::Global);

/// One row per client: client,mean,mse.
std::string heterogeneity_csv(const std::vector<HeterogeneityStats>& stats);

struct EvalReport {
    std::size_t generated = 0;
    std::size_t valid = 0;
    double validity_rate = 0.0;
    std::map<std::string, std::size_t> failure_counts;
    NoveltyResult novelty;
    double mmd = 0.0;
    int scalability = 0;
    int versatility = 0;
    std::optional<CompressionSummary> compression;
    std::vector<HeterogeneityStats> heterogeneity;
    std::optional<double> validation_loss;
    std::optional<double> loss_ratio;
};

EvalReport evaluate(const std::vector<TokenSequence>& generated, const std::vector<TokenSequence>& training,
                    const Vocabulary* vocab = nullptr, const PatternLibrary* library = nullptr);

std::string render_report(const EvalReport& report);

} // namespace cktfed
