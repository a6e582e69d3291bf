#pragma once

#include "cktfed/euler.hpp"
#include "cktfed/vocab.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cktfed {

struct ModelConfig {
    int n_layers = 2;
    int n_heads = 2;
    int d_model = 64;
    int context_len = 256;
    int vocab_size = 0;
    bool tie_embeddings = false;

    int d_ff() const { return 4 * d_model; }
    /// Throws InvalidConfig.
    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

/// "full" (6, 6, 384, 1024, 1029 unless vocab_size is given), "desk"
/// (2, 2, 64, 256) and "micro" (1, 2, 16, 96).
ModelConfig model_preset(std::string_view name, int vocab_size = 0);

struct TensorSpec {
    std::string name;
    int rows = 0;
    int cols = 0;
    std::size_t offset = 0;

    std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
    bool operator==(const TensorSpec&) const = default;
};

/// Named row-major tensors laid out back to back in the flat parameter vector.
struct Manifest {
    std::vector<TensorSpec> tensors;
    std::size_t total = 0;

    const TensorSpec& at(std::string_view name) const;
    bool operator==(const Manifest&) const = default;
};

Manifest make_manifest(const ModelConfig& config);

struct ModelParams {
    ModelConfig config;
    std::vector<float> values;

    std::size_t size() const { return values.size(); }
    bool operator==(const ModelParams&) const = default;
};

ModelParams init_model(const ModelConfig& config, std::uint64_t seed);

using Batch = std::vector<std::vector<int>>;

template <class S>
struct LossGrad {
    double loss = 0.0;             // mean cross-entropy over counted predictions
    std::size_t predictions = 0;   // next-token targets that are not PAD
    std::vector<S> grad;           // empty when not requested
};

/// Next-token cross-entropy with causal attention. Trailing PAD is trimmed and
/// PAD targets are masked. Instantiated for float and double.
template <class S>
LossGrad<S> loss_and_grad(const ModelConfig& config, const std::vector<S>& params, const Batch& batch,
                          bool with_grad = true);

/// Token-weighted mean loss over a dataset, evaluated in chunks.
double evaluate_loss(const ModelParams& params, const Batch& data, std::size_t chunk = 64);

/// Logits for every position of `ids`, row-major (length x vocab).
std::vector<float> forward_logits(const ModelParams& params, const std::vector<int>& ids);

enum class Optimizer { Sgd, Adam };

struct TrainOptions {
    int steps = 20;
    int batch = 64;
    double lr = 0.05;
    std::uint64_t seed = 0;
    /// Global index of the first step; the batch of step s depends only on (seed, s).
    std::uint64_t step_offset = 0;
    Optimizer optimizer = Optimizer::Sgd;
    double clip_norm = 0.0;  // 0 disables clipping
};

struct TrainResult {
    ModelParams params;
    std::optional<double> mean_loss;  // none when no step ran
};

std::vector<std::size_t> sample_batch_indices(std::size_t n, int batch, std::uint64_t seed, std::uint64_t step);
TrainResult train_steps(const ModelParams& params, const Batch& data, const TrainOptions& options);

struct GenerateOptions {
    int max_len = 64;
    double temperature = 1.0;  // 0 selects greedy decoding
    std::uint64_t seed = 0;
    std::string tag;           // optional type-tag prompt, e.g. "<OPAMP>"
};

TokenSequence generate(const ModelParams& params, const Vocabulary& vocab, const GenerateOptions& options);

std::vector<std::vector<float>> embed_tokens(const ModelParams& params, const std::vector<int>& ids);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

} // namespace cktfed
