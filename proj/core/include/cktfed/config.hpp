#pragma once

#include "cktfed/fed.hpp"
#include "cktfed/lm.hpp"
#include "cktfed/mining.hpp"
#include "cktfed/threat.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cktfed {

/// Flat experiment settings read from a `key = value` file.
struct ExperimentConfig {
    // paths, resolved against the config file's directory
    std::filesystem::path corpus;      // directory of .ckt files or a sequence file
    std::filesystem::path library;     // pattern library, optional
    std::filesystem::path vocab;       // vocabulary file, optional (built from corpus otherwise)
    std::filesystem::path checkpoint;  // output checkpoint
    std::filesystem::path init_checkpoint;
    std::filesystem::path log;         // JSONL round log

    std::string model_preset = "desk";
    int n_layers = 0;  // 0 keeps the preset value
    int n_heads = 0;
    int d_model = 0;
    int context_len = 0;
    bool tie_embeddings = false;
    std::uint64_t model_seed = 0;

    FedConfig fed;
    AttackSpec attack;
    bool defense_enabled = false;
    DetectorOptions defense;
    bool defense_recover = false;

    LibraryOptions mining;
    int augment = 1;

    ModelConfig model_config(int vocab_size) const;
};

struct ConfigKey {
    std::string key;
    std::string default_value;
    std::string help;
};

/// Every accepted key, in documentation order.
const std::vector<ConfigKey>& config_keys();

/// Parses `key = value` lines; '#' starts a comment. Unknown keys and bad
/// values throw InvalidConfig naming the key.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies one setting; used for files and command-line overrides alike.
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value,
                      const std::filesystem::path& base_dir = {});

} // namespace cktfed
