#include "cktfed/config.hpp"

#include "cktfed/error.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace cktfed {

ModelConfig ExperimentConfig::model_config(int vocab_size) const {
    auto c = cktfed::model_preset(model_preset, vocab_size);
    if (n_layers) c.n_layers = n_layers;
    if (n_heads) c.n_heads = n_heads;
    if (d_model) c.d_model = d_model;
    if (context_len) c.context_len = context_len;
    c.tie_embeddings = tie_embeddings;
    c.validate();
    return c;
}

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
    throw Error(ErrorCode::InvalidConfig, key + ": invalid value '" + value + "' (" + why + ")");
}

long long to_int(const std::string& key, const std::string& v) {
    long long out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) bad(key, v, "expected an integer");
    return out;
}

double to_real(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double d = std::stod(v, &used);
        if (used != v.size()) bad(key, v, "expected a number");
        return d;
    } catch (const std::logic_error&) {
        bad(key, v, "expected a number");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad(key, v, "expected true or false");
}

std::set<int> to_int_set(const std::string& key, const std::string& v) {
    std::set<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.insert(static_cast<int>(to_int(key, item)));
    }
    return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value,
                                  const std::filesystem::path& base)>;

struct KeyDef {
    ConfigKey doc;
    Setter set;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
    std::filesystem::path p(v);
    if (p.is_relative() && !base.empty()) p = base / p;
    return p.lexically_normal();
}

const std::vector<KeyDef>& key_defs() {
    static const std::vector<KeyDef> defs = [] {
        std::vector<KeyDef> d;
        auto path_key = [&](std::string k, std::string help, std::filesystem::path ExperimentConfig::*field) {
            d.push_back({{k, "", std::move(help)},
                         [field](ExperimentConfig& c, const std::string&, const std::string& v,
                                 const std::filesystem::path& base) { c.*field = resolve(base, v); }});
        };
        auto int_key = [&](std::string k, std::string def, std::string help, std::function<void(ExperimentConfig&, long long)> f) {
            d.push_back({{k, std::move(def), std::move(help)},
                         [f](ExperimentConfig& c, const std::string& key, const std::string& v,
                             const std::filesystem::path&) { f(c, to_int(key, v)); }});
        };
        auto real_key = [&](std::string k, std::string def, std::string help, std::function<void(ExperimentConfig&, double)> f) {
            d.push_back({{k, std::move(def), std::move(help)},
                         [f](ExperimentConfig& c, const std::string& key, const std::string& v,
                             const std::filesystem::path&) { f(c, to_real(key, v)); }});
        };
        auto bool_key = [&](std::string k, std::string def, std::string help, std::function<void(ExperimentConfig&, bool)> f) {
            d.push_back({{k, std::move(def), std::move(help)},
                         [f](ExperimentConfig& c, const std::string& key, const std::string& v,
                             const std::filesystem::path&) { f(c, to_bool(key, v)); }});
        };
        auto str_key = [&](std::string k, std::string def, std::string help,
                           std::function<void(ExperimentConfig&, const std::string&, const std::string&)> f) {
            d.push_back({{k, std::move(def), std::move(help)},
                         [f](ExperimentConfig& c, const std::string& key, const std::string& v,
                             const std::filesystem::path&) { f(c, key, v); }});
        };

        path_key("corpus", "directory of .ckt netlists or a sequence file", &ExperimentConfig::corpus);
        path_key("library", "pattern library file used for subcircuit tokens", &ExperimentConfig::library);
        path_key("vocab", "vocabulary file; built from the corpus when empty", &ExperimentConfig::vocab);
        path_key("checkpoint", "output checkpoint path", &ExperimentConfig::checkpoint);
        path_key("init_checkpoint", "start from this checkpoint instead of a fresh model", &ExperimentConfig::init_checkpoint);
        path_key("log", "JSONL round log path", &ExperimentConfig::log);

        str_key("model.preset", "desk", "full, desk or micro", [](auto& c, auto& k, auto& v) {
            if (v != "full" && v != "desk" && v != "micro") bad(k, v, "expected full, desk or micro");
            c.model_preset = v;
        });
        int_key("model.n_layers", "0", "override the preset layer count (0 keeps it)", [](auto& c, long long v) { c.n_layers = static_cast<int>(v); });
        int_key("model.n_heads", "0", "override the preset head count", [](auto& c, long long v) { c.n_heads = static_cast<int>(v); });
        int_key("model.d_model", "0", "override the preset width", [](auto& c, long long v) { c.d_model = static_cast<int>(v); });
        int_key("model.context_len", "0", "override the preset context length", [](auto& c, long long v) { c.context_len = static_cast<int>(v); });
        bool_key("model.tie_embeddings", "false", "share the embedding table with the output projection", [](auto& c, bool v) { c.tie_embeddings = v; });
        int_key("model.seed", "0", "initialization seed", [](auto& c, long long v) { c.model_seed = static_cast<std::uint64_t>(v); });

        int_key("fed.n_clients", "4", "number of simulated clients", [](auto& c, long long v) { c.fed.n_clients = static_cast<int>(v); });
        int_key("fed.rounds", "50", "communication rounds", [](auto& c, long long v) { c.fed.rounds = static_cast<int>(v); });
        int_key("fed.local_steps", "20", "local SGD steps per round (T)", [](auto& c, long long v) { c.fed.local_steps = static_cast<int>(v); });
        int_key("fed.batch", "16", "mini-batch size (B)", [](auto& c, long long v) { c.fed.batch = static_cast<int>(v); });
        real_key("fed.lr", "0.05", "learning rate", [](auto& c, double v) { c.fed.lr = v; });
        str_key("fed.partition", "balanced", "balanced, unbalanced or specialized", [](auto& c, auto&, auto& v) {
            c.fed.scheme = parse_partition_scheme(v);
        });
        real_key("fed.dataset_fraction", "1", "share of the corpus handed to clients", [](auto& c, double v) { c.fed.dataset_fraction = v; });
        real_key("fed.validation_fraction", "0.1", "global validation holdout", [](auto& c, double v) { c.fed.validation_fraction = v; });
        str_key("fed.optimizer", "sgd", "sgd or adam", [](auto& c, auto& k, auto& v) {
            if (v == "sgd") c.fed.optimizer = Optimizer::Sgd;
            else if (v == "adam") c.fed.optimizer = Optimizer::Adam;
            else bad(k, v, "expected sgd or adam");
        });
        real_key("fed.clip_norm", "0", "gradient norm clip, 0 disables", [](auto& c, double v) { c.fed.clip_norm = v; });
        int_key("seed", "0", "experiment seed (split, partition, batches)", [](auto& c, long long v) { c.fed.seed = static_cast<std::uint64_t>(v); });

        str_key("attack.kind", "none", "none, scale_update or token_poison", [](auto& c, auto&, auto& v) { c.attack.kind = parse_attack_kind(v); });
        str_key("attack.targets", "", "comma-separated attacking client ids", [](auto& c, auto& k, auto& v) { c.attack.targets = to_int_set(k, v); });
        real_key("attack.factor", "10", "update scale factor", [](auto& c, double v) { c.attack.factor = v; });
        real_key("attack.poison_fraction", "0.3", "share of a target's sequences poisoned", [](auto& c, double v) { c.attack.poison_fraction = v; });
        real_key("attack.token_replace_prob", "0.5", "per-token replacement probability", [](auto& c, double v) { c.attack.token_replace_prob = v; });
        int_key("attack.seed", "0", "poisoning seed", [](auto& c, long long v) { c.attack.seed = static_cast<std::uint64_t>(v); });

        bool_key("defense.enabled", "false", "run the update-consistency detector", [](auto& c, bool v) { c.defense_enabled = v; });
        int_key("defense.window", "10", "detector window N", [](auto& c, long long v) { c.defense.window = static_cast<int>(v); });
        real_key("defense.threshold", "10", "cluster separation needed to flag", [](auto& c, double v) { c.defense.threshold = v; });
        bool_key("defense.zero_curvature", "false", "predict updates without the Hessian term", [](auto& c, bool v) { c.defense.zero_curvature = v; });
        int_key("defense.min_rounds", "2", "scored rounds before flagging starts", [](auto& c, long long v) { c.defense.min_scored_rounds = static_cast<int>(v); });
        bool_key("defense.recover", "false", "rerun without flagged clients after the run", [](auto& c, bool v) { c.defense_recover = v; });

        real_key("mining.min_support", "0.25", "graph-level support threshold", [](auto& c, double v) { c.mining.min_support = v; });
        real_key("mining.min_isolated_fraction", "0.5", "isolated-node share a pattern needs", [](auto& c, double v) { c.mining.min_isolated_fraction = v; });
        int_key("mining.max_edges", "8", "largest pattern size in edges", [](auto& c, long long v) { c.mining.max_edges = static_cast<int>(v); });
        int_key("encode.augment", "1", "walks per circuit", [](auto& c, long long v) { c.augment = static_cast<int>(v); });
        return d;
    }();
    return defs;
}

void validate(const ExperimentConfig& c) {
    try {
        c.fed.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("fed.") + e.what());
    }
    if (c.attack.kind != AttackKind::None) c.attack.validate();
    if (c.defense.window < 1) throw Error(ErrorCode::InvalidConfig, "defense.window must be >= 1");
    if (c.augment < 1) throw Error(ErrorCode::InvalidConfig, "encode.augment must be >= 1");
    if (!(c.mining.min_support > 0.0 && c.mining.min_support <= 1.0))
        throw Error(ErrorCode::InvalidConfig, "mining.min_support must be in (0, 1]");
}

} // namespace

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> k;
        for (const auto& d : key_defs()) k.push_back(d.doc);
        return k;
    }();
    return keys;
}

void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value,
                      const std::filesystem::path& base_dir) {
    for (const auto& d : key_defs())
        if (d.doc.key == key) {
            d.set(config, key, value, base_dir);
            return;
        }
    throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    ExperimentConfig c;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": expected key = value");
        set_config_value(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), base_dir);
    }
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

} // namespace cktfed
