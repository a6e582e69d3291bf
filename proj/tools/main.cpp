// cktfed command line: encode, mine, train, fed, generate, eval, stats.
#include "cktfed/config.hpp"
#include "cktfed/error.hpp"
#include "cktfed/euler.hpp"
#include "cktfed/fed.hpp"
#include "cktfed/lm.hpp"
#include "cktfed/metrics.hpp"
#include "cktfed/mining.hpp"
#include "cktfed/netlist.hpp"
#include "cktfed/threat.hpp"
#include "cktfed/vocab.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace cktfed;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kRuntime = 3 };

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidTemperature: return kUsage;
    case ErrorCode::SyntaxError:
    case ErrorCode::UnknownDeviceKind:
    case ErrorCode::DuplicateDeviceId:
    case ErrorCode::ArityMismatch:
    case ErrorCode::EmptyCircuit:
    case ErrorCode::InvalidSize:
    case ErrorCode::InvalidCircuit:
    case ErrorCode::DisconnectedGraph:
    case ErrorCode::UnknownToken:
    case ErrorCode::SelfLoopToken:
    case ErrorCode::EmptySequence:
    case ErrorCode::EmptyCorpus:
    case ErrorCode::IdOutOfRange:
    case ErrorCode::SequenceTooLong:
    case ErrorCode::TooFewSamples:
    case ErrorCode::ManifestMismatch:
    case ErrorCode::EmptyClient:
    case ErrorCode::EmptySet:
    case ErrorCode::NoOccurrences:
    case ErrorCode::IoError:
    case ErrorCode::FormatError: return kData;
    default: return kRuntime;
    }
}

std::optional<PatternLibrary> maybe_library(const fs::path& p) {
    if (p.empty()) return std::nullopt;
    return load_library(p);
}

// Sequences from a netlist directory (encoded) or a sequence file.
std::vector<TokenSequence> load_sequences(const fs::path& source, const PatternLibrary* lib, int augment_k,
                                          bool skip_bad, json* failures = nullptr) {
    if (!fs::is_directory(source)) return read_sequences(source);
    std::vector<TokenSequence> out;
    for (const auto& file : list_netlists(source)) {
        try {
            auto c = load_netlist(file);
            auto seqs = augment_k > 1 ? augment(c, augment_k, lib) : std::vector<TokenSequence>{encode(c, lib)};
            out.insert(out.end(), seqs.begin(), seqs.end());
        } catch (const Error& e) {
            if (failures) failures->push_back({{"file", file.filename().string()}, {"error", e.what()}});
            std::cerr << file.string() << ": " << e.what() << '\n';
            if (!skip_bad) throw;
        }
    }
    if (out.empty()) throw Error(ErrorCode::EmptyCorpus, "no circuits found in " + source.string());
    return out;
}

std::vector<CircuitGraph> load_graphs(const fs::path& source) {
    std::vector<CircuitGraph> out;
    if (fs::is_directory(source)) {
        for (const auto& file : list_netlists(source)) out.push_back(build_pin_graph(load_netlist(file)));
    } else {
        for (const auto& s : read_sequences(source)) out.push_back(decode(s));
    }
    if (out.empty()) throw Error(ErrorCode::EmptyCorpus, "no circuits found in " + source.string());
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
}

fs::path vocab_path_for(const ExperimentConfig& c) {
    if (!c.vocab.empty()) return c.vocab;
    fs::path p = c.checkpoint;
    p += ".vocab";
    return p;
}

struct Prepared {
    Vocabulary vocab;
    std::vector<TokenSequence> corpus;
    ModelParams init;
    FederationData data;
};

Prepared prepare(const ExperimentConfig& cfg, const FedConfig& fed) {
    if (cfg.corpus.empty()) throw Error(ErrorCode::InvalidConfig, "corpus: no corpus configured");
    if (cfg.checkpoint.empty()) throw Error(ErrorCode::InvalidConfig, "checkpoint: no checkpoint path configured");
    auto lib = maybe_library(cfg.library);
    Prepared p;
    auto all = load_sequences(cfg.corpus, lib ? &*lib : nullptr, cfg.augment, false);
    p.vocab = !cfg.vocab.empty() && fs::exists(cfg.vocab) ? load_vocab(cfg.vocab) : build_vocab(all);
    ModelConfig mc = cfg.model_config(p.vocab.size());
    std::size_t dropped = 0;
    for (auto& s : all) {
        if (static_cast<int>(sequence_ids(p.vocab, s).size()) <= mc.context_len) p.corpus.push_back(std::move(s));
        else ++dropped;
    }
    if (dropped) std::cerr << "dropped " << dropped << " sequences longer than context_len " << mc.context_len << '\n';
    p.init = cfg.init_checkpoint.empty() ? init_model(mc, cfg.model_seed) : load_checkpoint(cfg.init_checkpoint);
    if (p.init.config.vocab_size != p.vocab.size())
        throw Error(ErrorCode::ManifestMismatch, "initial checkpoint does not match the vocabulary");
    p.data = prepare_federation(p.corpus, p.vocab, fed);
    return p;
}

ExperimentConfig read_config(const fs::path& path, const std::vector<std::string>& overrides) {
    auto cfg = load_config(path);
    for (const auto& o : overrides) {
        auto eq = o.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::InvalidConfig, "override '" + o + "' is not key=value");
        set_config_value(cfg, o.substr(0, eq), o.substr(eq + 1), fs::current_path());
    }
    return cfg;
}

std::string key_table() {
    std::string out = "Config keys (key = value, one per line; '#' starts a comment):\n";
    for (const auto& k : config_keys()) {
        std::string left = "  " + k.key;
        if (!k.default_value.empty()) left += " [" + k.default_value + "]";
        if (left.size() < 34) left.resize(34, ' ');
        else left += "  ";
        out += left + k.help + "\n";
    }
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"Pin-level circuit encoding and federated topology-generator training", "cktfed"};
    app.require_subcommand(1);
    app.footer(key_table());

    // encode
    auto* enc = app.add_subcommand("encode", "Encode a netlist directory into a sequence file");
    fs::path enc_in, enc_out, enc_lib, enc_vocab;
    int enc_aug = 1;
    bool enc_skip = false;
    enc->add_option("input", enc_in, "directory of .ckt netlists")->required();
    enc->add_option("-o,--out", enc_out, "output sequence file")->required();
    enc->add_option("--library", enc_lib, "pattern library for subcircuit tokens");
    enc->add_option("--augment", enc_aug, "walks per circuit")->check(CLI::PositiveNumber);
    enc->add_option("--vocab-out", enc_vocab, "also write the vocabulary");
    enc->add_flag("--skip-bad", enc_skip, "skip netlists that fail to parse");

    // mine
    auto* mine = app.add_subcommand("mine", "Mine frequent subgraphs into a pattern library");
    fs::path mine_in, mine_out;
    LibraryOptions mine_opt;
    mine->add_option("input", mine_in, "netlist directory or sequence file")->required();
    mine->add_option("-o,--out", mine_out, "output library file")->required();
    mine->add_option("--support", mine_opt.min_support, "minimum graph-level support");
    mine->add_option("--min-isolated", mine_opt.min_isolated_fraction, "minimum isolated-node fraction");
    mine->add_option("--max-edges", mine_opt.max_edges, "largest pattern in edges");

    // train / fed
    fs::path cfg_path;
    std::vector<std::string> overrides;
    auto* train = app.add_subcommand("train", "Centralized training from a config file");
    train->add_option("config", cfg_path, "experiment config")->required()->check(CLI::ExistingFile);
    train->add_option("--set", overrides, "override a config key (key=value)");
    auto* fed = app.add_subcommand("fed", "Federated training from a config file");
    fed->add_option("config", cfg_path, "experiment config")->required()->check(CLI::ExistingFile);
    fed->add_option("--set", overrides, "override a config key (key=value)");

    // generate
    auto* gen = app.add_subcommand("generate", "Sample sequences from a checkpoint");
    fs::path gen_ckpt, gen_vocab, gen_out;
    int gen_n = 10, gen_max = 0;
    double gen_temp = 1.0;
    std::uint64_t gen_seed = 0;
    std::string gen_tag;
    gen->add_option("checkpoint", gen_ckpt, "model checkpoint")->required()->check(CLI::ExistingFile);
    gen->add_option("--vocab", gen_vocab, "vocabulary file (default: <checkpoint>.vocab)");
    gen->add_option("-n,--count", gen_n, "number of samples")->check(CLI::NonNegativeNumber);
    gen->add_option("--temperature", gen_temp, "sampling temperature, 0 for greedy");
    gen->add_option("--seed", gen_seed, "sampling seed");
    gen->add_option("--max-len", gen_max, "maximum tokens per sample (default: context)");
    gen->add_option("--tag", gen_tag, "type-tag prompt such as <OPAMP>");
    gen->add_option("-o,--out", gen_out, "output sequence file")->required();

    // eval
    auto* ev = app.add_subcommand("eval", "Metrics report for generated sequences");
    fs::path ev_gen, ev_train, ev_ckpt, ev_base, ev_vocab, ev_lib, ev_out;
    ev->add_option("generated", ev_gen, "generated sequence file")->required();
    ev->add_option("training", ev_train, "training netlist directory or sequence file")->required();
    ev->add_option("--checkpoint", ev_ckpt, "checkpoint for the loss on the training sequences");
    ev->add_option("--baseline-checkpoint", ev_base, "reference checkpoint for the loss ratio");
    ev->add_option("--vocab", ev_vocab, "vocabulary file (default: <checkpoint>.vocab)");
    ev->add_option("--library", ev_lib, "pattern library for subcircuit tokens");
    ev->add_option("-o,--out", ev_out, "write the JSON report here instead of stdout");

    // stats
    auto* st = app.add_subcommand("stats", "Embedding heterogeneity across client shards");
    fs::path st_ckpt, st_vocab, st_csv;
    std::vector<fs::path> st_shards;
    int st_bins = 50;
    std::string st_base = "global";
    st->add_option("checkpoint", st_ckpt, "model checkpoint")->required()->check(CLI::ExistingFile);
    st->add_option("shards", st_shards, "one sequence file per client")->required();
    st->add_option("--vocab", st_vocab, "vocabulary file (default: <checkpoint>.vocab)");
    st->add_option("--bins", st_bins, "histogram bins")->check(CLI::PositiveNumber);
    st->add_option("--baseline", st_base, "mse reference: global or client")->check(CLI::IsMember({"global", "client"}));
    st->add_option("--csv", st_csv, "write the per-client summary CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    auto default_vocab = [](const fs::path& ckpt, const fs::path& given) {
        if (!given.empty()) return given;
        fs::path p = ckpt;
        p += ".vocab";
        return p;
    };

    if (enc->parsed()) {
        auto lib = maybe_library(enc_lib);
        json failures = json::array();
        auto seqs = load_sequences(enc_in, lib ? &*lib : nullptr, enc_aug, enc_skip, &failures);
        write_sequences(enc_out, seqs);
        std::vector<Circuit> circuits;
        for (const auto& f : list_netlists(enc_in)) {
            try {
                circuits.push_back(load_netlist(f));
            } catch (const Error&) {
            }
        }
        auto comp = compression_summary(circuits, lib ? &*lib : nullptr);
        double mean_len = 0.0;
        for (const auto& s : seqs) mean_len += static_cast<double>(s.size());
        mean_len /= static_cast<double>(seqs.size());
        if (!enc_vocab.empty()) save_vocab(enc_vocab, build_vocab(seqs));
        json j{{"circuits", circuits.size()},
               {"sequences", seqs.size()},
               {"mean_length", mean_len},
               {"compression", {{"mean", comp.mean}, {"min", comp.min}, {"max", comp.max}}},
               {"failed", failures}};
        std::cout << j.dump(2) << '\n';
        return failures.empty() ? kOk : kData;
    }

    if (mine->parsed()) {
        auto graphs = load_graphs(mine_in);
        LibraryBuildReport report;
        auto lib = build_pattern_library(graphs, mine_opt, &report);
        save_library(mine_out, lib);
        std::cerr << "mined " << report.mined.size() << " frequent patterns, kept " << lib.patterns.size() << '\n';
        std::cerr << "pattern  support  edges  boundary\n";
        json table = json::array();
        for (const auto& p : lib.patterns) {
            std::cerr << p.pattern_id << "  " << p.support << "  " << p.edges.size() << "  " << p.boundary_nodes.size() << '\n';
            table.push_back({{"pattern", p.pattern_id}, {"support", p.support}, {"edges", p.edges.size()},
                             {"isolated_fraction", p.isolated_fraction}});
        }
        std::cout << json{{"mined", report.mined.size()}, {"kept", lib.patterns.size()}, {"patterns", table}}.dump(2) << '\n';
        return kOk;
    }

    if (train->parsed() || fed->parsed()) {
        auto cfg = read_config(cfg_path, overrides);
        FedConfig fc = cfg.fed;
        if (train->parsed()) fc.n_clients = 1;
        auto p = prepare(cfg, fc);
        save_vocab(vocab_path_for(cfg), p.vocab);
        FedResult result;
        if (train->parsed()) {
            result = run_centralized(fc, p.init, p.data);
        } else {
            auto data = apply_data_poisoning(p.data, cfg.attack, p.vocab);
            FedHooks hooks = attack_hooks(cfg.attack);
            DetectorState detector(cfg.defense);
            if (cfg.defense_enabled) hooks = defense_hooks(detector, hooks);
            result = run_federation(fc, p.init, data, hooks);
            std::set<int> flagged;
            for (const auto& l : result.logs) flagged.insert(l.flagged.begin(), l.flagged.end());
            if (cfg.defense_recover && !flagged.empty()) {
                auto rec = remove_and_recover(fc, p.init, data, flagged);
                result.logs.insert(result.logs.end(), rec.logs.begin(), rec.logs.end());
                result.params = std::move(rec.params);
            }
        }
        save_checkpoint(cfg.checkpoint, result.params);
        if (!cfg.log.empty()) write_round_logs(cfg.log, result.logs);
        json j{{"checkpoint", cfg.checkpoint.string()},
               {"rounds", result.logs.size()},
               {"final_validation_loss", result.logs.empty() ? 0.0 : result.logs.back().validation_loss},
               {"parameters", result.params.size()},
               {"vocab_size", p.vocab.size()}};
        std::cout << j.dump(2) << '\n';
        return kOk;
    }

    if (gen->parsed()) {
        auto params = load_checkpoint(gen_ckpt);
        auto vocab = load_vocab(default_vocab(gen_ckpt, gen_vocab));
        GenerateOptions opt;
        opt.max_len = gen_max > 0 ? gen_max : params.config.context_len - 2;
        opt.temperature = gen_temp;
        opt.tag = gen_tag;
        std::vector<TokenSequence> out;
        for (int i = 0; i < gen_n; ++i) {
            opt.seed = gen_seed * 1000003ULL + static_cast<std::uint64_t>(i);
            out.push_back(generate(params, vocab, opt));
        }
        write_sequences(gen_out, out);
        std::cerr << "wrote " << out.size() << " sequences to " << gen_out.string() << '\n';
        return kOk;
    }

    if (ev->parsed()) {
        auto lib = maybe_library(ev_lib);
        const PatternLibrary* lp = lib ? &*lib : nullptr;
        auto generated = read_sequences(ev_gen);
        auto training = load_sequences(ev_train, lp, 1, false);
        std::optional<Vocabulary> vocab;
        if (!ev_ckpt.empty()) vocab = load_vocab(default_vocab(ev_ckpt, ev_vocab));
        auto report = evaluate(generated, training, vocab ? &*vocab : nullptr, lp);
        std::vector<Circuit> circuits;
        if (fs::is_directory(ev_train))
            for (const auto& f : list_netlists(ev_train)) circuits.push_back(load_netlist(f));
        if (!circuits.empty()) report.compression = compression_summary(circuits, lp);
        if (!ev_ckpt.empty()) {
            auto params = load_checkpoint(ev_ckpt);
            Batch ids;
            for (const auto& s : training) {
                auto x = sequence_ids(*vocab, s);
                if (static_cast<int>(x.size()) <= params.config.context_len) ids.push_back(std::move(x));
            }
            report.validation_loss = evaluate_loss(params, ids);
            if (!ev_base.empty()) {
                auto base = load_checkpoint(ev_base);
                const double ref = evaluate_loss(base, ids);
                report.loss_ratio = *report.validation_loss / ref;
                std::cerr << "loss ratio vs baseline: " << *report.loss_ratio << '\n';
            }
        }
        auto text = render_report(report);
        if (ev_out.empty()) std::cout << text << '\n';
        else write_text(ev_out, text + "\n");
        return kOk;
    }

    if (st->parsed()) {
        auto params = load_checkpoint(st_ckpt);
        auto vocab = load_vocab(default_vocab(st_ckpt, st_vocab));
        std::vector<Batch> clients;
        for (const auto& shard : st_shards) {
            Batch b;
            for (const auto& s : read_sequences(shard)) b.push_back(sequence_ids(vocab, s));
            clients.push_back(std::move(b));
        }
        auto stats = heterogeneity_stats(clients, params, st_bins,
                                         st_base == "client" ? MseBaseline::PerClient : MseBaseline::Global);
        json rows = json::array();
        for (const auto& s : stats)
            rows.push_back({{"client", s.client}, {"mean", s.mean}, {"mse", s.mse}, {"entries", s.entries},
                            {"bin_edges", s.bin_edges}, {"densities", s.densities}});
        if (!st_csv.empty()) write_text(st_csv, heterogeneity_csv(stats));
        std::cout << json{{"clients", rows}}.dump(2) << '\n';
        return kOk;
    }
    return kUsage;
}

} // namespace

int main(int argc, char** argv) {
    // Per-circuit warnings are collapsed into one summary line at exit.
    std::size_t n_warnings = 0;
    std::string first_warning;
    set_warning_handler([&](std::string_view m) {
        if (n_warnings++ == 0) first_warning = m;
    });
    struct Summary {
        std::size_t& n;
        std::string& first;
        ~Summary() {
            if (n == 1) std::cerr << "warning: " << first << '\n';
            else if (n > 1) std::cerr << "warning: " << first << " (and " << n - 1 << " similar)\n";
        }
    } summary{n_warnings, first_warning};
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
}
