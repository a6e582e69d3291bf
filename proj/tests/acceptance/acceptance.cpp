// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only when all pass.

#include "corpus.hpp"
#include "oracles.hpp"

#include <cktfed/error.hpp>
#include <cktfed/isomorphism.hpp>
#include <cktfed/metrics.hpp>
#include <cktfed/mining.hpp>
#include <cktfed/threat.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

using namespace cktfed;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double x, int digits = 4) {
    std::ostringstream os;
    os.precision(digits);
    os << x;
    return os.str();
}

CircuitGraph graph_of(const oracle::SmallGraph& s) {
    GraphBuilder b;
    for (std::size_t i = 0; i < s.labels.size(); ++i) b.add_node("v" + std::to_string(i));
    for (auto [u, v] : s.edges) b.add_edge("v" + std::to_string(u), "v" + std::to_string(v));
    return b.build(false);
}

// ---------------------------------------------------------------- encoding

Outcome round_trip() {
    auto circuits = testing_corpus::fixtures();
    auto random = testing_corpus::random_circuits(1000, 2024, 12);
    circuits.insert(circuits.end(), random.begin(), random.end());
    std::size_t ok = 0;
    for (const auto& c : circuits) ok += isomorphic(decode(encode(c)), build_pin_graph(c));
    return {ok == circuits.size(), std::to_string(ok) + "/" + std::to_string(circuits.size()) + " isomorphic"};
}

Outcome star_pruning() {
    auto circuits = testing_corpus::fixtures();
    auto random = testing_corpus::random_circuits(300, 77, 12);
    circuits.insert(circuits.end(), random.begin(), random.end());
    long nets = 0, bad = 0, star_total = 0, pair_total = 0;
    for (const auto& c : circuits) {
        auto g = build_pin_graph(c);
        auto adj = g.adjacency();
        for (const auto& s : net_stars(c)) {
            const long n = static_cast<long>(s.leaves.size()) + 1;
            const long expect_n = static_cast<long>(c.nets.at(s.net).size()) + (c.terminals.count(s.net) ? 1 : 0);
            if (n != expect_n) ++bad;
            if (n < 3) continue;
            ++nets;
            // star edges present in the graph
            long star = 0;
            const int a = g.index_of(s.anchor);
            for (const auto& l : s.leaves)
                if (std::count(adj[a].begin(), adj[a].end(), g.index_of(l))) ++star;
            // legacy pairwise: every unordered pair of net members
            std::vector<std::string> members = s.leaves;
            members.push_back(s.anchor);
            std::set<std::pair<std::string, std::string>> pairs;
            for (const auto& x : members)
                for (const auto& y : members)
                    if (x < y) pairs.insert({x, y});
            const long pairwise = static_cast<long>(pairs.size());
            if (star != n - 1 || pairwise != n * (n - 1) / 2) ++bad;
            star_total += star;
            pair_total += pairwise;
        }
    }
    return {bad == 0 && nets > 0, std::to_string(nets) + " nets with n>=3, " + std::to_string(star_total) +
                                       " star vs " + std::to_string(pair_total) + " pairwise edges, " +
                                       std::to_string(bad) + " mismatches"};
}

Outcome cpp_optimality() {
    long checked = 0, bad = 0;
    for (const auto& s : oracle::connected_graphs_up_to_iso(8)) {
        const int n = static_cast<int>(s.labels.size());
        std::vector<int> deg(n, 0);
        for (auto [u, v] : s.edges) ++deg[u], ++deg[v];
        if (std::count_if(deg.begin(), deg.end(), [](int d) { return d % 2; }) > 6) continue;
        auto e = eulerize(graph_of(s));
        if (static_cast<int>(e.duplicated.size()) != oracle::min_duplication(n, s.edges)) ++bad;
        ++checked;
    }
    return {bad == 0 && checked > 0, std::to_string(checked) + " graph classes, " + std::to_string(bad) + " non-minimal"};
}

Outcome compression() {
    auto fixtures = testing_corpus::fixtures();
    auto random = testing_corpus::random_circuits(300, 5, 12);
    auto fx = compression_summary(fixtures);
    auto rnd = compression_summary(random);
    std::vector<Circuit> all = fixtures;
    all.insert(all.end(), random.begin(), random.end());
    PatternLibrary lib;
    {
        std::vector<CircuitGraph> graphs;
        for (const auto& c : fixtures) graphs.push_back(build_pin_graph(c));
        lib = build_pattern_library(graphs, {});
    }
    auto with_lib = compression_summary(fixtures, &lib);
    const bool pass = fx.min >= 1.0 && rnd.min >= 1.0 && with_lib.min >= 1.0 && fx.mean >= 1.5;
    return {pass, "fixture mean " + fmt(fx.mean) + " (min " + fmt(fx.min) + ", with library " + fmt(with_lib.mean) +
                      "), random min " + fmt(rnd.min)};
}

Outcome gspan_oracle() {
    int cases = 0, bad = 0;
    for (std::uint64_t seed = 101; seed <= 105; ++seed) {
        oracle::Lcg rng(seed);
        std::vector<oracle::SmallGraph> corpus;
        const int n_graphs = 3 + rng.below(4);
        for (int i = 0; i < n_graphs; ++i) corpus.push_back(oracle::random_labeled_graph(rng, 8, 8, 3));
        std::vector<LabeledGraph> input;
        for (const auto& g : corpus) input.push_back({g.labels, g.edges});
        const auto all = oracle::frequent_subgraphs(corpus, 8);
        for (double s : {0.25, 0.5, 1.0}) {
            const int need = static_cast<int>(std::ceil(s * static_cast<double>(corpus.size()) - 1e-9));
            std::map<std::string, int> expect;
            for (const auto& [k, v] : all)
                if (v >= need) expect.emplace(k, v);
            std::map<std::string, int> got;
            for (const auto& p : mine_frequent_subgraphs(input, {.min_support = s, .max_edges = 8}))
                got.emplace(oracle::canonical_string({p.node_labels, p.edges}), p.support_count);
            bad += got != expect;
            ++cases;
        }
    }
    return {bad == 0, std::to_string(cases - bad) + "/" + std::to_string(cases) + " corpus/support cases match"};
}

// ---------------------------------------------------------------- model

Outcome gradient_check() {
    auto cfg = model_preset("micro", 12);
    cfg.context_len = 12;
    auto init = init_model(cfg, 3);
    std::vector<double> p(init.values.begin(), init.values.end());
    Batch batch{{1, 5, 6, 7, 5, 2}, {1, 4, 8, 9, 10, 11, 4, 2}, {1, 6, 6, 2, 0, 0}};
    auto r = loss_and_grad<double>(cfg, p, batch);
    double worst = 0.0;
    const double h = 1e-5;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double keep = p[i];
        p[i] = keep + h;
        const double up = loss_and_grad<double>(cfg, p, batch, false).loss;
        p[i] = keep - h;
        const double down = loss_and_grad<double>(cfg, p, batch, false).loss;
        p[i] = keep;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max({std::abs(numeric), std::abs(r.grad[i]), 1e-6});
        worst = std::max(worst, std::abs(numeric - r.grad[i]) / scale);
    }
    return {worst < 1e-4, std::to_string(p.size()) + " parameters, max relative error " + fmt(worst, 3)};
}

struct DeskCorpus {
    std::vector<TokenSequence> corpus = testing_corpus::desk_corpus(400, 1, 8);
    Vocabulary vocab = build_vocab(corpus);
    ModelParams init = init_model(model_preset("micro", vocab.size()), 0);
};

const DeskCorpus& desk() {
    static const DeskCorpus d;
    return d;
}

Outcome single_client() {
    const auto& d = desk();
    FedConfig cfg;
    cfg.n_clients = 1;
    cfg.rounds = 10;
    cfg.local_steps = 20;
    cfg.batch = 16;
    cfg.seed = 7;
    auto data = prepare_federation(d.corpus, d.vocab, cfg);
    auto fed = run_federation(cfg, d.init, data);
    auto central = run_centralized(cfg, d.init, data);
    const bool equal = fed.params.values.size() == central.params.values.size() &&
                       std::equal(fed.params.values.begin(), fed.params.values.end(), central.params.values.begin(),
                                  [](float a, float b) { return std::memcmp(&a, &b, sizeof a) == 0; });
    return {equal, equal ? "parameters bit-identical after 200 steps" : "parameters differ"};
}

ModelParams federated_model;  // kept for the heterogeneity check
FederationData federated_data;

Outcome fed_vs_central() {
    const auto& d = desk();
    FedConfig cfg;
    cfg.n_clients = 4;
    cfg.rounds = 50;
    cfg.local_steps = 20;
    cfg.batch = 16;
    cfg.lr = 0.05;
    cfg.seed = 1;
    federated_data = prepare_federation(d.corpus, d.vocab, cfg);
    auto fed = run_federation(cfg, d.init, federated_data);
    auto central = run_centralized(cfg, d.init, federated_data);
    federated_model = fed.params;
    const double f = fed.logs.back().validation_loss, c = central.logs.back().validation_loss;
    const double rel = std::abs(f - c) / c;
    return {rel <= 0.10, "federated " + fmt(f) + " vs centralized " + fmt(c) + " (" + fmt(100 * rel, 3) + "%)"};
}

// ---------------------------------------------------------------- threats

// Canonical attack scenario: 8 IID clients, client 0 scales its update.
FedConfig attack_config(std::uint64_t seed = 3) {
    FedConfig cfg;
    cfg.n_clients = 8;
    cfg.rounds = 50;
    cfg.local_steps = 40;
    cfg.batch = 16;
    cfg.lr = 0.5;
    cfg.seed = seed;
    return cfg;
}

constexpr int kAttacker = 0;
constexpr int kDetectionRounds = 20;

struct AttackRuns {
    FederationData data;
    FedResult clean, x5, x10;
    std::vector<std::vector<int>> flags;  // per round of the x10 run
};

const AttackRuns& attack_runs() {
    static const AttackRuns runs = [] {
        const auto& d = desk();
        AttackRuns r;
        auto cfg = attack_config();
        r.data = prepare_federation(d.corpus, d.vocab, cfg);
        r.clean = run_federation(cfg, d.init, r.data);
        for (double factor : {5.0, 10.0}) {
            AttackSpec spec;
            spec.kind = AttackKind::ScaleUpdate;
            spec.targets = {kAttacker};
            spec.factor = factor;
            DetectorState state;
            auto res = run_federation(cfg, d.init, r.data, defense_hooks(state, attack_hooks(spec)));
            if (factor == 10.0) {
                for (const auto& l : res.logs) r.flags.push_back(l.flagged);
                r.x10 = std::move(res);
            } else {
                r.x5 = std::move(res);
            }
        }
        return r;
    }();
    return runs;
}

Outcome attack_degradation() {
    const auto& r = attack_runs();
    const double clean = r.clean.logs.back().validation_loss;
    const double x5 = r.x5.logs.back().validation_loss, x10 = r.x10.logs.back().validation_loss;
    const double k10 = x10 / clean, k5 = x5 / clean;
    return {k10 >= 2.0 && k10 >= k5, "clean " + fmt(clean) + ", x5 " + fmt(x5) + " (" + fmt(k5, 3) + "x), x10 " +
                                         fmt(x10) + " (" + fmt(k10, 3) + "x)"};
}

std::set<int> detected_clients() {
    std::set<int> out;
    for (const auto& f : attack_runs().flags) {
        if (!f.empty()) return {f.begin(), f.end()};
    }
    return out;
}

Outcome detection() {
    const auto& r = attack_runs();
    // Precision and recall of every flag set from the first flagging round through round 20.
    int first = 0;
    bool exact = true;
    for (int i = 0; i < kDetectionRounds && i < static_cast<int>(r.flags.size()); ++i) {
        if (r.flags[i].empty()) {
            if (first) exact = false;
            continue;
        }
        if (!first) first = i + 1;
        if (r.flags[i] != std::vector<int>{kAttacker}) exact = false;
    }
    const bool detected = first > 0 && exact;

    // Clean runs: any flag on any client in the first 20 rounds is a false positive run.
    const auto& d = desk();
    int fp_runs = 0;
    long fp_flags = 0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
        auto cfg = attack_config(1000 + s);
        cfg.rounds = kDetectionRounds;
        auto data = prepare_federation(d.corpus, d.vocab, cfg);
        DetectorState state;
        auto res = run_federation(cfg, d.init, data, defense_hooks(state));
        long n = 0;
        for (const auto& l : res.logs) n += static_cast<long>(l.flagged.size());
        fp_runs += n > 0;
        fp_flags += n;
    }
    const double fpr = static_cast<double>(fp_runs) / seeds;
    return {detected && fpr <= 0.05, std::string(detected ? "attacker flagged alone from round " + std::to_string(first)
                                                          : "attacker not isolated within 20 rounds") +
                                         ", clean false-positive rate " + fmt(fpr, 3) + " (" +
                                         std::to_string(fp_flags) + " flags over " + std::to_string(seeds) + " runs)"};
}

Outcome recovery() {
    const auto& r = attack_runs();
    auto flagged = detected_clients();
    if (flagged.empty()) return {false, "nothing detected to remove"};
    auto rec = remove_and_recover(attack_config(), desk().init, r.data, flagged);
    const double clean = r.clean.logs.back().validation_loss, got = rec.logs.back().validation_loss;
    const double rel = std::abs(got - clean) / clean;
    return {rel <= 0.15, "recovered " + fmt(got) + " vs attack-free " + fmt(clean) + " (" + fmt(100 * rel, 3) + "%)"};
}

// ---------------------------------------------------------------- metrics

Outcome metrics_sanity() {
    std::vector<TokenSequence> train;
    std::vector<CircuitGraph> graphs;
    for (const auto& c : testing_corpus::fixtures()) {
        train.push_back(encode(c));
        graphs.push_back(build_pin_graph(c));
    }
    auto synth = testing_corpus::desk_corpus(60, 9, 8);
    train.insert(train.end(), synth.begin(), synth.end());
    const double nov = novelty(train, train).diff_fraction;
    const double self = mmd(graphs, graphs);

    bool table = true;
    for (bool valid : {false, true})
        for (bool relevant : {false, true})
            for (bool high : {false, true}) {
                const double expect = !valid ? -1.0 : !relevant ? -0.5 : high ? 1.0 : 0.5;
                table = table && rank_reward(valid, relevant, high) == expect;
            }

    oracle::Lcg rng(4242);
    std::vector<oracle::SmallGraph> set;
    for (int i = 0; i < 80; ++i) {
        auto g = oracle::random_labeled_graph(rng, 8, 10, 1 + rng.below(3));
        set.push_back(g);
        // a relabeled copy
        std::vector<int> p(g.labels.size());
        std::iota(p.begin(), p.end(), 0);
        for (std::size_t k = p.size(); k > 1; --k) std::swap(p[k - 1], p[rng.below(static_cast<int>(k))]);
        oracle::SmallGraph q;
        q.labels.resize(g.labels.size());
        for (std::size_t k = 0; k < p.size(); ++k) q.labels[p[k]] = g.labels[k];
        for (auto [u, v] : g.edges) q.edges.emplace_back(p[u], p[v]);
        set.push_back(q);
    }
    long pairs = 0, disagree = 0;
    for (std::size_t i = 0; i < set.size(); ++i)
        for (std::size_t j = i + 1; j < set.size(); ++j) {
            if (set[i].labels.size() != set[j].labels.size() || set[i].edges.size() != set[j].edges.size()) continue;
            ++pairs;
            disagree += oracle::isomorphic(set[i], set[j]) !=
                        isomorphic(graph_of(set[i]), set[i].labels, graph_of(set[j]), set[j].labels);
        }
    const bool pass = nov == 0.0 && self < 1e-12 && table && disagree == 0;
    return {pass, "novelty " + fmt(nov) + ", mmd(X,X) " + fmt(self, 3) + ", reward table " + (table ? "ok" : "wrong") +
                      ", isomorphism " + std::to_string(pairs - disagree) + "/" + std::to_string(pairs) + " pairs agree"};
}

Outcome heterogeneity() {
    if (federated_data.clients.empty()) return {false, "federated model unavailable"};
    auto stats = heterogeneity_stats(federated_data.clients, federated_model);
    double ss = 0.0, n = 0.0, worst = 0.0;
    for (const auto& s : stats) {
        ss += s.mse * static_cast<double>(s.entries);
        n += static_cast<double>(s.entries);
    }
    const double pooled = std::sqrt(ss / n);
    for (const auto& a : stats)
        for (const auto& b : stats) worst = std::max(worst, std::abs(a.mean - b.mean));
    auto twin = heterogeneity_stats({federated_data.clients[0], federated_data.clients[0]}, federated_model);
    const bool same = twin[0].mean == twin[1].mean && twin[0].mse == twin[1].mse &&
                      twin[0].densities == twin[1].densities;
    return {worst <= 0.1 * pooled && same, "max mean gap " + fmt(worst, 3) + " vs pooled std " + fmt(pooled, 3) +
                                               ", identical shards " + (same ? "identical" : "differ")};
}

} // namespace

int main() {
    std::size_t warnings = 0;
    set_warning_handler([&](std::string_view) { ++warnings; });

    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "encoding round trip", round_trip},
        {2, "star edge pruning", star_pruning},
        {3, "postman duplication optimal", cpp_optimality},
        {4, "sequence compression", compression},
        {5, "frequent subgraph oracle", gspan_oracle},
        {6, "gradient check", gradient_check},
        {7, "single-client federation", single_client},
        {8, "federated vs centralized", fed_vs_central},
        {9, "scaling attack degradation", attack_degradation},
        {10, "attacker detection", detection},
        {11, "recovery", recovery},
        {12, "metrics sanity", metrics_sanity},
        {13, "client heterogeneity", heterogeneity},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::printf("%s criterion %d: %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed (%zu encoder warnings suppressed)\n", static_cast<int>(criteria.size()) - failed,
                criteria.size(), warnings);
    return failed == 0 ? 0 : 1;
}
