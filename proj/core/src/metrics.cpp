#include "cktfed/metrics.hpp"

#include "cktfed/error.hpp"
#include "cktfed/isomorphism.hpp"
#include "cktfed/token.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>

namespace cktfed {

std::string_view to_string(ValidityFailure f) {
    switch (f) {
    case ValidityFailure::DecodeError: return "DecodeError";
    case ValidityFailure::IncompletePins: return "IncompletePins";
    case ValidityFailure::Disconnected: return "Disconnected";
    case ValidityFailure::NoSupply: return "NoSupply";
    case ValidityFailure::NoIO: return "NoIO";
    case ValidityFailure::DanglingDevice: return "DanglingDevice";
    }
    return "DecodeError";
}

bool ValidityReport::has(ValidityFailure f) const {
    return std::find(failures.begin(), failures.end(), f) != failures.end();
}

namespace {

std::optional<CircuitGraph> try_decode(const TokenSequence& s, const PatternLibrary* library, std::string* why = nullptr) {
    try {
        return decode(s, library);
    } catch (const Error& e) {
        if (why) *why = e.what();
        return std::nullopt;
    }
}

std::map<std::string, std::vector<int>> devices_of(const CircuitGraph& g) {
    std::map<std::string, std::vector<int>> out;
    for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i) {
        auto info = classify_token(g.nodes[i]);
        if (info.kind == TokenKind::DevicePin) out[info.device_id].push_back(i);
    }
    return out;
}

} // namespace

ValidityReport validity_check(const TokenSequence& sequence, const Vocabulary* vocab, const PatternLibrary* library) {
    ValidityReport r;
    std::optional<CircuitGraph> g;
    if (vocab) {
        for (const auto& t : sequence.tokens)
            if (!vocab->contains(t)) r.detail = "token '" + t + "' is not in the vocabulary";
    }
    if (r.detail.empty()) g = try_decode(sequence, library, &r.detail);
    if (!g) {
        r.failures.push_back(ValidityFailure::DecodeError);
        return r;
    }
    const auto devices = devices_of(*g);
    bool complete = true;
    for (const auto& [id, pins] : devices) {
        auto cls = classify_token(g->nodes[pins.front()]).device_class;
        std::set<char> have;
        for (int p : pins) have.insert(g->nodes[p].back());
        for (auto role : class_roles(cls))
            if (!have.count(static_cast<char>(role))) complete = false;
    }
    if (!complete) r.failures.push_back(ValidityFailure::IncompletePins);
    if (!g->connected()) r.failures.push_back(ValidityFailure::Disconnected);
    bool supply = false, vin = false, vout = false;
    for (const auto& n : g->nodes) {
        auto tc = terminal_class(n);
        if (tc == "VDD" || tc == "VSS" || tc == "GND") supply = true;
        if (tc == "VIN") vin = true;
        if (tc == "VOUT") vout = true;
    }
    if (!supply) r.failures.push_back(ValidityFailure::NoSupply);
    if (!vin || !vout) r.failures.push_back(ValidityFailure::NoIO);
    const auto adj = g->adjacency();
    for (const auto& [id, pins] : devices) {
        std::set<int> own(pins.begin(), pins.end());
        bool reaches_out = false;
        for (int p : pins)
            for (int x : adj[p])
                if (!own.count(x)) reaches_out = true;
        if (!reaches_out) {
            r.failures.push_back(ValidityFailure::DanglingDevice);
            break;
        }
    }
    r.valid = r.failures.empty();
    return r;
}

NoveltyResult novelty(const std::vector<TokenSequence>& generated, const std::vector<TokenSequence>& training,
                      const PatternLibrary* library) {
    struct Entry {
        CircuitGraph graph;
        std::vector<std::string> labels;
        std::uint64_t hash;
    };
    auto prepare = [&](const TokenSequence& s) -> std::optional<Entry> {
        auto g = try_decode(s, library);
        if (!g) return std::nullopt;
        auto labels = kind_labels(*g);
        auto h = wl_hash(*g);
        return Entry{std::move(*g), std::move(labels), h};
    };
    std::unordered_multimap<std::uint64_t, Entry> train;
    for (const auto& s : training)
        if (auto e = prepare(s)) train.emplace(e->hash, std::move(*e));

    NoveltyResult r;
    std::vector<Entry> classes;
    std::size_t novel = 0;
    for (const auto& s : generated) {
        auto e = prepare(s);
        if (!e) {
            ++r.undecodable;
            continue;
        }
        ++r.evaluated;
        bool seen = false;
        auto [b, en] = train.equal_range(e->hash);
        for (auto it = b; it != en && !seen; ++it)
            seen = isomorphic(e->graph, e->labels, it->second.graph, it->second.labels);
        if (!seen) ++novel;
        bool repeat = false;
        for (const auto& c : classes)
            if (c.hash == e->hash && isomorphic(e->graph, e->labels, c.graph, c.labels)) {
                repeat = true;
                break;
            }
        if (!repeat) classes.push_back(std::move(*e));
    }
    if (r.evaluated) {
        r.diff_fraction = static_cast<double>(novel) / static_cast<double>(r.evaluated);
        r.unique_fraction = static_cast<double>(classes.size()) / static_cast<double>(r.evaluated);
    }
    return r;
}

std::vector<double> graph_descriptor(const CircuitGraph& g) {
    std::vector<double> d;
    d.push_back(static_cast<double>(g.nodes.size()));
    d.push_back(static_cast<double>(g.edges.size()));
    std::map<std::string, DeviceClass> devices;
    int terminals = 0;
    for (const auto& n : g.nodes) {
        auto info = classify_token(n);
        if (info.kind == TokenKind::DevicePin) devices.emplace(info.device_id, info.device_class);
        else if (info.kind == TokenKind::Terminal) ++terminals;
    }
    const DeviceClass classes[] = {DeviceClass::NMOS, DeviceClass::PMOS, DeviceClass::BJT, DeviceClass::R,
                                   DeviceClass::C,    DeviceClass::L,    DeviceClass::D};
    for (auto c : classes) {
        double k = 0;
        for (const auto& [id, cls] : devices)
            if (cls == c) ++k;
        d.push_back(devices.empty() ? 0.0 : k / static_cast<double>(devices.size()));
    }
    std::vector<double> deg_bins(6, 0.0);
    for (int x : g.degrees())
        if (x >= 1) deg_bins[std::min(x, 6) - 1] += 1.0;
    for (double b : deg_bins) d.push_back(g.nodes.empty() ? 0.0 : b / static_cast<double>(g.nodes.size()));
    d.push_back(static_cast<double>(terminals));
    return d;
}

double mmd_descriptors(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
    if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySet, "mmd needs two nonempty sets");
    auto dist = [](const std::vector<double>& x, const std::vector<double>& y) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
        return std::sqrt(s);
    };
    std::vector<const std::vector<double>*> pooled;
    for (const auto& x : a) pooled.push_back(&x);
    for (const auto& x : b) pooled.push_back(&x);
    std::vector<double> ds;
    for (std::size_t i = 0; i < pooled.size(); ++i)
        for (std::size_t j = i + 1; j < pooled.size(); ++j) ds.push_back(dist(*pooled[i], *pooled[j]));
    double sigma = 1.0;
    if (!ds.empty()) {
        std::sort(ds.begin(), ds.end());
        const std::size_t m = ds.size();
        const double med = m % 2 ? ds[m / 2] : 0.5 * (ds[m / 2 - 1] + ds[m / 2]);
        if (med > 0.0) sigma = med;
    }
    auto k = [&](const std::vector<double>& x, const std::vector<double>& y) {
        const double d = dist(x, y);
        return std::exp(-d * d / (2.0 * sigma * sigma));
    };
    auto within = [&](const std::vector<std::vector<double>>& s) {
        if (s.size() < 2) return 0.0;
        double t = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = 0; j < s.size(); ++j)
                if (i != j) t += k(s[i], s[j]);
        return t / static_cast<double>(s.size() * (s.size() - 1));
    };
    double cross = 0.0;
    for (const auto& x : a)
        for (const auto& y : b) cross += k(x, y);
    cross /= static_cast<double>(a.size() * b.size());
    const double m2 = within(a) + within(b) - 2.0 * cross;
    return std::sqrt(std::max(m2, 0.0));
}

double mmd(const std::vector<CircuitGraph>& a, const std::vector<CircuitGraph>& b) {
    std::vector<std::vector<double>> da, db;
    for (const auto& g : a) da.push_back(graph_descriptor(g));
    for (const auto& g : b) db.push_back(graph_descriptor(g));
    return mmd_descriptors(da, db);
}

int scalability(const std::vector<TokenSequence>& sequences, const PatternLibrary* library) {
    int best = 0;
    for (const auto& s : sequences)
        if (auto g = try_decode(s, library)) best = std::max(best, static_cast<int>(devices_of(*g).size()));
    return best;
}

int versatility(const std::vector<TokenSequence>& sequences, const PatternLibrary* library) {
    std::set<std::string> tags;
    for (const auto& s : sequences)
        if (!s.tag.empty() && validity_check(s, nullptr, library).valid) tags.insert(s.tag);
    return static_cast<int>(tags.size());
}

double rank_reward(bool valid, bool relevant, bool high_perf) {
    if (!valid) return -1.0;
    if (!relevant) return -0.5;
    return high_perf ? 1.0 : 0.5;
}

CompressionSummary compression_summary(const std::vector<Circuit>& circuits, const PatternLibrary* library) {
    CompressionSummary s;
    double sum = 0.0;
    for (const auto& c : circuits) {
        const double r = compression_rate(legacy_encode(c), encode(c, library));
        if (s.count == 0) s.min = s.max = r;
        s.min = std::min(s.min, r);
        s.max = std::max(s.max, r);
        sum += r;
        ++s.count;
    }
    if (s.count) s.mean = sum / static_cast<double>(s.count);
    return s;
}

std::vector<HeterogeneityStats> heterogeneity_stats(const std::vector<Batch>& clients, const ModelParams& params,
                                                    int bins, MseBaseline baseline) {
    if (bins < 1) throw Error(ErrorCode::InvalidArgument, "bins must be >= 1");
    std::vector<std::vector<float>> values(clients.size());
    for (std::size_t c = 0; c < clients.size(); ++c) {
        std::vector<int> ids;
        for (const auto& s : clients[c]) ids.insert(ids.end(), s.begin(), s.end());
        if (ids.empty()) throw Error(ErrorCode::EmptyClient, "client " + std::to_string(c) + " has no tokens");
        for (const auto& row : embed_tokens(params, ids)) values[c].insert(values[c].end(), row.begin(), row.end());
    }
    double gsum = 0.0;
    std::size_t gcount = 0;
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& v : values)
        for (float x : v) {
            gsum += x;
            ++gcount;
            lo = std::min(lo, static_cast<double>(x));
            hi = std::max(hi, static_cast<double>(x));
        }
    const double gmean = gcount ? gsum / static_cast<double>(gcount) : 0.0;
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) edges[i] = lo + (hi - lo) * i / bins;
    const double width = (hi - lo) / bins;
    std::vector<HeterogeneityStats> out;
    for (std::size_t c = 0; c < values.size(); ++c) {
        HeterogeneityStats s;
        s.client = static_cast<int>(c);
        s.entries = values[c].size();
        double sum = 0.0;
        for (float x : values[c]) sum += x;
        s.mean = sum / static_cast<double>(s.entries);
        const double ref = baseline == MseBaseline::Global ? gmean : s.mean;
        double sq = 0.0;
        std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
        for (float x : values[c]) {
            sq += (x - ref) * (x - ref);
            auto b = static_cast<int>((x - lo) / width);
            counts[std::clamp(b, 0, bins - 1)] += 1.0;
        }
        s.mse = sq / static_cast<double>(s.entries);
        s.bin_edges = edges;
        for (double k : counts) s.densities.push_back(k / (static_cast<double>(s.entries) * width));
        out.push_back(std::move(s));
    }
    return out;
}

std::string heterogeneity_csv(const std::vector<HeterogeneityStats>& stats) {
    std::ostringstream os;
    os << "client,mean,mse\n" << std::setprecision(9);
    for (const auto& s : stats) os << s.client << ',' << s.mean << ',' << s.mse << '\n';
    return os.str();
}

EvalReport evaluate(const std::vector<TokenSequence>& generated, const std::vector<TokenSequence>& training,
                    const Vocabulary* vocab, const PatternLibrary* library) {
    EvalReport r;
    r.generated = generated.size();
    std::vector<CircuitGraph> gen_graphs, train_graphs;
    for (const auto& s : generated) {
        auto v = validity_check(s, vocab, library);
        if (v.valid) ++r.valid;
        for (auto f : v.failures) r.failure_counts[std::string(to_string(f))]++;
        if (auto g = try_decode(s, library)) gen_graphs.push_back(std::move(*g));
    }
    for (const auto& s : training)
        if (auto g = try_decode(s, library)) train_graphs.push_back(std::move(*g));
    r.validity_rate = r.generated ? static_cast<double>(r.valid) / static_cast<double>(r.generated) : 0.0;
    r.novelty = novelty(generated, training, library);
    r.mmd = gen_graphs.empty() || train_graphs.empty() ? 0.0 : mmd(gen_graphs, train_graphs);
    r.scalability = scalability(generated, library);
    r.versatility = versatility(generated, library);
    return r;
}

std::string render_report(const EvalReport& r) {
    nlohmann::json j;
    j["generated"] = r.generated;
    j["valid"] = r.valid;
    j["validity_rate"] = r.validity_rate;
    j["failure_counts"] = r.failure_counts;
    j["novelty"] = {{"diff_fraction", r.novelty.diff_fraction},
                    {"unique_fraction", r.novelty.unique_fraction},
                    {"evaluated", r.novelty.evaluated},
                    {"undecodable", r.novelty.undecodable}};
    j["mmd"] = r.mmd;
    j["scalability"] = r.scalability;
    j["versatility"] = r.versatility;
    if (r.compression)
        j["compression"] = {{"count", r.compression->count},
                            {"mean", r.compression->mean},
                            {"min", r.compression->min},
                            {"max", r.compression->max}};
    else
        j["compression"] = nullptr;
    j["heterogeneity"] = nlohmann::json::array();
    for (const auto& h : r.heterogeneity)
        j["heterogeneity"].push_back({{"client", h.client}, {"mean", h.mean}, {"mse", h.mse}, {"entries", h.entries}});
    j["validation_loss"] = r.validation_loss ? nlohmann::json(*r.validation_loss) : nlohmann::json(nullptr);
    j["loss_ratio"] = r.loss_ratio ? nlohmann::json(*r.loss_ratio) : nlohmann::json(nullptr);
    return j.dump(2);
}

} // namespace cktfed
