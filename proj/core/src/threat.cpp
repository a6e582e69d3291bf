#include "cktfed/threat.hpp"

#include "cktfed/error.hpp"
#include "cktfed/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace cktfed {

std::string_view to_string(AttackKind kind) {
    switch (kind) {
    case AttackKind::None: return "none";
    case AttackKind::ScaleUpdate: return "scale_update";
    case AttackKind::TokenPoison: return "token_poison";
    }
    return "none";
}

AttackKind parse_attack_kind(std::string_view name) {
    for (auto k : {AttackKind::None, AttackKind::ScaleUpdate, AttackKind::TokenPoison})
        if (to_string(k) == name) return k;
    throw Error(ErrorCode::InvalidConfig, "unknown attack kind '" + std::string(name) + "'");
}

void AttackSpec::validate() const {
    if (!(factor > 0.0)) throw Error(ErrorCode::InvalidConfig, "attack.factor must be > 0");
    if (!(poison_fraction > 0.0 && poison_fraction <= 1.0))
        throw Error(ErrorCode::InvalidConfig, "attack.poison_fraction must be in (0, 1]");
    if (!(token_replace_prob > 0.0 && token_replace_prob <= 1.0))
        throw Error(ErrorCode::InvalidConfig, "attack.token_replace_prob must be in (0, 1]");
}

ClientUpdate scale_attack(const ClientUpdate& update, double factor) {
    ClientUpdate out = update;
    for (auto& x : out.delta) x *= factor;
    return out;
}

Batch token_poison(const Batch& dataset, double fraction, double prob, const Vocabulary& vocab, std::uint64_t seed) {
    Batch out = dataset;
    if (fraction <= 0.0 || prob <= 0.0 || dataset.empty()) return out;
    const int n_plain = vocab.size() - kSpecialCount;
    if (n_plain < 2) return out;
    std::mt19937_64 rng(derive_seed(seed, 0x7015));
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    auto count = static_cast<std::size_t>(std::llround(std::min(fraction, 1.0) * static_cast<double>(dataset.size())));
    for (std::size_t k = 0; k < count; ++k) {
        for (int& id : out[order[k]]) {
            if (Vocabulary::is_special(id)) continue;
            if (uniform01(rng) >= prob) continue;
            // Uniform over the other non-special ids.
            int r = kSpecialCount + static_cast<int>(rng() % static_cast<std::uint64_t>(n_plain - 1));
            if (r >= id) ++r;
            id = r;
        }
    }
    return out;
}

FederationData apply_data_poisoning(const FederationData& data, const AttackSpec& spec, const Vocabulary& vocab) {
    FederationData out = data;
    if (spec.kind != AttackKind::TokenPoison) return out;
    for (int c : spec.targets) {
        if (c < 0 || c >= static_cast<int>(out.clients.size()))
            throw Error(ErrorCode::InvalidConfig, "attack target " + std::to_string(c) + " is not a client");
        out.clients[c] = token_poison(out.clients[c], spec.poison_fraction, spec.token_replace_prob, vocab,
                                      derive_seed(spec.seed, static_cast<std::uint64_t>(c)));
    }
    return out;
}

FedHooks attack_hooks(const AttackSpec& spec) {
    FedHooks hooks;
    if (spec.kind != AttackKind::ScaleUpdate) return hooks;
    hooks.attack = [spec](int, ClientUpdate& u) {
        if (!spec.targets.count(u.client_id)) return false;
        u = scale_attack(u, spec.factor);
        return true;
    };
    return hooks;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Hessian-vector product from the stored (dw, dg) pairs. The L-BFGS two-loop
// recursion computes an inverse-Hessian product; feeding it the pairs with
// their roles swapped yields the Hessian product instead.
std::vector<double> hessian_times(const DetectorState& st, const std::vector<double>& v) {
    std::vector<std::size_t> usable;
    for (std::size_t k = 0; k < st.pairs.size(); ++k) {
        const auto& [dw, dg] = st.pairs[k];
        if (dot(dg, dw) > 1e-12) usable.push_back(k);
    }
    if (usable.empty()) return std::vector<double>(v.size(), 0.0);
    std::vector<double> q = v;
    std::vector<double> alpha(usable.size()), rho(usable.size());
    for (std::size_t i = usable.size(); i-- > 0;) {
        const auto& [y, s] = st.pairs[usable[i]];  // swapped roles: s = dg, y = dw
        rho[i] = 1.0 / dot(y, s);
        alpha[i] = rho[i] * dot(s, q);
        for (std::size_t j = 0; j < q.size(); ++j) q[j] -= alpha[i] * y[j];
    }
    const auto& [y_last, s_last] = st.pairs[usable.back()];
    const double gamma = dot(s_last, y_last) / dot(y_last, y_last);
    for (auto& x : q) x *= gamma;
    for (std::size_t i = 0; i < usable.size(); ++i) {
        const auto& [y, s] = st.pairs[usable[i]];
        const double beta = rho[i] * dot(y, q);
        for (std::size_t j = 0; j < q.size(); ++j) q[j] += s[j] * (alpha[i] - beta);
    }
    return q;
}

void record(DetectorState& st, const std::vector<ClientUpdate>& updates, const std::vector<double>& weights) {
    std::vector<double> mean(weights.size(), 0.0);
    for (const auto& u : updates)
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += u.delta[i] / static_cast<double>(updates.size());
    if (st.rounds_seen > 0 && !st.options.zero_curvature) {
        std::vector<double> dw(weights.size()), dg(weights.size());
        for (std::size_t i = 0; i < dw.size(); ++i) {
            dw[i] = weights[i] - st.prev_weights[i];
            dg[i] = mean[i] - st.prev_mean[i];
        }
        st.pairs.emplace_back(std::move(dw), std::move(dg));
        while (static_cast<int>(st.pairs.size()) > st.options.window) st.pairs.pop_front();
    }
    st.prev_weights = weights;
    st.prev_mean = std::move(mean);
    for (const auto& u : updates) {
        if (u.client_id >= static_cast<int>(st.prev_updates.size())) st.prev_updates.resize(u.client_id + 1);
        st.prev_updates[u.client_id] = u.delta;
    }
    ++st.rounds_seen;
}

} // namespace

std::vector<double> detector_score(DetectorState& st, const std::vector<ClientUpdate>& updates,
                                   const std::vector<double>& weights) {
    if (st.rounds_seen == 0) throw Error(ErrorCode::HistoryEmpty, "detector has no history yet");
    if (updates.empty()) throw Error(ErrorCode::NoUpdates, "no updates to score");
    for (const auto& u : updates)
        if (u.delta.size() != weights.size()) throw Error(ErrorCode::ManifestMismatch, "update size mismatch");
    std::vector<double> dw(weights.size());
    for (std::size_t i = 0; i < dw.size(); ++i) dw[i] = weights[i] - st.prev_weights[i];
    const auto hv = st.options.zero_curvature ? std::vector<double>(dw.size(), 0.0) : hessian_times(st, dw);

    int max_id = 0;
    for (const auto& u : updates) max_id = std::max(max_id, u.client_id);
    std::vector<double> d(static_cast<std::size_t>(max_id + 1), 0.0);
    double total = 0.0;
    for (const auto& u : updates) {
        const bool known = u.client_id < static_cast<int>(st.prev_updates.size()) && !st.prev_updates[u.client_id].empty();
        double sq = 0.0;
        for (std::size_t i = 0; i < dw.size(); ++i) {
            const double predicted = known ? st.prev_updates[u.client_id][i] + hv[i] : 0.0;
            const double e = predicted - u.delta[i];
            sq += e * e;
        }
        d[u.client_id] = std::sqrt(sq);
        total += d[u.client_id];
    }
    if (st.distances.size() < d.size()) st.distances.resize(d.size());
    std::vector<double> scores(d.size(), 0.0);
    for (const auto& u : updates) {
        const double nd = total > 0.0 ? d[u.client_id] / total : 1.0 / static_cast<double>(updates.size());
        auto& window = st.distances[u.client_id];
        window.push_back(nd);
        while (static_cast<int>(window.size()) > st.options.window) window.pop_front();
        scores[u.client_id] = std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(window.size());
    }
    ++st.scored_rounds;
    record(st, updates, weights);
    return scores;
}

std::vector<double> detector_observe(DetectorState& st, const std::vector<ClientUpdate>& updates,
                                     const std::vector<double>& weights) {
    if (st.rounds_seen == 0) {
        record(st, updates, weights);
        int max_id = 0;
        for (const auto& u : updates) max_id = std::max(max_id, u.client_id);
        return std::vector<double>(static_cast<std::size_t>(max_id + 1), 0.0);
    }
    return detector_score(st, updates, weights);
}

std::vector<double> detector_noise(const DetectorState& st) {
    std::vector<double> out;
    for (const auto& w : st.distances) {
        if (w.size() < 2) {
            out.push_back(0.0);
            continue;
        }
        const double m = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
        double ss = 0.0;
        for (double x : w) ss += (x - m) * (x - m);
        out.push_back(std::sqrt(ss / static_cast<double>(w.size() - 1)));
    }
    return out;
}

std::set<int> flag_clients(const std::vector<double>& scores, double threshold, const std::vector<double>* noise) {
    const std::size_t n = scores.size();
    if (n < 2) return {};
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
    // Exact 1-D 2-means: the optimal split is a cut in sorted order.
    double best_cost = INFINITY;
    std::size_t best_cut = 0;
    for (std::size_t cut = 1; cut < n; ++cut) {
        double cost = 0.0;
        for (int side = 0; side < 2; ++side) {
            const std::size_t b = side ? cut : 0, e = side ? n : cut;
            double m = 0.0;
            for (std::size_t i = b; i < e; ++i) m += scores[order[i]];
            m /= static_cast<double>(e - b);
            for (std::size_t i = b; i < e; ++i) cost += (scores[order[i]] - m) * (scores[order[i]] - m);
        }
        if (cost < best_cost - 1e-15) {
            best_cost = cost;
            best_cut = cut;
        }
    }
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < best_cut; ++i) lo += scores[order[i]];
    for (std::size_t i = best_cut; i < n; ++i) hi += scores[order[i]];
    lo /= static_cast<double>(best_cut);
    hi /= static_cast<double>(n - best_cut);
    const double gap = hi - lo;
    if (!(gap > 0.0)) return {};

    double pooled = 0.0;
    bool have_noise = false;
    if (noise && noise->size() >= n) {
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) ss += (*noise)[i] * (*noise)[i];
        pooled = std::sqrt(ss / static_cast<double>(n));
        have_noise = pooled > 0.0;
    }
    if (!have_noise) {
        pooled = n > 2 ? std::sqrt(best_cost / static_cast<double>(n - 2)) : 0.0;
    }
    if (pooled <= 0.0) {
        // Two perfectly tight clusters: any gap is a clean separation.
        pooled = 0.0;
    }
    const bool separated = pooled > 0.0 ? gap / pooled >= threshold : gap > 1e-12 * std::max(1.0, std::abs(hi));
    if (!separated) return {};
    std::set<int> out;
    for (std::size_t i = best_cut; i < n; ++i) out.insert(static_cast<int>(order[i]));
    return out;
}

FedHooks defense_hooks(DetectorState& state, FedHooks base) {
    base.defense = [&state](int, const std::vector<ClientUpdate>& updates, const ModelParams& global,
                            std::vector<double>& scores) {
        std::vector<double> w(global.values.begin(), global.values.end());
        scores = detector_observe(state, updates, w);
        if (state.scored_rounds < state.options.min_scored_rounds) return std::vector<int>{};
        auto noise = detector_noise(state);
        auto flagged = flag_clients(scores, state.options.threshold, &noise);
        return std::vector<int>(flagged.begin(), flagged.end());
    };
    return base;
}

FedResult remove_and_recover(const FedConfig& config, const ModelParams& init, const FederationData& data,
                             const std::set<int>& flagged) {
    for (int c : flagged)
        if (c < 0 || c >= static_cast<int>(data.clients.size()))
            throw Error(ErrorCode::InvalidArgument, "flagged client " + std::to_string(c) + " does not exist");
    if (flagged.size() >= data.clients.size()) throw Error(ErrorCode::AllClientsFlagged, "every client is flagged");
    FedHooks hooks;
    hooks.excluded.assign(flagged.begin(), flagged.end());
    hooks.phase = "recovery";
    return run_federation(config, init, data, hooks);
}

} // namespace cktfed
