#include "cktfed/isomorphism.hpp"

#include "cktfed/token.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace cktfed {

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffU;
        h *= 1099511628211ULL;
    }
    return h;
}

// Refines colors of two graphs with one shared palette so colors are
// comparable across graphs.
void refine_jointly(const std::vector<std::vector<int>>& adj_a, std::vector<int>& col_a,
                    const std::vector<std::vector<int>>& adj_b, std::vector<int>& col_b) {
    const std::size_t target = adj_a.size() + adj_b.size();
    std::size_t classes = 0;
    for (int round = 0; round < static_cast<int>(target) + 1; ++round) {
        std::map<std::pair<int, std::vector<int>>, int> palette;
        auto signature = [](const std::vector<std::vector<int>>& adj, const std::vector<int>& col, std::size_t v) {
            std::vector<int> nb;
            nb.reserve(adj[v].size());
            for (int u : adj[v]) nb.push_back(col[u]);
            std::sort(nb.begin(), nb.end());
            return std::make_pair(col[v], std::move(nb));
        };
        std::vector<std::pair<int, std::vector<int>>> sa, sb;
        for (std::size_t v = 0; v < adj_a.size(); ++v) sa.push_back(signature(adj_a, col_a, v));
        for (std::size_t v = 0; v < adj_b.size(); ++v) sb.push_back(signature(adj_b, col_b, v));
        for (auto& s : sa) palette.emplace(s, 0);
        for (auto& s : sb) palette.emplace(s, 0);
        int next = 0;
        for (auto& [k, v] : palette) v = next++;
        for (std::size_t v = 0; v < sa.size(); ++v) col_a[v] = palette[sa[v]];
        for (std::size_t v = 0; v < sb.size(); ++v) col_b[v] = palette[sb[v]];
        if (palette.size() == classes) break;
        classes = palette.size();
    }
}

struct Matcher {
    const std::vector<std::vector<int>>& adj_a;
    const std::vector<std::vector<int>>& adj_b;
    const std::vector<int>& col_a;
    const std::vector<int>& col_b;
    std::vector<std::map<int, int>> mult_a, mult_b;
    std::vector<int> order;
    std::vector<int> map_ab, map_ba;

    Matcher(const std::vector<std::vector<int>>& aa, const std::vector<std::vector<int>>& ab,
            const std::vector<int>& ca, const std::vector<int>& cb)
        : adj_a(aa), adj_b(ab), col_a(ca), col_b(cb) {
        mult_a.resize(aa.size());
        mult_b.resize(ab.size());
        for (std::size_t v = 0; v < aa.size(); ++v)
            for (int u : aa[v]) ++mult_a[v][u];
        for (std::size_t v = 0; v < ab.size(); ++v)
            for (int u : ab[v]) ++mult_b[v][u];
        map_ab.assign(aa.size(), -1);
        map_ba.assign(ab.size(), -1);
        // BFS order so each vertex after the first of a component has a mapped neighbor.
        std::vector<char> seen(aa.size(), 0);
        std::vector<int> by_rarity(aa.size());
        std::map<int, int> freq;
        for (int c : ca) ++freq[c];
        for (std::size_t i = 0; i < aa.size(); ++i) by_rarity[i] = static_cast<int>(i);
        std::stable_sort(by_rarity.begin(), by_rarity.end(),
                         [&](int x, int y) { return freq[ca[x]] < freq[ca[y]]; });
        for (int root : by_rarity) {
            if (seen[root]) continue;
            std::vector<int> queue{root};
            seen[root] = 1;
            for (std::size_t h = 0; h < queue.size(); ++h) {
                int v = queue[h];
                order.push_back(v);
                for (int u : aa[v])
                    if (!seen[u]) {
                        seen[u] = 1;
                        queue.push_back(u);
                    }
            }
        }
    }

    bool consistent(int va, int vb) const {
        for (const auto& [ua, m] : mult_a[va]) {
            int ub = map_ab[ua];
            if (ub < 0) continue;
            auto it = mult_b[vb].find(ub);
            if (it == mult_b[vb].end() || it->second != m) return false;
        }
        for (const auto& [ub, m] : mult_b[vb]) {
            int ua = map_ba[ub];
            if (ua < 0) continue;
            auto it = mult_a[va].find(ua);
            if (it == mult_a[va].end() || it->second != m) return false;
        }
        return true;
    }

    bool search(std::size_t depth) {
        if (depth == order.size()) return true;
        const int va = order[depth];
        // Restrict candidates to neighbors of an already-mapped neighbor when possible.
        int anchor = -1;
        for (int ua : adj_a[va])
            if (map_ab[ua] >= 0) {
                anchor = map_ab[ua];
                break;
            }
        auto try_candidate = [&](int vb) {
            if (map_ba[vb] >= 0 || col_b[vb] != col_a[va]) return false;
            if (!consistent(va, vb)) return false;
            map_ab[va] = vb;
            map_ba[vb] = va;
            if (search(depth + 1)) return true;
            map_ab[va] = -1;
            map_ba[vb] = -1;
            return false;
        };
        if (anchor >= 0) {
            int last = -1;
            for (int vb : adj_b[anchor]) {
                if (vb == last) continue;
                last = vb;
                if (try_candidate(vb)) return true;
            }
            return false;
        }
        for (std::size_t vb = 0; vb < adj_b.size(); ++vb)
            if (try_candidate(static_cast<int>(vb))) return true;
        return false;
    }
};

} // namespace

std::vector<std::string> kind_labels(const CircuitGraph& graph) {
    std::vector<std::string> labels;
    labels.reserve(graph.nodes.size());
    for (const auto& n : graph.nodes) labels.push_back(node_label(n));
    return labels;
}

std::uint64_t wl_hash(const CircuitGraph& graph, int rounds) {
    auto adj = graph.adjacency();
    auto labels = kind_labels(graph);
    std::vector<std::uint64_t> col(graph.nodes.size());
    for (std::size_t v = 0; v < col.size(); ++v) col[v] = fnv1a(labels[v]);
    for (int r = 0; r < rounds; ++r) {
        std::vector<std::uint64_t> next(col.size());
        for (std::size_t v = 0; v < col.size(); ++v) {
            std::vector<std::uint64_t> nb;
            for (int u : adj[v]) nb.push_back(col[u]);
            std::sort(nb.begin(), nb.end());
            std::uint64_t h = mix(1469598103934665603ULL, col[v]);
            for (auto x : nb) h = mix(h, x);
            next[v] = h;
        }
        col = std::move(next);
    }
    std::sort(col.begin(), col.end());
    std::uint64_t h = mix(1469598103934665603ULL, graph.nodes.size());
    h = mix(h, graph.edges.size());
    for (auto c : col) h = mix(h, c);
    return h;
}

bool isomorphic(const CircuitGraph& a, const std::vector<std::string>& labels_a, const CircuitGraph& b,
                const std::vector<std::string>& labels_b) {
    if (a.nodes.size() != b.nodes.size() || a.edges.size() != b.edges.size()) return false;
    {
        auto la = labels_a, lb = labels_b;
        std::sort(la.begin(), la.end());
        std::sort(lb.begin(), lb.end());
        if (la != lb) return false;
    }
    auto adj_a = a.adjacency();
    auto adj_b = b.adjacency();
    std::unordered_map<std::string, int> ids;
    std::vector<int> col_a(a.nodes.size()), col_b(b.nodes.size());
    std::vector<std::string> all = labels_a;
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) ids[all[i]] = static_cast<int>(i);
    for (std::size_t v = 0; v < col_a.size(); ++v) col_a[v] = ids.at(labels_a[v]);
    for (std::size_t v = 0; v < col_b.size(); ++v) col_b[v] = ids.at(labels_b[v]);
    refine_jointly(adj_a, col_a, adj_b, col_b);
    {
        auto ca = col_a, cb = col_b;
        std::sort(ca.begin(), ca.end());
        std::sort(cb.begin(), cb.end());
        if (ca != cb) return false;
    }
    Matcher m(adj_a, adj_b, col_a, col_b);
    return m.search(0);
}

bool isomorphic(const CircuitGraph& a, const CircuitGraph& b) {
    return isomorphic(a, kind_labels(a), b, kind_labels(b));
}

} // namespace cktfed
