#include "cktfed/mining.hpp"

#include "cktfed/error.hpp"
#include "cktfed/isomorphism.hpp"
#include "cktfed/token.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace cktfed {

// ---------------------------------------------------------------------------
// DFS code order
// ---------------------------------------------------------------------------

namespace {

// Integer-labeled DFS edge used inside the miner. Label ids are assigned in
// lexicographic string order, so integer comparison matches string order.
struct Key {
    int from = 0;
    int to = 0;
    int fl = 0;
    int tl = 0;

    bool forward() const { return from < to; }
    bool operator==(const Key&) const = default;
};

bool key_less(const Key& a, const Key& b) {
    const bool fa = a.forward(), fb = b.forward();
    if (fa != fb) return !fa;  // backward edges come first
    if (!fa) return std::tie(a.to, a.from, a.fl, a.tl) < std::tie(b.to, b.from, b.fl, b.tl);
    return std::make_tuple(-a.from, a.fl, a.tl, a.to) < std::make_tuple(-b.from, b.fl, b.tl, b.to);
}

struct KeyLess {
    bool operator()(const Key& a, const Key& b) const { return key_less(a, b); }
};

struct IntGraph {
    std::vector<int> label;
    std::vector<std::vector<std::pair<int, int>>> adj;  // (neighbor, edge id)
    int edge_count = 0;
};

IntGraph make_int_graph(const LabeledGraph& g, const std::unordered_map<std::string, int>& ids) {
    IntGraph out;
    out.label.reserve(g.labels.size());
    for (const auto& l : g.labels) out.label.push_back(ids.at(l));
    out.adj.resize(g.labels.size());
    std::vector<std::pair<int, int>> edges;
    for (auto [u, v] : g.edges) {
        if (u == v) continue;
        edges.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (auto [u, v] : edges) {
        out.adj[u].emplace_back(v, out.edge_count);
        out.adj[v].emplace_back(u, out.edge_count);
        ++out.edge_count;
    }
    for (auto& a : out.adj) std::sort(a.begin(), a.end());
    return out;
}

// Vertices on the rightmost path, root first, rightmost last.
std::vector<int> rightmost_path(const std::vector<Key>& code) {
    int n = 0;
    for (const auto& k : code) n = std::max({n, k.from + 1, k.to + 1});
    std::vector<int> parent(static_cast<std::size_t>(n), -1);
    for (const auto& k : code)
        if (k.forward()) parent[k.to] = k.from;
    std::vector<int> path;
    for (int v = n - 1; v >= 0; v = parent[v]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    return path;
}

int vertex_count(const std::vector<Key>& code) {
    int n = 0;
    for (const auto& k : code) n = std::max({n, k.from + 1, k.to + 1});
    return n;
}

// Calls f(key, host_from, host_to, edge_id) for every rightmost extension.
template <class F>
void for_each_extension(const IntGraph& g, const std::vector<int>& map, const std::vector<int>& vstamp,
                        const std::vector<int>& estamp, int stamp, const std::vector<int>& rmpath, int n,
                        F&& f) {
    const int r = rmpath.back();
    const int hr = map[r];
    for (std::size_t i = 0; i + 1 < rmpath.size(); ++i) {
        const int w = rmpath[i];
        const int hw = map[w];
        for (auto [x, eid] : g.adj[hr])
            if (x == hw && estamp[eid] != stamp) f(Key{r, w, g.label[hr], g.label[hw]}, hr, hw, eid);
    }
    for (auto [x, eid] : g.adj[hr])
        if (vstamp[x] != stamp) f(Key{r, n, g.label[hr], g.label[x]}, hr, x, eid);
    for (std::size_t i = rmpath.size() - 1; i-- > 0;) {
        const int w = rmpath[i];
        const int hw = map[w];
        for (auto [x, eid] : g.adj[hw])
            if (vstamp[x] != stamp) f(Key{w, n, g.label[hw], g.label[x]}, hw, x, eid);
    }
}

struct MinEmbedding {
    std::vector<int> map;
    std::vector<int> vmark;
    std::vector<int> emark;
};

// Builds the minimum DFS code of `g` edge by edge. When `against` is given,
// stops early and returns false as soon as the minimum drops below it.
bool min_code(const IntGraph& g, std::vector<Key>* out, const std::vector<Key>* against) {
    std::vector<Key> code;
    if (g.edge_count == 0) {
        if (out) out->clear();
        return true;
    }
    std::vector<MinEmbedding> embs;
    {
        Key best{};
        bool have = false;
        for (std::size_t u = 0; u < g.adj.size(); ++u)
            for (auto [v, eid] : g.adj[u]) {
                Key k{0, 1, g.label[u], g.label[v]};
                if (!have || key_less(k, best)) {
                    best = k;
                    have = true;
                }
            }
        if (against && key_less(best, (*against)[0])) return false;
        code.push_back(best);
        for (std::size_t u = 0; u < g.adj.size(); ++u)
            for (auto [v, eid] : g.adj[u]) {
                Key k{0, 1, g.label[u], g.label[v]};
                if (!(k == best)) continue;
                MinEmbedding e;
                e.map = {static_cast<int>(u), v};
                e.vmark.assign(g.adj.size(), 0);
                e.emark.assign(static_cast<std::size_t>(g.edge_count), 0);
                e.vmark[u] = e.vmark[v] = 1;
                e.emark[eid] = 1;
                embs.push_back(std::move(e));
            }
    }
    while (static_cast<int>(code.size()) < g.edge_count) {
        auto rmpath = rightmost_path(code);
        const int n = vertex_count(code);
        Key best{};
        bool have = false;
        for (const auto& e : embs)
            for_each_extension(g, e.map, e.vmark, e.emark, 1, rmpath, n, [&](const Key& k, int, int, int) {
                if (!have || key_less(k, best)) {
                    best = k;
                    have = true;
                }
            });
        if (!have) throw Error(ErrorCode::InvalidArgument, "graph is not connected");
        const std::size_t pos = code.size();
        if (against && pos < against->size() && key_less(best, (*against)[pos])) return false;
        code.push_back(best);
        std::vector<MinEmbedding> next;
        for (const auto& e : embs)
            for_each_extension(g, e.map, e.vmark, e.emark, 1, rmpath, n, [&](const Key& k, int, int x, int eid) {
                if (!(k == best)) return;
                MinEmbedding ne = e;
                if (k.forward()) {
                    ne.map.push_back(x);
                    ne.vmark[x] = 1;
                }
                ne.emark[eid] = 1;
                next.push_back(std::move(ne));
            });
        embs = std::move(next);
    }
    if (out) *out = std::move(code);
    return true;
}

IntGraph graph_of_code(const std::vector<Key>& code) {
    IntGraph g;
    const int n = vertex_count(code);
    g.label.assign(static_cast<std::size_t>(n), 0);
    g.adj.resize(static_cast<std::size_t>(n));
    for (const auto& k : code) {
        g.label[k.from] = k.fl;
        g.label[k.to] = k.tl;
        g.adj[k.from].emplace_back(k.to, g.edge_count);
        g.adj[k.to].emplace_back(k.from, g.edge_count);
        ++g.edge_count;
    }
    for (auto& a : g.adj) std::sort(a.begin(), a.end());
    return g;
}

std::vector<std::string> sorted_labels(const std::vector<LabeledGraph>& graphs) {
    std::vector<std::string> all;
    for (const auto& g : graphs) all.insert(all.end(), g.labels.begin(), g.labels.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
}

std::unordered_map<std::string, int> label_ids(const std::vector<std::string>& sorted) {
    std::unordered_map<std::string, int> ids;
    for (std::size_t i = 0; i < sorted.size(); ++i) ids[sorted[i]] = static_cast<int>(i);
    return ids;
}

DfsCode to_public(const std::vector<Key>& code, const std::vector<std::string>& names) {
    DfsCode out;
    for (const auto& k : code) out.push_back({k.from, k.to, names[k.fl], names[k.tl]});
    return out;
}

// ---------------------------------------------------------------------------
// gSpan
// ---------------------------------------------------------------------------

struct Emb {
    int gid;
    int from;  // host vertex of code edge `from`
    int to;
    int eid;
    const Emb* prev;
};

class Miner {
public:
    Miner(std::vector<IntGraph> graphs, int min_count, int max_edges, std::vector<std::string> names)
        : graphs_(std::move(graphs)), min_count_(min_count), max_edges_(max_edges), names_(std::move(names)) {
        std::size_t maxv = 0, maxe = 0;
        for (const auto& g : graphs_) {
            maxv = std::max(maxv, g.adj.size());
            maxe = std::max(maxe, static_cast<std::size_t>(g.edge_count));
        }
        vstamp_.assign(maxv, 0);
        estamp_.assign(maxe, 0);
    }

    std::vector<SubgraphPattern> run() {
        std::map<Key, std::vector<Emb>, KeyLess> roots;
        for (int gid = 0; gid < static_cast<int>(graphs_.size()); ++gid) {
            const auto& g = graphs_[gid];
            for (std::size_t u = 0; u < g.adj.size(); ++u)
                for (auto [v, eid] : g.adj[u])
                    if (g.label[u] <= g.label[v])
                        roots[Key{0, 1, g.label[u], g.label[v]}].push_back(
                            Emb{gid, static_cast<int>(u), v, eid, nullptr});
        }
        std::vector<Key> code;
        for (auto& [key, embs] : roots) {
            code.assign(1, key);
            project(code, embs);
        }
        return std::move(found_);
    }

private:
    int support(const std::vector<Emb>& embs) const {
        int count = 0;
        int last = -1;
        // Embeddings are generated graph by graph, so graph ids are non-decreasing.
        for (const auto& e : embs)
            if (e.gid != last) {
                ++count;
                last = e.gid;
            }
        return count;
    }

    void project(std::vector<Key>& code, const std::vector<Emb>& embs) {
        const int sup = support(embs);
        if (sup < min_count_) return;
        if (!min_code(graph_of_code(code), nullptr, &code)) return;
        report(code, sup);
        if (static_cast<int>(code.size()) >= max_edges_) return;

        const auto rmpath = rightmost_path(code);
        const int n = vertex_count(code);
        std::map<Key, std::vector<Emb>, KeyLess> children;
        std::vector<const Emb*> chain;
        std::vector<int> map(static_cast<std::size_t>(n));
        for (const auto& e : embs) {
            const auto& g = graphs_[e.gid];
            ++stamp_;
            chain.clear();
            for (const Emb* p = &e; p; p = p->prev) chain.push_back(p);
            std::reverse(chain.begin(), chain.end());
            for (std::size_t i = 0; i < chain.size(); ++i) {
                map[code[i].from] = chain[i]->from;
                map[code[i].to] = chain[i]->to;
                vstamp_[chain[i]->from] = stamp_;
                vstamp_[chain[i]->to] = stamp_;
                estamp_[chain[i]->eid] = stamp_;
            }
            for_each_extension(g, map, vstamp_, estamp_, stamp_, rmpath, n,
                               [&](const Key& k, int hf, int ht, int eid) {
                                   children[k].push_back(Emb{e.gid, hf, ht, eid, &e});
                               });
        }
        for (auto& [key, list] : children) {
            code.push_back(key);
            project(code, list);
            code.pop_back();
        }
    }

    void report(const std::vector<Key>& code, int sup) {
        SubgraphPattern p;
        p.canonical_code = to_public(code, names_);
        p.support_count = sup;
        p.support = static_cast<double>(sup) / static_cast<double>(graphs_.size());
        const int n = vertex_count(code);
        p.node_labels.assign(static_cast<std::size_t>(n), "");
        for (const auto& k : code) {
            p.node_labels[k.from] = names_[k.fl];
            p.node_labels[k.to] = names_[k.tl];
            p.edges.emplace_back(k.from, k.to);
        }
        found_.push_back(std::move(p));
    }

    std::vector<IntGraph> graphs_;
    int min_count_;
    int max_edges_;
    std::vector<std::string> names_;
    std::vector<int> vstamp_, estamp_;
    int stamp_ = 0;
    std::vector<SubgraphPattern> found_;
};

int pattern_number_of(const std::string& id) {
    if (id.size() < 3 || !id.starts_with("SG")) throw Error(ErrorCode::FormatError, "bad pattern id " + id);
    return std::stoi(id.substr(2));
}

} // namespace

LabeledGraph to_labeled(const CircuitGraph& graph, bool include_terminals) {
    LabeledGraph out;
    std::vector<int> remap(graph.nodes.size(), -1);
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        auto info = classify_token(graph.nodes[i]);
        if (!include_terminals && info.kind == TokenKind::Terminal) continue;
        remap[i] = static_cast<int>(out.labels.size());
        out.labels.push_back(node_label(graph.nodes[i]));
    }
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : graph.edges) {
        int u = remap[e.u], v = remap[e.v];
        if (u < 0 || v < 0) continue;
        edges.emplace_back(u, v);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    out.edges = std::move(edges);
    return out;
}

bool dfs_edge_less(const DfsEdge& a, const DfsEdge& b) {
    const bool fa = a.forward(), fb = b.forward();
    if (fa != fb) return !fa;
    if (!fa) return std::tie(a.to, a.from, a.from_label, a.to_label) < std::tie(b.to, b.from, b.from_label, b.to_label);
    return std::make_tuple(-a.from, std::cref(a.from_label), std::cref(a.to_label), a.to) <
           std::make_tuple(-b.from, std::cref(b.from_label), std::cref(b.to_label), b.to);
}

bool dfs_code_less(const DfsCode& a, const DfsCode& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), dfs_edge_less);
}

std::string to_string(const DfsCode& code) {
    std::string out;
    for (const auto& e : code)
        out += "(" + std::to_string(e.from) + "," + std::to_string(e.to) + "," + e.from_label + "," + e.to_label + ")";
    return out;
}

DfsCode parse_dfs_code(const std::string& text) {
    DfsCode code;
    std::size_t pos = 0;
    while (pos < text.size()) {
        if (text[pos] != '(') throw Error(ErrorCode::FormatError, "bad DFS code: " + text);
        auto close = text.find(')', pos);
        if (close == std::string::npos) throw Error(ErrorCode::FormatError, "bad DFS code: " + text);
        std::string body = text.substr(pos + 1, close - pos - 1);
        std::vector<std::string> parts;
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) parts.push_back(item);
        if (parts.size() != 4) throw Error(ErrorCode::FormatError, "bad DFS edge: " + body);
        code.push_back({std::stoi(parts[0]), std::stoi(parts[1]), parts[2], parts[3]});
        pos = close + 1;
    }
    return code;
}

DfsCode canonical_code(const LabeledGraph& graph) {
    auto names = sorted_labels({graph});
    auto g = make_int_graph(graph, label_ids(names));
    std::vector<Key> code;
    min_code(g, &code, nullptr);
    if (static_cast<int>(code.size()) != g.edge_count || (g.edge_count > 0 && vertex_count(code) != static_cast<int>(g.adj.size())))
        throw Error(ErrorCode::InvalidArgument, "canonical_code requires a connected graph");
    return to_public(code, names);
}

LabeledGraph code_graph(const DfsCode& code) {
    LabeledGraph g;
    int n = 0;
    for (const auto& e : code) n = std::max({n, e.from + 1, e.to + 1});
    g.labels.assign(static_cast<std::size_t>(n), "");
    for (const auto& e : code) {
        g.labels[e.from] = e.from_label;
        g.labels[e.to] = e.to_label;
        g.edges.emplace_back(e.from, e.to);
    }
    return g;
}

std::vector<SubgraphPattern> mine_frequent_subgraphs(const std::vector<LabeledGraph>& corpus,
                                                     const MiningOptions& options) {
    if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "mining corpus is empty");
    if (!(options.min_support > 0.0 && options.min_support <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "min_support must be in (0, 1]");
    if (options.max_edges < 1) throw Error(ErrorCode::InvalidArgument, "max_edges must be >= 1");
    auto names = sorted_labels(corpus);
    auto ids = label_ids(names);
    std::vector<IntGraph> graphs;
    graphs.reserve(corpus.size());
    for (const auto& g : corpus) graphs.push_back(make_int_graph(g, ids));
    const double n = static_cast<double>(corpus.size());
    const int min_count = std::max(1, static_cast<int>(std::ceil(options.min_support * n - 1e-9)));
    Miner miner(std::move(graphs), min_count, options.max_edges, names);
    auto patterns = miner.run();
    std::stable_sort(patterns.begin(), patterns.end(), [](const SubgraphPattern& a, const SubgraphPattern& b) {
        if (a.support_count != b.support_count) return a.support_count > b.support_count;
        if (a.edges.size() != b.edges.size()) return a.edges.size() > b.edges.size();
        return dfs_code_less(a.canonical_code, b.canonical_code);
    });
    for (std::size_t i = 0; i < patterns.size(); ++i) patterns[i].pattern_id = "SG" + std::to_string(i + 1);
    return patterns;
}

// ---------------------------------------------------------------------------
// Occurrences
// ---------------------------------------------------------------------------

namespace {

struct PatternShape {
    const std::vector<std::string>& labels;
    const std::vector<std::pair<int, int>>& edges;
};

std::vector<std::vector<int>> find_images(const PatternShape& p, const CircuitGraph& host,
                                          const std::vector<std::string>& host_labels,
                                          const std::vector<std::vector<int>>& host_adj,
                                          const std::vector<char>& blocked, std::size_t limit) {
    const int n = static_cast<int>(p.labels.size());
    std::vector<std::vector<int>> out;
    if (n == 0) return out;
    // Pattern nodes are DFS-indexed: each node i > 0 has an earlier neighbor.
    std::vector<std::vector<int>> padj(static_cast<std::size_t>(n));
    for (auto [u, v] : p.edges) {
        padj[u].push_back(v);
        padj[v].push_back(u);
    }
    std::vector<int> parent(static_cast<std::size_t>(n), -1);
    for (int i = 1; i < n; ++i)
        for (int u : padj[i])
            if (u < i && (parent[i] < 0 || u < parent[i])) parent[i] = u;

    std::vector<int> image(static_cast<std::size_t>(n), -1);
    std::vector<char> used(host.nodes.size(), 0);
    auto adjacent = [&](int a, int b) { return std::binary_search(host_adj[a].begin(), host_adj[a].end(), b); };

    auto fits = [&](int i, int h) {
        if (used[h] || (!blocked.empty() && blocked[h]) || host_labels[h] != p.labels[i]) return false;
        for (int u : padj[i])
            if (u < i && !adjacent(h, image[u])) return false;
        return true;
    };
    auto recurse = [&](auto&& self, int i) -> bool {
        if (i == n) {
            out.push_back(image);
            return out.size() < limit;
        }
        auto visit = [&](int h) {
            if (!fits(i, h)) return true;
            image[i] = h;
            used[h] = 1;
            bool go = self(self, i + 1);
            used[h] = 0;
            image[i] = -1;
            return go;
        };
        if (i == 0 || parent[i] < 0) {
            for (int h = 0; h < static_cast<int>(host.nodes.size()); ++h)
                if (!visit(h)) return false;
        } else {
            int last = -1;
            for (int h : host_adj[image[parent[i]]]) {
                if (h == last) continue;
                last = h;
                if (!visit(h)) return false;
            }
        }
        return true;
    };
    recurse(recurse, 0);
    std::sort(out.begin(), out.end());
    return out;
}

bool device_closed(const std::vector<int>& image, const CircuitGraph& host) {
    std::set<std::string> tokens;
    for (int h : image) tokens.insert(host.nodes[h]);
    for (const auto& t : tokens) {
        auto info = classify_token(t);
        if (info.kind != TokenKind::DevicePin) return false;
        for (auto r : class_roles(info.device_class))
            if (!tokens.count(info.device_id + static_cast<char>(r))) return false;
    }
    return true;
}

std::size_t internal_edge_count(const std::vector<int>& image, const CircuitGraph& host) {
    std::vector<char> in(host.nodes.size(), 0);
    for (int h : image) in[h] = 1;
    std::size_t count = 0;
    for (const auto& e : host.edges)
        if (in[e.u] && in[e.v]) ++count;
    return count;
}

bool labels_form_whole_devices(const std::vector<std::string>& labels) {
    std::map<std::string, std::map<char, int>> per_class;
    for (const auto& l : labels) {
        auto dot = l.find('.');
        if (dot == std::string::npos || dot + 2 != l.size()) return false;  // terminal or foreign label
        per_class[l.substr(0, dot)][l.back()]++;
    }
    for (const auto& [cls_name, roles] : per_class) {
        auto cls = device_class_from_name(cls_name);
        if (!cls) return false;
        auto expected = class_roles(*cls);
        int count = -1;
        for (auto r : expected) {
            auto it = roles.find(static_cast<char>(r));
            int c = it == roles.end() ? 0 : it->second;
            if (count >= 0 && c != count) return false;
            count = c;
        }
        if (roles.size() != expected.size()) return false;
    }
    return true;
}

} // namespace

std::vector<Occurrence> find_occurrences(const SubgraphPattern& pattern, const CircuitGraph& host,
                                         std::size_t limit) {
    auto host_labels = kind_labels(host);
    auto adj = host.adjacency();
    auto images = find_images({pattern.node_labels, pattern.edges}, host, host_labels, adj, {}, limit);
    std::vector<Occurrence> out;
    out.reserve(images.size());
    for (auto& img : images) out.push_back(Occurrence{&host, std::move(img)});
    return out;
}

NodeIsolation classify_pattern_nodes(const SubgraphPattern& pattern, const std::vector<Occurrence>& occurrences) {
    if (occurrences.empty()) throw Error(ErrorCode::NoOccurrences, "pattern " + pattern.pattern_id + " has no occurrences");
    const std::size_t n = pattern.node_labels.size();
    std::vector<char> leaks(n, 0);
    for (const auto& occ : occurrences) {
        if (!occ.host || occ.image.size() != n)
            throw Error(ErrorCode::InvalidArgument, "occurrence does not match pattern " + pattern.pattern_id);
        std::set<int> image(occ.image.begin(), occ.image.end());
        auto adj = occ.host->adjacency();
        for (std::size_t v = 0; v < n; ++v)
            for (int x : adj[occ.image[v]])
                if (!image.count(x)) leaks[v] = 1;
    }
    NodeIsolation out;
    for (std::size_t v = 0; v < n; ++v) (leaks[v] ? out.non_isolated : out.isolated).insert(static_cast<int>(v));
    return out;
}

SimplifiedPattern simplify_pattern(const SubgraphPattern& pattern, const std::set<int>& isolated,
                                   const Occurrence* representative) {
    const int n = static_cast<int>(pattern.node_labels.size());
    SimplifiedPattern s;
    s.pattern_id = pattern.pattern_id;
    s.pattern_number = pattern.pattern_id.empty() ? 0 : pattern_number_of(pattern.pattern_id);
    s.canonical_code = pattern.canonical_code;
    s.support = pattern.support;
    s.node_labels = pattern.node_labels;
    s.edges = pattern.edges;
    for (int v : isolated)
        if (v < 0 || v >= n) throw Error(ErrorCode::InvalidArgument, "isolated node out of range");
    for (int v = 0; v < n; ++v)
        if (!isolated.count(v)) s.boundary_nodes.push_back(v);
    if (s.boundary_nodes.empty())
        throw Error(ErrorCode::AllNodesIsolated, "pattern " + pattern.pattern_id + " has no boundary nodes");
    s.isolated_fraction = n ? static_cast<double>(isolated.size()) / n : 0.0;

    std::map<std::string, int> terminal_uses;
    int term_index = 0;
    for (int v : s.boundary_nodes) {
        const auto& label = pattern.node_labels[v];
        s.boundary_labels.push_back(label);
        std::string role;
        if (is_terminal_name(label)) {
            int k = ++terminal_uses[label];
            role = k == 1 ? label : label + std::to_string(k);
        } else {
            int i = term_index++;
            role = "term";
            role += static_cast<char>('A' + i % 26);
            if (i >= 26) role += std::to_string(i / 26);
        }
        s.roles.push_back(role);
        s.interface_tokens.push_back(pattern.pattern_id + role);
    }
    const int b = static_cast<int>(s.boundary_nodes.size());
    if (b == 2) s.simplified_edges.emplace_back(0, 1);
    else if (b >= 3)
        for (int i = 0; i < b; ++i) s.simplified_edges.emplace_back(i, (i + 1) % b);

    s.device_groups.assign(static_cast<std::size_t>(n), -1);
    if (representative) {
        std::map<std::string, int> groups;
        for (int v = 0; v < n; ++v) {
            auto info = classify_token(representative->host->nodes[representative->image[v]]);
            if (info.kind != TokenKind::DevicePin) continue;
            auto [it, inserted] = groups.emplace(info.device_id, static_cast<int>(groups.size()));
            s.device_groups[v] = it->second;
        }
    }
    return s;
}

const SimplifiedPattern* PatternLibrary::find(int pattern_number) const {
    for (const auto& p : patterns)
        if (p.pattern_number == pattern_number) return &p;
    return nullptr;
}

PatternLibrary build_pattern_library(const std::vector<CircuitGraph>& corpus, const LibraryOptions& options,
                                     LibraryBuildReport* report) {
    if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "mining corpus is empty");
    std::vector<LabeledGraph> labeled;
    labeled.reserve(corpus.size());
    for (const auto& g : corpus) labeled.push_back(to_labeled(g, false));
    auto mined = mine_frequent_subgraphs(labeled, {options.min_support, options.max_edges});

    std::vector<std::vector<std::string>> host_labels;
    std::vector<std::vector<std::vector<int>>> host_adj;
    for (const auto& g : corpus) {
        host_labels.push_back(kind_labels(g));
        host_adj.push_back(g.adjacency());
    }

    PatternLibrary lib;
    auto reject = [&](const SubgraphPattern& p, std::string why) {
        if (report) report->rejected.emplace_back(p.pattern_id, std::move(why));
    };
    for (const auto& p : mined) {
        if (!labels_form_whole_devices(p.node_labels)) {
            reject(p, "partial devices");
            continue;
        }
        std::vector<Occurrence> occs;
        for (std::size_t gi = 0; gi < corpus.size(); ++gi) {
            auto images = find_images({p.node_labels, p.edges}, corpus[gi], host_labels[gi], host_adj[gi], {}, 20000);
            for (auto& img : images) occs.push_back(Occurrence{&corpus[gi], std::move(img)});
        }
        if (occs.empty()) {
            reject(p, "NoOccurrences");
            continue;
        }
        auto iso = classify_pattern_nodes(p, occs);
        const double frac = static_cast<double>(iso.isolated.size()) / static_cast<double>(p.node_labels.size());
        if (iso.non_isolated.empty()) {
            reject(p, "AllNodesIsolated");
            continue;
        }
        if (frac + 1e-12 < options.min_isolated_fraction) {
            reject(p, "isolated fraction below threshold");
            continue;
        }
        const Occurrence* rep = nullptr;
        for (const auto& o : occs)
            if (device_closed(o.image, *o.host) && internal_edge_count(o.image, *o.host) == p.edges.size()) {
                rep = &o;
                break;
            }
        if (!rep) {
            reject(p, "no device-closed occurrence");
            continue;
        }
        lib.patterns.push_back(simplify_pattern(p, iso.isolated, rep));
    }
    // Kept patterns are renumbered densely so tokens stay short.
    for (std::size_t i = 0; i < lib.patterns.size(); ++i) {
        auto& sp = lib.patterns[i];
        if (report) report->kept.push_back(sp.pattern_id);
        sp.pattern_number = static_cast<int>(i) + 1;
        sp.pattern_id = "SG" + std::to_string(sp.pattern_number);
        sp.interface_tokens.clear();
        for (const auto& role : sp.roles) sp.interface_tokens.push_back(sp.pattern_id + role);
    }
    if (report) report->mined = std::move(mined);
    return lib;
}

// ---------------------------------------------------------------------------
// Substitution and expansion
// ---------------------------------------------------------------------------

SubstitutionResult substitute_patterns(const CircuitGraph& graph, const PatternLibrary& library) {
    std::vector<const SimplifiedPattern*> order;
    for (const auto& p : library.patterns) order.push_back(&p);
    std::stable_sort(order.begin(), order.end(), [](const SimplifiedPattern* a, const SimplifiedPattern* b) {
        if (a->edges.size() != b->edges.size()) return a->edges.size() > b->edges.size();
        if (a->node_labels.size() != b->node_labels.size()) return a->node_labels.size() > b->node_labels.size();
        return dfs_code_less(a->canonical_code, b->canonical_code);
    });

    const auto labels = kind_labels(graph);
    const auto adj = graph.adjacency();
    std::vector<char> consumed(graph.nodes.size(), 0);
    // Per consumed node: owning record and boundary position (-1 if internal).
    std::vector<int> owner(graph.nodes.size(), -1);
    std::vector<int> boundary_pos(graph.nodes.size(), -1);
    SubstitutionResult result;

    for (const SimplifiedPattern* p : order) {
        auto images = find_images({p->node_labels, p->edges}, graph, labels, adj, consumed, 20000);
        int instance = 0;
        std::vector<char> is_boundary(p->node_labels.size(), 0);
        for (int v : p->boundary_nodes) is_boundary[v] = 1;
        for (const auto& img : images) {
            if (std::any_of(img.begin(), img.end(), [&](int h) { return consumed[h] != 0; })) continue;
            if (!device_closed(img, graph) || internal_edge_count(img, graph) != p->edges.size()) continue;
            std::set<int> in(img.begin(), img.end());
            bool leaks = false;
            for (std::size_t v = 0; v < img.size() && !leaks; ++v)
                if (!is_boundary[v])
                    for (int x : adj[img[v]])
                        if (!in.count(x)) leaks = true;
            if (leaks) continue;

            SubstitutionRecord rec;
            rec.pattern_number = p->pattern_number;
            rec.instance = ++instance;
            for (int h : img) rec.image_tokens.push_back(graph.nodes[h]);
            for (const auto& role : p->roles) rec.interface_tokens.push_back(subcircuit_token(p->pattern_number, rec.instance, role));
            const int rid = static_cast<int>(result.records.size());
            for (std::size_t v = 0; v < img.size(); ++v) {
                consumed[img[v]] = 1;
                owner[img[v]] = rid;
            }
            for (std::size_t b = 0; b < p->boundary_nodes.size(); ++b) boundary_pos[img[p->boundary_nodes[b]]] = static_cast<int>(b);
            result.records.push_back(std::move(rec));
        }
    }

    GraphBuilder b(graph.origin);
    auto token_of = [&](int v) -> std::string {
        if (!consumed[v]) return graph.nodes[v];
        return result.records[owner[v]].interface_tokens[boundary_pos[v]];
    };
    for (std::size_t v = 0; v < graph.nodes.size(); ++v)
        if (!consumed[v]) b.add_node(graph.nodes[v]);
    for (const auto& rec : result.records)
        for (const auto& t : rec.interface_tokens) b.add_node(t);
    for (const auto& e : graph.edges) {
        const bool cu = consumed[e.u], cv = consumed[e.v];
        if ((cu && boundary_pos[e.u] < 0) || (cv && boundary_pos[e.v] < 0)) continue;
        if (cu && cv && owner[e.u] == owner[e.v]) continue;
        b.add_edge(token_of(e.u), token_of(e.v));
    }
    for (const auto& rec : result.records) {
        const auto* p = library.find(rec.pattern_number);
        for (auto [i, j] : p->simplified_edges) b.add_edge(rec.interface_tokens[i], rec.interface_tokens[j]);
    }
    result.graph = b.build(true);
    return result;
}

CircuitGraph reverse_substitution(const CircuitGraph& graph, const std::vector<SubstitutionRecord>& records,
                                  const PatternLibrary& library) {
    std::unordered_map<std::string, std::pair<int, int>> iface;  // token -> (record, boundary pos)
    for (std::size_t r = 0; r < records.size(); ++r)
        for (std::size_t b = 0; b < records[r].interface_tokens.size(); ++b)
            iface[records[r].interface_tokens[b]] = {static_cast<int>(r), static_cast<int>(b)};
    auto original = [&](const std::string& t) -> std::string {
        auto it = iface.find(t);
        if (it == iface.end()) return t;
        const auto& rec = records[it->second.first];
        const auto* p = library.find(rec.pattern_number);
        if (!p) throw Error(ErrorCode::UnknownToken, "no pattern for " + t);
        return rec.image_tokens[p->boundary_nodes[it->second.second]];
    };
    GraphBuilder b(graph.origin);
    for (const auto& n : graph.nodes)
        if (!iface.count(n)) b.add_node(n);
    for (const auto& e : graph.edges) {
        const auto& a = graph.nodes[e.u];
        const auto& c = graph.nodes[e.v];
        auto ia = iface.find(a), ic = iface.find(c);
        if (ia != iface.end() && ic != iface.end() && ia->second.first == ic->second.first) continue;
        b.add_edge(original(a), original(c));
    }
    for (const auto& rec : records) {
        const auto* p = library.find(rec.pattern_number);
        if (!p) throw Error(ErrorCode::UnknownToken, "unknown pattern SG" + std::to_string(rec.pattern_number));
        for (const auto& t : rec.image_tokens) b.add_node(t);
        for (auto [u, v] : p->edges) b.add_edge(rec.image_tokens[u], rec.image_tokens[v]);
    }
    return b.build(true);
}

CircuitGraph expand_subcircuits(const CircuitGraph& graph, const PatternLibrary& library) {
    struct Instance {
        const SimplifiedPattern* pattern = nullptr;
        std::vector<std::string> tokens;  // per pattern node
    };
    std::map<std::pair<int, int>, Instance> instances;
    std::map<std::string, int> max_number;  // device prefix -> largest numeric suffix in use
    for (const auto& n : graph.nodes) {
        auto info = classify_token(n);
        if (info.kind == TokenKind::SubcircuitPin) {
            const auto* p = library.find(info.pattern);
            if (!p) throw Error(ErrorCode::UnknownToken, "unknown subcircuit token " + n);
            if (std::find(p->roles.begin(), p->roles.end(), info.sg_role) == p->roles.end())
                throw Error(ErrorCode::UnknownToken, "unknown subcircuit role in " + n);
            instances[{info.pattern, info.instance}].pattern = p;
        } else if (info.kind == TokenKind::DevicePin) {
            auto prefix = std::string(class_prefix(info.device_class));
            auto digits = info.device_id.substr(prefix.size());
            if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
                digits.size() < 9)
                max_number[prefix] = std::max(max_number[prefix], std::stoi(digits));
        }
    }
    if (instances.empty()) return graph;

    for (auto& [key, inst] : instances) {
        const auto* p = inst.pattern;
        std::map<int, std::string> group_ids;
        inst.tokens.resize(p->node_labels.size());
        for (std::size_t v = 0; v < p->node_labels.size(); ++v) {
            const auto& label = p->node_labels[v];
            auto dot = label.find('.');
            if (dot == std::string::npos) {
                inst.tokens[v] = label;
                continue;
            }
            auto cls = device_class_from_name(label.substr(0, dot));
            if (!cls) throw Error(ErrorCode::UnknownToken, "bad pattern label " + label);
            int group = p->device_groups.empty() ? -1 : p->device_groups[v];
            auto it = group_ids.find(group);
            if (it == group_ids.end() || group < 0) {
                std::string prefix(class_prefix(*cls));
                std::string id = prefix + std::to_string(++max_number[prefix]);
                it = group_ids.insert_or_assign(group, id).first;
            }
            inst.tokens[v] = it->second + label.back();
        }
    }
    auto resolve = [&](const std::string& t) -> std::pair<std::string, std::pair<int, int>> {
        auto info = classify_token(t);
        if (info.kind != TokenKind::SubcircuitPin) return {t, {-1, -1}};
        auto& inst = instances.at({info.pattern, info.instance});
        auto pos = std::find(inst.pattern->roles.begin(), inst.pattern->roles.end(), info.sg_role) - inst.pattern->roles.begin();
        return {inst.tokens[inst.pattern->boundary_nodes[pos]], {info.pattern, info.instance}};
    };
    GraphBuilder b(graph.origin);
    for (const auto& n : graph.nodes)
        if (classify_token(n).kind != TokenKind::SubcircuitPin) b.add_node(n);
    for (const auto& e : graph.edges) {
        auto [ta, ka] = resolve(graph.nodes[e.u]);
        auto [tc, kc] = resolve(graph.nodes[e.v]);
        if (ka.first >= 0 && ka == kc) continue;  // simplified cycle edge
        if (ta == tc) continue;
        b.add_edge(ta, tc);
    }
    for (const auto& [key, inst] : instances) {
        for (const auto& t : inst.tokens) b.add_node(t);
        for (auto [u, v] : inst.pattern->edges) b.add_edge(inst.tokens[u], inst.tokens[v]);
    }
    return b.build(true);
}

// ---------------------------------------------------------------------------
// Library file
// ---------------------------------------------------------------------------

std::string render_library(const PatternLibrary& library) {
    std::ostringstream os;
    os << "# cktfed pattern library v1\n";
    for (const auto& p : library.patterns) {
        os << "pattern " << p.pattern_id << '\n';
        os << "support " << p.support << '\n';
        os << "isolated_fraction " << p.isolated_fraction << '\n';
        os << "code " << to_string(p.canonical_code) << '\n';
        os << "nodes";
        for (std::size_t v = 0; v < p.node_labels.size(); ++v)
            os << ' ' << p.node_labels[v] << ':' << (p.device_groups.empty() ? -1 : p.device_groups[v]);
        os << "\nedges";
        for (auto [u, v] : p.edges) os << ' ' << u << '-' << v;
        os << "\nboundary";
        for (int v : p.boundary_nodes) os << ' ' << v;
        os << "\nroles";
        for (const auto& r : p.roles) os << ' ' << r;
        os << "\nend\n";
    }
    return os.str();
}

PatternLibrary parse_library(const std::string& text) {
    PatternLibrary lib;
    std::istringstream in(text);
    std::string line;
    SimplifiedPattern cur;
    bool open = false;
    int line_no = 0;
    auto fail = [&](const std::string& what) {
        throw Error(ErrorCode::FormatError, "pattern library line " + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "pattern") {
            if (open) fail("missing 'end'");
            cur = SimplifiedPattern{};
            ls >> cur.pattern_id;
            cur.pattern_number = pattern_number_of(cur.pattern_id);
            open = true;
            continue;
        }
        if (!open) fail("record outside a pattern");
        if (key == "support") ls >> cur.support;
        else if (key == "isolated_fraction") ls >> cur.isolated_fraction;
        else if (key == "code") {
            std::string code;
            ls >> code;
            cur.canonical_code = parse_dfs_code(code);
        } else if (key == "nodes") {
            std::string item;
            while (ls >> item) {
                auto colon = item.rfind(':');
                if (colon == std::string::npos) fail("bad node " + item);
                cur.node_labels.push_back(item.substr(0, colon));
                cur.device_groups.push_back(std::stoi(item.substr(colon + 1)));
            }
        } else if (key == "edges") {
            std::string item;
            while (ls >> item) {
                auto dash = item.find('-');
                if (dash == std::string::npos) fail("bad edge " + item);
                cur.edges.emplace_back(std::stoi(item.substr(0, dash)), std::stoi(item.substr(dash + 1)));
            }
        } else if (key == "boundary") {
            int v;
            while (ls >> v) cur.boundary_nodes.push_back(v);
        } else if (key == "roles") {
            std::string r;
            while (ls >> r) cur.roles.push_back(r);
        } else if (key == "end") {
            if (cur.roles.size() != cur.boundary_nodes.size() || cur.boundary_nodes.empty()) fail("boundary/roles mismatch");
            const int n = static_cast<int>(cur.node_labels.size());
            for (auto [u, v] : cur.edges)
                if (u < 0 || v < 0 || u >= n || v >= n) fail("edge out of range");
            for (int v : cur.boundary_nodes) {
                if (v < 0 || v >= n) fail("boundary node out of range");
                cur.boundary_labels.push_back(cur.node_labels[v]);
            }
            for (const auto& r : cur.roles) cur.interface_tokens.push_back(cur.pattern_id + r);
            const int b = static_cast<int>(cur.boundary_nodes.size());
            if (b == 2) cur.simplified_edges.emplace_back(0, 1);
            else if (b >= 3)
                for (int i = 0; i < b; ++i) cur.simplified_edges.emplace_back(i, (i + 1) % b);
            lib.patterns.push_back(std::move(cur));
            open = false;
        } else {
            fail("unknown key '" + key + "'");
        }
    }
    if (open) fail("missing 'end'");
    return lib;
}

void save_library(const std::filesystem::path& path, const PatternLibrary& library) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << render_library(library);
}

PatternLibrary load_library(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_library(ss.str());
}

} // namespace cktfed
