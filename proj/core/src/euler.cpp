#include "cktfed/euler.hpp"

#include "cktfed/error.hpp"
#include "cktfed/token.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <limits>
#include <queue>
#include <random>
#include <sstream>

namespace cktfed {

namespace {

std::vector<std::vector<std::pair<int, int>>> incidence(const CircuitGraph& g) {
    std::vector<std::vector<std::pair<int, int>>> inc(g.nodes.size());
    for (int i = 0; i < static_cast<int>(g.edges.size()); ++i) {
        inc[g.edges[i].u].emplace_back(g.edges[i].v, i);
        inc[g.edges[i].v].emplace_back(g.edges[i].u, i);
    }
    for (auto& l : inc) std::sort(l.begin(), l.end());
    return inc;
}

// BFS parents from `src`; neighbors are scanned in token order.
std::vector<int> bfs_parents(const std::vector<std::vector<int>>& adj, int src, std::vector<int>& dist) {
    std::vector<int> parent(adj.size(), -1);
    dist.assign(adj.size(), -1);
    std::queue<int> q;
    dist[src] = 0;
    q.push(src);
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (int x : adj[v])
            if (dist[x] < 0) {
                dist[x] = dist[v] + 1;
                parent[x] = v;
                q.push(x);
            }
    }
    return parent;
}

std::vector<std::pair<int, int>> pair_exact(const std::vector<std::vector<int>>& d) {
    const int k = static_cast<int>(d.size());
    const std::size_t full = (std::size_t{1} << k) - 1;
    constexpr int inf = std::numeric_limits<int>::max() / 2;
    std::vector<int> best(full + 1, inf);
    std::vector<std::uint8_t> partner(full + 1, 0);
    best[0] = 0;
    // best[mask] pairs up the vertices in mask; the lowest set bit picks a partner.
    for (std::size_t mask = 1; mask <= full; ++mask) {
        if (std::popcount(mask) % 2) continue;
        const int i = std::countr_zero(mask);
        const std::size_t rest = mask & ~(std::size_t{1} << i);
        for (int j = i + 1; j < k; ++j) {
            if (!(rest >> j & 1)) continue;
            const int c = best[rest & ~(std::size_t{1} << j)] + d[i][j];
            if (c < best[mask]) {
                best[mask] = c;
                partner[mask] = static_cast<std::uint8_t>(j);
            }
        }
    }
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t mask = full; mask;) {
        const int i = std::countr_zero(mask);
        const int j = partner[mask];
        pairs.emplace_back(i, j);
        mask &= ~(std::size_t{1} << i);
        mask &= ~(std::size_t{1} << j);
    }
    return pairs;
}

std::vector<std::pair<int, int>> pair_greedy(const std::vector<std::vector<int>>& d) {
    const int k = static_cast<int>(d.size());
    std::vector<char> done(static_cast<std::size_t>(k), 0);
    std::vector<std::pair<int, int>> pairs;
    for (int left = k; left > 0; left -= 2) {
        int bi = -1, bj = -1;
        for (int i = 0; i < k; ++i) {
            if (done[i]) continue;
            for (int j = i + 1; j < k; ++j)
                if (!done[j] && (bi < 0 || d[i][j] < d[bi][bj])) {
                    bi = i;
                    bj = j;
                }
        }
        done[bi] = done[bj] = 1;
        pairs.emplace_back(bi, bj);
    }
    // Pairwise exchange until no swap of partners between two pairs helps.
    for (bool improved = true; improved;) {
        improved = false;
        for (std::size_t p = 0; p < pairs.size(); ++p)
            for (std::size_t q = p + 1; q < pairs.size(); ++q) {
                auto [a, b] = pairs[p];
                auto [c, e] = pairs[q];
                const int now = d[a][b] + d[c][e];
                if (d[a][c] + d[b][e] < now) {
                    pairs[p] = {a, c};
                    pairs[q] = {b, e};
                    improved = true;
                } else if (d[a][e] + d[b][c] < now) {
                    pairs[p] = {a, e};
                    pairs[q] = {b, c};
                    improved = true;
                }
            }
    }
    return pairs;
}

// Duplicates a shortest path for each pair of odd vertices.
Eulerization duplicate_paths(const CircuitGraph& graph, const std::vector<int>& odd,
                             const std::vector<std::pair<int, int>>& pairs,
                             const std::vector<std::vector<int>>& parents) {
    Eulerization out;
    GraphBuilder b(graph.origin);
    for (const auto& n : graph.nodes) b.add_node(n);
    for (const auto& e : graph.edges) b.add_edge(graph.nodes[e.u], graph.nodes[e.v]);
    for (auto [i, j] : pairs) {
        const auto& parent = parents[i];
        for (int v = odd[j]; v != odd[i]; v = parent[v]) {
            const auto& a = graph.nodes[parent[v]];
            const auto& c = graph.nodes[v];
            b.add_edge(a, c);
            out.duplicated.emplace_back(std::min(a, c), std::max(a, c));
        }
    }
    std::sort(out.duplicated.begin(), out.duplicated.end());
    out.multigraph = b.build(false);
    return out;
}

std::vector<int> odd_indices(const CircuitGraph& graph) {
    std::vector<int> odd;
    auto deg = graph.degrees();
    for (int i = 0; i < static_cast<int>(deg.size()); ++i)
        if (deg[i] % 2) odd.push_back(i);
    return odd;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

std::set<std::string> odd_vertices(const CircuitGraph& graph) {
    if (graph.nodes.empty()) throw Error(ErrorCode::InvalidArgument, "odd_vertices of an empty graph");
    std::set<std::string> out;
    for (int i : odd_indices(graph)) out.insert(graph.nodes[i]);
    return out;
}

Eulerization eulerize(const CircuitGraph& graph, int exact_limit) {
    if (graph.nodes.empty() || !graph.connected())
        throw Error(ErrorCode::DisconnectedGraph, "eulerize needs a connected graph");
    const auto odd = odd_indices(graph);
    const auto adj = graph.adjacency();
    std::vector<std::vector<int>> parents, dist(odd.size());
    for (std::size_t i = 0; i < odd.size(); ++i) {
        std::vector<int> d;
        parents.push_back(bfs_parents(adj, odd[i], d));
        for (int o : odd) dist[i].push_back(d[o]);
    }
    const bool exact = static_cast<int>(odd.size()) <= exact_limit;
    if (!exact)
        warn(std::to_string(odd.size()) + " odd vertices exceed the exact pairing limit of " +
             std::to_string(exact_limit) + "; greedy pairing may duplicate more edges than necessary");
    auto pairs = exact ? pair_exact(dist) : pair_greedy(dist);
    auto out = duplicate_paths(graph, odd, pairs, parents);
    out.exact = exact;
    return out;
}

TokenSequence eulerian_circuit(const CircuitGraph& multigraph, const std::string& start, std::uint64_t seed) {
    const int s = multigraph.index_of(start);
    if (s < 0) throw Error(ErrorCode::StartNotInGraph, "start token " + start + " is not in the graph");
    if (!multigraph.connected()) throw Error(ErrorCode::NotEulerian, "graph is not connected");
    for (int d : multigraph.degrees())
        if (d % 2) throw Error(ErrorCode::NotEulerian, "graph has odd-degree vertices");
    auto inc = incidence(multigraph);
    if (seed != 0) {
        std::mt19937_64 rng(seed);
        for (auto& l : inc)
            for (std::size_t i = l.size(); i > 1; --i) std::swap(l[i - 1], l[rng() % i]);
    }
    std::vector<char> used(multigraph.edges.size(), 0);
    std::vector<std::size_t> next(inc.size(), 0);
    std::vector<int> stack{s}, walk;
    while (!stack.empty()) {
        const int v = stack.back();
        auto& p = next[v];
        while (p < inc[v].size() && used[inc[v][p].second]) ++p;
        if (p == inc[v].size()) {
            walk.push_back(v);
            stack.pop_back();
        } else {
            used[inc[v][p].second] = 1;
            stack.push_back(inc[v][p].first);
        }
    }
    std::reverse(walk.begin(), walk.end());
    TokenSequence seq;
    for (int v : walk) seq.tokens.push_back(multigraph.nodes[v]);
    return seq;
}

std::string default_start(const CircuitGraph& graph) {
    if (graph.contains("VDD")) return "VDD";
    if (graph.nodes.empty()) throw Error(ErrorCode::InvalidArgument, "empty graph");
    return graph.nodes.front();
}

namespace {

CircuitGraph encodable_graph(const Circuit& circuit, const PatternLibrary* library) {
    auto g = build_pin_graph(circuit);
    if (library && !library->empty()) g = substitute_patterns(g, *library).graph;
    return g;
}

} // namespace

TokenSequence encode(const Circuit& circuit, const PatternLibrary* library) {
    auto g = encodable_graph(circuit, library);
    auto e = eulerize(g);
    auto seq = eulerian_circuit(e.multigraph, default_start(e.multigraph), 0);
    seq.tag = type_tag(circuit.type);
    return seq;
}

CircuitGraph decode(const TokenSequence& sequence, const PatternLibrary* library) {
    if (sequence.tokens.empty()) throw Error(ErrorCode::EmptySequence, "cannot decode an empty sequence");
    GraphBuilder b;
    bool has_sg = false;
    for (const auto& t : sequence.tokens) {
        auto kind = classify_token(t).kind;
        if (kind == TokenKind::SubcircuitPin) has_sg = true;
        else if (kind != TokenKind::DevicePin && kind != TokenKind::Terminal)
            throw Error(ErrorCode::UnknownToken, "unknown token '" + t + "'");
        b.add_node(t);
    }
    for (std::size_t i = 0; i + 1 < sequence.tokens.size(); ++i) {
        if (sequence.tokens[i] == sequence.tokens[i + 1])
            throw Error(ErrorCode::SelfLoopToken, "token " + sequence.tokens[i] + " repeats consecutively");
        b.add_edge(sequence.tokens[i], sequence.tokens[i + 1]);
    }
    if (sequence.closed && sequence.tokens.size() > 2 && sequence.tokens.front() != sequence.tokens.back())
        b.add_edge(sequence.tokens.back(), sequence.tokens.front());
    auto g = b.build(true);
    if (has_sg && library) g = expand_subcircuits(g, *library);
    return g;
}

std::vector<TokenSequence> augment(const Circuit& circuit, int k, const PatternLibrary* library, std::uint64_t seed) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "augment needs k >= 1");
    auto g = encodable_graph(circuit, library);
    auto e = eulerize(g);
    const auto tag = type_tag(circuit.type);
    std::vector<TokenSequence> out;
    std::set<std::vector<std::string>> seen;
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    for (int j = 0; j < k; ++j) {
        std::string start = default_start(e.multigraph);
        std::uint64_t walk_seed = 0;
        if (j > 0) {
            start = e.multigraph.nodes[rng() % e.multigraph.nodes.size()];
            walk_seed = seed * 1000003ULL + static_cast<std::uint64_t>(j);
        }
        auto s = eulerian_circuit(e.multigraph, start, walk_seed);
        s.tag = tag;
        if (seen.insert(s.tokens).second) out.push_back(std::move(s));
    }
    return out;
}

double compression_rate(const TokenSequence& before, const TokenSequence& after) {
    if (before.empty() || after.empty()) throw Error(ErrorCode::EmptySequence, "compression_rate of an empty sequence");
    return static_cast<double>(before.size()) / static_cast<double>(after.size());
}

CircuitGraph legacy_graph(const Circuit& circuit) {
    GraphBuilder b(circuit.name);
    for (const auto& d : circuit.devices) {
        b.add_node(d.id);
        for (std::size_t i = 0; i < d.pins.size(); ++i) {
            b.add_edge(d.id, d.pin_token(i));
            for (std::size_t j = i + 1; j < d.pins.size(); ++j) b.add_edge(d.pin_token(i), d.pin_token(j));
        }
    }
    for (const auto& [net, refs] : circuit.nets) {
        std::vector<std::string> members;
        if (circuit.terminals.count(net)) members.push_back(net);
        for (const auto& r : refs) members.push_back(r.device + static_cast<char>(r.role));
        for (std::size_t i = 0; i < members.size(); ++i)
            for (std::size_t j = i + 1; j < members.size(); ++j) b.add_edge(members[i], members[j]);
    }
    return b.build(false);
}

TokenSequence legacy_encode(const Circuit& circuit) {
    auto g = legacy_graph(circuit);
    if (!g.connected()) throw Error(ErrorCode::DisconnectedGraph, "legacy graph is not connected");
    // Odd vertices are paired in token order, without any matching.
    const auto odd = odd_indices(g);
    const auto adj = g.adjacency();
    std::vector<std::vector<int>> parents(odd.size());
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t i = 0; i + 1 < odd.size(); i += 2) {
        std::vector<int> d;
        parents[i] = bfs_parents(adj, odd[i], d);
        pairs.emplace_back(static_cast<int>(i), static_cast<int>(i + 1));
    }
    auto e = duplicate_paths(g, odd, pairs, parents);
    auto seq = eulerian_circuit(e.multigraph, default_start(e.multigraph), 0);
    seq.tag = type_tag(circuit.type);
    return seq;
}

std::string format_sequence(const TokenSequence& sequence) {
    std::string out = sequence.tag;
    for (const auto& t : sequence.tokens) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

TokenSequence parse_sequence_line(const std::string& line) {
    TokenSequence seq;
    std::istringstream in(line);
    std::string tok;
    bool first = true;
    while (in >> tok) {
        if (first && tok.front() == '<' && tok.back() == '>') seq.tag = tok;
        else seq.tokens.push_back(tok);
        first = false;
    }
    seq.closed = seq.tokens.size() > 2 && seq.tokens.front() == seq.tokens.back();
    return seq;
}

void write_sequences(const std::filesystem::path& path, const std::vector<TokenSequence>& sequences) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    for (const auto& s : sequences) out << format_sequence(s) << '\n';
}

std::vector<TokenSequence> read_sequences(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::vector<TokenSequence> out;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        out.push_back(parse_sequence_line(line));
    }
    return out;
}

} // namespace cktfed
