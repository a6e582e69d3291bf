#include "cktfed/pin_graph.hpp"

#include "cktfed/error.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace cktfed {

int CircuitGraph::index_of(std::string_view token) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), token);
    if (it == nodes.end() || *it != token) return -1;
    return static_cast<int>(it - nodes.begin());
}

std::vector<int> CircuitGraph::degrees() const {
    std::vector<int> deg(nodes.size(), 0);
    for (const auto& e : edges) {
        ++deg[e.u];
        ++deg[e.v];
    }
    return deg;
}

std::vector<std::vector<int>> CircuitGraph::adjacency() const {
    std::vector<std::vector<int>> adj(nodes.size());
    for (const auto& e : edges) {
        adj[e.u].push_back(e.v);
        adj[e.v].push_back(e.u);
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    return adj;
}

std::vector<int> CircuitGraph::component_labels() const {
    std::vector<int> parent(nodes.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& e : edges) {
        int a = find(e.u), b = find(e.v);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::vector<int> labels(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) labels[i] = find(static_cast<int>(i));
    return labels;
}

bool CircuitGraph::connected() const {
    if (nodes.empty()) return true;
    auto labels = component_labels();
    return std::all_of(labels.begin(), labels.end(), [](int l) { return l == 0; });
}

void GraphBuilder::add_node(std::string token) { nodes_.push_back(std::move(token)); }

void GraphBuilder::add_edge(std::string a, std::string b) {
    if (a == b) throw Error(ErrorCode::InvalidArgument, "self-loop on " + a);
    nodes_.push_back(a);
    nodes_.push_back(b);
    edges_.emplace_back(std::move(a), std::move(b));
}

CircuitGraph GraphBuilder::build(bool collapse_parallel) const {
    CircuitGraph g;
    g.origin = origin_;
    g.nodes = nodes_;
    std::sort(g.nodes.begin(), g.nodes.end());
    g.nodes.erase(std::unique(g.nodes.begin(), g.nodes.end()), g.nodes.end());
    g.edges.reserve(edges_.size());
    for (const auto& [a, b] : edges_) {
        int u = g.index_of(a), v = g.index_of(b);
        if (u > v) std::swap(u, v);
        g.edges.push_back({u, v});
    }
    std::sort(g.edges.begin(), g.edges.end());
    if (collapse_parallel) g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    return g;
}

namespace {

void validate(const Circuit& circuit) {
    std::unordered_set<std::string> ids;
    for (const auto& d : circuit.devices) {
        if (d.pins.size() != pin_roles(d.kind).size())
            throw Error(ErrorCode::InvalidCircuit, "device " + d.id + " has wrong pin count");
        if (!ids.insert(d.id).second) throw Error(ErrorCode::InvalidCircuit, "duplicate device id " + d.id);
        for (const auto& p : d.pins) {
            auto it = circuit.nets.find(p.net);
            if (it == circuit.nets.end() || !it->second.count(PinRef{d.id, p.role}))
                throw Error(ErrorCode::InvalidCircuit, "net table does not list " + d.id);
        }
    }
    if (circuit.devices.empty()) throw Error(ErrorCode::InvalidCircuit, "circuit has no devices");
}

} // namespace

std::vector<NetStar> net_stars(const Circuit& circuit) {
    std::vector<NetStar> out;
    for (const auto& [net, members] : circuit.nets) {
        std::vector<std::string> tokens;
        for (const auto& ref : members) tokens.push_back(ref.device + static_cast<char>(ref.role));
        std::sort(tokens.begin(), tokens.end());
        NetStar star;
        star.net = net;
        if (is_terminal_name(net)) {
            star.anchor = net;
            star.leaves = std::move(tokens);
        } else {
            if (tokens.empty()) continue;
            star.anchor = tokens.front();
            star.leaves.assign(tokens.begin() + 1, tokens.end());
        }
        out.push_back(std::move(star));
    }
    return out;
}

CircuitGraph build_pin_graph(const Circuit& circuit) {
    validate(circuit);
    GraphBuilder b(circuit.name);
    for (const auto& d : circuit.devices) {
        const std::size_t k = d.pins.size();
        for (std::size_t i = 0; i < k; ++i) b.add_node(d.pin_token(i));
        if (k == 2) {
            b.add_edge(d.pin_token(0), d.pin_token(1));
        } else {
            for (std::size_t i = 0; i < k; ++i) b.add_edge(d.pin_token(i), d.pin_token((i + 1) % k));
        }
    }
    for (const auto& t : circuit.terminals) b.add_node(t);
    for (const auto& star : net_stars(circuit))
        for (const auto& leaf : star.leaves) b.add_edge(star.anchor, leaf);
    return b.build(true);
}

EdgeSavings edge_savings(const Circuit& circuit) {
    EdgeSavings s;
    s.pruned_edges = static_cast<long>(build_pin_graph(circuit).edges.size());
    for (const auto& d : circuit.devices) {
        const long k = static_cast<long>(d.pins.size());
        s.naive_edges += k * (k - 1) / 2 + k;
    }
    for (const auto& [net, members] : circuit.nets) {
        long n = static_cast<long>(members.size()) + (is_terminal_name(net) ? 1 : 0);
        s.naive_edges += n * (n - 1) / 2;
    }
    return s;
}

std::string dump_graph(const CircuitGraph& graph) {
    std::ostringstream os;
    if (!graph.origin.empty()) os << "# origin: " << graph.origin << '\n';
    os << "# nodes:";
    for (const auto& n : graph.nodes) os << ' ' << n;
    os << '\n';
    for (const auto& e : graph.edges) os << graph.nodes[e.u] << ' ' << graph.nodes[e.v] << '\n';
    return os.str();
}

CircuitGraph parse_graph_dump(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::string origin;
    std::vector<std::string> nodes;
    std::vector<std::pair<std::string, std::string>> edges;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.starts_with("# origin: ")) {
            origin = line.substr(10);
        } else if (line.starts_with("# nodes:")) {
            std::istringstream ls(line.substr(8));
            std::string tok;
            while (ls >> tok) nodes.push_back(tok);
        } else if (line.front() == '#') {
            continue;
        } else {
            std::istringstream ls(line);
            std::string a, c;
            if (!(ls >> a >> c)) throw Error(ErrorCode::FormatError, "bad edge line: " + line);
            edges.emplace_back(a, c);
        }
    }
    GraphBuilder gb(origin);
    for (auto& n : nodes) gb.add_node(n);
    for (auto& [a, c] : edges) gb.add_edge(a, c);
    return gb.build(false);
}

} // namespace cktfed
