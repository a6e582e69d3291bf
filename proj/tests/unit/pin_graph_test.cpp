#include "check.hpp"
#include "corpus.hpp"
#include "oracles.hpp"

#include <cktfed/pin_graph.hpp>

#include <doctest.h>

#include <map>

using namespace cktfed;

namespace {

std::vector<std::pair<std::string, std::string>> named_edges(const CircuitGraph& g) {
    std::vector<std::pair<std::string, std::string>> out;
    for (auto e : g.edges) out.emplace_back(g.nodes[e.u], g.nodes[e.v]);
    std::sort(out.begin(), out.end());
    return out;
}

Circuit shared_net(int n) {
    std::vector<Device> devs;
    for (int i = 1; i <= n; ++i)
        devs.push_back(Device{"R" + std::to_string(i), DeviceKind::R,
                              {{PinRole::A, "hub"}, {PinRole::B, "x" + std::to_string(i)}}});
    return make_circuit("star", CircuitType::Other, devs);
}

} // namespace

TEST_CASE("isolated nmos is a bare ring") {
    auto c = parse_netlist(".circuit m OTHER\nMNM1 a b c d NMOS\n.end");
    auto g = build_pin_graph(c);
    CHECK(g.nodes == std::vector<std::string>{"NM1B", "NM1D", "NM1G", "NM1S"});
    CHECK(g.edges.size() == 4);
    for (int d : g.degrees()) CHECK(d == 2);
}

TEST_CASE("shared net becomes a star") {
    auto c = shared_net(4);
    auto stars = net_stars(c);
    auto it = std::find_if(stars.begin(), stars.end(), [](const NetStar& s) { return s.net == "hub"; });
    REQUIRE(it != stars.end());
    CHECK(it->anchor == "R1A");
    CHECK(it->leaves.size() == 3);
    auto g = build_pin_graph(c);
    // 4 resistor edges + 3 star edges
    CHECK(g.edges.size() == 7);

    auto s = edge_savings(shared_net(5));
    // hub net: 4 star edges vs 10 pairwise
    CHECK(s.pruned_edges == 5 + 4);
    CHECK(s.naive_edges == 5 * (1 + 2) + 10 + 5 * 0);
}

TEST_CASE("two-pin net has equal star and pairwise cost") {
    auto c = parse_netlist(".circuit m OTHER\nR1 a b\nR2 b c\n.end");
    auto s = edge_savings(c);
    CHECK(s.pruned_edges == 3);
    CHECK(s.naive_edges == 2 * 3 + 1);
}

TEST_CASE("terminal anchors its net") {
    auto c = parse_netlist(".circuit m OTHER\nR1 VDD a\nR2 VDD b\nC1 VDD VSS\n.end");
    auto g = build_pin_graph(c);
    auto adj = g.adjacency();
    CHECK(adj[g.index_of("VDD")].size() == 3);
    CHECK(g.contains("VSS"));
}

TEST_CASE("pin graph matches the hand-built edge set") {
    auto check = [](const Circuit& c) {
        auto g = build_pin_graph(c);
        CHECK_MESSAGE(named_edges(g) == oracle::pin_graph_edges(c), c.name);
        std::set<std::pair<int, int>> uniq;
        for (auto e : g.edges) {
            CHECK(e.u != e.v);
            uniq.insert({e.u, e.v});
        }
        CHECK(uniq.size() == g.edges.size());
    };
    for (const auto& c : testing_corpus::fixtures()) check(c);
    for (const auto& c : testing_corpus::random_circuits(200, 5, 25)) check(c);
}

TEST_CASE("two-stage fixture edge count") {
    auto c = load_netlist(std::string(CKTFED_FIXTURE_DIR) + "/two_stage_opamp.ckt");
    auto g = build_pin_graph(c);
    CHECK(g.edges.size() == oracle::pin_graph_edges(c).size());
    // 8 rings of 4, one capacitor edge, 31 star edges over 9 nets.
    CHECK(g.edges.size() == 64);
}

TEST_CASE("edge savings against the pairwise count") {
    auto c = generate_random_circuit(3, 15, CircuitType::Other);
    auto s = edge_savings(c);
    CHECK(s.naive_edges == oracle::naive_edge_count(c));
    CHECK(s.pruned_edges == static_cast<long>(oracle::pin_graph_edges(c).size()));
    CHECK(s.pruned_edges < s.naive_edges);
    for (const auto& f : testing_corpus::fixtures()) {
        auto e = edge_savings(f);
        CHECK(e.naive_edges == oracle::naive_edge_count(f));
        CHECK(e.pruned_edges <= e.naive_edges);
    }
}

TEST_CASE("star pruning preserves connectivity") {
    auto check = [](const Circuit& c) {
        auto g = build_pin_graph(c);
        auto labels = g.component_labels();
        auto ref = oracle::pairwise_components(c);
        // Same partition: two nodes share a star component iff they share a pairwise one.
        std::map<std::string, int> by_ref;
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            const auto& root = ref.at(g.nodes[i]);
            auto [it, fresh] = by_ref.emplace(root, labels[i]);
            CHECK(it->second == labels[i]);
        }
        std::set<int> distinct(labels.begin(), labels.end());
        CHECK(distinct.size() == by_ref.size());
    };
    for (const auto& c : testing_corpus::fixtures()) check(c);
    check(parse_netlist(".circuit m OTHER\nR1 a b\nR2 c d\nMNM1 a c e f NMOS\nR3 x y\n.end"));
}

TEST_CASE("per-net star degree") {
    for (const auto& c : testing_corpus::fixtures()) {
        for (const auto& s : net_stars(c)) {
            const std::size_t n = c.nets.at(s.net).size() + (c.terminals.count(s.net) ? 1 : 0);
            CHECK(s.leaves.size() == n - 1);
            if (c.terminals.count(s.net)) CHECK(s.anchor == s.net);
            for (const auto& l : s.leaves) CHECK((s.anchor < l || c.terminals.count(s.net) > 0));
        }
    }
}

TEST_CASE("deterministic dump") {
    for (const auto& c : testing_corpus::fixtures()) {
        auto a = dump_graph(build_pin_graph(c));
        CHECK(a == dump_graph(build_pin_graph(c)));
        CHECK(parse_graph_dump(a) == build_pin_graph(c));
    }
}

TEST_CASE("graph builder") {
    GraphBuilder b;
    CHECK_THROWS_AS(b.add_edge("A", "A"), Error);
    b.add_edge("B", "A");
    b.add_edge("A", "B");
    b.add_node("C");
    CHECK(b.build(false).edges.size() == 2);
    CHECK(b.build(true).edges.size() == 1);
    CHECK_FALSE(b.build(true).connected());
}
