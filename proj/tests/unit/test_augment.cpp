#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "augment.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace scl;

namespace {

BipartiteGraph random_graph(std::size_t nu, std::size_t ni, std::size_t edges, std::mt19937_64& rng) {
    std::set<Interaction> set;
    while (set.size() < edges)
        set.emplace(static_cast<NodeId>(rng() % nu), static_cast<NodeId>(rng() % ni));
    return build_graph(std::vector<Interaction>(set.begin(), set.end()), nu, ni);
}

BipartiteGraph tiny_graph() {
    // user0 = {i0, i1}, user1 = {i0, i2}
    return build_graph(std::vector<Interaction>{{0, 0}, {0, 1}, {1, 0}, {1, 2}}, 2, 3);
}

std::vector<NodeId> user_items(const BipartiteGraph& g, NodeId u) {
    std::vector<NodeId> out;
    for (const auto& [uu, i] : g.edges())
        if (uu == u) out.push_back(i);
    return out;
}

}  // namespace

TEST_CASE("config validation") {
    AugmentationConfig c;
    CHECK_NOTHROW(c.validate());
    c.rho1 = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.k_segments = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.top_n = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(parse_augment_method("NR") == AugmentMethod::NodeReplication);
    CHECK_THROWS_AS(parse_augment_method("XX"), ConfigError);
}

TEST_CASE("rate zero is the identity and rate one empties the graph") {
    std::mt19937_64 rng(5);
    const auto g = random_graph(30, 40, 200, rng);
    const auto sim = compute_similarity(g, 10);
    CHECK(node_drop(g, 0.0, rng).graph.edges() == g.edges());
    CHECK(edge_drop(g, 0.0, rng).graph.edges() == g.edges());
    CHECK(node_replication(g, 0.0, 4, sim, rng).graph.edges() == g.edges());

    const auto nd = node_drop(g, 1.0, rng);
    CHECK(nd.graph.num_edges() == 0);
    CHECK(nd.graph.num_nodes() == g.num_nodes());
    const auto ed = edge_drop(g, 1.0, rng);
    CHECK(ed.graph.num_edges() == 0);
    CHECK(ed.graph.num_nodes() == g.num_nodes());
}

TEST_CASE("node drop removes exactly the incident edges") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const auto g = random_graph(20, 30, 150, rng);
        const auto view = node_drop(g, 0.2, rng);
        CHECK(view.graph.num_users() == g.num_users());
        CHECK(view.graph.num_items() == g.num_items());
        const std::set<std::uint32_t> dropped(view.dropped_nodes.begin(), view.dropped_nodes.end());
        std::vector<Interaction> expected;
        for (const auto& [u, i] : g.edges())
            if (!dropped.count(u) && !dropped.count(static_cast<std::uint32_t>(g.num_users() + i)))
                expected.emplace_back(u, i);
        REQUIRE(view.graph.edges() == expected);
        for (const auto p : view.dropped_nodes) CHECK(view.graph.degree(p) == 0);
    }
}

TEST_CASE("edge drop keeps the complement of the dropped indices") {
    std::mt19937_64 rng(9);
    const auto g = random_graph(20, 30, 150, rng);
    const auto view = edge_drop(g, 0.3, rng);
    const std::set<std::uint32_t> dropped(view.dropped_edges.begin(), view.dropped_edges.end());
    std::vector<Interaction> expected;
    for (std::size_t e = 0; e < g.num_edges(); ++e)
        if (!dropped.count(static_cast<std::uint32_t>(e))) expected.push_back(g.edges()[e]);
    CHECK(view.graph.edges() == expected);
}

TEST_CASE("drop rates concentrate around rho on 1000-node, 10000-edge graphs") {
    std::mt19937_64 rng(2024);
    const auto g = random_graph(400, 600, 10000, rng);
    REQUIRE(g.num_nodes() == 1000);
    REQUIRE(g.num_edges() == 10000);
    const double rho = 0.1;
    double node_frac = 0.0, edge_kept = 0.0;
    for (int t = 0; t < 200; ++t) {
        node_frac += static_cast<double>(node_drop(g, rho, rng).dropped_nodes.size()) / 1000.0;
        edge_kept += static_cast<double>(edge_drop(g, rho, rng).graph.num_edges()) / 10000.0;
    }
    node_frac /= 200;
    edge_kept /= 200;
    CHECK(node_frac >= 0.08);
    CHECK(node_frac <= 0.12);
    CHECK(edge_kept >= 0.88);
    CHECK(edge_kept <= 0.92);
}

TEST_CASE("similarity: hand examples") {
    // A = {i0, i1}, B = {i0, i2}
    const auto sim = compute_similarity(tiny_graph(), 10);
    REQUIRE(sim.user_neighbors[0].size() == 1);
    CHECK(sim.user_neighbors[0][0].id == 1);
    CHECK(sim.user_neighbors[0][0].score == doctest::Approx(0.5).epsilon(1e-15));

    const auto clones = build_graph(std::vector<Interaction>{{0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 2}}, 3, 3);
    const auto s2 = compute_similarity(clones, 10);
    CHECK(s2.user_neighbors[0][0] == Neighbor{1, 1.0});
    CHECK(s2.user_neighbors[1][0] == Neighbor{0, 1.0});
    // Disjoint users are admitted with score zero while the list has room.
    CHECK(s2.user_neighbors[0][1] == Neighbor{2, 0.0});
    CHECK(s2.user_neighbors[2].size() == 2);
    CHECK(s2.user_neighbors[2][0].score == 0.0);

    CHECK_THROWS_AS(compute_similarity(build_graph(std::vector<Interaction>{{0, 0}}, 1, 2), 3), ShapeError);
}

TEST_CASE("similarity: agrees with the dense cosine oracle") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t nu = 2 + rng() % 49, ni = 2 + rng() % 49, n_top = 1 + rng() % 12;
        const auto edges = oracle::random_edges(nu, ni, 0.02 + 0.3 * (trial % 6) / 6.0, rng);
        const auto g = build_graph(edges, nu, ni);
        const auto sim = compute_similarity(g, n_top);

        Eigen::MatrixXd r = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nu), static_cast<Eigen::Index>(ni));
        for (const auto& [u, i] : edges) r(u, i) = 1.0;
        for (const bool users : {true, false}) {
            const Eigen::MatrixXd rows = users ? r : Eigen::MatrixXd(r.transpose());
            const auto& lists = users ? sim.user_neighbors : sim.item_neighbors;
            const auto n = rows.rows();
            for (Eigen::Index a = 0; a < n; ++a) {
                const auto deg_a = static_cast<long>(rows.row(a).sum());
                std::vector<Eigen::Index> cand;
                for (Eigen::Index b = 0; b < n; ++b)
                    if (b != a && rows.row(b).sum() > 0) cand.push_back(b);
                // Exact ordering via integer comparison of squared cosines.
                const auto before = [&](Eigen::Index x, Eigen::Index y) {
                    const auto cx = static_cast<long>(rows.row(a).dot(rows.row(x)));
                    const auto cy = static_cast<long>(rows.row(a).dot(rows.row(y)));
                    const auto dx = static_cast<long>(rows.row(x).sum()), dy = static_cast<long>(rows.row(y).sum());
                    const long lhs = cx * cx * dy, rhs = cy * cy * dx;
                    return lhs != rhs ? lhs > rhs : x < y;
                };
                std::sort(cand.begin(), cand.end(), before);
                if (deg_a == 0) cand.clear();
                if (cand.size() > n_top) cand.resize(n_top);
                const auto& got = lists[static_cast<std::size_t>(a)];
                REQUIRE(got.size() == cand.size());
                for (std::size_t j = 0; j < cand.size(); ++j) {
                    REQUIRE(got[j].id == cand[j]);
                    CHECK(got[j].score == doctest::Approx(oracle::dense_cosine(rows, a, cand[j])).epsilon(1e-12));
                    CHECK(got[j].score >= 0.0);
                    CHECK(got[j].score <= 1.0 + 1e-15);
                    CHECK(got[j].id != a);
                }
            }
        }
    }
}

TEST_CASE("similarity index file round trip") {
    std::mt19937_64 rng(4);
    const auto g = random_graph(15, 20, 80, rng);
    const auto sim = compute_similarity(g, 5);
    testutil::TempDir dir;
    sim.save(dir / "sim.bin");
    const auto bytes = testutil::read_file(dir / "sim.bin");
    CHECK(bytes.substr(0, 8) == std::string("SCLSIM1\0", 8));
    const auto back = SimilarityIndex::load(dir / "sim.bin");
    REQUIRE(back.user_neighbors.size() == sim.user_neighbors.size());
    REQUIRE(back.item_neighbors.size() == sim.item_neighbors.size());
    for (std::size_t a = 0; a < sim.user_neighbors.size(); ++a) {
        REQUIRE(back.user_neighbors[a].size() == sim.user_neighbors[a].size());
        for (std::size_t j = 0; j < sim.user_neighbors[a].size(); ++j) {
            CHECK(back.user_neighbors[a][j].id == sim.user_neighbors[a][j].id);
            CHECK(back.user_neighbors[a][j].score == static_cast<double>(static_cast<float>(sim.user_neighbors[a][j].score)));
        }
    }
    testutil::write_file(dir / "bad.bin", "NOTASIM!");
    CHECK_THROWS_AS(SimilarityIndex::load(dir / "bad.bin"), IoError);
}

TEST_CASE("replication: two-user example, every segment enumerated") {
    // k = 2 over user0's list {i0, i1}: segment 0 = {i0}, segment 1 = {i1}.
    // The donor user1 offers {i0, i2}; only i2 is novel.
    const std::map<std::uint32_t, std::vector<NodeId>> expected = {{0, {1, 2}}, {1, {0, 2}}};
    for (const auto& [segment, after] : expected) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            EdgeLists lists(tiny_graph());
            std::mt19937_64 rng(seed);
            const auto rep = replicate_node(lists, 0, 2, segment, 1, rng);
            CHECK(rep.removed == 1);
            CHECK(rep.added == 1);
            CHECK(lists.user_items[0] == after);
        }
    }
}

TEST_CASE("replication: donor with nothing novel shrinks the node") {
    // The donor shares all four interactions and has nothing else.
    std::vector<Interaction> e;
    for (NodeId i = 0; i < 4; ++i) {
        e.emplace_back(0, i);
        e.emplace_back(1, i);
    }
    EdgeLists lists(build_graph(e, 2, 4));
    std::mt19937_64 rng(1);
    const auto rep = replicate_node(lists, 0, 4, 2, 1, rng);
    CHECK(rep.removed == 1);
    CHECK(rep.added == 0);
    CHECK(lists.user_items[0] == std::vector<NodeId>{0, 1, 3});
    CHECK(lists.item_users[2] == std::vector<NodeId>{1});
}

TEST_CASE("replication: outcomes match exhaustive enumeration") {
    std::mt19937_64 gen(31);
    for (int trial = 0; trial < 40; ++trial) {
        const auto g = random_graph(6, 8, 22, gen);
        const EdgeLists base(g);
        const NodeId node = static_cast<NodeId>(gen() % 6);
        const auto& own = base.user_items[node];
        if (own.empty()) continue;
        const std::size_t k_cfg = 1 + gen() % 5;
        const std::size_t k = std::min(k_cfg, own.size());
        for (NodeId donor = 0; donor < 6; ++donor) {
            if (donor == node) continue;
            for (std::uint32_t seg = 0; seg < k; ++seg) {
                // Oracle: explicit segment boundaries and all admissible additions.
                std::vector<std::vector<NodeId>> segments(k);
                const std::size_t deg = own.size();
                std::size_t pos = 0;
                for (std::size_t s = 0; s < k; ++s) {
                    const std::size_t len = deg / k + (s < deg % k ? 1 : 0);
                    for (std::size_t j = 0; j < len; ++j) segments[s].push_back(own[pos++]);
                }
                std::set<NodeId> kept(own.begin(), own.end());
                for (const auto x : segments[seg]) kept.erase(x);
                std::vector<NodeId> novel;
                for (const auto x : base.user_items[donor])
                    if (!std::binary_search(own.begin(), own.end(), x)) novel.push_back(x);
                const std::size_t take = std::min(segments[seg].size(), novel.size());
                std::set<std::vector<NodeId>> admissible;
                for (unsigned mask = 0; mask < (1u << novel.size()); ++mask) {
                    if (static_cast<std::size_t>(__builtin_popcount(mask)) != take) continue;
                    std::set<NodeId> out = kept;
                    for (std::size_t b = 0; b < novel.size(); ++b)
                        if (mask & (1u << b)) out.insert(novel[b]);
                    admissible.emplace(out.begin(), out.end());
                }
                std::set<std::vector<NodeId>> seen;
                for (std::uint64_t seed = 0; seed < 200; ++seed) {
                    EdgeLists lists = base;
                    std::mt19937_64 rng(seed);
                    const auto rep = replicate_node(lists, node, k_cfg, seg, donor, rng);
                    REQUIRE(admissible.count(lists.user_items[node]) == 1);
                    CHECK(rep.removed == segments[seg].size());
                    CHECK(rep.added == take);
                    // The mirror lists stay consistent.
                    std::size_t mirrored = 0;
                    for (NodeId i = 0; i < 8; ++i)
                        mirrored += std::binary_search(lists.item_users[i].begin(), lists.item_users[i].end(), node);
                    CHECK(mirrored == lists.user_items[node].size());
                    seen.insert(lists.user_items[node]);
                }
                if (admissible.size() <= 10) CHECK(seen == admissible);
            }
        }
    }
}

TEST_CASE("replication view: degree change bounded by the segment, ids unchanged") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        const auto g = random_graph(40, 60, 500, rng);
        const auto sim = compute_similarity(g, 10);
        const auto view = node_replication(g, 0.3, 4, sim, rng);
        CHECK(view.graph.num_users() == g.num_users());
        CHECK(view.graph.num_items() == g.num_items());
        long net = 0;
        for (const auto& rep : view.replacements) {
            CHECK(rep.added <= rep.removed);
            CHECK((rep.node < g.num_users()) == (rep.donor < g.num_users()));
            net += static_cast<long>(rep.added) - static_cast<long>(rep.removed);
        }
        CHECK(static_cast<long>(view.graph.num_edges()) == static_cast<long>(g.num_edges()) + net);
    }
}

TEST_CASE("replication view: selection rate concentrates around rho") {
    std::mt19937_64 rng(2025);
    const auto g = random_graph(400, 600, 10000, rng);
    const auto sim = compute_similarity(g, 10);
    std::size_t eligible = 0;
    for (std::size_t p = 0; p < g.num_nodes(); ++p) eligible += g.degree(p) > 0;
    double frac = 0.0;
    for (int t = 0; t < 200; ++t)
        frac += static_cast<double>(node_replication(g, 0.1, 4, sim, rng).replacements.size()) / eligible;
    frac /= 200;
    CHECK(frac >= 0.08);
    CHECK(frac <= 0.12);
}

TEST_CASE("views are deterministic given the seed") {
    std::mt19937_64 gen(3);
    const auto g = random_graph(30, 40, 300, gen);
    const auto sim = compute_similarity(g, 10);
    for (const auto method : {AugmentMethod::NodeDrop, AugmentMethod::EdgeDrop, AugmentMethod::NodeReplication}) {
        AugmentationConfig c;
        c.method = method;
        std::mt19937_64 a(42), b(42);
        const auto va = augment(g, c, &sim, a);
        const auto vb = augment(g, c, &sim, b);
        CHECK(va.graph.edges() == vb.graph.edges());
        CHECK(va.dropped_nodes == vb.dropped_nodes);
        CHECK(va.dropped_edges == vb.dropped_edges);
    }
    AugmentationConfig nr;
    std::mt19937_64 r(1);
    CHECK_THROWS_AS(augment(g, nr, nullptr, r), ConfigError);
}
