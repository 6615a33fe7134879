#include "augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "binary_io.hpp"

namespace scl {

namespace {

constexpr std::string_view kSimMagic{"SCLSIM1\0", 8};

bool coin(std::mt19937_64& rng, double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

void check_probability(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
}

// Top-N cosine neighbors for one side. `rows[a]` holds a's features, `cols[f]`
// the rows containing feature f.
std::vector<std::vector<Neighbor>> side_similarity(const std::vector<std::vector<NodeId>>& rows,
                                                   const std::vector<std::vector<NodeId>>& cols,
                                                   std::size_t top_n) {
    const std::size_t n = rows.size();
    std::vector<std::vector<Neighbor>> out(n);
    std::vector<std::uint32_t> counts(n, 0);
    std::vector<NodeId> touched;
    for (std::size_t a = 0; a < n; ++a) {
        if (rows[a].empty()) continue;
        touched.clear();
        for (const NodeId f : rows[a]) {
            for (const NodeId b : cols[f]) {
                if (b == a) continue;
                if (counts[b]++ == 0) touched.push_back(b);
            }
        }
        const double deg_a = static_cast<double>(rows[a].size());
        // Ordered by exact integer comparison of squared cosines, so equal
        // cosines tie regardless of rounding.
        struct Overlap {
            NodeId id;
            std::uint64_t common, degree;
        };
        std::vector<Overlap> overlaps;
        overlaps.reserve(touched.size());
        for (const NodeId b : touched) {
            overlaps.push_back({b, counts[b], rows[b].size()});
            counts[b] = 0;
        }
        const auto better = [](const Overlap& x, const Overlap& y) {
            const std::uint64_t lhs = x.common * x.common * y.degree, rhs = y.common * y.common * x.degree;
            return lhs != rhs ? lhs > rhs : x.id < y.id;
        };
        const std::size_t keep = std::min(top_n, overlaps.size());
        std::partial_sort(overlaps.begin(), overlaps.begin() + static_cast<std::ptrdiff_t>(keep), overlaps.end(),
                          better);
        std::vector<Neighbor> cand;
        cand.reserve(top_n);
        for (std::size_t j = 0; j < keep; ++j)
            cand.push_back({overlaps[j].id, static_cast<double>(overlaps[j].common) /
                                                std::sqrt(deg_a * static_cast<double>(overlaps[j].degree))});
        // Fill with zero-score nodes in id order when fewer than N overlap.
        if (cand.size() < top_n) {
            std::sort(touched.begin(), touched.end());
            for (NodeId b = 0; b < n && cand.size() < top_n; ++b) {
                if (b == a || rows[b].empty() || std::binary_search(touched.begin(), touched.end(), b))
                    continue;
                cand.push_back({b, 0.0});
            }
        }
        out[a] = std::move(cand);
    }
    return out;
}

void insert_sorted(std::vector<NodeId>& v, NodeId x) { v.insert(std::lower_bound(v.begin(), v.end(), x), x); }

void erase_sorted(std::vector<NodeId>& v, NodeId x) {
    const auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it != v.end() && *it == x) v.erase(it);
}

}  // namespace

std::string_view to_string(AugmentMethod m) {
    switch (m) {
        case AugmentMethod::NodeDrop: return "ND";
        case AugmentMethod::EdgeDrop: return "ED";
        case AugmentMethod::NodeReplication: return "NR";
    }
    return "?";
}

AugmentMethod parse_augment_method(std::string_view s) {
    if (s == "ND" || s == "nd") return AugmentMethod::NodeDrop;
    if (s == "ED" || s == "ed") return AugmentMethod::EdgeDrop;
    if (s == "NR" || s == "nr") return AugmentMethod::NodeReplication;
    throw ConfigError("unknown augmentation method '" + std::string(s) + "'");
}

void AugmentationConfig::validate() const {
    check_probability(rho1, "rho1");
    check_probability(rho2, "rho2");
    check_probability(rho3, "rho3");
    if (k_segments < 1) throw ConfigError("k_segments must be >= 1");
    if (top_n < 1) throw ConfigError("top_n must be >= 1");
}

SimilarityIndex compute_similarity(const BipartiteGraph& graph, std::size_t top_n) {
    if (graph.num_users() < 2 || graph.num_items() < 2)
        throw ShapeError("similarity needs at least two users and two items");
    if (top_n < 1) throw ConfigError("top_n must be >= 1");
    const EdgeLists lists(graph);
    SimilarityIndex index;
    index.top_n = top_n;
    index.user_neighbors = side_similarity(lists.user_items, lists.item_users, top_n);
    index.item_neighbors = side_similarity(lists.item_users, lists.user_items, top_n);
    return index;
}

void SimilarityIndex::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write similarity index: " + path.string());
    io::write_magic(out, kSimMagic);
    io::write_u32(out, static_cast<std::uint32_t>(user_neighbors.size()));
    io::write_u32(out, static_cast<std::uint32_t>(item_neighbors.size()));
    for (const auto* side : {&user_neighbors, &item_neighbors}) {
        for (const auto& list : *side) {
            io::write_u32(out, static_cast<std::uint32_t>(list.size()));
            for (const auto& nb : list) {
                io::write_u32(out, nb.id);
                io::write_f32(out, static_cast<float>(nb.score));
            }
        }
    }
    if (!out) throw IoError("write failed: " + path.string());
}

SimilarityIndex SimilarityIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open similarity index: " + path.string());
    io::expect_magic(in, kSimMagic);
    SimilarityIndex index;
    index.user_neighbors.resize(io::read_u32(in, "user count"));
    index.item_neighbors.resize(io::read_u32(in, "item count"));
    for (auto* side : {&index.user_neighbors, &index.item_neighbors}) {
        for (auto& list : *side) {
            const auto count = io::read_u32(in, "list length");
            list.reserve(count);
            for (std::uint32_t k = 0; k < count; ++k) {
                const auto id = io::read_u32(in, "neighbor id");
                list.push_back({id, static_cast<double>(io::read_f32(in, "neighbor score"))});
            }
            index.top_n = std::max(index.top_n, list.size());
        }
    }
    return index;
}

EdgeLists::EdgeLists(const BipartiteGraph& graph)
    : user_items(graph.num_users()), item_users(graph.num_items()) {
    for (const auto& [u, i] : graph.edges()) {
        user_items[u].push_back(i);
        item_users[i].push_back(u);
    }
}

std::vector<Interaction> EdgeLists::edges() const {
    std::vector<Interaction> out;
    for (std::size_t u = 0; u < user_items.size(); ++u)
        for (const NodeId i : user_items[u]) out.emplace_back(static_cast<NodeId>(u), i);
    return out;
}

Replacement replicate_node(EdgeLists& lists, std::uint32_t node, std::size_t k_segments, std::uint32_t segment,
                           std::uint32_t donor, std::mt19937_64& rng) {
    const std::size_t nu = lists.num_users();
    const bool user_side = node < nu;
    if ((donor < nu) != user_side) throw ShapeError("donor must be on the same side as the node");
    auto& own_lists = user_side ? lists.user_items : lists.item_users;
    auto& other_lists = user_side ? lists.item_users : lists.user_items;
    const NodeId self = user_side ? node : static_cast<NodeId>(node - nu);
    const NodeId donor_local = user_side ? donor : static_cast<NodeId>(donor - nu);

    const std::vector<NodeId> original = own_lists[self];
    const std::size_t deg = original.size();
    const std::size_t k = std::min(k_segments, deg);
    if (k == 0 || segment >= k) throw ShapeError("segment index out of range");

    // Near-equal contiguous segments; the first deg % k get one extra element.
    const std::size_t base = deg / k, extra = deg % k;
    const std::size_t begin = segment * base + std::min<std::size_t>(segment, extra);
    const std::size_t len = base + (segment < extra ? 1 : 0);

    for (std::size_t e = begin; e < begin + len; ++e) {
        erase_sorted(own_lists[self], original[e]);
        erase_sorted(other_lists[original[e]], self);
    }

    std::vector<NodeId> novel;
    const auto& donor_list = own_lists[donor_local];
    std::set_difference(donor_list.begin(), donor_list.end(), original.begin(), original.end(),
                        std::back_inserter(novel));
    const std::size_t take = std::min(len, novel.size());
    for (std::size_t t = 0; t < take; ++t) {
        const std::size_t pick = t + uniform_index(rng, novel.size() - t);
        std::swap(novel[t], novel[pick]);
        insert_sorted(own_lists[self], novel[t]);
        insert_sorted(other_lists[novel[t]], self);
    }
    return {node, segment, donor, static_cast<std::uint32_t>(len), static_cast<std::uint32_t>(take)};
}

AugmentedView node_drop(const BipartiteGraph& graph, double rho1, std::mt19937_64& rng) {
    check_probability(rho1, "rho1");
    AugmentedView view;
    view.method = AugmentMethod::NodeDrop;
    std::vector<char> dropped(graph.num_nodes(), 0);
    for (std::size_t p = 0; p < graph.num_nodes(); ++p) {
        if (coin(rng, rho1)) {
            dropped[p] = 1;
            view.dropped_nodes.push_back(static_cast<std::uint32_t>(p));
        }
    }
    const std::size_t nu = graph.num_users();
    std::vector<Interaction> kept;
    kept.reserve(graph.num_edges());
    for (const auto& [u, i] : graph.edges())
        if (!dropped[u] && !dropped[nu + i]) kept.emplace_back(u, i);
    view.graph = BipartiteGraph(nu, graph.num_items(), std::move(kept));
    return view;
}

AugmentedView edge_drop(const BipartiteGraph& graph, double rho2, std::mt19937_64& rng) {
    check_probability(rho2, "rho2");
    AugmentedView view;
    view.method = AugmentMethod::EdgeDrop;
    std::vector<Interaction> kept;
    kept.reserve(graph.num_edges());
    const auto& edges = graph.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (coin(rng, rho2))
            view.dropped_edges.push_back(static_cast<std::uint32_t>(e));
        else
            kept.push_back(edges[e]);
    }
    view.graph = BipartiteGraph(graph.num_users(), graph.num_items(), std::move(kept));
    return view;
}

AugmentedView node_replication(const BipartiteGraph& graph, double rho3, std::size_t k_segments,
                               const SimilarityIndex& sim, std::mt19937_64& rng) {
    check_probability(rho3, "rho3");
    if (k_segments < 1) throw ConfigError("k_segments must be >= 1");
    if (sim.user_neighbors.size() != graph.num_users() || sim.item_neighbors.size() != graph.num_items())
        throw ShapeError("similarity index was built on a different graph");

    AugmentedView view;
    view.method = AugmentMethod::NodeReplication;
    EdgeLists lists(graph);
    const std::size_t nu = graph.num_users();
    for (std::size_t p = 0; p < graph.num_nodes(); ++p) {
        if (!coin(rng, rho3)) continue;
        const bool user_side = p < nu;
        const std::size_t local = user_side ? p : p - nu;
        const auto& nbrs = user_side ? sim.user_neighbors[local] : sim.item_neighbors[local];
        const std::size_t deg = (user_side ? lists.user_items[local] : lists.item_users[local]).size();
        if (nbrs.empty() || deg == 0) continue;
        const std::size_t k = std::min(k_segments, deg);
        const auto segment = static_cast<std::uint32_t>(uniform_index(rng, k));
        const NodeId donor_local = nbrs[uniform_index(rng, nbrs.size())].id;
        const auto donor = static_cast<std::uint32_t>(user_side ? donor_local : donor_local + nu);
        view.replacements.push_back(
            replicate_node(lists, static_cast<std::uint32_t>(p), k_segments, segment, donor, rng));
    }
    view.graph = BipartiteGraph(nu, graph.num_items(), lists.edges());
    return view;
}

AugmentedView augment(const BipartiteGraph& graph, const AugmentationConfig& config, const SimilarityIndex* sim,
                      std::mt19937_64& rng) {
    switch (config.method) {
        case AugmentMethod::NodeDrop: return node_drop(graph, config.rho1, rng);
        case AugmentMethod::EdgeDrop: return edge_drop(graph, config.rho2, rng);
        case AugmentMethod::NodeReplication:
            if (!sim) throw ConfigError("node replication requires a similarity index");
            return node_replication(graph, config.rho3, config.k_segments, *sim, rng);
    }
    throw ConfigError("unknown augmentation method");
}

}  // namespace scl
