#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dataset.hpp"

namespace scl {

enum class AugmentMethod { NodeDrop, EdgeDrop, NodeReplication };

std::string_view to_string(AugmentMethod m);
AugmentMethod parse_augment_method(std::string_view s);

struct AugmentationConfig {
    double rho1 = 0.1;  // node drop
    double rho2 = 0.1;  // edge drop
    double rho3 = 0.1;  // node replication
    std::size_t k_segments = 4;
    std::size_t top_n = 10;
    AugmentMethod method = AugmentMethod::NodeReplication;

    void validate() const;
};

struct Neighbor {
    NodeId id;
    double score;
    bool operator==(const Neighbor&) const = default;
};

// Per-node top-N same-side neighbors by cosine of binary interaction rows,
// sorted by score descending then id ascending. Never lists the node itself.
struct SimilarityIndex {
    std::vector<std::vector<Neighbor>> user_neighbors;
    std::vector<std::vector<Neighbor>> item_neighbors;
    std::size_t top_n = 0;

    // Binary layout: "SCLSIM1\0", num_users u32, num_items u32, then for each
    // user and then each item: count u32 followed by (id u32, score f32) pairs.
    // All little-endian.
    void save(const std::filesystem::path& path) const;
    static SimilarityIndex load(const std::filesystem::path& path);
};

SimilarityIndex compute_similarity(const BipartiteGraph& graph, std::size_t top_n);

// One node-replication edit: `node` is a stacked id (items offset by num_users).
struct Replacement {
    std::uint32_t node;
    std::uint32_t segment;
    std::uint32_t donor;
    std::uint32_t removed;
    std::uint32_t added;
};

// Mutable adjacency used while editing a view. Lists stay sorted.
struct EdgeLists {
    std::vector<std::vector<NodeId>> user_items;
    std::vector<std::vector<NodeId>> item_users;

    explicit EdgeLists(const BipartiteGraph& graph);
    std::size_t num_users() const { return user_items.size(); }
    std::vector<Interaction> edges() const;
};

// Replaces segment `segment` (of min(k_segments, degree) contiguous segments
// over the node's counterpart-sorted list) with up to |segment| edges sampled
// from `donor`'s interactions that the node did not already have. `node` and
// `donor` are stacked ids on the same side.
Replacement replicate_node(EdgeLists& lists, std::uint32_t node, std::size_t k_segments,
                           std::uint32_t segment, std::uint32_t donor, std::mt19937_64& rng);

struct AugmentedView {
    BipartiteGraph graph;
    AugmentMethod method{};
    std::vector<std::uint32_t> dropped_nodes;   // stacked ids, ascending
    std::vector<std::uint32_t> dropped_edges;   // indices into the source edge list, ascending
    std::vector<Replacement> replacements;      // in application order
};

AugmentedView node_drop(const BipartiteGraph& graph, double rho1, std::mt19937_64& rng);
AugmentedView edge_drop(const BipartiteGraph& graph, double rho2, std::mt19937_64& rng);
AugmentedView node_replication(const BipartiteGraph& graph, double rho3, std::size_t k_segments,
                               const SimilarityIndex& sim, std::mt19937_64& rng);

// Dispatches on config.method; `sim` is only read for node replication.
AugmentedView augment(const BipartiteGraph& graph, const AugmentationConfig& config,
                      const SimilarityIndex* sim, std::mt19937_64& rng);

}  // namespace scl
