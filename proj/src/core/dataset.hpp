#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "common.hpp"

namespace scl {

using Interaction = std::pair<NodeId, NodeId>;  // (user, item), dense 0-based

// User/item id spaces plus the train/test interaction sets. Interaction
// vectors are kept sorted by (user, item) and free of duplicates.
struct InteractionDataset {
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    std::vector<Interaction> train;
    std::vector<Interaction> test;
    // Original (file) ids indexed by dense id.
    std::vector<std::int64_t> user_ids;
    std::vector<std::int64_t> item_ids;

    std::size_t num_interactions() const { return train.size() + test.size(); }
    double density() const;
    // `users=<n> items=<n> train=<n> test=<n> density=<pct>%`
    std::string summary() const;
    // Per-user sorted item lists.
    std::vector<std::vector<NodeId>> train_items_by_user() const;
    std::vector<std::vector<NodeId>> test_items_by_user() const;
};

// Reads a `user \t item \t rating \t timestamp` log with 1-based ids. Every
// rated pair becomes one implicit interaction; duplicates collapse. Dense ids
// follow ascending original id. All interactions land in `train`.
InteractionDataset load_ml100k(const std::filesystem::path& path);

// Per-user holdout: max(1, floor(ratio * n_u)) interactions stay in train.
InteractionDataset split_train_test(const InteractionDataset& all, double ratio, std::uint64_t seed);

// Normalized bipartite adjacency Â = D^-1/2 A D^-1/2 over user ∥ item nodes,
// stored as CSR. Row p < num_users is a user; row num_users + i is item i.
class BipartiteGraph {
public:
    BipartiteGraph() = default;
    BipartiteGraph(std::size_t num_users, std::size_t num_items, std::vector<Interaction> edges);

    std::size_t num_users() const { return num_users_; }
    std::size_t num_items() const { return num_items_; }
    std::size_t num_nodes() const { return num_users_ + num_items_; }
    std::size_t num_edges() const { return edges_.size(); }
    std::size_t nnz() const { return col_idx_.size(); }

    // Sorted by (user, item), unique.
    const std::vector<Interaction>& edges() const { return edges_; }

    std::size_t degree(std::size_t node) const { return row_ptr_[node + 1] - row_ptr_[node]; }
    // Neighbors of a stacked node id, ascending; item neighbors are stacked ids.
    std::span<const std::uint32_t> neighbors(std::size_t node) const {
        return {col_idx_.data() + row_ptr_[node], degree(node)};
    }
    std::span<const std::size_t> row_ptr() const { return row_ptr_; }
    std::span<const std::uint32_t> col_idx() const { return col_idx_; }

    template <class T>
    std::span<const T> values() const {
        if constexpr (std::is_same_v<T, float>)
            return values_f32_;
        else
            return values_;
    }

    // Entry (p, q) of Â; zero when absent.
    double entry(std::size_t p, std::size_t q) const;

    // out = Â · in
    template <class T>
    void multiply(const Matrix<T>& in, Matrix<T>& out) const;

private:
    std::size_t num_users_ = 0;
    std::size_t num_items_ = 0;
    std::vector<Interaction> edges_;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::uint32_t> col_idx_;
    std::vector<double> values_;
    std::vector<float> values_f32_;
};

BipartiteGraph build_graph(std::span<const Interaction> train, std::size_t num_users, std::size_t num_items);

}  // namespace scl
