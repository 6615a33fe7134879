#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "common.hpp"
#include "dataset.hpp"

namespace scl {

// Layer-0 ID embeddings, users stacked above items in one table so the
// propagation operator and the optimizer see a single parameter block.
template <class T>
struct EmbeddingState {
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    std::size_t dim = 0;
    std::size_t layers = 3;
    Matrix<T> table;

    auto users() { return table.topRows(static_cast<Eigen::Index>(num_users)); }
    auto users() const { return table.topRows(static_cast<Eigen::Index>(num_users)); }
    auto items() { return table.bottomRows(static_cast<Eigen::Index>(num_items)); }
    auto items() const { return table.bottomRows(static_cast<Eigen::Index>(num_items)); }
};

// Two-layer MLP z = w2ᵀ relu(w1ᵀ h + b1) + b2. Also used as the gradient
// container for itself.
template <class T>
struct ProjectionHead {
    Matrix<T> w1;  // d x d_h
    Vector<T> b1;  // d_h
    Matrix<T> w2;  // d_h x d_p
    Vector<T> b2;  // d_p

    std::size_t input_dim() const { return static_cast<std::size_t>(w1.rows()); }
    std::size_t hidden_dim() const { return static_cast<std::size_t>(w1.cols()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(w2.cols()); }
    void set_zero_like(const ProjectionHead& other);
};

template <class T>
struct PropagatedEmbeddings {
    std::size_t num_users = 0;
    Matrix<T> final;                // uniform mean of layers 0..L, stacked
    std::vector<Matrix<T>> layers;  // E(0)..E(L), only when retained

    auto users() const { return final.topRows(static_cast<Eigen::Index>(num_users)); }
    auto items() const { return final.bottomRows(final.rows() - static_cast<Eigen::Index>(num_users)); }
};

// Entries i.i.d. normal with mean 0 and standard deviation 0.1.
template <class T>
EmbeddingState<T> init_embeddings(std::size_t num_users, std::size_t num_items, std::size_t dim,
                                  std::size_t layers, std::uint64_t seed);

// Glorot-uniform weights, zero biases.
template <class T>
ProjectionHead<T> init_projection_head(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                                       std::uint64_t seed);

// (1/(L+1)) Σ_l Â^l x. Â is symmetric, so this operator is its own adjoint and
// also maps a gradient on the final embeddings back onto layer 0.
template <class T>
Matrix<T> layer_mean(const BipartiteGraph& graph, const Matrix<T>& x, std::size_t layers,
                     std::vector<Matrix<T>>* retained = nullptr);

template <class T>
PropagatedEmbeddings<T> propagate(const EmbeddingState<T>& state, const BipartiteGraph& graph,
                                  bool retain_layers = false);

template <class T>
Vector<T> project(const Vector<T>& h, const ProjectionHead<T>& head);

// Row-batched projection. `hidden_pre` receives w1ᵀh + b1 per row for backward.
template <class T>
Matrix<T> project_rows(const Matrix<T>& h, const ProjectionHead<T>& head, Matrix<T>* hidden_pre = nullptr);

// Backward through project_rows. Accumulates parameter gradients into `grads`
// and returns the gradient with respect to `h`.
template <class T>
Matrix<T> project_rows_backward(const Matrix<T>& h, const Matrix<T>& hidden_pre, const Matrix<T>& grad_z,
                                const ProjectionHead<T>& head, ProjectionHead<T>& grads);

template <class T>
T predict(const Vector<T>& u, const Vector<T>& v);

// Checkpoint layout, little-endian: "SCLCKPT1", num_users, num_items, d, L as
// u32, user rows then item rows as f32. If a projection head is present it
// follows as input_dim, hidden_dim, output_dim (u32) and w1, b1, w2, b2 (f32).
struct Checkpoint {
    EmbeddingState<float> state;
    std::optional<ProjectionHead<float>> head;
};

template <class T>
void save_checkpoint(const std::filesystem::path& path, const EmbeddingState<T>& state,
                     const ProjectionHead<T>* head = nullptr);

Checkpoint load_checkpoint(const std::filesystem::path& path);

template <class To, class From>
EmbeddingState<To> cast_state(const EmbeddingState<From>& s) {
    return {s.num_users, s.num_items, s.dim, s.layers, s.table.template cast<To>()};
}

template <class To, class From>
ProjectionHead<To> cast_head(const ProjectionHead<From>& h) {
    return {h.w1.template cast<To>(), h.b1.template cast<To>(), h.w2.template cast<To>(), h.b2.template cast<To>()};
}

}  // namespace scl
