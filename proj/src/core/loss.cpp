#include "loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

namespace scl {

namespace {

template <class T>
T softplus(T x) {
    return std::max(x, T(0)) + std::log1p(std::exp(-std::abs(x)));
}

template <class T>
T sigmoid(T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
}

template <class T>
Matrix<T> normalize_rows(const Matrix<T>& z, Vector<T>& norms) {
    norms = z.rowwise().norm();
    for (Eigen::Index r = 0; r < z.rows(); ++r)
        if (!(norms(r) > T(0)))
            throw NumericError("row " + std::to_string(r) + " has zero norm; cosine similarity is undefined");
    return norms.cwiseInverse().asDiagonal() * z;
}

// Shared core: logits S = cos/τ; per row i, loss_i = lse_{D(i)} S - lse_{P(i)} S.
template <class T>
ContrastResult<T> masked_contrast(const Matrix<T>& z, const BoolMatrix& positive, const BoolMatrix& negative,
                                  T tau, Denominator denominator) {
    if (!(tau > T(0))) throw ConfigError("temperature must be positive");
    const Eigen::Index rows = z.rows();
    if (positive.rows() != rows || positive.cols() != rows || negative.rows() != rows || negative.cols() != rows)
        throw ShapeError("mask shape does not match batch");

    Vector<T> norms;
    const Matrix<T> n = normalize_rows(z, norms);
    const Matrix<T> logits = (n * n.transpose()) / tau;

    Matrix<T> g = Matrix<T>::Zero(rows, rows);  // dLoss/dlogits
    T total = 0;
    std::vector<T> w(static_cast<std::size_t>(rows));
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto in_den = [&](Eigen::Index k) {
            return k != i && (denominator == Denominator::All ? true : static_cast<bool>(negative(i, k)));
        };
        T row_max = -std::numeric_limits<T>::infinity();
        bool has_pos = false, has_den = false;
        for (Eigen::Index k = 0; k < rows; ++k) {
            const bool p = positive(i, k), d = in_den(k);
            has_pos |= p;
            has_den |= d;
            if (p || d) row_max = std::max(row_max, logits(i, k));
        }
        if (!has_pos) throw NumericError("anchor row " + std::to_string(i) + " has no positives");
        if (!has_den) throw NumericError("anchor row " + std::to_string(i) + " has an empty denominator");

        T sum_pos = 0, sum_den = 0;
        for (Eigen::Index k = 0; k < rows; ++k) {
            const bool p = positive(i, k), d = in_den(k);
            w[static_cast<std::size_t>(k)] = (p || d) ? std::exp(logits(i, k) - row_max) : T(0);
            if (p) sum_pos += w[static_cast<std::size_t>(k)];
            if (d) sum_den += w[static_cast<std::size_t>(k)];
        }
        total += std::log(sum_den) - std::log(sum_pos);
        for (Eigen::Index k = 0; k < rows; ++k) {
            const T wk = w[static_cast<std::size_t>(k)];
            if (wk == T(0)) continue;
            T gk = 0;
            if (in_den(k)) gk += wk / sum_den;
            if (positive(i, k)) gk -= wk / sum_pos;
            g(i, k) = gk;
        }
    }
    const T scale = T(1) / static_cast<T>(rows);
    g *= scale;

    // logits = n nᵀ / τ  =>  dn = (G + Gᵀ) n / τ
    const Matrix<T> grad_n = ((g + g.transpose()) * n) / tau;
    Matrix<T> grad(rows, z.cols());
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto nr = n.row(r);
        grad.row(r) = (grad_n.row(r) - nr * nr.dot(grad_n.row(r))) / norms(r);
    }
    return {total * scale, std::move(grad)};
}

}  // namespace

void LossConfig::validate() const {
    if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
    if (!(lambda_l2 >= 0.0)) throw ConfigError("lambda_l2 must be >= 0");
}

template <class T>
BprResult<T> bpr_loss(std::span<const T> pos, std::span<const T> neg, T params_sq_norm, T lambda) {
    if (pos.size() != neg.size()) throw ShapeError("bpr_loss: positive and negative score counts differ");
    BprResult<T> r;
    r.grad_pos.resize(pos.size());
    r.grad_neg.resize(pos.size());
    T sum = 0;
    const T inv = pos.empty() ? T(0) : T(1) / static_cast<T>(pos.size());
    for (std::size_t t = 0; t < pos.size(); ++t) {
        const T margin = pos[t] - neg[t];
        sum += softplus(-margin);
        const T g = -sigmoid(-margin) * inv;
        r.grad_pos[t] = g;
        r.grad_neg[t] = -g;
    }
    r.loss = sum * inv + lambda * params_sq_norm;
    return r;
}

template <class T>
ContrastResult<T> info_nce(const Matrix<T>& z, T tau) {
    if (z.rows() < 2 || z.rows() % 2 != 0) throw ShapeError("info_nce expects 2N rows with N >= 1");
    const auto masks = co_view_masks(static_cast<std::size_t>(z.rows() / 2));
    return masked_contrast(z, masks.positive, masks.negative, tau, Denominator::All);
}

template <class T>
ContrastResult<T> s_info_nce(const ContrastBatch<T>& batch, T tau, Denominator denominator) {
    validate_masks(batch.positive_mask, batch.valid_negative_mask);
    return masked_contrast(batch.z, batch.positive_mask, batch.valid_negative_mask, tau, denominator);
}

ContrastMasks co_view_masks(std::size_t num_anchors) {
    const auto rows = static_cast<Eigen::Index>(2 * num_anchors);
    ContrastMasks m{BoolMatrix::Constant(rows, rows, false), BoolMatrix::Constant(rows, rows, true)};
    for (Eigen::Index i = 0; i < rows; ++i) {
        m.positive(i, i ^ 1) = true;
        m.negative(i, i ^ 1) = false;
        m.negative(i, i) = false;
    }
    return m;
}

ContrastMasks build_contrast_masks(std::span<const NodeId> nodes,
                                   const std::vector<std::vector<Neighbor>>& side_neighbors) {
    ContrastMasks m = co_view_masks(nodes.size());
    std::unordered_map<NodeId, Eigen::Index> slot;
    slot.reserve(nodes.size());
    for (std::size_t a = 0; a < nodes.size(); ++a) slot.emplace(nodes[a], static_cast<Eigen::Index>(a));
    for (std::size_t a = 0; a < nodes.size(); ++a) {
        if (nodes[a] >= side_neighbors.size()) throw ShapeError("batch node outside the similarity index");
        for (const auto& nb : side_neighbors[nodes[a]]) {
            const auto it = slot.find(nb.id);
            if (it == slot.end() || it->second == static_cast<Eigen::Index>(a)) continue;
            const Eigen::Index ra = 2 * static_cast<Eigen::Index>(a), rb = 2 * it->second;
            for (Eigen::Index va = 0; va < 2; ++va) {
                for (Eigen::Index vb = 0; vb < 2; ++vb) {
                    m.positive(ra + va, rb + vb) = m.positive(rb + vb, ra + va) = true;
                    m.negative(ra + va, rb + vb) = m.negative(rb + vb, ra + va) = false;
                }
            }
        }
    }
    return m;
}

void validate_masks(const BoolMatrix& positive, const BoolMatrix& negative) {
    const Eigen::Index rows = positive.rows();
    if (positive.cols() != rows || negative.rows() != rows || negative.cols() != rows)
        throw ShapeError("contrast masks must be square and equally sized");
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (positive(i, i) || negative(i, i)) throw ShapeError("contrast mask diagonal must be false");
        for (Eigen::Index j = 0; j < rows; ++j) {
            if (i == j) continue;
            if (positive(i, j) == negative(i, j))
                throw ShapeError("contrast masks must partition off-diagonal pairs");
            if (positive(i, j) != positive(j, i)) throw ShapeError("positive mask must be symmetric");
        }
    }
}

#define SCL_INSTANTIATE_LOSS(T)                                                                       \
    template BprResult<T> bpr_loss<T>(std::span<const T>, std::span<const T>, T, T);                  \
    template ContrastResult<T> info_nce<T>(const Matrix<T>&, T);                                      \
    template ContrastResult<T> s_info_nce<T>(const ContrastBatch<T>&, T, Denominator);

SCL_INSTANTIATE_LOSS(float)
SCL_INSTANTIATE_LOSS(double)

#undef SCL_INSTANTIATE_LOSS

}  // namespace scl
