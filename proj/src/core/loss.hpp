#pragma once

#include <span>
#include <vector>

#include "augment.hpp"
#include "common.hpp"

namespace scl {

// Which terms sit in the S-InfoNCE denominator: the dissimilar rows only, or
// every row other than the anchor (the SupCon-style alternative).
enum class Denominator { Negatives, All };

struct LossConfig {
    double tau = 0.2;
    double lambda_l2 = 1e-4;
    Denominator denominator = Denominator::Negatives;

    void validate() const;
};

template <class T>
struct BprResult {
    T loss{};
    std::vector<T> grad_pos;
    std::vector<T> grad_neg;
};

// mean_t softplus(-(pos_t - neg_t)) + lambda * params_sq_norm, with gradients
// with respect to each score.
template <class T>
BprResult<T> bpr_loss(std::span<const T> pos, std::span<const T> neg, T params_sq_norm, T lambda);

template <class T>
struct ContrastResult {
    T loss{};
    Matrix<T> grad;  // same shape as z
};

// Rows 2m and 2m+1 are the two views of anchor node m.
template <class T>
struct ContrastBatch {
    Matrix<T> z;
    BoolMatrix positive_mask;
    BoolMatrix valid_negative_mask;
};

// SimCLR InfoNCE over cosine similarity, averaged over all 2N ordered co-view pairs.
template <class T>
ContrastResult<T> info_nce(const Matrix<T>& z, T tau);

// Supervised InfoNCE: per row, -log(Σ_pos e^{s/τ} / Σ_den e^{s/τ}), averaged over rows.
template <class T>
ContrastResult<T> s_info_nce(const ContrastBatch<T>& batch, T tau, Denominator denominator = Denominator::Negatives);

struct ContrastMasks {
    BoolMatrix positive;
    BoolMatrix negative;
};

// Masks for a batch of same-side nodes laid out as interleaved view pairs.
// Two rows are positives when they are co-views or either node lists the
// other among its similar neighbors; every other off-diagonal pair is negative.
ContrastMasks build_contrast_masks(std::span<const NodeId> nodes,
                                   const std::vector<std::vector<Neighbor>>& side_neighbors);

// Co-view positives only (InfoNCE layout).
ContrastMasks co_view_masks(std::size_t num_anchors);

// Throws ShapeError unless the masks satisfy the ContrastBatch invariants.
void validate_masks(const BoolMatrix& positive, const BoolMatrix& negative);

}  // namespace scl
