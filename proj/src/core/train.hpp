#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "augment.hpp"
#include "dataset.hpp"
#include "gcn.hpp"
#include "loss.hpp"
#include "metrics.hpp"

namespace scl {

using LogSink = std::function<void(const std::string&)>;

struct TrainConfig {
    double lr = 0.001;
    std::size_t batch_size = 1024;
    std::size_t pretrain_epochs = 200;
    std::size_t finetune_epochs = 400;
    std::uint64_t seed = 2022;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t eval_every = 10;
    std::size_t patience = 50;  // epochs without NDCG@10 improvement; 0 disables early stopping

    void validate() const;
};

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamConfig from(const TrainConfig& c) { return {c.lr, c.adam_beta1, c.adam_beta2, c.adam_eps}; }
};

template <class T>
struct AdamState {
    std::vector<T> m;
    std::vector<T> v;
    std::uint64_t step = 0;
};

// One bias-corrected Adam update. Throws NumericError naming `name` when a
// gradient entry is not finite; parameters are left untouched in that case.
template <class T>
void adam_step(std::string_view name, std::span<T> params, std::span<const T> grads, AdamState<T>& state,
               const AdamConfig& config);

// One side of a contrastive step: nodes are local ids on that side. With masks
// the step uses S-InfoNCE; without, plain InfoNCE.
struct SideBatch {
    bool user_side = true;
    std::vector<NodeId> nodes;
    std::optional<ContrastMasks> masks;
};

template <class T>
struct ContrastGrads {
    Matrix<T> table;
    ProjectionHead<T> head;
};

// Contrastive loss of one optimization step summed over the given sides:
// propagate E(0) through both views, gather and interleave the batch rows,
// project, and apply the loss. Fills `grads` with d loss / d E(0) and d loss /
// d head when non-null.
template <class T>
T contrastive_objective(const EmbeddingState<T>& state, const ProjectionHead<T>& head, const BipartiteGraph& view_a,
                        const BipartiteGraph& view_b, std::span<const SideBatch> sides, const LossConfig& loss,
                        ContrastGrads<T>* grads);

enum class ContrastObjective { Supervised, SelfSupervised };

struct PretrainResult {
    std::vector<double> loss_curve;  // epoch means
    std::size_t skipped_batches = 0;
};

template <class T>
PretrainResult pretrain(const BipartiteGraph& train_graph, const SimilarityIndex* sim, const AugmentationConfig& aug,
                        EmbeddingState<T>& state, ProjectionHead<T>& head, const LossConfig& loss,
                        const TrainConfig& config, ContrastObjective objective, const LogSink& log = {});

struct Triple {
    NodeId user, pos, neg;
};

// One uniform non-interacted item per training interaction, shuffled. Users
// who interacted with every item contribute nothing.
std::vector<Triple> sample_triples(const InteractionDataset& dataset,
                                   const std::vector<std::vector<NodeId>>& train_items, std::mt19937_64& rng);

// Mean BPR loss of one batch plus lambda times half the mean squared norm of
// the layer-0 rows it touches. Fills the gradient with respect to E(0).
template <class T>
T bpr_objective(const EmbeddingState<T>& state, const BipartiteGraph& graph, std::span<const Triple> batch,
                double lambda_l2, Matrix<T>* grad_table);

struct FinetuneResult {
    std::vector<double> loss_curve;
    std::vector<std::pair<std::size_t, double>> ndcg10_history;  // (epoch, NDCG@10)
    std::size_t best_epoch = 0;
    RankingReport report;  // of the restored best state
};

// BPR fine-tuning on the full training graph. The state ends at the best
// evaluated epoch.
template <class T>
FinetuneResult finetune(const InteractionDataset& dataset, const BipartiteGraph& train_graph,
                        EmbeddingState<T>& state, const LossConfig& loss, const TrainConfig& config,
                        const LogSink& log = {});

}  // namespace scl
