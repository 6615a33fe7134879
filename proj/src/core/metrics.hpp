#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "gcn.hpp"

namespace scl {

inline constexpr std::size_t kDefaultCutoffs[] = {3, 5, 10};

// Means over evaluated users, each in [0, 1].
struct RankingReport {
    std::map<std::size_t, double> map;
    std::map<std::size_t, double> mrr;
    std::map<std::size_t, double> ndcg;
    std::size_t evaluated_users = 0;
};

// Items sorted by descending score, ties by ascending id, training items
// removed. `limit` truncates the result (0 keeps every item).
std::vector<NodeId> rank_scores(std::span<const float> scores, std::span<const NodeId> exclusions,
                                std::size_t limit = 0);

template <class T>
std::vector<NodeId> rank_items(const PropagatedEmbeddings<T>& model, NodeId user,
                               std::span<const NodeId> train_exclusions, std::size_t limit = 0);

// `relevant` must be sorted ascending.
double ndcg_at_k(std::span<const NodeId> ranked, std::span<const NodeId> relevant, std::size_t k);
double mrr_at_k(std::span<const NodeId> ranked, std::span<const NodeId> relevant, std::size_t k);
double map_at_k(std::span<const NodeId> ranked, std::span<const NodeId> relevant, std::size_t k);

template <class T>
RankingReport evaluate(const PropagatedEmbeddings<T>& model, const InteractionDataset& dataset,
                       std::span<const std::size_t> cutoffs = kDefaultCutoffs);

// `method,MAP@3,MAP@5,MAP@10,MRR@3,MRR@5,MRR@10,NDCG@3,NDCG@5,NDCG@10`
std::string report_csv_header(std::span<const std::size_t> cutoffs = kDefaultCutoffs);
// One row of percentages with two decimals.
std::string report_csv_row(const std::string& method, const RankingReport& report,
                           std::span<const std::size_t> cutoffs = kDefaultCutoffs);

}  // namespace scl
