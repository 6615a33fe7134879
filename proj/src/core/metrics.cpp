#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "parallel.hpp"

namespace scl {

namespace {

bool contains(std::span<const NodeId> sorted, NodeId x) { return std::binary_search(sorted.begin(), sorted.end(), x); }

std::string percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
    return buf;
}

}  // namespace

std::vector<NodeId> rank_scores(std::span<const float> scores, std::span<const NodeId> exclusions,
                                std::size_t limit) {
    std::vector<NodeId> sorted_excl(exclusions.begin(), exclusions.end());
    std::sort(sorted_excl.begin(), sorted_excl.end());
    std::vector<NodeId> items;
    items.reserve(scores.size());
    for (NodeId i = 0; i < scores.size(); ++i)
        if (!contains(sorted_excl, i)) items.push_back(i);
    const auto before = [&](NodeId a, NodeId b) { return scores[a] != scores[b] ? scores[a] > scores[b] : a < b; };
    const std::size_t keep = limit == 0 ? items.size() : std::min(limit, items.size());
    std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(keep), items.end(), before);
    items.resize(keep);
    return items;
}

template <class T>
std::vector<NodeId> rank_items(const PropagatedEmbeddings<T>& model, NodeId user,
                               std::span<const NodeId> train_exclusions, std::size_t limit) {
    const Vector<T> scores = model.items() * model.users().row(user).transpose();
    const Vector<float> f = scores.template cast<float>();
    return rank_scores({f.data(), static_cast<std::size_t>(f.size())}, train_exclusions, limit);
}

double ndcg_at_k(std::span<const NodeId> ranked, std::span<const NodeId> relevant, std::size_t k) {
    if (k < 1) throw ConfigError("cutoff k must be >= 1");
    if (relevant.empty()) return 0.0;
    double dcg = 0.0;
    for (std::size_t r = 0; r < std::min(k, ranked.size()); ++r)
        if (contains(relevant, ranked[r])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    double idcg = 0.0;
    for (std::size_t r = 0; r < std::min(k, relevant.size()); ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    return dcg / idcg;
}

double mrr_at_k(std::span<const NodeId> ranked, std::span<const NodeId> relevant, std::size_t k) {
    if (k < 1) throw ConfigError("cutoff k must be >= 1");
    for (std::size_t r = 0; r < std::min(k, ranked.size()); ++r)
        if (contains(relevant, ranked[r])) return 1.0 / static_cast<double>(r + 1);
    return 0.0;
}

double map_at_k(std::span<const NodeId> ranked, std::span<const NodeId> relevant, std::size_t k) {
    if (k < 1) throw ConfigError("cutoff k must be >= 1");
    if (relevant.empty()) return 0.0;
    double hits = 0.0, sum = 0.0;
    for (std::size_t r = 0; r < std::min(k, ranked.size()); ++r) {
        if (contains(relevant, ranked[r])) {
            hits += 1.0;
            sum += hits / static_cast<double>(r + 1);
        }
    }
    return sum / static_cast<double>(std::min(k, relevant.size()));
}

template <class T>
RankingReport evaluate(const PropagatedEmbeddings<T>& model, const InteractionDataset& dataset,
                       std::span<const std::size_t> cutoffs) {
    if (cutoffs.empty()) throw ConfigError("no cutoffs requested");
    const std::size_t max_k = *std::max_element(cutoffs.begin(), cutoffs.end());
    const auto train = dataset.train_items_by_user();
    const auto test = dataset.test_items_by_user();

    const Matrix<float> users = model.users().template cast<float>();
    const Matrix<float> items = model.items().template cast<float>();

    // Per-user rows [map..., mrr..., ndcg...]; reduced afterwards in user order.
    const std::size_t nk = cutoffs.size();
    Matrix<double> per_user = Matrix<double>::Zero(static_cast<Eigen::Index>(dataset.num_users),
                                                   static_cast<Eigen::Index>(3 * nk));
    parallel_for(
        dataset.num_users,
        [&](std::size_t begin, std::size_t end) {
            Vector<float> scores;
            for (std::size_t u = begin; u < end; ++u) {
                if (test[u].empty()) continue;
                scores.noalias() = items * users.row(static_cast<Eigen::Index>(u)).transpose();
                const auto ranked = rank_scores({scores.data(), static_cast<std::size_t>(scores.size())}, train[u], max_k);
                for (std::size_t c = 0; c < nk; ++c) {
                    const auto row = static_cast<Eigen::Index>(u);
                    per_user(row, static_cast<Eigen::Index>(c)) = map_at_k(ranked, test[u], cutoffs[c]);
                    per_user(row, static_cast<Eigen::Index>(nk + c)) = mrr_at_k(ranked, test[u], cutoffs[c]);
                    per_user(row, static_cast<Eigen::Index>(2 * nk + c)) = ndcg_at_k(ranked, test[u], cutoffs[c]);
                }
            }
        },
        16);

    RankingReport report;
    std::vector<double> sums(3 * nk, 0.0);
    for (std::size_t u = 0; u < dataset.num_users; ++u) {
        if (test[u].empty()) continue;
        ++report.evaluated_users;
        for (std::size_t c = 0; c < 3 * nk; ++c) sums[c] += per_user(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(c));
    }
    if (report.evaluated_users == 0) throw Error("no users with test interactions to evaluate");
    const double n = static_cast<double>(report.evaluated_users);
    for (std::size_t c = 0; c < nk; ++c) {
        report.map[cutoffs[c]] = sums[c] / n;
        report.mrr[cutoffs[c]] = sums[nk + c] / n;
        report.ndcg[cutoffs[c]] = sums[2 * nk + c] / n;
    }
    return report;
}

std::string report_csv_header(std::span<const std::size_t> cutoffs) {
    std::string s = "method";
    for (const char* name : {"MAP", "MRR", "NDCG"})
        for (const auto k : cutoffs) s += "," + std::string(name) + "@" + std::to_string(k);
    return s;
}

std::string report_csv_row(const std::string& method, const RankingReport& report,
                           std::span<const std::size_t> cutoffs) {
    std::string s = method;
    for (const auto* metric : {&report.map, &report.mrr, &report.ndcg})
        for (const auto k : cutoffs) s += "," + percent(metric->at(k));
    return s;
}

template std::vector<NodeId> rank_items<float>(const PropagatedEmbeddings<float>&, NodeId, std::span<const NodeId>,
                                               std::size_t);
template std::vector<NodeId> rank_items<double>(const PropagatedEmbeddings<double>&, NodeId, std::span<const NodeId>,
                                                std::size_t);
template RankingReport evaluate<float>(const PropagatedEmbeddings<float>&, const InteractionDataset&,
                                       std::span<const std::size_t>);
template RankingReport evaluate<double>(const PropagatedEmbeddings<double>&, const InteractionDataset&,
                                        std::span<const std::size_t>);

}  // namespace scl
