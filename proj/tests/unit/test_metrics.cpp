#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "metrics.hpp"
#include "oracles.hpp"

using namespace scl;

TEST_CASE("ranking: order, exclusion and ties") {
    const std::vector<float> s{0.9f, 0.1f};
    CHECK(rank_scores(s, {}) == std::vector<NodeId>{0, 1});
    const std::vector<NodeId> excl{0};
    CHECK(rank_scores(s, excl) == std::vector<NodeId>{1});
    const std::vector<float> tie{0.5f, 0.7f, 0.5f, 0.5f};
    CHECK(rank_scores(tie, {}) == std::vector<NodeId>{1, 0, 2, 3});
    CHECK(rank_scores(tie, {}, 2) == std::vector<NodeId>{1, 0});
}

TEST_CASE("ranking: rank_items scores by inner product") {
    PropagatedEmbeddings<double> m;
    m.num_users = 1;
    m.final.resize(4, 2);
    m.final << 1, 0,   // user
        0.2, 5,        // item0
        0.9, 0,        // item1
        0.5, -1;       // item2
    const std::vector<NodeId> excl{1};
    CHECK(rank_items(m, 0, {}) == std::vector<NodeId>{1, 2, 0});
    CHECK(rank_items(m, 0, excl) == std::vector<NodeId>{2, 0});
}

TEST_CASE("metric hand values") {
    const std::vector<NodeId> r{4, 7, 1, 2};
    const std::vector<NodeId> first{4}, second{7}, none{9}, fifth{2};
    CHECK(ndcg_at_k(r, first, 3) == 1.0);
    CHECK(ndcg_at_k(r, second, 3) == doctest::Approx(0.630930).epsilon(1e-6));
    CHECK(ndcg_at_k(r, none, 3) == 0.0);
    CHECK(mrr_at_k(r, first, 3) == 1.0);
    CHECK(mrr_at_k(r, second, 3) == 0.5);
    CHECK(mrr_at_k(r, fifth, 3) == 0.0);
    const std::vector<NodeId> all{1, 4, 7};
    CHECK(map_at_k(r, all, 3) == 1.0);
    CHECK(map_at_k(r, second, 3) == 0.5);
    CHECK_THROWS_AS(ndcg_at_k(r, first, 0), ConfigError);
}

TEST_CASE("metrics agree with brute force on 1000 random cases") {
    std::mt19937_64 rng(10);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 1 + rng() % 10;
        std::vector<NodeId> ranked(n);
        std::iota(ranked.begin(), ranked.end(), 0);
        std::shuffle(ranked.begin(), ranked.end(), rng);
        std::vector<NodeId> rel;
        for (NodeId i = 0; i < 12; ++i)
            if (rng() % 3 == 0) rel.push_back(i);
        if (rel.empty()) rel.push_back(static_cast<NodeId>(rng() % 12));
        const std::size_t k = 1 + rng() % 12;
        const auto want = oracle::brute_metrics(ranked, rel, k);
        REQUIRE(ndcg_at_k(ranked, rel, k) == want.ndcg);
        REQUIRE(mrr_at_k(ranked, rel, k) == want.mrr);
        REQUIRE(map_at_k(ranked, rel, k) == want.map);
    }
}

TEST_CASE("metric identities") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 2 + rng() % 15;
        std::vector<NodeId> ranked(n);
        std::iota(ranked.begin(), ranked.end(), 0);
        std::shuffle(ranked.begin(), ranked.end(), rng);
        std::vector<NodeId> rel;
        for (NodeId i = 0; i < n; ++i)
            if (rng() % 4 == 0) rel.push_back(i);
        if (rel.empty()) continue;
        double prev_mrr = 0.0;
        for (std::size_t k = 1; k <= n; ++k) {
            for (const double v : {ndcg_at_k(ranked, rel, k), mrr_at_k(ranked, rel, k), map_at_k(ranked, rel, k)}) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0 + 1e-12);
            }
            CHECK(mrr_at_k(ranked, rel, k) >= prev_mrr);
            prev_mrr = mrr_at_k(ranked, rel, k);
        }
        // Perfect ranking: relevant items first.
        std::vector<NodeId> perfect = rel;
        for (const auto x : ranked)
            if (!std::binary_search(rel.begin(), rel.end(), x)) perfect.push_back(x);
        for (std::size_t k = rel.size(); k <= n; ++k) CHECK(ndcg_at_k(perfect, rel, k) == doctest::Approx(1.0).epsilon(1e-15));
    }
}

namespace {

InteractionDataset toy_dataset(std::mt19937_64& rng, std::size_t nu, std::size_t ni) {
    InteractionDataset ds;
    ds.num_users = nu;
    ds.num_items = ni;
    for (NodeId u = 0; u < nu; ++u)
        for (NodeId i = 0; i < ni; ++i) {
            const auto r = rng() % 6;
            if (r == 0) ds.train.emplace_back(u, i);
            if (r == 1) ds.test.emplace_back(u, i);
        }
    return ds;
}

}  // namespace

TEST_CASE("evaluate: matches per-user brute force and is affine invariant") {
    std::mt19937_64 rng(12);
    const auto ds = toy_dataset(rng, 30, 25);
    PropagatedEmbeddings<double> m;
    m.num_users = 30;
    // Quarter-integers keep every dot product exact in float and double.
    m.final.resize(55, 4);
    for (Eigen::Index i = 0; i < m.final.size(); ++i) m.final.data()[i] = static_cast<double>(rng() % 17) / 4.0 - 2.0;
    const auto rep = evaluate(m, ds);

    const auto tr = ds.train_items_by_user(), te = ds.test_items_by_user();
    std::size_t users = 0;
    double ndcg10 = 0.0, map5 = 0.0, mrr3 = 0.0;
    for (NodeId u = 0; u < 30; ++u) {
        if (te[u].empty()) continue;
        ++users;
        std::vector<std::pair<double, NodeId>> scored;
        for (NodeId i = 0; i < 25; ++i)
            if (!std::binary_search(tr[u].begin(), tr[u].end(), i))
                scored.emplace_back(-m.users().row(u).dot(m.items().row(i)), i);
        std::sort(scored.begin(), scored.end());
        std::vector<NodeId> ranked;
        for (const auto& [s, i] : scored) ranked.push_back(i);
        ndcg10 += oracle::brute_metrics(ranked, te[u], 10).ndcg;
        map5 += oracle::brute_metrics(ranked, te[u], 5).map;
        mrr3 += oracle::brute_metrics(ranked, te[u], 3).mrr;
    }
    CHECK(rep.evaluated_users == users);
    CHECK(rep.ndcg.at(10) == doctest::Approx(ndcg10 / users).epsilon(1e-12));
    CHECK(rep.map.at(5) == doctest::Approx(map5 / users).epsilon(1e-12));
    CHECK(rep.mrr.at(3) == doctest::Approx(mrr3 / users).epsilon(1e-12));

    // Scaling user rows by a power of two scales every score exactly.
    PropagatedEmbeddings<double> scaled = m;
    scaled.final.topRows(30) *= 4.0;
    const auto rep2 = evaluate(scaled, ds);
    for (const std::size_t k : kDefaultCutoffs) {
        CHECK(rep2.ndcg.at(k) == rep.ndcg.at(k));
        CHECK(rep2.map.at(k) == rep.map.at(k));
        CHECK(rep2.mrr.at(k) == rep.mrr.at(k));
    }
}

TEST_CASE("evaluate: affine score transform leaves rankings unchanged") {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 50; ++t) {
        std::vector<float> scores(30);
        for (auto& s : scores) s = static_cast<float>(rng() % 1000) / 64.0f;  // exact in float, ties likely
        std::vector<float> moved(scores);
        for (auto& s : moved) s = 2.0f * s + 8.0f;
        std::vector<NodeId> excl{3, 7};
        CHECK(rank_scores(scores, excl) == rank_scores(moved, excl));
    }
}

TEST_CASE("evaluate: no evaluable users is an error") {
    InteractionDataset ds;
    ds.num_users = 2;
    ds.num_items = 2;
    ds.train = {{0, 0}, {1, 1}};
    PropagatedEmbeddings<double> m;
    m.num_users = 2;
    m.final = Matrix<double>::Ones(4, 2);
    CHECK_THROWS_AS(evaluate(m, ds), Error);
}

TEST_CASE("CSV layout") {
    RankingReport r;
    for (const auto k : kDefaultCutoffs) {
        r.map[k] = 0.0932;
        r.mrr[k] = 0.68889;
        r.ndcg[k] = 0.2182;
    }
    CHECK(report_csv_header() == "method,MAP@3,MAP@5,MAP@10,MRR@3,MRR@5,MRR@10,NDCG@3,NDCG@5,NDCG@10");
    CHECK(report_csv_row("lightgcn", r) == "lightgcn,9.32,9.32,9.32,68.89,68.89,68.89,21.82,21.82,21.82");
}
