#include "train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace scl {

namespace {

template <class T>
std::span<T> flat(Matrix<T>& m) {
    return {m.data(), static_cast<std::size_t>(m.size())};
}
template <class T>
std::span<const T> flat(const Matrix<T>& m) {
    return {m.data(), static_cast<std::size_t>(m.size())};
}
template <class T>
std::span<T> flat(Vector<T>& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}
template <class T>
std::span<const T> flat(const Vector<T>& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

std::string format_record(const char* stage, std::size_t epoch, double loss, std::optional<double> ndcg10) {
    char buf[128];
    if (ndcg10)
        std::snprintf(buf, sizeof buf, "stage=%s epoch=%zu loss=%.6f ndcg10=%.6f", stage, epoch, loss, *ndcg10);
    else
        std::snprintf(buf, sizeof buf, "stage=%s epoch=%zu loss=%.6f", stage, epoch, loss);
    return buf;
}

std::vector<std::vector<NodeId>> chunk(const std::vector<NodeId>& ids, std::size_t size) {
    std::vector<std::vector<NodeId>> out;
    for (std::size_t b = 0; b < ids.size(); b += size)
        out.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(b),
                         ids.begin() + static_cast<std::ptrdiff_t>(std::min(ids.size(), b + size)));
    return out;
}

bool every_row_has_negative(const ContrastMasks& m) { return (m.negative.rowwise().any()).all(); }

template <class T>
struct HeadOptimizer {
    AdamState<T> w1, b1, w2, b2;

    void step(ProjectionHead<T>& head, const ProjectionHead<T>& g, const AdamConfig& c) {
        adam_step<T>("head.w1", flat(head.w1), flat(g.w1), w1, c);
        adam_step<T>("head.b1", flat(head.b1), flat(g.b1), b1, c);
        adam_step<T>("head.w2", flat(head.w2), flat(g.w2), w2, c);
        adam_step<T>("head.b2", flat(head.b2), flat(g.b2), b2, c);
    }
};

}  // namespace

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        throw ConfigError("adam betas must lie in [0, 1)");
    if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be > 0");
}

template <class T>
void adam_step(std::string_view name, std::span<T> params, std::span<const T> grads, AdamState<T>& state,
               const AdamConfig& config) {
    if (params.size() != grads.size())
        throw ShapeError("adam_step: parameter '" + std::string(name) + "' and gradient sizes differ");
    for (std::size_t k = 0; k < grads.size(); ++k)
        if (!std::isfinite(grads[k]))
            throw NumericError("non-finite gradient for parameter '" + std::string(name) + "' at index " +
                               std::to_string(k));
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), T(0));
        state.v.assign(params.size(), T(0));
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const T b1 = static_cast<T>(config.beta1), b2 = static_cast<T>(config.beta2);
    const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(config.beta1, t)));
    const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(config.beta2, t)));
    const T lr = static_cast<T>(config.lr), eps = static_cast<T>(config.eps);
    for (std::size_t k = 0; k < params.size(); ++k) {
        const T g = grads[k];
        state.m[k] = b1 * state.m[k] + (T(1) - b1) * g;
        state.v[k] = b2 * state.v[k] + (T(1) - b2) * g * g;
        params[k] -= lr * (state.m[k] * c1) / (std::sqrt(state.v[k] * c2) + eps);
    }
}

template <class T>
T contrastive_objective(const EmbeddingState<T>& state, const ProjectionHead<T>& head, const BipartiteGraph& view_a,
                        const BipartiteGraph& view_b, std::span<const SideBatch> sides, const LossConfig& loss,
                        ContrastGrads<T>* grads) {
    const Matrix<T> fa = layer_mean(view_a, state.table, state.layers);
    const Matrix<T> fb = layer_mean(view_b, state.table, state.layers);
    Matrix<T> grad_a, grad_b;
    if (grads) {
        grad_a.setZero(fa.rows(), fa.cols());
        grad_b.setZero(fb.rows(), fb.cols());
        grads->head.set_zero_like(head);
    }
    const T tau = static_cast<T>(loss.tau);
    T total = 0;
    for (const auto& side : sides) {
        if (side.nodes.empty()) continue;
        const std::size_t offset = side.user_side ? 0 : state.num_users;
        const auto rows = static_cast<Eigen::Index>(2 * side.nodes.size());
        Matrix<T> h(rows, fa.cols());
        for (std::size_t m = 0; m < side.nodes.size(); ++m) {
            const auto p = static_cast<Eigen::Index>(offset + side.nodes[m]);
            h.row(2 * static_cast<Eigen::Index>(m)) = fa.row(p);
            h.row(2 * static_cast<Eigen::Index>(m) + 1) = fb.row(p);
        }
        Matrix<T> pre;
        Matrix<T> z = project_rows(h, head, &pre);
        ContrastResult<T> r;
        if (side.masks) {
            r = s_info_nce(ContrastBatch<T>{std::move(z), side.masks->positive, side.masks->negative}, tau,
                           loss.denominator);
        } else {
            r = info_nce(z, tau);
        }
        total += r.loss;
        if (!grads) continue;
        const Matrix<T> grad_h = project_rows_backward(h, pre, r.grad, head, grads->head);
        for (std::size_t m = 0; m < side.nodes.size(); ++m) {
            const auto p = static_cast<Eigen::Index>(offset + side.nodes[m]);
            grad_a.row(p) += grad_h.row(2 * static_cast<Eigen::Index>(m));
            grad_b.row(p) += grad_h.row(2 * static_cast<Eigen::Index>(m) + 1);
        }
    }
    if (grads) {
        grads->table = layer_mean(view_a, grad_a, state.layers);
        grads->table += layer_mean(view_b, grad_b, state.layers);
    }
    return total;
}

template <class T>
PretrainResult pretrain(const BipartiteGraph& train_graph, const SimilarityIndex* sim, const AugmentationConfig& aug,
                        EmbeddingState<T>& state, ProjectionHead<T>& head, const LossConfig& loss,
                        const TrainConfig& config, ContrastObjective objective, const LogSink& log) {
    aug.validate();
    loss.validate();
    config.validate();
    const bool supervised = objective == ContrastObjective::Supervised;
    if ((supervised || aug.method == AugmentMethod::NodeReplication) && !sim)
        throw ConfigError("pretraining with this objective/augmentation needs a similarity index");

    PretrainResult result;
    const AdamConfig adam = AdamConfig::from(config);
    AdamState<T> table_opt;
    HeadOptimizer<T> head_opt;
    ContrastGrads<T> grads;

    std::vector<NodeId> users(state.num_users), items(state.num_items);
    for (std::size_t u = 0; u < users.size(); ++u) users[u] = static_cast<NodeId>(u);
    for (std::size_t i = 0; i < items.size(); ++i) items[i] = static_cast<NodeId>(i);

    for (std::size_t epoch = 1; epoch <= config.pretrain_epochs; ++epoch) {
        std::mt19937_64 rng_a(derive_seed(config.seed, 0xA1, epoch));
        std::mt19937_64 rng_b(derive_seed(config.seed, 0xA2, epoch));
        const AugmentedView view_a = augment(train_graph, aug, sim, rng_a);
        const AugmentedView view_b = augment(train_graph, aug, sim, rng_b);

        std::mt19937_64 shuffle_rng(derive_seed(config.seed, 0xB0, epoch));
        std::shuffle(users.begin(), users.end(), shuffle_rng);
        std::shuffle(items.begin(), items.end(), shuffle_rng);
        const auto user_batches = chunk(users, config.batch_size);
        const auto item_batches = chunk(items, config.batch_size);
        const std::size_t steps = std::max(user_batches.size(), item_batches.size());

        double epoch_loss = 0.0;
        std::size_t counted = 0;
        for (std::size_t s = 0; s < steps; ++s) {
            std::vector<SideBatch> sides;
            for (const bool user_side : {true, false}) {
                const auto& batches = user_side ? user_batches : item_batches;
                if (batches.empty()) continue;
                SideBatch side{user_side, batches[s % batches.size()], std::nullopt};
                if (supervised) {
                    side.masks = build_contrast_masks(side.nodes,
                                                      user_side ? sim->user_neighbors : sim->item_neighbors);
                    if (loss.denominator == Denominator::Negatives && !every_row_has_negative(*side.masks)) {
                        ++result.skipped_batches;
                        if (log)
                            log("warning stage=pretrain epoch=" + std::to_string(epoch) + " skipped " +
                                (user_side ? "user" : "item") + " batch without valid negatives");
                        continue;
                    }
                }
                sides.push_back(std::move(side));
            }
            if (sides.empty()) continue;
            const T value = contrastive_objective<T>(state, head, view_a.graph, view_b.graph, sides, loss, &grads);
            adam_step<T>("embeddings", flat(state.table), flat(std::as_const(grads.table)), table_opt, adam);
            head_opt.step(head, grads.head, adam);
            epoch_loss += static_cast<double>(value);
            ++counted;
        }
        const double mean = counted ? epoch_loss / static_cast<double>(counted) : 0.0;
        result.loss_curve.push_back(mean);
        if (log) log(format_record("pretrain", epoch, mean, std::nullopt));
    }
    return result;
}

std::vector<Triple> sample_triples(const InteractionDataset& dataset,
                                   const std::vector<std::vector<NodeId>>& train_items, std::mt19937_64& rng) {
    std::vector<Triple> triples;
    triples.reserve(dataset.train.size());
    std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(dataset.num_items - 1));
    for (const auto& [u, i] : dataset.train) {
        const auto& seen = train_items[u];
        if (seen.size() >= dataset.num_items) continue;
        NodeId j;
        do {
            j = pick(rng);
        } while (std::binary_search(seen.begin(), seen.end(), j));
        triples.push_back({u, i, j});
    }
    std::shuffle(triples.begin(), triples.end(), rng);
    return triples;
}

template <class T>
T bpr_objective(const EmbeddingState<T>& state, const BipartiteGraph& graph, std::span<const Triple> batch,
                double lambda_l2, Matrix<T>* grad_table) {
    const Matrix<T> f = layer_mean(graph, state.table, state.layers);
    const auto nu = static_cast<Eigen::Index>(state.num_users);
    const std::size_t n = batch.size();
    std::vector<T> pos(n), neg(n);
    T sq = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const auto& [u, i, j] = batch[t];
        pos[t] = f.row(u).dot(f.row(nu + i));
        neg[t] = f.row(u).dot(f.row(nu + j));
        sq += state.table.row(u).squaredNorm() + state.table.row(nu + i).squaredNorm() +
              state.table.row(nu + j).squaredNorm();
    }
    const T inv = n ? T(1) / static_cast<T>(n) : T(0);
    const T lambda = static_cast<T>(lambda_l2);
    const auto r = bpr_loss<T>(pos, neg, T(0.5) * sq * inv, lambda);
    if (grad_table) {
        Matrix<T> grad_f = Matrix<T>::Zero(f.rows(), f.cols());
        for (std::size_t t = 0; t < n; ++t) {
            const auto& [u, i, j] = batch[t];
            grad_f.row(u) += r.grad_pos[t] * f.row(nu + i) + r.grad_neg[t] * f.row(nu + j);
            grad_f.row(nu + i) += r.grad_pos[t] * f.row(u);
            grad_f.row(nu + j) += r.grad_neg[t] * f.row(u);
        }
        *grad_table = layer_mean(graph, grad_f, state.layers);
        const T reg = lambda * inv;
        for (std::size_t t = 0; t < n; ++t) {
            const auto& [u, i, j] = batch[t];
            grad_table->row(u) += reg * state.table.row(u);
            grad_table->row(nu + i) += reg * state.table.row(nu + i);
            grad_table->row(nu + j) += reg * state.table.row(nu + j);
        }
    }
    return r.loss;
}

template <class T>
FinetuneResult finetune(const InteractionDataset& dataset, const BipartiteGraph& train_graph,
                        EmbeddingState<T>& state, const LossConfig& loss, const TrainConfig& config,
                        const LogSink& log) {
    loss.validate();
    config.validate();
    FinetuneResult result;
    const auto train_items = dataset.train_items_by_user();
    const AdamConfig adam = AdamConfig::from(config);
    AdamState<T> opt;
    Matrix<T> grad;

    const auto eval_ndcg10 = [&](const EmbeddingState<T>& s) {
        auto report = evaluate(propagate(s, train_graph), dataset);
        return std::make_pair(report.ndcg.at(10), std::move(report));
    };

    if (config.finetune_epochs == 0) {
        auto [ndcg, report] = eval_ndcg10(state);
        result.ndcg10_history.emplace_back(0, ndcg);
        result.report = std::move(report);
        return result;
    }

    EmbeddingState<T> best = state;
    double best_ndcg = -1.0;
    for (std::size_t epoch = 1; epoch <= config.finetune_epochs; ++epoch) {
        std::mt19937_64 rng(derive_seed(config.seed, 0xF1, epoch));
        const auto triples = sample_triples(dataset, train_items, rng);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t b = 0; b < triples.size(); b += config.batch_size) {
            const std::span<const Triple> batch(triples.data() + b, std::min(config.batch_size, triples.size() - b));
            const T value = bpr_objective(state, train_graph, batch, loss.lambda_l2, &grad);
            adam_step<T>("embeddings", flat(state.table), flat(std::as_const(grad)), opt, adam);
            epoch_loss += static_cast<double>(value);
            ++batches;
        }
        const double mean = batches ? epoch_loss / static_cast<double>(batches) : 0.0;
        result.loss_curve.push_back(mean);

        const bool last = epoch == config.finetune_epochs;
        std::optional<double> ndcg;
        if (epoch % config.eval_every == 0 || last) {
            auto [value, report] = eval_ndcg10(state);
            ndcg = value;
            result.ndcg10_history.emplace_back(epoch, value);
            if (value > best_ndcg) {
                best_ndcg = value;
                best = state;
                result.best_epoch = epoch;
                result.report = std::move(report);
            }
        }
        if (log) log(format_record("finetune", epoch, mean, ndcg));
        if (ndcg && config.patience > 0 && epoch - result.best_epoch >= config.patience) break;
    }
    state = std::move(best);
    return result;
}

#define SCL_INSTANTIATE_TRAIN(T)                                                                                 \
    template void adam_step<T>(std::string_view, std::span<T>, std::span<const T>, AdamState<T>&,                \
                               const AdamConfig&);                                                               \
    template T contrastive_objective<T>(const EmbeddingState<T>&, const ProjectionHead<T>&, const BipartiteGraph&, \
                                        const BipartiteGraph&, std::span<const SideBatch>, const LossConfig&,    \
                                        ContrastGrads<T>*);                                                      \
    template PretrainResult pretrain<T>(const BipartiteGraph&, const SimilarityIndex*, const AugmentationConfig&, \
                                        EmbeddingState<T>&, ProjectionHead<T>&, const LossConfig&,               \
                                        const TrainConfig&, ContrastObjective, const LogSink&);                  \
    template T bpr_objective<T>(const EmbeddingState<T>&, const BipartiteGraph&, std::span<const Triple>, double, \
                                Matrix<T>*);                                                                     \
    template FinetuneResult finetune<T>(const InteractionDataset&, const BipartiteGraph&, EmbeddingState<T>&,     \
                                        const LossConfig&, const TrainConfig&, const LogSink&);

SCL_INSTANTIATE_TRAIN(float)
SCL_INSTANTIATE_TRAIN(double)

#undef SCL_INSTANTIATE_TRAIN

}  // namespace scl
