#include "scl/scl.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "pipeline.hpp"

struct scl_dataset {
    scl::InteractionDataset data;
    scl::BipartiteGraph graph;
};

struct scl_model {
    const scl_dataset* dataset;
    scl::PropagatedEmbeddings<float> embeddings;
    std::vector<std::vector<scl::NodeId>> train_items;
};

namespace {

thread_local std::string g_last_error;

scl_status fail(scl_status status, std::string message) {
    g_last_error = std::move(message);
    return status;
}

template <class F>
scl_status guarded(F&& body) {
    try {
        body();
        g_last_error.clear();
        return SCL_OK;
    } catch (const scl::ConfigError& e) {
        return fail(SCL_ERR_CONFIG, e.what());
    } catch (const scl::ParseError& e) {
        return fail(SCL_ERR_PARSE, e.what());
    } catch (const scl::IoError& e) {
        return fail(SCL_ERR_IO, e.what());
    } catch (const scl::ShapeError& e) {
        return fail(SCL_ERR_SHAPE, e.what());
    } catch (const scl::NumericError& e) {
        return fail(SCL_ERR_NUMERIC, e.what());
    } catch (const std::bad_alloc&) {
        return fail(SCL_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(SCL_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(SCL_ERR_INTERNAL, "unknown error");
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void fill_report(const scl::RankingReport& r, std::size_t best_epoch, scl_report* out) {
    for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t k = scl::kDefaultCutoffs[i];
        out->map[i] = r.map.at(k);
        out->mrr[i] = r.mrr.at(k);
        out->ndcg[i] = r.ndcg.at(k);
    }
    out->evaluated_users = r.evaluated_users;
    out->best_epoch = best_epoch;
}

}  // namespace

extern "C" {

const char* scl_last_error(void) { return g_last_error.c_str(); }

const char* scl_version(void) {
#ifdef SCL_VERSION
    return SCL_VERSION;
#else
    return "dev";
#endif
}

const char* scl_status_name(scl_status status) {
    switch (status) {
        case SCL_OK: return "ok";
        case SCL_ERR_INVALID_ARGUMENT: return "invalid argument";
        case SCL_ERR_IO: return "io error";
        case SCL_ERR_PARSE: return "parse error";
        case SCL_ERR_CONFIG: return "config error";
        case SCL_ERR_SHAPE: return "shape error";
        case SCL_ERR_NUMERIC: return "numeric error";
        case SCL_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

void scl_string_free(char* s) { std::free(s); }

scl_status scl_dataset_load(const char* path, double split_ratio, uint64_t seed, scl_dataset** out) {
    if (!path || !out) return fail(SCL_ERR_INVALID_ARGUMENT, "path and out must be non-null");
    *out = nullptr;
    return guarded([&] {
        auto all = scl::load_ml100k(path);
        auto data = scl::split_train_test(all, split_ratio, seed);
        auto graph = scl::build_graph(data.train, data.num_users, data.num_items);
        *out = new scl_dataset{std::move(data), std::move(graph)};
    });
}

void scl_dataset_free(scl_dataset* dataset) { delete dataset; }

scl_status scl_dataset_get_info(const scl_dataset* dataset, scl_dataset_info* out) {
    if (!dataset || !out) return fail(SCL_ERR_INVALID_ARGUMENT, "dataset and out must be non-null");
    out->num_users = dataset->data.num_users;
    out->num_items = dataset->data.num_items;
    out->num_train = dataset->data.train.size();
    out->num_test = dataset->data.test.size();
    out->density = dataset->data.density();
    return SCL_OK;
}

scl_status scl_config_canonical(const char* path, char** out) {
    if (!path || !out) return fail(SCL_ERR_INVALID_ARGUMENT, "path and out must be non-null");
    *out = nullptr;
    return guarded([&] { *out = dup_string(scl::emit_config(scl::load_config(path))); });
}

scl_status scl_run(const char* config_path, const scl_run_options* options, scl_report* report) {
    if (!config_path) return fail(SCL_ERR_INVALID_ARGUMENT, "config path must be non-null");
    return guarded([&] {
        auto config = scl::load_config(config_path);
        scl::LogSink sink;
        if (options) {
            if (options->has_seed) config.train.seed = options->seed;
            if (options->out_dir) config.out = options->out_dir;
            if (options->log) {
                const auto fn = options->log;
                void* user = options->log_user;
                sink = [fn, user](const std::string& line) { fn(line.c_str(), user); };
            }
        }
        const auto art = scl::run_pipeline(config, sink);
        if (report) fill_report(art.report, art.best_epoch, report);
    });
}

scl_status scl_compare_reports(const char* const* paths, size_t count, char** out) {
    if (!out || (count > 0 && !paths)) return fail(SCL_ERR_INVALID_ARGUMENT, "paths and out must be non-null");
    *out = nullptr;
    return guarded([&] {
        std::vector<std::filesystem::path> list;
        for (size_t i = 0; i < count; ++i) {
            if (!paths[i]) throw scl::ConfigError("null report path");
            list.emplace_back(paths[i]);
        }
        *out = dup_string(scl::compare_reports(list));
    });
}

scl_status scl_checkpoint_inspect(const char* path, scl_checkpoint_info* out) {
    if (!path || !out) return fail(SCL_ERR_INVALID_ARGUMENT, "path and out must be non-null");
    return guarded([&] {
        const auto info = scl::inspect_checkpoint(path);
        out->num_users = info.num_users;
        out->num_items = info.num_items;
        out->dim = info.dim;
        out->layers = info.layers;
        out->has_head = info.has_head ? 1 : 0;
        out->head_hidden = info.head_hidden;
        out->head_output = info.head_output;
        out->mean_abs = info.mean_abs;
        out->all_finite = info.all_finite ? 1 : 0;
    });
}

scl_status scl_model_load(const char* checkpoint_path, const scl_dataset* dataset, scl_model** out) {
    if (!checkpoint_path || !dataset || !out)
        return fail(SCL_ERR_INVALID_ARGUMENT, "checkpoint, dataset and out must be non-null");
    *out = nullptr;
    return guarded([&] {
        const auto ck = scl::load_checkpoint(checkpoint_path);
        auto emb = scl::propagate(ck.state, dataset->graph);
        *out = new scl_model{dataset, std::move(emb), dataset->data.train_items_by_user()};
    });
}

void scl_model_free(scl_model* model) { delete model; }

scl_status scl_model_score(const scl_model* model, uint32_t user, uint32_t item, float* out) {
    if (!model || !out) return fail(SCL_ERR_INVALID_ARGUMENT, "model and out must be non-null");
    const auto& d = model->dataset->data;
    if (user >= d.num_users || item >= d.num_items) return fail(SCL_ERR_INVALID_ARGUMENT, "id out of range");
    return guarded([&] {
        *out = model->embeddings.users().row(user).dot(model->embeddings.items().row(item));
    });
}

scl_status scl_model_recommend(const scl_model* model, uint32_t user, size_t k, uint32_t* items, size_t* written) {
    if (!model || !written || (k > 0 && !items)) return fail(SCL_ERR_INVALID_ARGUMENT, "null argument");
    if (user >= model->dataset->data.num_users) return fail(SCL_ERR_INVALID_ARGUMENT, "user out of range");
    if (k == 0) {
        *written = 0;
        return SCL_OK;
    }
    return guarded([&] {
        const auto ranked = scl::rank_items(model->embeddings, user, model->train_items[user], k);
        std::copy(ranked.begin(), ranked.end(), items);
        *written = ranked.size();
    });
}

scl_status scl_model_evaluate(const scl_model* model, scl_report* out) {
    if (!model || !out) return fail(SCL_ERR_INVALID_ARGUMENT, "model and out must be non-null");
    return guarded([&] { fill_report(scl::evaluate(model->embeddings, model->dataset->data), 0, out); });
}

}  // extern "C"
