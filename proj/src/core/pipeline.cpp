#include "pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace scl {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream s(line);
    while (std::getline(s, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

}  // namespace

std::string build_identifier() {
#ifdef SCL_VERSION
    std::string id = "scl-" SCL_VERSION;
#else
    std::string id = "scl-dev";
#endif
#if defined(__clang__)
    id += " clang-" __clang_version__;
#elif defined(__GNUC__)
    id += " gcc-" __VERSION__;
#endif
    return id;
}

RunArtifacts run_pipeline(const RunConfig& config, const LogSink& echo) {
    config.validate();
    RunArtifacts art;

    const auto all = load_ml100k(config.data);
    const auto dataset = split_train_test(all, config.split_ratio, config.train.seed);
    const auto graph = build_graph(dataset.train, dataset.num_users, dataset.num_items);
    art.dataset_summary = dataset.summary();

    std::error_code ec;
    std::filesystem::create_directories(config.out, ec);
    if (ec) throw IoError("cannot create output directory " + config.out.string() + ": " + ec.message());
    art.log = config.out / "train.log";
    art.checkpoint = config.out / "checkpoint.bin";
    art.report_csv = config.out / "report.csv";
    art.manifest = config.out / "manifest.txt";

    std::ofstream log_file(art.log, std::ios::binary | std::ios::trunc);
    if (!log_file) throw IoError("cannot write " + art.log.string());
    const LogSink log = [&](const std::string& line) {
        log_file << line << '\n';
        if (echo) echo(line);
    };
    log(art.dataset_summary);

    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(config)));
    write_text(config.out / "config.txt", emit_config(config));
    write_text(art.manifest, "config_hash = " + std::string(hash) + "\nseed = " + std::to_string(config.train.seed) +
                                 "\nmethod = " + std::string(to_string(config.method)) +
                                 "\nbuild = " + build_identifier() + "\n");

    std::optional<SimilarityIndex> sim;
    if (config.needs_similarity()) {
        sim = compute_similarity(graph, config.augment.top_n);
        art.similarity = config.out / "similarity.bin";
        sim->save(art.similarity);
    }

    auto state = init_embeddings<float>(dataset.num_users, dataset.num_items, config.dim, config.layers,
                                        config.train.seed);
    std::optional<ProjectionHead<float>> head;
    if (config.pretrains()) {
        head = init_projection_head<float>(config.dim, config.dim, config.dim, config.train.seed);
        const auto objective =
            config.method == Method::SGL ? ContrastObjective::SelfSupervised : ContrastObjective::Supervised;
        art.pretrain_curve = pretrain(graph, sim ? &*sim : nullptr, config.augment, state, *head, config.loss,
                                      config.train, objective, log)
                                 .loss_curve;
    }

    auto fine = finetune(dataset, graph, state, config.loss, config.train, log);
    art.finetune_curve = std::move(fine.loss_curve);
    art.best_epoch = fine.best_epoch;
    art.report = std::move(fine.report);
    log("best_epoch=" + std::to_string(art.best_epoch));

    save_checkpoint(art.checkpoint, state, head ? &*head : nullptr);
    write_text(art.report_csv, report_csv_header() + "\n" +
                                   report_csv_row(std::string(to_string(config.method)), art.report) + "\n");
    return art;
}

std::string compare_reports(std::span<const std::filesystem::path> csv_paths) {
    if (csv_paths.empty()) throw ConfigError("compare needs at least one report");
    std::string header;
    std::vector<std::string> order;
    std::map<std::string, std::pair<std::vector<double>, std::size_t>> rows;
    for (const auto& path : csv_paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot read report " + path.string());
        std::string line;
        if (!std::getline(in, line)) throw ParseError(path.string() + ": empty report");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (header.empty())
            header = line;
        else if (line != header)
            throw ParseError(path.string() + ": header mismatch");
        const std::size_t columns = split_csv(header).size();
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            const auto cells = split_csv(line);
            if (cells.size() != columns)
                throw ParseError(path.string() + ":" + std::to_string(line_no) + ": wrong column count");
            auto [it, fresh] = rows.try_emplace(cells[0], std::vector<double>(columns - 1, 0.0), 0);
            if (fresh) order.push_back(cells[0]);
            for (std::size_t c = 1; c < columns; ++c) {
                try {
                    it->second.first[c - 1] += std::stod(cells[c]);
                } catch (const std::exception&) {
                    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + cells[c] + "'");
                }
            }
            ++it->second.second;
        }
    }
    std::string out = header + "\n";
    for (const auto& method : order) {
        const auto& [sums, count] = rows.at(method);
        out += method;
        for (const double v : sums) {
            char buf[32];
            std::snprintf(buf, sizeof buf, ",%.2f", v / static_cast<double>(count));
            out += buf;
        }
        out += "\n";
    }
    return out;
}

CheckpointInfo inspect_checkpoint(const std::filesystem::path& path) {
    const auto ck = load_checkpoint(path);
    CheckpointInfo info;
    info.num_users = ck.state.num_users;
    info.num_items = ck.state.num_items;
    info.dim = ck.state.dim;
    info.layers = ck.state.layers;
    info.all_finite = ck.state.table.allFinite();
    info.mean_abs = ck.state.table.size() ? static_cast<double>(ck.state.table.cwiseAbs().mean()) : 0.0;
    if (ck.head) {
        info.has_head = true;
        info.head_hidden = ck.head->hidden_dim();
        info.head_output = ck.head->output_dim();
        info.all_finite = info.all_finite && ck.head->w1.allFinite() && ck.head->w2.allFinite();
    }
    return info;
}

}  // namespace scl
