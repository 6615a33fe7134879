#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "config.hpp"
#include "metrics.hpp"
#include "train.hpp"

namespace scl {

struct RunArtifacts {
    std::string dataset_summary;
    RankingReport report;
    std::size_t best_epoch = 0;
    std::vector<double> pretrain_curve;
    std::vector<double> finetune_curve;
    std::filesystem::path checkpoint;
    std::filesystem::path report_csv;
    std::filesystem::path log;
    std::filesystem::path manifest;
    std::filesystem::path similarity;  // empty when the method needs none
};

// prepare -> similarity -> pretrain -> finetune -> evaluate. Writes into
// config.out: checkpoint.bin, train.log, report.csv, manifest.txt,
// config.txt and, for scl-* methods, similarity.bin before pretraining.
RunArtifacts run_pipeline(const RunConfig& config, const LogSink& echo = {});

// Merges report CSVs into one table. Rows naming the same method (e.g. one
// per seed) are averaged; order follows first appearance. Throws on a header
// mismatch.
std::string compare_reports(std::span<const std::filesystem::path> csv_paths);

struct CheckpointInfo {
    std::size_t num_users = 0, num_items = 0, dim = 0, layers = 0;
    bool has_head = false;
    std::size_t head_hidden = 0, head_output = 0;
    double mean_abs = 0.0;
    bool all_finite = true;
};

CheckpointInfo inspect_checkpoint(const std::filesystem::path& path);

std::string build_identifier();

}  // namespace scl
