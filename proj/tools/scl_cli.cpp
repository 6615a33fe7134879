#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scl/scl.h"

namespace {

int exit_code(scl_status s) {
    switch (s) {
        case SCL_OK: return 0;
        case SCL_ERR_CONFIG:
        case SCL_ERR_INVALID_ARGUMENT: return 2;
        default: return 1;
    }
}

int report_failure(scl_status s) {
    std::fprintf(stderr, "error: %s: %s\n", scl_status_name(s), scl_last_error());
    return exit_code(s);
}

void print_line(const char* line, void*) {
    std::fputs(line, stdout);
    std::fputc('\n', stdout);
    std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph contrastive recommender: train, compare and inspect runs"};
    app.set_version_flag("--version", std::string(scl_version()));
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "Train and evaluate one method");
    run->add_option("--config", config_path, "Config file (key = value lines)")->required();
    auto* seed_opt = run->add_option("--seed", seed, "Override the config seed");
    run->add_option("--out", out_dir, "Override the output directory");
    run->add_flag("-q,--quiet", quiet, "Do not echo the training log");

    std::vector<std::string> reports;
    auto* compare = app.add_subcommand("compare", "Merge report CSVs, averaging rows per method");
    compare->add_option("reports", reports, "report.csv files")->required();

    std::string checkpoint;
    auto* inspect = app.add_subcommand("inspect-checkpoint", "Print checkpoint shape and statistics");
    inspect->add_option("path", checkpoint, "checkpoint.bin")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (*run) {
        scl_run_options opts{};
        opts.has_seed = *seed_opt ? 1 : 0;
        opts.seed = seed;
        opts.out_dir = out_dir.empty() ? nullptr : out_dir.c_str();
        opts.log = quiet ? nullptr : print_line;
        scl_report rep{};
        const scl_status s = scl_run(config_path.c_str(), &opts, &rep);
        if (s != SCL_OK) return report_failure(s);
        std::printf("NDCG@10=%.2f MRR@10=%.2f MAP@10=%.2f users=%llu\n", 100.0 * rep.ndcg[2], 100.0 * rep.mrr[2],
                    100.0 * rep.map[2], static_cast<unsigned long long>(rep.evaluated_users));
        return 0;
    }
    if (*compare) {
        std::vector<const char*> paths;
        for (const auto& r : reports) paths.push_back(r.c_str());
        char* csv = nullptr;
        const scl_status s = scl_compare_reports(paths.data(), paths.size(), &csv);
        if (s != SCL_OK) return report_failure(s);
        std::fputs(csv, stdout);
        scl_string_free(csv);
        return 0;
    }
    scl_checkpoint_info info{};
    const scl_status s = scl_checkpoint_inspect(checkpoint.c_str(), &info);
    if (s != SCL_OK) return report_failure(s);
    std::printf("users=%llu items=%llu dim=%llu layers=%llu\n", static_cast<unsigned long long>(info.num_users),
                static_cast<unsigned long long>(info.num_items), static_cast<unsigned long long>(info.dim),
                static_cast<unsigned long long>(info.layers));
    if (info.has_head)
        std::printf("head=%llux%llux%llu\n", static_cast<unsigned long long>(info.dim),
                    static_cast<unsigned long long>(info.head_hidden),
                    static_cast<unsigned long long>(info.head_output));
    else
        std::printf("head=none\n");
    std::printf("mean_abs=%.6f finite=%s\n", info.mean_abs, info.all_finite ? "yes" : "no");
    return 0;
}
