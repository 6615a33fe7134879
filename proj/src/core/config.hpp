#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "augment.hpp"
#include "loss.hpp"
#include "train.hpp"

namespace scl {

enum class Method { LightGCN, SGL, SclND, SclED, SclNR };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);

struct RunConfig {
    std::filesystem::path data = "data/ml-100k/u.data";
    double split_ratio = 0.8;
    Method method = Method::SclNR;
    std::filesystem::path out = "runs/default";
    std::size_t dim = 128;
    std::size_t layers = 3;
    AugmentationConfig augment;
    LossConfig loss;
    TrainConfig train;

    // lightgcn skips pretraining; sgl uses InfoNCE over edge-drop views;
    // scl-* use S-InfoNCE with the named augmentation.
    bool pretrains() const { return method != Method::LightGCN; }
    bool needs_similarity() const { return method == Method::SclND || method == Method::SclED || method == Method::SclNR; }
    void validate() const;
};

// Flat `key = value` lines; `#` starts a comment. Unknown keys and malformed
// values throw ConfigError. Relative paths resolve against `base_dir`.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

// Canonical text form; parse_config(emit_config(c)) reproduces c.
std::string emit_config(const RunConfig& config);

// FNV-1a 64 over the canonical text.
std::uint64_t config_hash(const RunConfig& config);

}  // namespace scl
