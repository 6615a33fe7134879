#include "config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace scl {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class V>
V parse_number(std::string_view key, std::string_view value) {
    V out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ConfigError("invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'");
    return out;
}

std::string fmt_double(double v) {
    // Shortest text that parses back to the same double.
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

using Setter = std::function<void(RunConfig&, std::string_view, std::string_view, const std::filesystem::path&)>;

template <class V>
Setter number(V RunConfig::*outer) {
    return [outer](RunConfig& c, std::string_view k, std::string_view v, const auto&) {
        c.*outer = parse_number<V>(k, v);
    };
}

template <class Sub, class V>
Setter nested(Sub RunConfig::*outer, V Sub::*inner) {
    return [outer, inner](RunConfig& c, std::string_view k, std::string_view v, const auto&) {
        (c.*outer).*inner = parse_number<V>(k, v);
    };
}

Setter path(std::filesystem::path RunConfig::*field) {
    return [field](RunConfig& c, std::string_view, std::string_view v, const std::filesystem::path& base) {
        std::filesystem::path p{std::string(v)};
        c.*field = (p.is_relative() && !base.empty()) ? base / p : p;
    };
}

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"data", path(&RunConfig::data)},
        {"out", path(&RunConfig::out)},
        {"split_ratio", number(&RunConfig::split_ratio)},
        {"method", [](RunConfig& c, auto, std::string_view v, const auto&) { c.method = parse_method(v); }},
        {"dim", number(&RunConfig::dim)},
        {"layers", number(&RunConfig::layers)},
        {"lr", nested(&RunConfig::train, &TrainConfig::lr)},
        {"batch_size", nested(&RunConfig::train, &TrainConfig::batch_size)},
        {"pretrain_epochs", nested(&RunConfig::train, &TrainConfig::pretrain_epochs)},
        {"finetune_epochs", nested(&RunConfig::train, &TrainConfig::finetune_epochs)},
        {"eval_every", nested(&RunConfig::train, &TrainConfig::eval_every)},
        {"patience", nested(&RunConfig::train, &TrainConfig::patience)},
        {"seed", nested(&RunConfig::train, &TrainConfig::seed)},
        {"adam_beta1", nested(&RunConfig::train, &TrainConfig::adam_beta1)},
        {"adam_beta2", nested(&RunConfig::train, &TrainConfig::adam_beta2)},
        {"adam_eps", nested(&RunConfig::train, &TrainConfig::adam_eps)},
        {"tau", nested(&RunConfig::loss, &LossConfig::tau)},
        {"lambda_l2", nested(&RunConfig::loss, &LossConfig::lambda_l2)},
        {"denominator",
         [](RunConfig& c, std::string_view k, std::string_view v, const auto&) {
             if (v == "negatives")
                 c.loss.denominator = Denominator::Negatives;
             else if (v == "all")
                 c.loss.denominator = Denominator::All;
             else
                 throw ConfigError("invalid value '" + std::string(v) + "' for key '" + std::string(k) +
                                   "' (expected negatives|all)");
         }},
        {"rho1", nested(&RunConfig::augment, &AugmentationConfig::rho1)},
        {"rho2", nested(&RunConfig::augment, &AugmentationConfig::rho2)},
        {"rho3", nested(&RunConfig::augment, &AugmentationConfig::rho3)},
        {"k_segments", nested(&RunConfig::augment, &AugmentationConfig::k_segments)},
        {"top_n", nested(&RunConfig::augment, &AugmentationConfig::top_n)},
    };
    return table;
}

}  // namespace

std::string_view to_string(Method m) {
    switch (m) {
        case Method::LightGCN: return "lightgcn";
        case Method::SGL: return "sgl";
        case Method::SclND: return "scl-nd";
        case Method::SclED: return "scl-ed";
        case Method::SclNR: return "scl-nr";
    }
    return "?";
}

Method parse_method(std::string_view s) {
    for (const auto m : {Method::LightGCN, Method::SGL, Method::SclND, Method::SclED, Method::SclNR})
        if (to_string(m) == s) return m;
    throw ConfigError("unknown method '" + std::string(s) + "' (expected lightgcn|sgl|scl-nd|scl-ed|scl-nr)");
}

void RunConfig::validate() const {
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("split_ratio must lie in (0, 1)");
    if (dim < 1) throw ConfigError("dim must be >= 1");
    augment.validate();
    loss.validate();
    train.validate();
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    RunConfig c;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end())
            throw ConfigError("line " + std::to_string(line_no) + ": unknown config key '" + std::string(key) + "'");
        if (value.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": empty value for '" + std::string(key) + "'");
        it->second(c, key, value, base_dir);
    }
    // The augmentation follows the run method.
    switch (c.method) {
        case Method::SclND: c.augment.method = AugmentMethod::NodeDrop; break;
        case Method::SGL:
        case Method::SclED: c.augment.method = AugmentMethod::EdgeDrop; break;
        default: c.augment.method = AugmentMethod::NodeReplication; break;
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config: " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return parse_config(s.str(), path.parent_path());
}

std::string emit_config(const RunConfig& c) {
    std::ostringstream s;
    s << "data = " << c.data.string() << "\n"
      << "out = " << c.out.string() << "\n"
      << "method = " << to_string(c.method) << "\n"
      << "split_ratio = " << fmt_double(c.split_ratio) << "\n"
      << "dim = " << c.dim << "\n"
      << "layers = " << c.layers << "\n"
      << "lr = " << fmt_double(c.train.lr) << "\n"
      << "batch_size = " << c.train.batch_size << "\n"
      << "pretrain_epochs = " << c.train.pretrain_epochs << "\n"
      << "finetune_epochs = " << c.train.finetune_epochs << "\n"
      << "eval_every = " << c.train.eval_every << "\n"
      << "patience = " << c.train.patience << "\n"
      << "seed = " << c.train.seed << "\n"
      << "adam_beta1 = " << fmt_double(c.train.adam_beta1) << "\n"
      << "adam_beta2 = " << fmt_double(c.train.adam_beta2) << "\n"
      << "adam_eps = " << fmt_double(c.train.adam_eps) << "\n"
      << "tau = " << fmt_double(c.loss.tau) << "\n"
      << "lambda_l2 = " << fmt_double(c.loss.lambda_l2) << "\n"
      << "denominator = " << (c.loss.denominator == Denominator::All ? "all" : "negatives") << "\n"
      << "rho1 = " << fmt_double(c.augment.rho1) << "\n"
      << "rho2 = " << fmt_double(c.augment.rho2) << "\n"
      << "rho3 = " << fmt_double(c.augment.rho3) << "\n"
      << "k_segments = " << c.augment.k_segments << "\n"
      << "top_n = " << c.augment.top_n << "\n";
    return s.str();
}

std::uint64_t config_hash(const RunConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : emit_config(config)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace scl
