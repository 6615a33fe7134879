#include "dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string_view>

#include "parallel.hpp"

namespace scl {

namespace {

template <class V>
bool parse_field(std::string_view field, V& out) {
    const char* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, out);
    return ec == std::errc() && ptr == end;
}

std::vector<std::vector<NodeId>> group_by_user(const std::vector<Interaction>& pairs, std::size_t num_users) {
    std::vector<std::vector<NodeId>> out(num_users);
    for (const auto& [u, i] : pairs) out[u].push_back(i);
    for (auto& items : out) std::sort(items.begin(), items.end());
    return out;
}

}  // namespace

double InteractionDataset::density() const {
    if (num_users == 0 || num_items == 0) return 0.0;
    return static_cast<double>(num_interactions()) /
           (static_cast<double>(num_users) * static_cast<double>(num_items));
}

std::string InteractionDataset::summary() const {
    char pct[32];
    std::snprintf(pct, sizeof pct, "%.2f%%", 100.0 * density());
    std::ostringstream s;
    s << "users=" << num_users << " items=" << num_items << " train=" << train.size()
      << " test=" << test.size() << " density=" << pct;
    return s.str();
}

std::vector<std::vector<NodeId>> InteractionDataset::train_items_by_user() const {
    return group_by_user(train, num_users);
}

std::vector<std::vector<NodeId>> InteractionDataset::test_items_by_user() const {
    return group_by_user(test, num_users);
}

InteractionDataset load_ml100k(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open interaction file: " + path.string());

    std::vector<std::pair<std::int64_t, std::int64_t>> raw;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string_view rest = line;
        std::string_view fields[4];
        int n = 0;
        while (n < 4) {
            const auto tab = rest.find('\t');
            fields[n++] = rest.substr(0, tab);
            if (tab == std::string_view::npos) {
                rest = {};
                break;
            }
            rest.remove_prefix(tab + 1);
        }
        std::int64_t user = 0, item = 0, timestamp = 0;
        double rating = 0.0;
        const bool ok = n == 4 && rest.empty() && parse_field(fields[0], user) &&
                        parse_field(fields[1], item) && parse_field(fields[2], rating) &&
                        parse_field(fields[3], timestamp) && user >= 1 && item >= 1;
        if (!ok) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": malformed record, expected 'user<TAB>item<TAB>rating<TAB>timestamp' "
                             "with positive integer ids");
        }
        raw.emplace_back(user, item);
    }
    if (raw.empty()) throw ParseError(path.string() + ": empty interaction file");

    std::map<std::int64_t, NodeId> user_map, item_map;
    for (const auto& [u, i] : raw) {
        user_map.emplace(u, 0);
        item_map.emplace(i, 0);
    }
    InteractionDataset ds;
    for (auto& [orig, dense] : user_map) {
        dense = static_cast<NodeId>(ds.user_ids.size());
        ds.user_ids.push_back(orig);
    }
    for (auto& [orig, dense] : item_map) {
        dense = static_cast<NodeId>(ds.item_ids.size());
        ds.item_ids.push_back(orig);
    }
    ds.num_users = ds.user_ids.size();
    ds.num_items = ds.item_ids.size();
    ds.train.reserve(raw.size());
    for (const auto& [u, i] : raw) ds.train.emplace_back(user_map.at(u), item_map.at(i));
    std::sort(ds.train.begin(), ds.train.end());
    ds.train.erase(std::unique(ds.train.begin(), ds.train.end()), ds.train.end());
    return ds;
}

InteractionDataset split_train_test(const InteractionDataset& all, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie in (0, 1)");

    std::vector<Interaction> pool = all.train;
    pool.insert(pool.end(), all.test.begin(), all.test.end());
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

    InteractionDataset out;
    out.num_users = all.num_users;
    out.num_items = all.num_items;
    out.user_ids = all.user_ids;
    out.item_ids = all.item_ids;

    std::mt19937_64 rng(derive_seed(seed, 0x5311u));
    auto by_user = group_by_user(pool, all.num_users);
    for (std::size_t u = 0; u < by_user.size(); ++u) {
        auto& items = by_user[u];
        if (items.empty()) continue;
        std::shuffle(items.begin(), items.end(), rng);
        const auto n = items.size();
        // Small epsilon keeps exact products such as 0.29 * 100 from flooring low.
        auto keep = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
        keep = std::clamp<std::size_t>(keep, 1, n);
        for (std::size_t k = 0; k < n; ++k)
            (k < keep ? out.train : out.test).emplace_back(static_cast<NodeId>(u), items[k]);
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

BipartiteGraph::BipartiteGraph(std::size_t num_users, std::size_t num_items, std::vector<Interaction> edges)
    : num_users_(num_users), num_items_(num_items), edges_(std::move(edges)) {
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

    const std::size_t n = num_nodes();
    std::vector<std::size_t> degree(n, 0);
    for (const auto& [u, i] : edges_) {
        if (u >= num_users_ || i >= num_items_)
            throw ShapeError("edge (" + std::to_string(u) + ", " + std::to_string(i) + ") out of range");
        ++degree[u];
        ++degree[num_users_ + i];
    }
    row_ptr_.assign(n + 1, 0);
    for (std::size_t p = 0; p < n; ++p) row_ptr_[p + 1] = row_ptr_[p] + degree[p];
    col_idx_.resize(row_ptr_[n]);
    values_.resize(row_ptr_[n]);

    // Edges are sorted by (user, item), so user rows fill in ascending item
    // order and item rows fill in ascending user order.
    std::vector<std::size_t> cursor(row_ptr_.begin(), row_ptr_.end() - 1);
    for (const auto& [u, i] : edges_) {
        const std::size_t q = num_users_ + i;
        const double w = 1.0 / std::sqrt(static_cast<double>(degree[u]) * static_cast<double>(degree[q]));
        col_idx_[cursor[u]] = static_cast<std::uint32_t>(q);
        values_[cursor[u]++] = w;
        col_idx_[cursor[q]] = u;
        values_[cursor[q]++] = w;
    }
    values_f32_.assign(values_.begin(), values_.end());
}

double BipartiteGraph::entry(std::size_t p, std::size_t q) const {
    const auto cols = neighbors(p);
    const auto it = std::lower_bound(cols.begin(), cols.end(), q);
    if (it == cols.end() || *it != q) return 0.0;
    return values_[row_ptr_[p] + static_cast<std::size_t>(it - cols.begin())];
}

template <class T>
void BipartiteGraph::multiply(const Matrix<T>& in, Matrix<T>& out) const {
    if (static_cast<std::size_t>(in.rows()) != num_nodes())
        throw ShapeError("adjacency side " + std::to_string(num_nodes()) + " does not match input rows " +
                         std::to_string(in.rows()));
    out.setZero(in.rows(), in.cols());
    const auto vals = values<T>();
    parallel_for(num_nodes(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            auto row = out.row(static_cast<Eigen::Index>(p));
            for (std::size_t e = row_ptr_[p]; e < row_ptr_[p + 1]; ++e)
                row.noalias() += vals[e] * in.row(col_idx_[e]);
        }
    });
}

template void BipartiteGraph::multiply<float>(const Matrix<float>&, Matrix<float>&) const;
template void BipartiteGraph::multiply<double>(const Matrix<double>&, Matrix<double>&) const;

BipartiteGraph build_graph(std::span<const Interaction> train, std::size_t num_users, std::size_t num_items) {
    return BipartiteGraph(num_users, num_items, std::vector<Interaction>(train.begin(), train.end()));
}

}  // namespace scl
