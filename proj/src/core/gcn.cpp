#include "gcn.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <string_view>

#include "binary_io.hpp"

namespace scl {

namespace {

constexpr std::string_view kCkptMagic{"SCLCKPT1", 8};

template <class T, class Derived>
void write_block(std::ostream& out, const Eigen::DenseBase<Derived>& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) io::write_f32(out, static_cast<float>(m(r, c)));
}

template <class Derived>
void read_block(std::istream& in, Eigen::DenseBase<Derived>& m, std::string_view what) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = io::read_f32(in, what);
}

}  // namespace

template <class T>
void ProjectionHead<T>::set_zero_like(const ProjectionHead& other) {
    w1.setZero(other.w1.rows(), other.w1.cols());
    b1.setZero(other.b1.size());
    w2.setZero(other.w2.rows(), other.w2.cols());
    b2.setZero(other.b2.size());
}

template <class T>
EmbeddingState<T> init_embeddings(std::size_t num_users, std::size_t num_items, std::size_t dim,
                                  std::size_t layers, std::uint64_t seed) {
    if (dim < 1) throw ConfigError("embedding dimension must be >= 1");
    EmbeddingState<T> s{num_users, num_items, dim, layers, {}};
    s.table.resize(static_cast<Eigen::Index>(num_users + num_items), static_cast<Eigen::Index>(dim));
    std::mt19937_64 rng(derive_seed(seed, 0xE0));
    std::normal_distribution<double> normal(0.0, 0.1);
    for (Eigen::Index r = 0; r < s.table.rows(); ++r)
        for (Eigen::Index c = 0; c < s.table.cols(); ++c) s.table(r, c) = static_cast<T>(normal(rng));
    return s;
}

template <class T>
ProjectionHead<T> init_projection_head(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                                       std::uint64_t seed) {
    std::mt19937_64 rng(derive_seed(seed, 0x4EAD));
    const auto glorot = [&rng](std::size_t fan_in, std::size_t fan_out) {
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Matrix<T> w(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<T>(dist(rng));
        return w;
    };
    ProjectionHead<T> head;
    head.w1 = glorot(input_dim, hidden_dim);
    head.b1 = Vector<T>::Zero(static_cast<Eigen::Index>(hidden_dim));
    head.w2 = glorot(hidden_dim, output_dim);
    head.b2 = Vector<T>::Zero(static_cast<Eigen::Index>(output_dim));
    return head;
}

template <class T>
Matrix<T> layer_mean(const BipartiteGraph& graph, const Matrix<T>& x, std::size_t layers,
                     std::vector<Matrix<T>>* retained) {
    if (static_cast<std::size_t>(x.rows()) != graph.num_nodes())
        throw ShapeError("graph has " + std::to_string(graph.num_nodes()) + " nodes but embeddings have " +
                         std::to_string(x.rows()) + " rows");
    Matrix<T> acc = x;
    Matrix<T> cur = x, next;
    if (retained) retained->assign(1, x);
    for (std::size_t l = 1; l <= layers; ++l) {
        graph.multiply(cur, next);
        acc += next;
        cur.swap(next);
        if (retained) retained->push_back(cur);
    }
    acc *= T(1) / static_cast<T>(layers + 1);
    return acc;
}

template <class T>
PropagatedEmbeddings<T> propagate(const EmbeddingState<T>& state, const BipartiteGraph& graph, bool retain_layers) {
    if (graph.num_users() != state.num_users || graph.num_items() != state.num_items)
        throw ShapeError("graph shape (" + std::to_string(graph.num_users()) + ", " +
                         std::to_string(graph.num_items()) + ") does not match embeddings (" +
                         std::to_string(state.num_users) + ", " + std::to_string(state.num_items) + ")");
    PropagatedEmbeddings<T> out;
    out.num_users = state.num_users;
    out.final = layer_mean(graph, state.table, state.layers, retain_layers ? &out.layers : nullptr);
    return out;
}

template <class T>
Matrix<T> project_rows(const Matrix<T>& h, const ProjectionHead<T>& head, Matrix<T>* hidden_pre) {
    if (static_cast<std::size_t>(h.cols()) != head.input_dim())
        throw ShapeError("projection input has " + std::to_string(h.cols()) + " columns, head expects " +
                         std::to_string(head.input_dim()));
    Matrix<T> pre = h * head.w1;
    pre.rowwise() += head.b1.transpose();
    Matrix<T> z = pre.cwiseMax(T(0)) * head.w2;
    z.rowwise() += head.b2.transpose();
    if (hidden_pre) *hidden_pre = std::move(pre);
    return z;
}

template <class T>
Matrix<T> project_rows_backward(const Matrix<T>& h, const Matrix<T>& hidden_pre, const Matrix<T>& grad_z,
                                const ProjectionHead<T>& head, ProjectionHead<T>& grads) {
    const Matrix<T> hidden = hidden_pre.cwiseMax(T(0));
    grads.w2.noalias() += hidden.transpose() * grad_z;
    grads.b2 += grad_z.colwise().sum().transpose();
    Matrix<T> grad_pre = grad_z * head.w2.transpose();
    grad_pre = (hidden_pre.array() > T(0)).select(grad_pre, T(0));
    grads.w1.noalias() += h.transpose() * grad_pre;
    grads.b1 += grad_pre.colwise().sum().transpose();
    return grad_pre * head.w1.transpose();
}

template <class T>
Vector<T> project(const Vector<T>& h, const ProjectionHead<T>& head) {
    const Matrix<T> row = h.transpose();
    return project_rows(row, head).row(0).transpose();
}

template <class T>
T predict(const Vector<T>& u, const Vector<T>& v) {
    if (u.size() != v.size()) throw ShapeError("predict: dimension mismatch");
    return u.dot(v);
}

template <class T>
void save_checkpoint(const std::filesystem::path& path, const EmbeddingState<T>& state,
                     const ProjectionHead<T>* head) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint: " + path.string());
    io::write_magic(out, kCkptMagic);
    io::write_u32(out, static_cast<std::uint32_t>(state.num_users));
    io::write_u32(out, static_cast<std::uint32_t>(state.num_items));
    io::write_u32(out, static_cast<std::uint32_t>(state.dim));
    io::write_u32(out, static_cast<std::uint32_t>(state.layers));
    write_block<T>(out, state.table);
    if (head) {
        io::write_u32(out, static_cast<std::uint32_t>(head->input_dim()));
        io::write_u32(out, static_cast<std::uint32_t>(head->hidden_dim()));
        io::write_u32(out, static_cast<std::uint32_t>(head->output_dim()));
        write_block<T>(out, head->w1);
        write_block<T>(out, head->b1);
        write_block<T>(out, head->w2);
        write_block<T>(out, head->b2);
    }
    if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());
    io::expect_magic(in, kCkptMagic);
    Checkpoint ck;
    auto& s = ck.state;
    s.num_users = io::read_u32(in, "num_users");
    s.num_items = io::read_u32(in, "num_items");
    s.dim = io::read_u32(in, "dim");
    s.layers = io::read_u32(in, "layers");
    s.table.resize(static_cast<Eigen::Index>(s.num_users + s.num_items), static_cast<Eigen::Index>(s.dim));
    read_block(in, s.table, "embedding table");
    if (in.peek() != std::char_traits<char>::eof()) {
        const auto d_in = static_cast<Eigen::Index>(io::read_u32(in, "head input dim"));
        const auto d_h = static_cast<Eigen::Index>(io::read_u32(in, "head hidden dim"));
        const auto d_p = static_cast<Eigen::Index>(io::read_u32(in, "head output dim"));
        ProjectionHead<float> head{Matrix<float>(d_in, d_h), Vector<float>(d_h), Matrix<float>(d_h, d_p),
                                   Vector<float>(d_p)};
        read_block(in, head.w1, "head w1");
        read_block(in, head.b1, "head b1");
        read_block(in, head.w2, "head w2");
        read_block(in, head.b2, "head b2");
        ck.head = std::move(head);
    }
    return ck;
}

#define SCL_INSTANTIATE_GCN(T)                                                                               \
    template struct ProjectionHead<T>;                                                                       \
    template EmbeddingState<T> init_embeddings<T>(std::size_t, std::size_t, std::size_t, std::size_t,        \
                                                  std::uint64_t);                                            \
    template ProjectionHead<T> init_projection_head<T>(std::size_t, std::size_t, std::size_t, std::uint64_t); \
    template Matrix<T> layer_mean<T>(const BipartiteGraph&, const Matrix<T>&, std::size_t,                   \
                                     std::vector<Matrix<T>>*);                                               \
    template PropagatedEmbeddings<T> propagate<T>(const EmbeddingState<T>&, const BipartiteGraph&, bool);    \
    template Vector<T> project<T>(const Vector<T>&, const ProjectionHead<T>&);                               \
    template Matrix<T> project_rows<T>(const Matrix<T>&, const ProjectionHead<T>&, Matrix<T>*);              \
    template Matrix<T> project_rows_backward<T>(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&,        \
                                                const ProjectionHead<T>&, ProjectionHead<T>&);               \
    template T predict<T>(const Vector<T>&, const Vector<T>&);                                               \
    template void save_checkpoint<T>(const std::filesystem::path&, const EmbeddingState<T>&,                 \
                                     const ProjectionHead<T>*);

SCL_INSTANTIATE_GCN(float)
SCL_INSTANTIATE_GCN(double)

#undef SCL_INSTANTIATE_GCN

}  // namespace scl
