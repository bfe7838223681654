#include "formulafind/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace formulafind {

namespace {

template <typename T>
T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

} // namespace

template <typename T>
BasicParams<T> BasicParams<T>::zeros(std::size_t vocab, std::size_t embed, std::size_t units, std::size_t classes) {
    const auto V = static_cast<Eigen::Index>(vocab);
    const auto e = static_cast<Eigen::Index>(embed);
    const auto t = static_cast<Eigen::Index>(units);
    const auto c = static_cast<Eigen::Index>(classes);
    return {RowMatrix<T>::Zero(V, e),     RowMatrix<T>::Zero(4 * t, e), RowMatrix<T>::Zero(4 * t, t),
            Vector<T>::Zero(4 * t),       RowMatrix<T>::Zero(c, t),     Vector<T>::Zero(c)};
}

template <typename T>
std::size_t BasicParams<T>::parameter_count() const {
    std::size_t n = 0;
    for_each_tensor([&](const T*, Eigen::Index size) { n += static_cast<std::size_t>(size); });
    return n;
}

template <typename T>
bool BasicParams<T>::all_finite() const {
    bool ok = true;
    for_each_tensor([&](const T* data, Eigen::Index size) {
        for (Eigen::Index i = 0; i < size; ++i) ok = ok && std::isfinite(data[i]);
    });
    return ok;
}

template <typename T>
Vector<T> pool_columns(const RowMatrix<T>& m, Pooling pooling, std::vector<Eigen::Index>* chosen) {
    const Eigen::Index rows = m.rows();
    const Eigen::Index cols = m.cols();
    Vector<T> out(cols);
    if (chosen) chosen->assign(static_cast<std::size_t>(cols), 0);
    std::vector<T> column;
    for (Eigen::Index j = 0; j < cols; ++j) {
        if (pooling == Pooling::Avg) {
            // Summing in sorted order makes the mean independent of row order.
            column.resize(static_cast<std::size_t>(rows));
            for (Eigen::Index r = 0; r < rows; ++r) column[static_cast<std::size_t>(r)] = m(r, j);
            std::sort(column.begin(), column.end());
            T sum = 0;
            for (T v : column) sum += v;
            out[j] = sum / static_cast<T>(rows);
            continue;
        }
        Eigen::Index best = 0;
        for (Eigen::Index r = 1; r < rows; ++r) {
            const bool better = pooling == Pooling::Min ? m(r, j) < m(best, j) : m(r, j) > m(best, j);
            if (better) best = r;
        }
        out[j] = m(best, j);
        if (chosen) (*chosen)[static_cast<std::size_t>(j)] = best;
    }
    return out;
}

template <typename T>
RowMatrix<T> pool_columns_backward(Eigen::Index rows, const Vector<T>& upstream, Pooling pooling,
                                   const std::vector<Eigen::Index>& chosen) {
    RowMatrix<T> dH = RowMatrix<T>::Zero(rows, upstream.size());
    if (pooling == Pooling::Avg) {
        dH.rowwise() = (upstream / static_cast<T>(rows)).transpose();
    } else {
        for (Eigen::Index j = 0; j < upstream.size(); ++j) dH(chosen[static_cast<std::size_t>(j)], j) = upstream[j];
    }
    return dH;
}

template <typename T>
Vector<T> softmax(const Vector<T>& logits) {
    const T shift = logits.maxCoeff();
    Vector<T> e = (logits.array() - shift).exp().matrix();
    return e / e.sum();
}

template <typename T>
T cross_entropy(const Vector<T>& probs, std::size_t label) {
    const T p = std::max(probs[static_cast<Eigen::Index>(label)], static_cast<T>(1e-12));
    return -std::log(p);
}

template <typename T>
ForwardTrace<T> forward_rows(std::span<const std::uint32_t> rows, const BasicParams<T>& params, Pooling pooling) {
    const auto l = static_cast<Eigen::Index>(rows.size());
    const auto e = static_cast<Eigen::Index>(params.embed_dim());
    const auto t = static_cast<Eigen::Index>(params.rnn_units());
    if (l == 0) throw ModelError(ModelError::Kind::DimensionMismatch, "forward needs at least one code");

    ForwardTrace<T> tr;
    tr.embedded.resize(l, e);
    for (Eigen::Index s = 0; s < l; ++s) {
        const auto r = rows[static_cast<std::size_t>(s)];
        if (r >= params.vocab_size()) {
            throw ModelError(ModelError::Kind::CodeOutOfRange,
                             "embedding row " + std::to_string(r) + " >= " + std::to_string(params.vocab_size()));
        }
        tr.embedded.row(s) = params.embedding.row(r);
    }

    // Input contribution for all steps at once.
    RowMatrix<T> pre = tr.embedded * params.lstm_W.transpose();
    pre.rowwise() += params.lstm_b.transpose();

    tr.gates.resize(l, 4 * t);
    tr.cells.resize(l, t);
    tr.rnn_out.resize(l, t);
    Vector<T> h = Vector<T>::Zero(t);
    Vector<T> c = Vector<T>::Zero(t);
    Vector<T> z(4 * t);
    for (Eigen::Index s = 0; s < l; ++s) {
        z.noalias() = pre.row(s).transpose();
        z.noalias() += params.lstm_U * h;
        for (Eigen::Index j = 0; j < t; ++j) {
            const T ig = sigmoid(z[j]);
            const T fg = sigmoid(z[t + j]);
            const T gg = std::tanh(z[2 * t + j]);
            const T og = sigmoid(z[3 * t + j]);
            c[j] = fg * c[j] + ig * gg;
            h[j] = og * std::tanh(c[j]);
            tr.gates(s, j) = ig;
            tr.gates(s, t + j) = fg;
            tr.gates(s, 2 * t + j) = gg;
            tr.gates(s, 3 * t + j) = og;
        }
        tr.cells.row(s) = c.transpose();
        tr.rnn_out.row(s) = h.transpose();
    }

    tr.pooled = pool_columns(tr.rnn_out, pooling, &tr.chosen);
    tr.logits = params.dense_W * tr.pooled + params.dense_b;
    tr.probs = softmax(tr.logits);
    return tr;
}

template <typename T>
BasicParams<T> backward_rows(const ForwardTrace<T>& tr, std::span<const std::uint32_t> rows, std::size_t label,
                             const BasicParams<T>& params, Pooling pooling) {
    const auto l = static_cast<Eigen::Index>(tr.length());
    const auto t = static_cast<Eigen::Index>(params.rnn_units());
    BasicParams<T> grad = BasicParams<T>::zeros(params.vocab_size(), params.embed_dim(), params.rnn_units(),
                                                params.num_classes());

    Vector<T> dlogits = tr.probs;
    dlogits[static_cast<Eigen::Index>(label)] -= T(1);
    grad.dense_W.noalias() = dlogits * tr.pooled.transpose();
    grad.dense_b = dlogits;
    const Vector<T> dpooled = params.dense_W.transpose() * dlogits;

    const RowMatrix<T> dH = pool_columns_backward<T>(l, dpooled, pooling, tr.chosen);

    // Backpropagation through time.
    RowMatrix<T> dZ(l, 4 * t);
    Vector<T> dh_next = Vector<T>::Zero(t);
    Vector<T> dc_next = Vector<T>::Zero(t);
    for (Eigen::Index s = l - 1; s >= 0; --s) {
        for (Eigen::Index j = 0; j < t; ++j) {
            const T ig = tr.gates(s, j);
            const T fg = tr.gates(s, t + j);
            const T gg = tr.gates(s, 2 * t + j);
            const T og = tr.gates(s, 3 * t + j);
            const T c = tr.cells(s, j);
            const T c_prev = s > 0 ? tr.cells(s - 1, j) : T(0);
            const T tc = std::tanh(c);

            const T dh = dH(s, j) + dh_next[j];
            const T d_o = dh * tc;
            const T dc = dh * og * (T(1) - tc * tc) + dc_next[j];
            dc_next[j] = dc * fg;

            dZ(s, j) = dc * gg * ig * (T(1) - ig);
            dZ(s, t + j) = dc * c_prev * fg * (T(1) - fg);
            dZ(s, 2 * t + j) = dc * ig * (T(1) - gg * gg);
            dZ(s, 3 * t + j) = d_o * og * (T(1) - og);
        }
        dh_next.noalias() = params.lstm_U.transpose() * dZ.row(s).transpose();
    }

    grad.lstm_W.noalias() = dZ.transpose() * tr.embedded;
    if (l > 1) grad.lstm_U.noalias() = dZ.bottomRows(l - 1).transpose() * tr.rnn_out.topRows(l - 1);
    grad.lstm_b = dZ.colwise().sum().transpose();

    const RowMatrix<T> dX = dZ * params.lstm_W;
    for (Eigen::Index s = 0; s < l; ++s) grad.embedding.row(rows[static_cast<std::size_t>(s)]) += dX.row(s);
    return grad;
}

#define FORMULAFIND_INSTANTIATE(T)                                                                                  \
    template struct BasicParams<T>;                                                                                \
    template Vector<T> pool_columns<T>(const RowMatrix<T>&, Pooling, std::vector<Eigen::Index>*);                  \
    template RowMatrix<T> pool_columns_backward<T>(Eigen::Index, const Vector<T>&, Pooling,                        \
                                                   const std::vector<Eigen::Index>&);                              \
    template Vector<T> softmax<T>(const Vector<T>&);                                                               \
    template T cross_entropy<T>(const Vector<T>&, std::size_t);                                                    \
    template ForwardTrace<T> forward_rows<T>(std::span<const std::uint32_t>, const BasicParams<T>&, Pooling);      \
    template BasicParams<T> backward_rows<T>(const ForwardTrace<T>&, std::span<const std::uint32_t>, std::size_t, \
                                             const BasicParams<T>&, Pooling);

FORMULAFIND_INSTANTIATE(float)
FORMULAFIND_INSTANTIATE(double)

#undef FORMULAFIND_INSTANTIATE

} // namespace formulafind
