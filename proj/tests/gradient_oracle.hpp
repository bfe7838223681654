#pragma once

// Test-only references: a scalar column reducer and a central-difference
// gradient checker that share nothing with the analytic backward pass.

#include "formulafind/model.hpp"
#include "formulafind/random.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace oracle {

using formulafind::BasicParams;
using formulafind::Pooling;
using formulafind::RowMatrix;

inline std::vector<double> reduce_columns(const RowMatrix<double>& m, Pooling pooling) {
    std::vector<double> out;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        double acc = pooling == Pooling::Avg ? 0.0 : m(0, j);
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            const double v = m(r, j);
            if (pooling == Pooling::Avg) acc += v;
            else if (pooling == Pooling::Min) acc = std::min(acc, v);
            else acc = std::max(acc, v);
        }
        out.push_back(pooling == Pooling::Avg ? acc / static_cast<double>(m.rows()) : acc);
    }
    return out;
}

struct Problem {
    BasicParams<double> params;
    std::vector<std::uint32_t> rows;
    std::size_t label = 0;
};

inline Problem random_problem(std::uint64_t seed, std::size_t vocab, std::size_t embed, std::size_t units,
                              std::size_t classes) {
    formulafind::Rng rng(seed * 7919 + 1);
    Problem p{BasicParams<double>::zeros(vocab, embed, units, classes), {}, 0};
    p.params.for_each_tensor([&](double* d, Eigen::Index n) {
        for (Eigen::Index i = 0; i < n; ++i) d[i] = rng.uniform(-0.6, 0.6);
    });
    const std::size_t len = 3 + rng.below(8);
    for (std::size_t i = 0; i < len; ++i) p.rows.push_back(static_cast<std::uint32_t>(rng.below(vocab)));
    p.label = rng.below(classes);
    return p;
}

inline double loss_at(const Problem& p, const BasicParams<double>& params, Pooling pooling) {
    auto tr = formulafind::forward_rows<double>(p.rows, params, pooling);
    return formulafind::cross_entropy<double>(tr.probs, p.label);
}

struct GradientCheck {
    double max_relative_error = 0;
    std::string worst_tensor;
    std::size_t checked = 0;
};

inline double relative_error(double analytic, double numeric) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / scale;
}

// Central differences with h = 1e-5 over every parameter entry.
inline GradientCheck check_gradient(const Problem& p, Pooling pooling, double h = 1e-5) {
    auto tr = formulafind::forward_rows<double>(p.rows, p.params, pooling);
    auto analytic = formulafind::backward_rows<double>(tr, p.rows, p.label, p.params, pooling);

    static const char* names[] = {"embedding", "lstm_W", "lstm_U", "lstm_b", "dense_W", "dense_b"};
    std::vector<const double*> grads;
    analytic.for_each_tensor([&](const double* d, Eigen::Index) { grads.push_back(d); });

    GradientCheck out;
    BasicParams<double> probe = p.params;
    std::size_t tensor = 0;
    probe.for_each_tensor([&](double* d, Eigen::Index n) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double saved = d[i];
            d[i] = saved + h;
            const double up = loss_at(p, probe, pooling);
            d[i] = saved - h;
            const double down = loss_at(p, probe, pooling);
            d[i] = saved;
            const double numeric = (up - down) / (2 * h);
            const double err = relative_error(grads[tensor][i], numeric);
            if (err > out.max_relative_error) {
                out.max_relative_error = err;
                out.worst_tensor = std::string(names[tensor]) + "[" + std::to_string(i) + "]";
            }
            ++out.checked;
        }
        ++tensor;
    });
    return out;
}

} // namespace oracle
