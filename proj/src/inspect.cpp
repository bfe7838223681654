#include "formulafind/inspect.hpp"

#include <cmath>
#include <ostream>

namespace formulafind {

RowMatrix<float> heatmap(std::string_view latex, const Model& model, const Vocabulary& vocab) {
    const auto expr = encode(latex, vocab);
    return forward(expr.codes, model).rnn_out;
}

void write_heatmap_csv(const RowMatrix<float>& m, std::ostream& sink) {
    const auto old_precision = sink.precision(9);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) sink << ',';
            sink << m(r, c);
        }
        sink << '\n';
    }
    sink.precision(old_precision);
}

std::vector<std::uint8_t> normalize_heatmap(const RowMatrix<float>& m) {
    std::vector<std::uint8_t> px(static_cast<std::size_t>(m.size()), 0);
    if (m.size() == 0) return px;
    const double lo = m.minCoeff();
    const double span = static_cast<double>(m.maxCoeff()) - lo;
    if (span <= 0) return px;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        px[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::lround((m.data()[i] - lo) / span * 255.0));
    }
    return px;
}

void write_heatmap_pgm(const RowMatrix<float>& m, std::ostream& sink) {
    const auto px = normalize_heatmap(m);
    sink << "P5\n" << m.cols() << ' ' << m.rows() << "\n255\n";
    sink.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

} // namespace formulafind
