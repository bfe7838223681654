#pragma once

#include "formulafind/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace formulafind {

/// The l x t recurrent output for one expression. Throws EncodeError.
RowMatrix<float> heatmap(std::string_view latex, const Model& model, const Vocabulary& vocab);

void write_heatmap_csv(const RowMatrix<float>& m, std::ostream& sink);

/// Row-major pixels, round((v - min) / (max - min) * 255); all zero when the
/// matrix is constant.
std::vector<std::uint8_t> normalize_heatmap(const RowMatrix<float>& m);

/// Binary (P5) 8-bit PGM, t pixels wide and l tall.
void write_heatmap_pgm(const RowMatrix<float>& m, std::ostream& sink);

} // namespace formulafind
