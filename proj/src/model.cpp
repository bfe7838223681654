#include "formulafind/model.hpp"
#include "formulafind/random.hpp"

#include <algorithm>
#include <cmath>

namespace formulafind {

std::string_view to_string(Pooling pooling) {
    switch (pooling) {
    case Pooling::Min: return "min";
    case Pooling::Avg: return "avg";
    case Pooling::Max: return "max";
    }
    return "unknown";
}

std::optional<Pooling> parse_pooling(std::string_view name) {
    if (name == "min") return Pooling::Min;
    if (name == "avg") return Pooling::Avg;
    if (name == "max") return Pooling::Max;
    return std::nullopt;
}

std::string_view to_string(ModelError::Kind kind) {
    switch (kind) {
    case ModelError::Kind::CodeOutOfRange: return "CodeOutOfRange";
    case ModelError::Kind::DimensionMismatch: return "DimensionMismatch";
    case ModelError::Kind::InvalidConfig: return "InvalidConfig";
    case ModelError::Kind::MissingClass: return "MissingClass";
    case ModelError::Kind::EmptyCorpus: return "EmptyCorpus";
    case ModelError::Kind::BadMagic: return "BadMagic";
    case ModelError::Kind::VersionMismatch: return "VersionMismatch";
    case ModelError::Kind::TruncatedFile: return "TruncatedFile";
    case ModelError::Kind::Io: return "Io";
    }
    return "Unknown";
}

void ModelConfig::validate() const {
    auto fail = [](const std::string& what) { throw ModelError(ModelError::Kind::InvalidConfig, what); };
    if (vocab_size < 1) fail("vocab_size must be >= 1");
    if (embed_dim < 1) fail("embed_dim must be >= 1");
    if (rnn_units < 1) fail("rnn_units must be >= 1");
    if (num_classes < 1) fail("num_classes must be >= 1");
    if (!(learning_rate > 0)) fail("learning_rate must be positive");
    if (max_epochs < 1) fail("max_epochs must be >= 1");
    if (!(clip_norm > 0)) fail("clip_norm must be positive");
}

CodeIndex::CodeIndex(std::vector<Code> sorted_codes) : codes_(std::move(sorted_codes)) {
    for (std::size_t i = 1; i < codes_.size(); ++i) {
        if (codes_[i - 1] >= codes_[i]) {
            throw ModelError(ModelError::Kind::DimensionMismatch, "code remap table must be strictly ascending");
        }
    }
}

std::uint32_t CodeIndex::row_of(Code code) const {
    auto it = std::lower_bound(codes_.begin(), codes_.end(), code);
    if (it == codes_.end() || *it != code) {
        throw ModelError(ModelError::Kind::CodeOutOfRange, "code " + std::to_string(code) + " has no embedding row");
    }
    return static_cast<std::uint32_t>(it - codes_.begin());
}

std::vector<std::uint32_t> CodeIndex::rows_of(std::span<const Code> seq) const {
    std::vector<std::uint32_t> rows;
    rows.reserve(seq.size());
    for (Code c : seq) rows.push_back(row_of(c));
    return rows;
}

Model initialize_model(ModelConfig config, CodeIndex index) {
    config.vocab_size = static_cast<std::uint32_t>(index.size());
    config.validate();
    Model model{config, std::move(index), ModelParams::zeros(config)};
    Rng rng(config.seed);
    auto fill = [&rng](auto& tensor, double limit) {
        for (Eigen::Index i = 0; i < tensor.size(); ++i) {
            tensor.data()[i] = static_cast<float>(rng.uniform(-limit, limit));
        }
    };
    const double e = config.embed_dim;
    const double t = config.rnn_units;
    const double c = config.num_classes;
    auto& p = model.params;
    fill(p.embedding, 0.05);
    fill(p.lstm_W, std::sqrt(6.0 / (e + 4 * t)));
    fill(p.lstm_U, std::sqrt(6.0 / (t + 4 * t)));
    fill(p.dense_W, std::sqrt(6.0 / (t + c)));
    p.lstm_b.setZero();
    p.lstm_b.segment(config.rnn_units, config.rnn_units).setOnes();
    p.dense_b.setZero();
    return model;
}

ForwardTrace<float> forward(std::span<const Code> seq, const Model& model) {
    const auto rows = model.index.rows_of(seq);
    return forward_rows<float>(rows, model.params, model.config.pooling);
}

FeatureVector extract_features(std::span<const Code> seq, const Model& model, std::string expr_id) {
    auto trace = forward(seq, model);
    FeatureVector fv;
    fv.expr_id = std::move(expr_id);
    fv.values.assign(trace.pooled.data(), trace.pooled.data() + trace.pooled.size());
    return fv;
}

std::size_t predict(std::span<const Code> seq, const Model& model) {
    auto trace = forward(seq, model);
    Eigen::Index best = 0;
    trace.probs.maxCoeff(&best);
    return static_cast<std::size_t>(best);
}

} // namespace formulafind
