#pragma once

#include "formulafind/encoder.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace formulafind {

enum class Pooling : std::uint8_t { Min = 0, Avg = 1, Max = 2 };

std::string_view to_string(Pooling pooling);
std::optional<Pooling> parse_pooling(std::string_view name);

class ModelError : public std::runtime_error {
public:
    enum class Kind {
        CodeOutOfRange,
        DimensionMismatch,
        InvalidConfig,
        MissingClass,
        EmptyCorpus,
        BadMagic,
        VersionMismatch,
        TruncatedFile,
        Io,
    };

    ModelError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

std::string_view to_string(ModelError::Kind kind);

struct ModelConfig {
    std::uint32_t vocab_size = 0;
    std::uint32_t embed_dim = 16;
    std::uint32_t rnn_units = 64;
    std::uint32_t num_classes = static_cast<std::uint32_t>(kNumComplexityClasses);
    Pooling pooling = Pooling::Min;
    std::uint64_t seed = 7;

    // Adam with global gradient-norm clipping, batch size 1.
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double clip_norm = 5.0;
    std::uint32_t max_epochs = 50;
    std::uint32_t patience = 10;

    /// Throws ModelError(InvalidConfig).
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

/// Trainable state. LSTM gate blocks are stacked in i, f, g, o order along the
/// rows of lstm_W / lstm_U / lstm_b.
template <typename T>
struct BasicParams {
    RowMatrix<T> embedding; // V x e
    RowMatrix<T> lstm_W;    // 4t x e
    RowMatrix<T> lstm_U;    // 4t x t
    Vector<T> lstm_b;       // 4t
    RowMatrix<T> dense_W;   // c x t
    Vector<T> dense_b;      // c

    static BasicParams zeros(std::size_t vocab, std::size_t embed, std::size_t units, std::size_t classes);
    static BasicParams zeros(const ModelConfig& config) {
        return zeros(config.vocab_size, config.embed_dim, config.rnn_units, config.num_classes);
    }

    std::size_t vocab_size() const { return static_cast<std::size_t>(embedding.rows()); }
    std::size_t embed_dim() const { return static_cast<std::size_t>(embedding.cols()); }
    std::size_t rnn_units() const { return static_cast<std::size_t>(lstm_U.cols()); }
    std::size_t num_classes() const { return static_cast<std::size_t>(dense_W.rows()); }

    std::size_t parameter_count() const;

    /// Calls fn(data, size) on every tensor in checkpoint order.
    template <typename Fn>
    void for_each_tensor(Fn&& fn) {
        fn(embedding.data(), embedding.size());
        fn(lstm_W.data(), lstm_W.size());
        fn(lstm_U.data(), lstm_U.size());
        fn(lstm_b.data(), lstm_b.size());
        fn(dense_W.data(), dense_W.size());
        fn(dense_b.data(), dense_b.size());
    }
    template <typename Fn>
    void for_each_tensor(Fn&& fn) const {
        fn(embedding.data(), embedding.size());
        fn(lstm_W.data(), lstm_W.size());
        fn(lstm_U.data(), lstm_U.size());
        fn(lstm_b.data(), lstm_b.size());
        fn(dense_W.data(), dense_W.size());
        fn(dense_b.data(), dense_b.size());
    }

    template <typename U>
    BasicParams<U> cast() const {
        return {embedding.template cast<U>(), lstm_W.template cast<U>(), lstm_U.template cast<U>(),
                lstm_b.template cast<U>(), dense_W.template cast<U>(), dense_b.template cast<U>()};
    }

    bool all_finite() const;

    bool operator==(const BasicParams& other) const {
        return embedding == other.embedding && lstm_W == other.lstm_W && lstm_U == other.lstm_U &&
               lstm_b == other.lstm_b && dense_W == other.dense_W && dense_b == other.dense_b;
    }
};

using ModelParams = BasicParams<float>;

/// Per-example activations kept for backpropagation.
template <typename T>
struct ForwardTrace {
    RowMatrix<T> embedded; // l x e
    RowMatrix<T> rnn_out;  // l x t, hidden state per step
    Vector<T> pooled;      // t
    Vector<T> logits;      // c
    Vector<T> probs;       // c

    RowMatrix<T> gates;               // l x 4t, post-activation i, f, g, o
    RowMatrix<T> cells;               // l x t
    std::vector<Eigen::Index> chosen; // min/max pooling: selected row per column

    std::size_t length() const { return static_cast<std::size_t>(rnn_out.rows()); }
};

/// Column-wise reduction. For Min/Max, `chosen` receives the first row that
/// attains the extreme in each column.
template <typename T>
Vector<T> pool_columns(const RowMatrix<T>& m, Pooling pooling, std::vector<Eigen::Index>* chosen = nullptr);

/// Gradient of the pooled vector with respect to the l x t pooling input:
/// Avg spreads upstream / l over every row, Min/Max route it to `chosen`.
template <typename T>
RowMatrix<T> pool_columns_backward(Eigen::Index rows, const Vector<T>& upstream, Pooling pooling,
                                   const std::vector<Eigen::Index>& chosen);

template <typename T>
Vector<T> softmax(const Vector<T>& logits);

/// -log(probs[label]) with the probability clamped at 1e-12.
template <typename T>
T cross_entropy(const Vector<T>& probs, std::size_t label);

/// Rows are dense embedding indices (see CodeIndex).
template <typename T>
ForwardTrace<T> forward_rows(std::span<const std::uint32_t> rows, const BasicParams<T>& params, Pooling pooling);

/// Gradient of cross_entropy(trace.probs, label) with respect to every
/// parameter, backpropagated through all steps.
template <typename T>
BasicParams<T> backward_rows(const ForwardTrace<T>& trace, std::span<const std::uint32_t> rows, std::size_t label,
                             const BasicParams<T>& params, Pooling pooling);

/// Dense remap of sparse vocabulary codes to embedding rows: sorted unique
/// codes, row = position.
class CodeIndex {
public:
    CodeIndex() = default;
    /// Throws ModelError(DimensionMismatch) unless strictly ascending.
    explicit CodeIndex(std::vector<Code> sorted_codes);

    static CodeIndex from_vocabulary(const Vocabulary& vocab) { return CodeIndex(vocab.all_codes()); }

    /// Throws ModelError(CodeOutOfRange).
    std::uint32_t row_of(Code code) const;
    std::vector<std::uint32_t> rows_of(std::span<const Code> seq) const;

    std::size_t size() const noexcept { return codes_.size(); }
    const std::vector<Code>& codes() const noexcept { return codes_; }

    bool operator==(const CodeIndex&) const = default;

private:
    std::vector<Code> codes_;
};

struct Model {
    ModelConfig config;
    CodeIndex index;
    ModelParams params;
};

/// Seeded initialization: embedding U(-0.05, 0.05), Glorot-uniform LSTM and
/// dense weights, zero biases except the forget gate at 1.
Model initialize_model(ModelConfig config, CodeIndex index);

struct FeatureVector {
    std::string expr_id;
    std::vector<float> values;

    bool operator==(const FeatureVector&) const = default;
};

ForwardTrace<float> forward(std::span<const Code> seq, const Model& model);

/// Pooled RNN output; the dense layer is not involved.
FeatureVector extract_features(std::span<const Code> seq, const Model& model, std::string expr_id = {});

std::size_t predict(std::span<const Code> seq, const Model& model);

struct EpochStats {
    std::uint32_t epoch = 0;
    double train_loss = 0;
    double train_accuracy = 0;
    double validation_loss = 0;
    double validation_accuracy = 0;

    bool operator==(const EpochStats&) const = default;
};

struct TrainingReport {
    std::uint32_t embed_dim = 0;
    std::uint32_t rnn_units = 0;
    Pooling pooling = Pooling::Min;
    std::uint64_t seed = 0;
    std::size_t fit_size = 0;
    std::size_t validation_size = 0;
    std::size_t test_size = 0;
    std::vector<EpochStats> epochs;
    std::uint32_t best_epoch = 0;
    // Accuracies of the returned (best-validation) parameters. Train covers
    // the fit and validation portions together.
    double train_accuracy = 0;
    double validation_accuracy = 0;
    double test_accuracy = 0;

    bool operator==(const TrainingReport&) const = default;
};

struct TrainResult {
    Model model;
    TrainingReport report;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// 70:30 train:test split with 20% of train held out for validation,
/// per-example Adam updates, best-validation snapshot with early stopping.
/// Throws ModelError(EmptyCorpus | MissingClass).
TrainResult train(std::span<const EncodedExpression> corpus, const ModelConfig& config, const CodeIndex& index,
                  const EpochCallback& on_epoch = {});

double accuracy(std::span<const EncodedExpression> examples, const Model& model);

struct SweepRow {
    std::uint32_t embed_dim = 0;
    std::uint32_t rnn_units = 0;
    double train_accuracy = 0;
    double test_accuracy = 0;
    TrainingReport report;
};

/// Trains one model per (embed_dim, rnn_units) pair, all with the seed and
/// split of `base`.
std::vector<SweepRow> sweep(std::span<const EncodedExpression> corpus, const ModelConfig& base,
                            std::span<const std::pair<std::uint32_t, std::uint32_t>> configs, const CodeIndex& index,
                            const EpochCallback& on_epoch = {});

// Checkpoint format: "MERM" | version u32 | V, e, t, c u32 | V code remap
// entries u32 | f32 tensors in BasicParams::for_each_tensor order. All little
// endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::size_t kCheckpointHeaderBytes = 24;

void save_checkpoint(const Model& model, std::ostream& sink);
std::string checkpoint_bytes(const Model& model);
/// The returned config has the stored dimensions and default pooling/training
/// settings; pass `pooling` to override.
Model load_checkpoint(std::istream& source, Pooling pooling = Pooling::Min);
Model load_checkpoint_bytes(std::string_view bytes, Pooling pooling = Pooling::Min);

void save_checkpoint_file(const Model& model, const std::string& path);
Model load_checkpoint_file(const std::string& path, Pooling pooling = Pooling::Min);

} // namespace formulafind
