#pragma once

#include "formulafind/digest.hpp"
#include "formulafind/encoder.hpp"
#include "formulafind/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace formulafind {

class RetrievalError : public std::runtime_error {
public:
    enum class Kind { DimensionMismatch, EmptyDatabase, InvalidArgument, DuplicateId, BadMagic, VersionMismatch, TruncatedFile, Io };

    RetrievalError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

std::string_view to_string(RetrievalError::Kind kind);

/// Feature vectors stored row-major in one flat buffer, in corpus order.
class FeatureDatabase {
public:
    FeatureDatabase() = default;
    explicit FeatureDatabase(std::uint32_t dim, Digest checkpoint_digest = {})
        : dim_(dim), checkpoint_digest_(checkpoint_digest) {}

    /// Throws RetrievalError(DimensionMismatch | DuplicateId).
    void add(std::string id, std::span<const float> values);

    std::uint32_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }
    const Digest& checkpoint_digest() const noexcept { return checkpoint_digest_; }

    const std::string& id(std::size_t i) const { return ids_[i]; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    std::span<const float> vector(std::size_t i) const {
        return {values_.data() + i * dim_, static_cast<std::size_t>(dim_)};
    }
    std::optional<std::size_t> index_of(std::string_view id) const;

    bool operator==(const FeatureDatabase& other) const {
        return dim_ == other.dim_ && checkpoint_digest_ == other.checkpoint_digest_ && ids_ == other.ids_ &&
               values_ == other.values_;
    }

private:
    std::uint32_t dim_ = 0;
    Digest checkpoint_digest_{};
    std::vector<std::string> ids_;
    std::vector<float> values_;
};

/// One vector per expression via extract_features, bound to the SHA-256 of
/// the model's checkpoint bytes. An offending id is named when a code is
/// outside the model's index.
FeatureDatabase build_feature_db(std::span<const EncodedExpression> corpus, const Model& model);

/// Accumulated in double. Throws RetrievalError(DimensionMismatch).
double euclidean_distance(std::span<const float> a, std::span<const float> b);

/// Two-row dynamic program, O(|a|·|b|).
std::size_t lcs_length(std::span<const Code> a, std::span<const Code> b);

enum class Method { Semantic, Lcs };

std::string_view to_string(Method method);
std::optional<Method> parse_method(std::string_view name);

struct Hit {
    std::size_t index = 0; // position in the database / corpus
    std::string id;
    double score = 0; // distance for Semantic, match length (or ratio) for Lcs

    bool operator==(const Hit&) const = default;
};

struct RankedResult {
    Method method = Method::Semantic;
    std::vector<Hit> hits;

    bool operator==(const RankedResult&) const = default;
};

struct QueryOptions {
    std::size_t k = 5;
    /// Drop entries at distance 0 (Semantic) or with an identical code
    /// sequence (Lcs) before taking the top k.
    bool exclude_self = false;
    /// Lcs only: score by length / max(|a|, |b|) instead of raw length.
    bool normalized_lcs = false;
    /// Lcs only: scan partitions; 0 picks the hardware concurrency.
    unsigned workers = 1;
};

/// k smallest distances, ties by database order. An empty database yields no
/// hits. Throws RetrievalError(InvalidArgument | DimensionMismatch).
RankedResult rank_semantic(std::span<const float> query, const FeatureDatabase& db, const QueryOptions& options = {});

/// k best by score descending, ties by shorter database sequence, then
/// database order. Result is independent of the worker count.
RankedResult rank_lcs(std::span<const Code> query, std::span<const EncodedExpression> corpus,
                      const QueryOptions& options = {});

/// Encode + extract + rank. Throws EncodeError.
RankedResult query_semantic(std::string_view latex, const FeatureDatabase& db, const Model& model,
                            const Vocabulary& vocab, const QueryOptions& options = {});
RankedResult query_lcs(std::string_view latex, std::span<const EncodedExpression> corpus, const Vocabulary& vocab,
                       const QueryOptions& options = {});

// Feature DB format: "MERF" | version u32 | count u32 | t u32 | checkpoint
// SHA-256 (32 bytes) | per entry: id length u16, UTF-8 id, t f32 values. All
// little endian.
inline constexpr std::uint32_t kFeatureDbVersion = 1;
inline constexpr std::size_t kFeatureDbHeaderBytes = 48;

std::string db_bytes(const FeatureDatabase& db);
void save_db(const FeatureDatabase& db, std::ostream& sink);
/// Throws RetrievalError(BadMagic | VersionMismatch | TruncatedFile | DimensionMismatch | DuplicateId).
FeatureDatabase load_db_bytes(std::string_view bytes);
FeatureDatabase load_db(std::istream& source);
void save_db_file(const FeatureDatabase& db, const std::string& path);
FeatureDatabase load_db_file(const std::string& path);

struct BenchOptions {
    std::vector<std::size_t> sizes = {1000, 2000, 4000};
    std::size_t trials = 9;
    /// Semantic queries per trial; the trial time is their mean.
    std::size_t semantic_repeats = 1000;
    std::size_t lcs_trials = 3;
    std::uint32_t dim = 64;
    std::size_t code_length = 200;
    std::size_t k = 5;
    std::uint64_t seed = 1;
};

struct BenchRow {
    std::size_t size = 0;
    double semantic_seconds = 0; // median per-query latency
    double lcs_seconds = 0;
};

/// Times the ranking scan alone over random vectors and random code
/// sequences of `code_length`. Throws RetrievalError(InvalidArgument) unless
/// sizes ascend.
std::vector<BenchRow> bench_scaling(const BenchOptions& options);
void write_bench_csv(std::span<const BenchRow> rows, std::ostream& sink);

} // namespace formulafind
