#pragma once

#include "formulafind/encoder.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace formulafind {

struct CorpusRecord {
    std::string id;
    std::string latex;

    bool operator==(const CorpusRecord&) const = default;
};

class CorpusError : public std::runtime_error {
public:
    enum class Kind { DuplicateId, ParseError, EmptyCorpus, Io };

    CorpusError(Kind kind, std::size_t line, const std::string& what)
        : std::runtime_error(what), kind_(kind), line_(line) {}

    Kind kind() const noexcept { return kind_; }
    std::size_t line() const noexcept { return line_; }

private:
    Kind kind_;
    std::size_t line_;
};

/// A record that failed to encode during ingestion.
struct RecordError {
    std::string id;
    EncodeError::Kind kind;
    std::size_t position;
    std::string message;
};

struct LabeledCorpus {
    std::vector<EncodedExpression> records;
    std::array<std::size_t, kNumComplexityClasses> class_counts{};
    std::vector<RecordError> errors;

    std::size_t size() const noexcept { return records.size(); }
    bool empty() const noexcept { return records.empty(); }

    /// Linear lookup; callers needing many lookups should build an index.
    const EncodedExpression* find(std::string_view id) const;

    std::vector<CorpusRecord> source_records() const;
};

/// One JSON object per line with exactly the keys "id" and "latex". Blank
/// lines are skipped. Throws CorpusError(ParseError) with the 1-based line.
std::vector<CorpusRecord> read_jsonl(std::istream& source);
std::vector<CorpusRecord> read_jsonl_file(const std::string& path);
void write_jsonl(std::span<const CorpusRecord> records, std::ostream& sink);
void write_jsonl_file(std::span<const CorpusRecord> records, const std::string& path);

/// Encodes and labels each record. Encode failures are collected in
/// `errors`; duplicate ids throw CorpusError(DuplicateId).
LabeledCorpus ingest(std::span<const CorpusRecord> records, const Vocabulary& vocab);
LabeledCorpus ingest_jsonl(std::istream& source, const Vocabulary& vocab);

/// Seeded template composition of sums, integrals, fractions, roots and
/// scripts. Target classes are balanced (counts differ by at most one), every
/// record re-labels to its intended class, and code sequences are distinct.
LabeledCorpus generate_synthetic(std::size_t n, std::uint64_t seed, const Vocabulary& vocab = default_vocabulary());

struct SplitIndices {
    std::vector<std::size_t> fit;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;

    /// fit followed by validation: the full training portion.
    std::vector<std::size_t> train() const;
};

inline constexpr double kTestRatio = 0.3;
inline constexpr double kValidationFraction = 0.2;

/// Seeded shuffle; |test| = round(test_ratio * n), then
/// |validation| = round(validation_fraction * |train|).
SplitIndices split_indices(std::size_t n, std::uint64_t seed, double test_ratio = kTestRatio,
                           double validation_fraction = kValidationFraction);

struct CorpusSplit {
    std::vector<EncodedExpression> fit;
    std::vector<EncodedExpression> validation;
    std::vector<EncodedExpression> test;
};

/// Throws CorpusError(EmptyCorpus).
CorpusSplit split(std::span<const EncodedExpression> records, std::uint64_t seed, double test_ratio = kTestRatio,
                  double validation_fraction = kValidationFraction);

} // namespace formulafind
