#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace formulafind {

using Code = std::uint32_t;

// Structural codes. These are never assigned to keywords.
namespace codes {
inline constexpr Code kSupStart = 1000;
inline constexpr Code kSupEnd = 1001;
inline constexpr Code kSubStart = 1002;
inline constexpr Code kSubEnd = 1003;
inline constexpr Code kVariable = 1004;
inline constexpr Code kRowDelim = 1005;
inline constexpr Code kColDelim = 1006;
inline constexpr Code kGroupStart = 1007;
inline constexpr Code kGroupEnd = 1008;

inline constexpr Code kReservedFirst = 1000;
inline constexpr Code kReservedLast = 1008;

constexpr bool is_reserved(Code c) { return c >= kReservedFirst && c <= kReservedLast; }
} // namespace codes

enum class ComplexityLabel : std::uint8_t { Simple = 0, Medium = 1, Complex = 2 };

inline constexpr std::size_t kNumComplexityClasses = 3;

std::string_view to_string(ComplexityLabel label);
std::optional<ComplexityLabel> parse_label(std::string_view name);

/// Error raised by tokenize/encode/nested_depth. `position` is a byte offset
/// into the LaTeX source, or npos when the failure is not tied to one.
class EncodeError : public std::runtime_error {
public:
    enum class Kind {
        UnbalancedBraces,
        UnknownEscape,
        UnknownKeyword,
        MalformedScript,
        MalformedStructure,
        UnbalancedStructure,
    };

    EncodeError(Kind kind, std::size_t position, const std::string& what);

    Kind kind() const noexcept { return kind_; }
    std::size_t position() const noexcept { return position_; }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    Kind kind_;
    std::size_t position_;
};

std::string_view to_string(EncodeError::Kind kind);

class VocabularyError : public std::runtime_error {
public:
    enum class Kind { DuplicateKeyword, DuplicateCode, ReservedCodeCollision, ParseError };

    VocabularyError(Kind kind, std::size_t line, const std::string& what);

    Kind kind() const noexcept { return kind_; }
    /// 1-based line number in the source; 0 when not tied to a line.
    std::size_t line() const noexcept { return line_; }

private:
    Kind kind_;
    std::size_t line_;
};

/// Bidirectional keyword <-> code map. The reserved structural codes are
/// implicitly part of every vocabulary and cannot be redefined.
class Vocabulary {
public:
    Vocabulary() = default;

    /// Throws VocabularyError on duplicate keys or codes, or reserved codes.
    void add(std::string keyword, Code code);

    std::optional<Code> code_of(std::string_view keyword) const;
    std::optional<std::string_view> keyword_of(Code code) const;

    /// True for keyword codes and the reserved structural codes.
    bool contains_code(Code code) const;

    std::size_t size() const noexcept { return by_keyword_.size(); }
    bool empty() const noexcept { return by_keyword_.empty(); }

    /// Every code the encoder can emit: keyword codes plus reserved codes,
    /// ascending.
    std::vector<Code> all_codes() const;

    const std::map<std::string, Code, std::less<>>& entries() const noexcept { return by_keyword_; }

private:
    std::map<std::string, Code, std::less<>> by_keyword_;
    std::map<Code, std::string> by_code_;
};

/// Parses the TSV vocabulary format: `keyword<TAB>code` per line, `#` comments.
Vocabulary load_vocabulary(std::istream& source);
Vocabulary load_vocabulary_file(const std::string& path);

/// The vocabulary shipped in data/default_vocab.tsv.
const Vocabulary& default_vocabulary();
std::string_view default_vocabulary_text();

struct Token {
    enum class Kind {
        Command,     // \word or \{ \} \|
        Letter,
        Digit,
        Symbol,
        Superscript, // ^
        Subscript,   // _
        OpenBrace,
        CloseBrace,
        ColumnSep,   // &
        RowSep,      // \\ (double backslash)
    };

    Kind kind;
    std::string text;
    std::size_t position;

    bool operator==(const Token&) const = default;
};

std::vector<Token> tokenize(std::string_view latex);

struct EncodedExpression {
    std::string id;
    std::string latex;
    std::vector<Code> codes;
    std::uint32_t depth = 0;
    ComplexityLabel label = ComplexityLabel::Simple;
};

/// Integer-encodes `latex`. Scripts, structural arguments and matrix
/// delimiters are marked with the reserved codes; every single letter maps to
/// codes::kVariable.
std::vector<Code> encode_codes(std::string_view latex, const Vocabulary& vocab);

EncodedExpression encode(std::string_view latex, const Vocabulary& vocab, std::string id = {});

/// Maximum number of enclosing superscript/subscript/group regions around any
/// non-marker code. Throws EncodeError(UnbalancedStructure) on bad nesting.
std::uint32_t nested_depth(std::span<const Code> codes);
inline std::uint32_t nested_depth(const EncodedExpression& expr) { return nested_depth(expr.codes); }

constexpr ComplexityLabel complexity_label(std::uint32_t depth) {
    if (depth == 0) return ComplexityLabel::Simple;
    if (depth == 1) return ComplexityLabel::Medium;
    return ComplexityLabel::Complex;
}

} // namespace formulafind
