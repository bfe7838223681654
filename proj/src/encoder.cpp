#include "formulafind/encoder.hpp"

#include <array>
#include <cctype>

namespace formulafind {

namespace {

bool is_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::size_t utf8_length(unsigned char lead) {
    if (lead >= 0xF0) return 4;
    if (lead >= 0xE0) return 3;
    if (lead >= 0xC0) return 2;
    return 1;
}

constexpr std::array<std::string_view, 9> kIgnoredCommands = {
    "\\quad", "\\qquad", "\\displaystyle", "\\textstyle", "\\limits", "\\nolimits", "\\scriptstyle", "\\big", "\\Big",
};
constexpr std::array<std::string_view, 4> kTwoArgCommands = {"\\frac", "\\dfrac", "\\tfrac", "\\binom"};
// Commands whose single argument is encoded inline, without group markers.
constexpr std::array<std::string_view, 13> kInlineArgCommands = {
    "\\text",  "\\mathrm", "\\operatorname", "\\mathbf", "\\mathit",   "\\bar",       "\\hat",
    "\\vec",   "\\tilde",  "\\dot",          "\\ddot",   "\\overline", "\\underline",
};

template <std::size_t N>
bool one_of(const std::array<std::string_view, N>& set, std::string_view s) {
    for (auto v : set)
        if (v == s) return true;
    return false;
}

class Encoder {
public:
    Encoder(std::vector<Token> tokens, const Vocabulary& vocab, std::size_t source_len)
        : tokens_(std::move(tokens)), vocab_(vocab), source_len_(source_len) {}

    std::vector<Code> run() {
        parse_sequence(false);
        if (!at_end()) {
            const Token& t = peek();
            throw EncodeError(EncodeError::Kind::MalformedStructure, t.position,
                              "unexpected '" + t.text + "' at top level");
        }
        return std::move(out_);
    }

private:
    using K = Token::Kind;

    bool at_end() const { return pos_ >= tokens_.size(); }
    const Token& peek() const { return tokens_[pos_]; }
    const Token& take() { return tokens_[pos_++]; }
    std::size_t here() const { return at_end() ? source_len_ : peek().position; }

    bool is_end_command() const { return !at_end() && peek().kind == K::Command && peek().text == "\\end"; }

    void emit_keyword(const Token& t) { emit_keyword(t.text, t.position); }

    void emit_keyword(const std::string& key, std::size_t position) {
        auto code = vocab_.code_of(key);
        if (!code) {
            throw EncodeError(EncodeError::Kind::UnknownKeyword, position, "unknown keyword '" + key + "'");
        }
        out_.push_back(*code);
    }

    // Stops before a closing brace, `\end`, end of input, or (inside an
    // optional argument) a closing bracket.
    void parse_sequence(bool stop_at_bracket) {
        while (!at_end()) {
            const Token& t = peek();
            if (t.kind == K::CloseBrace || is_end_command()) return;
            if (stop_at_bracket && t.kind == K::Symbol && t.text == "]") return;
            if (t.kind != K::Superscript && t.kind != K::Subscript) parse_atom();
            parse_scripts();
        }
    }

    void parse_braced_body() {
        take(); // {
        parse_sequence(false);
        if (at_end() || peek().kind != K::CloseBrace) {
            throw EncodeError(EncodeError::Kind::MalformedStructure, here(), "expected '}'");
        }
        take();
    }

    void parse_atom() {
        const Token& t = peek();
        switch (t.kind) {
        case K::Letter:
            take();
            out_.push_back(codes::kVariable);
            return;
        case K::Digit:
        case K::Symbol:
            emit_keyword(take());
            return;
        case K::OpenBrace:
            parse_braced_body();
            return;
        case K::ColumnSep:
            take();
            out_.push_back(codes::kColDelim);
            return;
        case K::RowSep:
            take();
            out_.push_back(codes::kRowDelim);
            return;
        case K::Command:
            parse_command();
            return;
        case K::Superscript:
        case K::Subscript:
        case K::CloseBrace:
            break;
        }
        throw EncodeError(EncodeError::Kind::MalformedStructure, t.position, "unexpected '" + t.text + "'");
    }

    bool can_start_argument() const {
        if (at_end()) return false;
        switch (peek().kind) {
        case K::CloseBrace:
        case K::Superscript:
        case K::Subscript:
        case K::ColumnSep:
        case K::RowSep:
            return false;
        default:
            return !is_end_command();
        }
    }

    // One braced group or a single atom (`\sqrt x`, `\frac12`).
    void parse_argument(EncodeError::Kind failure, std::size_t owner_position, bool wrap) {
        if (!can_start_argument()) {
            throw EncodeError(failure, owner_position, "missing argument");
        }
        if (wrap) out_.push_back(codes::kGroupStart);
        if (peek().kind == K::OpenBrace) {
            parse_braced_body();
        } else {
            parse_atom();
        }
        if (wrap) out_.push_back(codes::kGroupEnd);
    }

    std::string read_environment_name(std::size_t owner_position) {
        if (at_end() || peek().kind != K::OpenBrace) {
            throw EncodeError(EncodeError::Kind::MalformedStructure, owner_position, "expected environment name");
        }
        take();
        std::string name;
        while (!at_end() && peek().kind == K::Letter) name += take().text;
        if (at_end() || peek().kind != K::CloseBrace || name.empty()) {
            throw EncodeError(EncodeError::Kind::MalformedStructure, owner_position, "bad environment name");
        }
        take();
        return name;
    }

    void parse_command() {
        const Token& cmd = take();
        const std::string& name = cmd.text;

        if (one_of(kIgnoredCommands, name)) return;

        if (name == "\\left" || name == "\\right") {
            if (!can_start_argument()) {
                throw EncodeError(EncodeError::Kind::MalformedStructure, cmd.position, name + " needs a delimiter");
            }
            if (peek().kind == K::Symbol && peek().text == ".") {
                take();
                return;
            }
            parse_atom();
            return;
        }

        if (one_of(kTwoArgCommands, name)) {
            emit_keyword(cmd);
            parse_argument(EncodeError::Kind::MalformedStructure, cmd.position, true);
            parse_argument(EncodeError::Kind::MalformedStructure, cmd.position, true);
            return;
        }

        if (name == "\\sqrt") {
            emit_keyword(cmd);
            if (!at_end() && peek().kind == K::Symbol && peek().text == "[") {
                take();
                out_.push_back(codes::kGroupStart);
                parse_sequence(true);
                if (at_end() || peek().text != "]") {
                    throw EncodeError(EncodeError::Kind::MalformedStructure, cmd.position, "unterminated root index");
                }
                take();
                out_.push_back(codes::kGroupEnd);
            }
            parse_argument(EncodeError::Kind::MalformedStructure, cmd.position, true);
            return;
        }

        if (one_of(kInlineArgCommands, name)) {
            emit_keyword(cmd);
            parse_argument(EncodeError::Kind::MalformedStructure, cmd.position, false);
            return;
        }

        if (name == "\\begin") {
            std::string env = read_environment_name(cmd.position);
            emit_keyword("\\begin{" + env + "}", cmd.position);
            parse_sequence(false);
            if (!is_end_command()) {
                throw EncodeError(EncodeError::Kind::MalformedStructure, cmd.position,
                                  "environment '" + env + "' is not closed");
            }
            const Token& end = take();
            std::string closing = read_environment_name(end.position);
            if (closing != env) {
                throw EncodeError(EncodeError::Kind::MalformedStructure, end.position,
                                  "\\end{" + closing + "} does not match \\begin{" + env + "}");
            }
            emit_keyword("\\end{" + env + "}", end.position);
            return;
        }

        if (name == "\\end") {
            throw EncodeError(EncodeError::Kind::MalformedStructure, cmd.position, "\\end without \\begin");
        }

        emit_keyword(cmd);
    }

    // At most one superscript and one subscript per base. When both are
    // present the first one in source order takes the 1000/1001 pair and the
    // second the 1002/1003 pair; a lone script is marked by its kind.
    void parse_scripts() {
        std::size_t head_slot = 0;
        std::size_t tail_slot = 0;
        K first_kind = K::Superscript;
        int count = 0;
        while (!at_end() && (peek().kind == K::Superscript || peek().kind == K::Subscript)) {
            const Token& op = take();
            if (count == 2 || (count == 1 && op.kind == first_kind)) {
                throw EncodeError(EncodeError::Kind::MalformedScript, op.position,
                                  op.kind == K::Superscript ? "double superscript" : "double subscript");
            }
            if (!can_start_argument()) {
                throw EncodeError(EncodeError::Kind::MalformedScript, op.position, "dangling '" + op.text + "'");
            }
            const bool second = count == 1;
            if (!second) first_kind = op.kind;
            std::size_t start_slot = out_.size();
            out_.push_back(second ? codes::kSubStart : 0);
            if (peek().kind == K::OpenBrace) {
                parse_braced_body();
            } else {
                parse_atom();
            }
            out_.push_back(second ? codes::kSubEnd : 0);
            if (!second) {
                head_slot = start_slot;
                tail_slot = out_.size() - 1;
            }
            ++count;
        }
        if (count == 0) return;
        const bool as_sup = count == 2 || first_kind == K::Superscript;
        out_[head_slot] = as_sup ? codes::kSupStart : codes::kSubStart;
        out_[tail_slot] = as_sup ? codes::kSupEnd : codes::kSubEnd;
    }

    std::vector<Token> tokens_;
    const Vocabulary& vocab_;
    std::size_t source_len_;
    std::size_t pos_ = 0;
    std::vector<Code> out_;
};

} // namespace

EncodeError::EncodeError(Kind kind, std::size_t position, const std::string& what)
    : std::runtime_error(position == npos ? what : what + " (at " + std::to_string(position) + ")"),
      kind_(kind),
      position_(position) {}

std::string_view to_string(EncodeError::Kind kind) {
    switch (kind) {
    case EncodeError::Kind::UnbalancedBraces: return "UnbalancedBraces";
    case EncodeError::Kind::UnknownEscape: return "UnknownEscape";
    case EncodeError::Kind::UnknownKeyword: return "UnknownKeyword";
    case EncodeError::Kind::MalformedScript: return "MalformedScript";
    case EncodeError::Kind::MalformedStructure: return "MalformedStructure";
    case EncodeError::Kind::UnbalancedStructure: return "UnbalancedStructure";
    }
    return "Unknown";
}

std::string_view to_string(ComplexityLabel label) {
    switch (label) {
    case ComplexityLabel::Simple: return "Simple";
    case ComplexityLabel::Medium: return "Medium";
    case ComplexityLabel::Complex: return "Complex";
    }
    return "Unknown";
}

std::optional<ComplexityLabel> parse_label(std::string_view name) {
    if (name == "Simple") return ComplexityLabel::Simple;
    if (name == "Medium") return ComplexityLabel::Medium;
    if (name == "Complex") return ComplexityLabel::Complex;
    return std::nullopt;
}

std::vector<Token> tokenize(std::string_view latex) {
    using K = Token::Kind;
    std::vector<Token> tokens;
    std::vector<std::size_t> open_braces;
    std::size_t i = 0;
    const std::size_t n = latex.size();
    while (i < n) {
        const char c = latex[i];
        const std::size_t start = i;
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '~') {
            ++i;
            continue;
        }
        if (c == '\\') {
            if (i + 1 >= n) throw EncodeError(EncodeError::Kind::UnknownEscape, start, "trailing backslash");
            const char next = latex[i + 1];
            if (is_letter(next)) {
                i += 1;
                while (i < n && is_letter(latex[i])) ++i;
                tokens.push_back({K::Command, std::string(latex.substr(start, i - start)), start});
            } else if (next == '\\') {
                i += 2;
                tokens.push_back({K::RowSep, "\\\\", start});
            } else if (next == '{' || next == '}' || next == '|') {
                i += 2;
                tokens.push_back({K::Command, std::string(latex.substr(start, 2)), start});
            } else if (next == ',' || next == ';' || next == ':' || next == '!' || next == ' ') {
                i += 2; // spacing
            } else {
                throw EncodeError(EncodeError::Kind::UnknownEscape, start,
                                  "unknown escape '\\" + std::string(1, next) + "'");
            }
            continue;
        }
        if (is_letter(c)) {
            tokens.push_back({K::Letter, std::string(1, c), start});
        } else if (is_digit(c)) {
            tokens.push_back({K::Digit, std::string(1, c), start});
        } else if (c == '^') {
            tokens.push_back({K::Superscript, "^", start});
        } else if (c == '_') {
            tokens.push_back({K::Subscript, "_", start});
        } else if (c == '{') {
            open_braces.push_back(start);
            tokens.push_back({K::OpenBrace, "{", start});
        } else if (c == '}') {
            if (open_braces.empty()) throw EncodeError(EncodeError::Kind::UnbalancedBraces, start, "unmatched '}'");
            open_braces.pop_back();
            tokens.push_back({K::CloseBrace, "}", start});
        } else if (c == '&') {
            tokens.push_back({K::ColumnSep, "&", start});
        } else {
            const std::size_t len = std::min(utf8_length(static_cast<unsigned char>(c)), n - i);
            tokens.push_back({K::Symbol, std::string(latex.substr(i, len)), start});
            i += len;
            continue;
        }
        ++i;
    }
    if (!open_braces.empty()) {
        throw EncodeError(EncodeError::Kind::UnbalancedBraces, open_braces.back(), "unmatched '{'");
    }
    return tokens;
}

std::vector<Code> encode_codes(std::string_view latex, const Vocabulary& vocab) {
    Encoder encoder(tokenize(latex), vocab, latex.size());
    return encoder.run();
}

EncodedExpression encode(std::string_view latex, const Vocabulary& vocab, std::string id) {
    EncodedExpression expr;
    expr.id = std::move(id);
    expr.latex = std::string(latex);
    expr.codes = encode_codes(latex, vocab);
    expr.depth = nested_depth(expr.codes);
    expr.label = complexity_label(expr.depth);
    return expr;
}

std::uint32_t nested_depth(std::span<const Code> seq) {
    std::vector<Code> open;
    std::uint32_t deepest = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const Code c = seq[i];
        switch (c) {
        case codes::kSupStart:
        case codes::kSubStart:
        case codes::kGroupStart:
            open.push_back(c);
            break;
        case codes::kSupEnd:
        case codes::kSubEnd:
        case codes::kGroupEnd:
            if (open.empty() || open.back() != c - 1) {
                throw EncodeError(EncodeError::Kind::UnbalancedStructure, EncodeError::npos,
                                  "unbalanced structural code " + std::to_string(c) + " at index " + std::to_string(i));
            }
            open.pop_back();
            break;
        default:
            deepest = std::max(deepest, static_cast<std::uint32_t>(open.size()));
        }
    }
    if (!open.empty()) {
        throw EncodeError(EncodeError::Kind::UnbalancedStructure, EncodeError::npos,
                          std::to_string(open.size()) + " structural region(s) left open");
    }
    return deepest;
}

} // namespace formulafind
