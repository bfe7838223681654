#include "formulafind/encoder.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

namespace formulafind {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

} // namespace

VocabularyError::VocabularyError(Kind kind, std::size_t line, const std::string& what)
    : std::runtime_error(what), kind_(kind), line_(line) {}

void Vocabulary::add(std::string keyword, Code code) {
    if (codes::is_reserved(code)) {
        throw VocabularyError(VocabularyError::Kind::ReservedCodeCollision, 0,
                              "code " + std::to_string(code) + " for '" + keyword + "' is reserved");
    }
    if (by_keyword_.contains(keyword)) {
        throw VocabularyError(VocabularyError::Kind::DuplicateKeyword, 0, "duplicate keyword '" + keyword + "'");
    }
    if (by_code_.contains(code)) {
        throw VocabularyError(VocabularyError::Kind::DuplicateCode, 0,
                              "duplicate code " + std::to_string(code) + " for '" + keyword + "'");
    }
    by_code_.emplace(code, keyword);
    by_keyword_.emplace(std::move(keyword), code);
}

std::optional<Code> Vocabulary::code_of(std::string_view keyword) const {
    auto it = by_keyword_.find(keyword);
    if (it == by_keyword_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::string_view> Vocabulary::keyword_of(Code code) const {
    auto it = by_code_.find(code);
    if (it == by_code_.end()) return std::nullopt;
    return std::string_view(it->second);
}

bool Vocabulary::contains_code(Code code) const { return codes::is_reserved(code) || by_code_.contains(code); }

std::vector<Code> Vocabulary::all_codes() const {
    std::vector<Code> out;
    out.reserve(by_code_.size() + 9);
    for (const auto& [code, _] : by_code_) out.push_back(code);
    for (Code c = codes::kReservedFirst; c <= codes::kReservedLast; ++c) out.push_back(c);
    std::sort(out.begin(), out.end());
    return out;
}

Vocabulary load_vocabulary(std::istream& source) {
    Vocabulary vocab;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(source, raw)) {
        ++line_no;
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;

        auto tab = line.find('\t');
        if (tab == std::string_view::npos || tab == 0) {
            throw VocabularyError(VocabularyError::Kind::ParseError, line_no,
                                  "line " + std::to_string(line_no) + ": expected keyword<TAB>code");
        }
        std::string_view keyword = line.substr(0, tab);
        std::string_view code_text = trim(line.substr(tab + 1));
        Code code = 0;
        auto [end, ec] = std::from_chars(code_text.data(), code_text.data() + code_text.size(), code);
        if (ec != std::errc{} || end != code_text.data() + code_text.size() || code_text.empty()) {
            throw VocabularyError(VocabularyError::Kind::ParseError, line_no,
                                  "line " + std::to_string(line_no) + ": bad code '" + std::string(code_text) + "'");
        }
        try {
            vocab.add(std::string(keyword), code);
        } catch (const VocabularyError& e) {
            throw VocabularyError(e.kind(), line_no, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (vocab.empty()) {
        throw VocabularyError(VocabularyError::Kind::ParseError, line_no, "vocabulary has no entries");
    }
    return vocab;
}

Vocabulary load_vocabulary_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw VocabularyError(VocabularyError::Kind::ParseError, 0, "cannot open vocabulary file " + path);
    }
    return load_vocabulary(in);
}

const Vocabulary& default_vocabulary() {
    static const Vocabulary vocab = [] {
        std::istringstream in{std::string(default_vocabulary_text())};
        return load_vocabulary(in);
    }();
    return vocab;
}

} // namespace formulafind
