#include "formulafind/corpus.hpp"
#include "formulafind/random.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_set>

namespace formulafind {

using json = nlohmann::json;

const EncodedExpression* LabeledCorpus::find(std::string_view id) const {
    for (const auto& r : records)
        if (r.id == id) return &r;
    return nullptr;
}

std::vector<CorpusRecord> LabeledCorpus::source_records() const {
    std::vector<CorpusRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back({r.id, r.latex});
    return out;
}

std::vector<CorpusRecord> read_jsonl(std::istream& source) {
    std::vector<CorpusRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(source, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fail = [&](const std::string& why) {
            throw CorpusError(CorpusError::Kind::ParseError, line_no, "line " + std::to_string(line_no) + ": " + why);
        };
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded()) fail("invalid JSON");
        if (!obj.is_object()) fail("expected a JSON object");
        if (obj.size() != 2 || !obj.contains("id") || !obj.contains("latex")) {
            fail("expected exactly the keys \"id\" and \"latex\"");
        }
        if (!obj["id"].is_string() || !obj["latex"].is_string()) fail("\"id\" and \"latex\" must be strings");
        CorpusRecord rec{obj["id"].get<std::string>(), obj["latex"].get<std::string>()};
        if (rec.id.empty()) fail("empty id");
        if (rec.latex.empty()) fail("empty latex");
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<CorpusRecord> read_jsonl_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CorpusError(CorpusError::Kind::Io, 0, "cannot open corpus file " + path);
    return read_jsonl(in);
}

void write_jsonl(std::span<const CorpusRecord> records, std::ostream& sink) {
    for (const auto& r : records) {
        json obj;
        obj["id"] = r.id;
        obj["latex"] = r.latex;
        sink << obj.dump() << '\n';
    }
}

void write_jsonl_file(std::span<const CorpusRecord> records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw CorpusError(CorpusError::Kind::Io, 0, "cannot write corpus file " + path);
    write_jsonl(records, out);
    if (!out) throw CorpusError(CorpusError::Kind::Io, 0, "write failed for " + path);
}

LabeledCorpus ingest(std::span<const CorpusRecord> records, const Vocabulary& vocab) {
    LabeledCorpus corpus;
    std::unordered_set<std::string> seen;
    for (const auto& rec : records) {
        if (!seen.insert(rec.id).second) {
            throw CorpusError(CorpusError::Kind::DuplicateId, 0, "duplicate id '" + rec.id + "'");
        }
        try {
            auto expr = encode(rec.latex, vocab, rec.id);
            ++corpus.class_counts[static_cast<std::size_t>(expr.label)];
            corpus.records.push_back(std::move(expr));
        } catch (const EncodeError& e) {
            corpus.errors.push_back({rec.id, e.kind(), e.position(), e.what()});
        }
    }
    return corpus;
}

LabeledCorpus ingest_jsonl(std::istream& source, const Vocabulary& vocab) {
    auto records = read_jsonl(source);
    return ingest(records, vocab);
}

std::vector<std::size_t> SplitIndices::train() const {
    std::vector<std::size_t> out = fit;
    out.insert(out.end(), validation.begin(), validation.end());
    return out;
}

SplitIndices split_indices(std::size_t n, std::uint64_t seed, double test_ratio, double validation_fraction) {
    if (n == 0) throw CorpusError(CorpusError::Kind::EmptyCorpus, 0, "cannot split an empty corpus");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);

    const auto n_test = static_cast<std::size_t>(std::lround(test_ratio * static_cast<double>(n)));
    const std::size_t n_train = n - n_test;
    const auto n_val = static_cast<std::size_t>(std::lround(validation_fraction * static_cast<double>(n_train)));

    SplitIndices out;
    out.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test),
                          order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
    out.fit.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), order.end());
    return out;
}

CorpusSplit split(std::span<const EncodedExpression> records, std::uint64_t seed, double test_ratio,
                  double validation_fraction) {
    auto idx = split_indices(records.size(), seed, test_ratio, validation_fraction);
    CorpusSplit out;
    for (auto i : idx.fit) out.fit.push_back(records[i]);
    for (auto i : idx.validation) out.validation.push_back(records[i]);
    for (auto i : idx.test) out.test.push_back(records[i]);
    return out;
}

} // namespace formulafind
