#include "formulafind/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace formulafind {

std::string_view to_string(RetrievalError::Kind kind) {
    switch (kind) {
    case RetrievalError::Kind::DimensionMismatch: return "DimensionMismatch";
    case RetrievalError::Kind::EmptyDatabase: return "EmptyDatabase";
    case RetrievalError::Kind::InvalidArgument: return "InvalidArgument";
    case RetrievalError::Kind::DuplicateId: return "DuplicateId";
    case RetrievalError::Kind::BadMagic: return "BadMagic";
    case RetrievalError::Kind::VersionMismatch: return "VersionMismatch";
    case RetrievalError::Kind::TruncatedFile: return "TruncatedFile";
    case RetrievalError::Kind::Io: return "Io";
    }
    return "Unknown";
}

std::string_view to_string(Method method) { return method == Method::Semantic ? "semantic" : "lcs"; }

std::optional<Method> parse_method(std::string_view name) {
    if (name == "semantic") return Method::Semantic;
    if (name == "lcs") return Method::Lcs;
    return std::nullopt;
}

void FeatureDatabase::add(std::string id, std::span<const float> values) {
    if (values.size() != dim_) {
        throw RetrievalError(RetrievalError::Kind::DimensionMismatch, "feature vector for '" + id + "' has length " +
                                                                          std::to_string(values.size()) + ", expected " +
                                                                          std::to_string(dim_));
    }
    if (index_of(id)) throw RetrievalError(RetrievalError::Kind::DuplicateId, "duplicate feature id '" + id + "'");
    ids_.push_back(std::move(id));
    values_.insert(values_.end(), values.begin(), values.end());
}

std::optional<std::size_t> FeatureDatabase::index_of(std::string_view id) const {
    auto it = std::find(ids_.begin(), ids_.end(), id);
    if (it == ids_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - ids_.begin());
}

FeatureDatabase build_feature_db(std::span<const EncodedExpression> corpus, const Model& model) {
    FeatureDatabase db(model.config.rnn_units, sha256(checkpoint_bytes(model)));
    for (const auto& expr : corpus) {
        FeatureVector fv;
        try {
            fv = extract_features(expr.codes, model, expr.id);
        } catch (const ModelError& e) {
            throw ModelError(e.kind(), "expression '" + expr.id + "': " + e.what());
        }
        db.add(std::move(fv.expr_id), fv.values);
    }
    return db;
}

double euclidean_distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw RetrievalError(RetrievalError::Kind::DimensionMismatch,
                             "vector lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        sum += d * d;
    }
    return std::sqrt(sum);
}

std::size_t lcs_length(std::span<const Code> a, std::span<const Code> b) {
    if (a.size() < b.size()) std::swap(a, b);
    if (b.empty()) return 0;
    std::vector<std::uint32_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (Code x : a) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = x == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

namespace {

void check_k(std::size_t k) {
    if (k == 0) throw RetrievalError(RetrievalError::Kind::InvalidArgument, "k must be at least 1");
}

// Sorts only the first k of `order` under `less`.
template <typename Less>
void take_top(std::vector<std::size_t>& order, std::size_t k, Less less) {
    const auto n = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(), less);
    order.resize(n);
}

} // namespace

RankedResult rank_semantic(std::span<const float> query, const FeatureDatabase& db, const QueryOptions& options) {
    check_k(options.k);
    RankedResult result{Method::Semantic, {}};
    if (db.empty()) return result;
    if (query.size() != db.dim()) {
        throw RetrievalError(RetrievalError::Kind::DimensionMismatch, "query vector has length " +
                                                                          std::to_string(query.size()) + ", database " +
                                                                          std::to_string(db.dim()));
    }

    std::vector<double> dist(db.size());
    std::vector<std::size_t> order;
    order.reserve(db.size());
    for (std::size_t i = 0; i < db.size(); ++i) {
        dist[i] = euclidean_distance(query, db.vector(i));
        if (!(options.exclude_self && dist[i] == 0.0)) order.push_back(i);
    }
    take_top(order, options.k, [&](std::size_t a, std::size_t b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); });

    for (auto i : order) result.hits.push_back({i, db.id(i), dist[i]});
    return result;
}

RankedResult rank_lcs(std::span<const Code> query, std::span<const EncodedExpression> corpus,
                      const QueryOptions& options) {
    check_k(options.k);
    RankedResult result{Method::Lcs, {}};
    const std::size_t n = corpus.size();
    if (n == 0) return result;

    std::vector<double> score(n);
    auto scan = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto& codes = corpus[i].codes;
            const auto len = static_cast<double>(lcs_length(query, codes));
            if (options.normalized_lcs) {
                const auto longest = std::max(query.size(), codes.size());
                score[i] = longest == 0 ? 0.0 : len / static_cast<double>(longest);
            } else {
                score[i] = len;
            }
        }
    };

    unsigned workers = options.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.workers;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        scan(0, n);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t begin = 0; begin < n; begin += chunk) pool.emplace_back(scan, begin, std::min(n, begin + chunk));
        for (auto& t : pool) t.join();
    }

    std::vector<std::size_t> order;
    order.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool self = options.exclude_self && std::equal(query.begin(), query.end(), corpus[i].codes.begin(),
                                                             corpus[i].codes.end());
        if (!self) order.push_back(i);
    }
    take_top(order, options.k, [&](std::size_t a, std::size_t b) {
        if (score[a] != score[b]) return score[a] > score[b];
        const auto la = corpus[a].codes.size(), lb = corpus[b].codes.size();
        if (la != lb) return la < lb;
        return a < b;
    });

    for (auto i : order) result.hits.push_back({i, corpus[i].id, score[i]});
    return result;
}

RankedResult query_semantic(std::string_view latex, const FeatureDatabase& db, const Model& model,
                            const Vocabulary& vocab, const QueryOptions& options) {
    const auto expr = encode(latex, vocab);
    const auto fv = extract_features(expr.codes, model);
    return rank_semantic(fv.values, db, options);
}

RankedResult query_lcs(std::string_view latex, std::span<const EncodedExpression> corpus, const Vocabulary& vocab,
                       const QueryOptions& options) {
    const auto expr = encode(latex, vocab);
    return rank_lcs(expr.codes, corpus, options);
}

} // namespace formulafind
