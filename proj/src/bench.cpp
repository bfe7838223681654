#include "formulafind/random.hpp"
#include "formulafind/retrieval.hpp"

#include <algorithm>
#include <chrono>
#include <ostream>

namespace formulafind {

namespace {

using Clock = std::chrono::steady_clock;

double median(std::vector<double> xs) {
    if (xs.empty()) return 0;
    std::sort(xs.begin(), xs.end());
    const auto mid = xs.size() / 2;
    return xs.size() % 2 ? xs[mid] : 0.5 * (xs[mid - 1] + xs[mid]);
}

template <typename Fn>
double seconds(Fn&& fn) {
    const auto start = Clock::now();
    fn();
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Keeps the optimizer from discarding a ranking whose result is unused.
volatile std::size_t g_sink = 0;

} // namespace

std::vector<BenchRow> bench_scaling(const BenchOptions& options) {
    if (!std::is_sorted(options.sizes.begin(), options.sizes.end())) {
        throw RetrievalError(RetrievalError::Kind::InvalidArgument, "bench sizes must ascend");
    }
    if (options.dim == 0 || options.trials == 0) {
        throw RetrievalError(RetrievalError::Kind::InvalidArgument, "bench needs dim >= 1 and trials >= 1");
    }
    const std::size_t largest = options.sizes.empty() ? 0 : options.sizes.back();
    Rng rng(options.seed);

    // Draw the largest database once; smaller sizes use its prefix.
    std::vector<std::vector<float>> vectors(largest, std::vector<float>(options.dim));
    for (auto& v : vectors)
        for (auto& x : v) x = static_cast<float>(rng.uniform(-1, 1));
    std::vector<EncodedExpression> sequences(largest);
    const auto random_codes = [&] {
        std::vector<Code> codes(options.code_length);
        for (auto& c : codes) c = static_cast<Code>(rng.below(64));
        return codes;
    };
    for (std::size_t i = 0; i < largest; ++i) {
        sequences[i].id = std::to_string(i);
        sequences[i].codes = random_codes();
    }
    std::vector<float> query(options.dim);
    for (auto& x : query) x = static_cast<float>(rng.uniform(-1, 1));
    const auto query_codes = random_codes();

    QueryOptions q;
    q.k = options.k;
    std::vector<FeatureDatabase> dbs;
    for (auto size : options.sizes) {
        auto& db = dbs.emplace_back(options.dim);
        for (std::size_t i = 0; i < size; ++i) db.add(std::to_string(i), vectors[i]);
    }
    const auto repeats = std::max<std::size_t>(1, options.semantic_repeats);
    const auto run_semantic = [&](const FeatureDatabase& db) {
        for (std::size_t r = 0; r < repeats; ++r) g_sink = g_sink + rank_semantic(query, db, q).hits.size();
    };
    for (const auto& db : dbs) run_semantic(db); // warm caches and clocks

    // Trials interleave the sizes so slow drift in machine speed hits all of
    // them alike.
    std::vector<std::vector<double>> sem(dbs.size());
    for (std::size_t t = 0; t < options.trials; ++t) {
        for (std::size_t s = 0; s < dbs.size(); ++s) {
            sem[s].push_back(seconds([&] { run_semantic(dbs[s]); }) / static_cast<double>(repeats));
        }
    }
    std::vector<BenchRow> rows;
    for (std::size_t s = 0; s < dbs.size(); ++s) {
        const std::span<const EncodedExpression> corpus(sequences.data(), options.sizes[s]);
        std::vector<double> lcs;
        for (std::size_t t = 0; t < options.lcs_trials; ++t) {
            lcs.push_back(seconds([&] { g_sink = g_sink + rank_lcs(query_codes, corpus, q).hits.size(); }));
        }
        rows.push_back({options.sizes[s], median(sem[s]), median(lcs)});
    }
    return rows;
}

void write_bench_csv(std::span<const BenchRow> rows, std::ostream& sink) {
    sink << "size,semantic_seconds,lcs_seconds\n";
    for (const auto& r : rows) sink << r.size << ',' << r.semantic_seconds << ',' << r.lcs_seconds << '\n';
}

} // namespace formulafind
