#include "formulafind/corpus.hpp"
#include "formulafind/random.hpp"

#include <cstdio>
#include <set>

namespace formulafind {

namespace {

const std::vector<std::string> kVariables = {"a", "b", "c", "k", "m", "n", "p", "q", "r", "s",
                                             "t", "u", "v", "w", "x", "y", "z"};
const std::vector<std::string> kGreek = {"\\alpha", "\\beta", "\\theta", "\\pi", "\\lambda", "\\mu", "\\sigma", "\\omega"};
const std::vector<std::string> kFunctions = {"\\sin", "\\cos", "\\tan", "\\ln", "\\log", "\\exp",
                                             "\\sec", "\\coth", "\\arccos", "\\sinh"};
const std::vector<std::string> kOperators = {" + ", " - ", " = ", " \\cdot ", " \\times ", " \\pm ", " "};
const std::vector<std::string> kRelations = {" = ", " < ", " \\le ", " \\approx "};

// Builds LaTeX whose nested depth is exactly the requested value.
class FormulaGenerator {
public:
    explicit FormulaGenerator(Rng& rng) : rng_(rng) {}

    std::string expression(int depth, int budget) {
        const int terms = 1 + static_cast<int>(rng_.below(budget > 2 ? 3 : 2));
        const int exact = static_cast<int>(rng_.below(static_cast<std::uint64_t>(terms)));
        std::string out;
        for (int i = 0; i < terms; ++i) {
            if (i > 0) out += rng_.pick(kOperators);
            const int d = i == exact ? depth : static_cast<int>(rng_.below(static_cast<std::uint64_t>(depth + 1)));
            out += term(d, budget - 1);
        }
        return out;
    }

    std::string equation(int depth) {
        std::string lhs = expression(depth, 4);
        if (rng_.chance(0.4)) {
            const int d = static_cast<int>(rng_.below(static_cast<std::uint64_t>(depth + 1)));
            lhs += rng_.pick(kRelations) + expression(d, 3);
        }
        return lhs;
    }

private:
    std::string atom() {
        switch (rng_.below(5)) {
        case 0: return rng_.pick(kVariables);
        case 1: return std::to_string(rng_.below(10));
        case 2: return rng_.pick(kGreek);
        case 3: return rng_.pick(kVariables) + rng_.pick(kVariables);
        default: return std::to_string(2 + rng_.below(98));
        }
    }

    std::string base() {
        switch (rng_.below(4)) {
        case 0: return rng_.pick(kGreek);
        case 1: return "(" + expression(0, 1) + ")";
        default: return rng_.pick(kVariables);
        }
    }

    // Pair of region contents, at least one of exactly `depth`.
    std::pair<std::string, std::string> pair(int depth, int budget) {
        const int other = static_cast<int>(rng_.below(static_cast<std::uint64_t>(depth + 1)));
        std::string a = expression(depth, budget);
        std::string b = expression(other, budget);
        if (rng_.chance(0.5)) std::swap(a, b);
        return {a, b};
    }

    std::string flat_term(int budget) {
        if (budget <= 0) return atom();
        switch (rng_.below(8)) {
        case 0:
        case 1: return atom();
        case 2: return rng_.pick(kFunctions) + " " + rng_.pick(kVariables);
        case 3: return "f(" + expression(0, budget - 1) + ")";
        case 4: return "(" + expression(0, budget - 1) + ")";
        case 5: return "\\int " + expression(0, budget - 1) + " d" + rng_.pick(kVariables);
        case 6: return "\\ln \\mid " + rng_.pick(kVariables) + " \\mid";
        default: return rng_.pick(kVariables) + "'";
        }
    }

    std::string term(int depth, int budget) {
        if (depth == 0) return flat_term(budget);
        const int inner = depth - 1;
        const int b = budget - 1;
        const auto choice = budget <= 0 ? rng_.below(3) : rng_.below(10);
        switch (choice) {
        case 0: return base() + "^{" + expression(inner, b) + "}";
        case 1: return rng_.pick(kVariables) + "_{" + expression(inner, b) + "}";
        case 2: return "\\sqrt{" + expression(inner, b) + "}";
        case 3: {
            auto [sub, sup] = pair(inner, b);
            return rng_.pick(kVariables) + "_{" + sub + "}^{" + sup + "}";
        }
        case 4: {
            auto [num, den] = pair(inner, b);
            return "\\frac{" + num + "}{" + den + "}";
        }
        case 5: {
            auto [lo, hi] = pair(inner, b);
            const int body = static_cast<int>(rng_.below(static_cast<std::uint64_t>(depth + 1)));
            return "\\sum_{" + lo + "}^{" + hi + "} " + term(body, b);
        }
        case 6: {
            auto [lo, hi] = pair(inner, b);
            const int body = static_cast<int>(rng_.below(static_cast<std::uint64_t>(depth + 1)));
            return "\\int_{" + lo + "}^{" + hi + "} " + term(body, b) + " d" + rng_.pick(kVariables);
        }
        case 7: return rng_.pick(kFunctions) + "(" + term(depth, b) + ")";
        case 8: return "\\left( " + expression(depth, b) + " \\right)";
        default: return "\\sqrt[" + std::to_string(2 + rng_.below(3)) + "]{" + expression(inner, b) + "}";
        }
    }

    Rng& rng_;
};

int target_depth(ComplexityLabel label, Rng& rng) {
    switch (label) {
    case ComplexityLabel::Simple: return 0;
    case ComplexityLabel::Medium: return 1;
    case ComplexityLabel::Complex: return rng.chance(0.7) ? 2 : 3;
    }
    return 0;
}

} // namespace

LabeledCorpus generate_synthetic(std::size_t n, std::uint64_t seed, const Vocabulary& vocab) {
    Rng rng(seed);
    std::vector<ComplexityLabel> targets;
    targets.reserve(n);
    for (std::size_t i = 0; i < n; ++i) targets.push_back(static_cast<ComplexityLabel>(i % kNumComplexityClasses));
    rng.shuffle(targets);

    FormulaGenerator gen(rng);
    std::set<std::vector<Code>> seen;
    LabeledCorpus corpus;
    corpus.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "syn-%05zu", i);
        for (int attempt = 0;; ++attempt) {
            const std::string latex = gen.equation(target_depth(targets[i], rng));
            EncodedExpression expr = encode(latex, vocab, id);
            if (expr.label != targets[i]) {
                throw std::logic_error("synthetic generator produced '" + latex + "' with label " +
                                       std::string(to_string(expr.label)));
            }
            if (!seen.insert(expr.codes).second) {
                if (attempt > 10000) throw std::runtime_error("synthetic generator cannot find a new expression");
                continue;
            }
            ++corpus.class_counts[static_cast<std::size_t>(expr.label)];
            corpus.records.push_back(std::move(expr));
            break;
        }
    }
    return corpus;
}

} // namespace formulafind
