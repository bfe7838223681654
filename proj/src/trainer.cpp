#include "formulafind/corpus.hpp"
#include "formulafind/model.hpp"
#include "formulafind/random.hpp"

#include <array>
#include <cmath>

namespace formulafind {

namespace {

struct Example {
    std::vector<std::uint32_t> rows;
    std::size_t label;
};

std::vector<Example> prepare(std::span<const EncodedExpression> corpus, const std::vector<std::size_t>& which,
                             const CodeIndex& index) {
    std::vector<Example> out;
    out.reserve(which.size());
    for (auto i : which) {
        const auto& e = corpus[i];
        out.push_back({index.rows_of(e.codes), static_cast<std::size_t>(e.label)});
    }
    return out;
}

struct Evaluation {
    double loss = 0;
    double accuracy = 0;
};

Evaluation evaluate(const std::vector<Example>& examples, const Model& model) {
    if (examples.empty()) return {};
    double loss = 0;
    std::size_t correct = 0;
    for (const auto& ex : examples) {
        auto trace = forward_rows<float>(ex.rows, model.params, model.config.pooling);
        loss += cross_entropy<float>(trace.probs, ex.label);
        Eigen::Index best = 0;
        trace.probs.maxCoeff(&best);
        correct += static_cast<std::size_t>(best) == ex.label;
    }
    const auto n = static_cast<double>(examples.size());
    return {loss / n, static_cast<double>(correct) / n};
}

class Adam {
public:
    Adam(const ModelConfig& config, const ModelParams& shape)
        : config_(config), m_(zeros_like(shape)), v_(zeros_like(shape)) {}

    void step(ModelParams& params, ModelParams& grad) {
        double sq = 0;
        grad.for_each_tensor([&](const float* g, Eigen::Index n) {
            for (Eigen::Index i = 0; i < n; ++i) sq += static_cast<double>(g[i]) * g[i];
        });
        const double norm = std::sqrt(sq);
        const float scale = norm > config_.clip_norm ? static_cast<float>(config_.clip_norm / norm) : 1.0f;

        ++steps_;
        const auto b1 = static_cast<float>(config_.beta1);
        const auto b2 = static_cast<float>(config_.beta2);
        const auto lr = static_cast<float>(config_.learning_rate);
        const auto eps = static_cast<float>(config_.epsilon);
        const auto c1 = static_cast<float>(1.0 - std::pow(config_.beta1, static_cast<double>(steps_)));
        const auto c2 = static_cast<float>(1.0 - std::pow(config_.beta2, static_cast<double>(steps_)));

        std::vector<float*> p_ptr, g_ptr, m_ptr, v_ptr;
        std::vector<Eigen::Index> sizes;
        params.for_each_tensor([&](float* d, Eigen::Index n) {
            p_ptr.push_back(d);
            sizes.push_back(n);
        });
        grad.for_each_tensor([&](float* d, Eigen::Index) { g_ptr.push_back(d); });
        m_.for_each_tensor([&](float* d, Eigen::Index) { m_ptr.push_back(d); });
        v_.for_each_tensor([&](float* d, Eigen::Index) { v_ptr.push_back(d); });

        for (std::size_t k = 0; k < sizes.size(); ++k) {
            for (Eigen::Index i = 0; i < sizes[k]; ++i) {
                const float g = g_ptr[k][i] * scale;
                float& m = m_ptr[k][i];
                float& v = v_ptr[k][i];
                m = b1 * m + (1.0f - b1) * g;
                v = b2 * v + (1.0f - b2) * g * g;
                p_ptr[k][i] -= lr * (m / c1) / (std::sqrt(v / c2) + eps);
            }
        }
    }

private:
    static ModelParams zeros_like(const ModelParams& p) {
        return ModelParams::zeros(p.vocab_size(), p.embed_dim(), p.rnn_units(), p.num_classes());
    }

    ModelConfig config_;
    ModelParams m_;
    ModelParams v_;
    std::uint64_t steps_ = 0;
};

} // namespace

double accuracy(std::span<const EncodedExpression> examples, const Model& model) {
    if (examples.empty()) return 0;
    std::size_t correct = 0;
    for (const auto& e : examples) correct += predict(e.codes, model) == static_cast<std::size_t>(e.label);
    return static_cast<double>(correct) / static_cast<double>(examples.size());
}

TrainResult train(std::span<const EncodedExpression> corpus, const ModelConfig& config, const CodeIndex& index,
                  const EpochCallback& on_epoch) {
    if (corpus.empty()) throw ModelError(ModelError::Kind::EmptyCorpus, "training corpus is empty");
    if (corpus.size() < 10) {
        throw ModelError(ModelError::Kind::EmptyCorpus,
                         "training needs at least 10 expressions, got " + std::to_string(corpus.size()));
    }
    std::array<std::size_t, kNumComplexityClasses> counts{};
    for (const auto& e : corpus) ++counts[static_cast<std::size_t>(e.label)];
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) {
            throw ModelError(ModelError::Kind::MissingClass,
                             "class " + std::string(to_string(static_cast<ComplexityLabel>(c))) + " has no examples");
        }
    }

    Model model = initialize_model(config, index);
    const auto parts = split_indices(corpus.size(), config.seed);
    const auto fit = prepare(corpus, parts.fit, model.index);
    const auto val = prepare(corpus, parts.validation, model.index);
    const auto test = prepare(corpus, parts.test, model.index);
    auto train_all = fit;
    train_all.insert(train_all.end(), val.begin(), val.end());

    TrainingReport report;
    report.embed_dim = model.config.embed_dim;
    report.rnn_units = model.config.rnn_units;
    report.pooling = model.config.pooling;
    report.seed = model.config.seed;
    report.fit_size = fit.size();
    report.validation_size = val.size();
    report.test_size = test.size();

    Adam adam(model.config, model.params);
    Rng order_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(fit.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    ModelParams best = model.params;
    double best_acc = -1;
    double best_loss = 0;
    std::uint32_t since_best = 0;

    for (std::uint32_t epoch = 1; epoch <= model.config.max_epochs; ++epoch) {
        order_rng.shuffle(order);
        for (auto i : order) {
            const auto& ex = fit[i];
            auto trace = forward_rows<float>(ex.rows, model.params, model.config.pooling);
            auto grad = backward_rows<float>(trace, ex.rows, ex.label, model.params, model.config.pooling);
            adam.step(model.params, grad);
        }

        const auto fit_eval = evaluate(fit, model);
        const auto val_eval = evaluate(val, model);
        EpochStats stats{epoch, fit_eval.loss, fit_eval.accuracy, val_eval.loss, val_eval.accuracy};
        report.epochs.push_back(stats);
        if (on_epoch) on_epoch(stats);

        const bool improved =
            val_eval.accuracy > best_acc || (val_eval.accuracy == best_acc && val_eval.loss < best_loss);
        if (improved) {
            best = model.params;
            best_acc = val_eval.accuracy;
            best_loss = val_eval.loss;
            report.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= model.config.patience) {
            break;
        }
    }

    model.params = std::move(best);
    report.train_accuracy = evaluate(train_all, model).accuracy;
    report.validation_accuracy = evaluate(val, model).accuracy;
    report.test_accuracy = evaluate(test, model).accuracy;
    return {std::move(model), std::move(report)};
}

std::vector<SweepRow> sweep(std::span<const EncodedExpression> corpus, const ModelConfig& base,
                            std::span<const std::pair<std::uint32_t, std::uint32_t>> configs, const CodeIndex& index,
                            const EpochCallback& on_epoch) {
    if (configs.empty()) throw ModelError(ModelError::Kind::InvalidConfig, "sweep needs at least one configuration");
    std::vector<SweepRow> rows;
    for (auto [e, t] : configs) {
        ModelConfig cfg = base;
        cfg.embed_dim = e;
        cfg.rnn_units = t;
        auto result = train(corpus, cfg, index, on_epoch);
        rows.push_back({e, t, result.report.train_accuracy, result.report.test_accuracy, std::move(result.report)});
    }
    return rows;
}

} // namespace formulafind
