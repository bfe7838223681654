#include "formulafind/corpus.hpp"
#include "formulafind/inspect.hpp"
#include "formulafind/retrieval.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace formulafind;

namespace {

py::array_t<float> to_array(const RowMatrix<float>& m) {
    py::array_t<float> out({m.rows(), m.cols()});
    std::copy(m.data(), m.data() + m.size(), out.mutable_data());
    return out;
}

py::list hits_of(const RankedResult& r) {
    py::list out;
    for (const auto& h : r.hits) out.append(py::make_tuple(h.id, h.score));
    return out;
}

QueryOptions options(std::size_t k, bool exclude_self, bool normalized, unsigned workers) {
    QueryOptions q;
    q.k = k;
    q.exclude_self = exclude_self;
    q.normalized_lcs = normalized;
    q.workers = workers;
    return q;
}

py::dict report_dict(const TrainingReport& r) {
    py::list epochs;
    for (const auto& e : r.epochs) {
        py::dict d;
        d["epoch"] = e.epoch;
        d["train_loss"] = e.train_loss;
        d["train_accuracy"] = e.train_accuracy;
        d["validation_loss"] = e.validation_loss;
        d["validation_accuracy"] = e.validation_accuracy;
        epochs.append(d);
    }
    py::dict d;
    d["embed_dim"] = r.embed_dim;
    d["rnn_units"] = r.rnn_units;
    d["pooling"] = std::string(to_string(r.pooling));
    d["seed"] = r.seed;
    d["fit_size"] = r.fit_size;
    d["validation_size"] = r.validation_size;
    d["test_size"] = r.test_size;
    d["best_epoch"] = r.best_epoch;
    d["train_accuracy"] = r.train_accuracy;
    d["validation_accuracy"] = r.validation_accuracy;
    d["test_accuracy"] = r.test_accuracy;
    d["epochs"] = epochs;
    return d;
}

Pooling pooling_arg(const std::string& name) {
    auto p = parse_pooling(name);
    if (!p) throw py::value_error("pooling must be 'min', 'avg' or 'max'");
    return *p;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "LaTeX formula encoding, LSTM feature extraction and retrieval";

    py::register_exception<EncodeError>(m, "EncodeError", PyExc_ValueError);
    py::register_exception<ModelError>(m, "ModelError", PyExc_RuntimeError);
    py::register_exception<RetrievalError>(m, "RetrievalError", PyExc_RuntimeError);
    py::register_exception<CorpusError>(m, "CorpusError", PyExc_RuntimeError);
    py::register_exception<VocabularyError>(m, "VocabularyError", PyExc_ValueError);

    py::class_<Vocabulary>(m, "Vocabulary")
        .def("code_of", &Vocabulary::code_of)
        .def("keyword_of", [](const Vocabulary& v, Code c) -> std::optional<std::string> {
            auto k = v.keyword_of(c);
            if (!k) return std::nullopt;
            return std::string(*k);
        })
        .def("__len__", &Vocabulary::size);
    m.def("default_vocabulary", &default_vocabulary, py::return_value_policy::copy);
    m.def("load_vocabulary", &load_vocabulary_file, py::arg("path"));

    py::class_<EncodedExpression>(m, "EncodedExpression")
        .def_readonly("id", &EncodedExpression::id)
        .def_readonly("latex", &EncodedExpression::latex)
        .def_readonly("codes", &EncodedExpression::codes)
        .def_readonly("depth", &EncodedExpression::depth)
        .def_property_readonly("label", [](const EncodedExpression& e) { return std::string(to_string(e.label)); })
        .def("__repr__", [](const EncodedExpression& e) {
            return "<EncodedExpression " + e.id + " len=" + std::to_string(e.codes.size()) +
                   " depth=" + std::to_string(e.depth) + ">";
        });

    m.def("encode", [](const std::string& latex, const Vocabulary* vocab, const std::string& id) {
              return encode(latex, vocab ? *vocab : default_vocabulary(), id);
          },
          py::arg("latex"), py::arg("vocab") = nullptr, py::arg("id") = "");
    m.def("nested_depth", [](const std::vector<Code>& codes) { return nested_depth(codes); }, py::arg("codes"));

    py::class_<LabeledCorpus>(m, "Corpus")
        .def_readonly("records", &LabeledCorpus::records)
        .def_readonly("class_counts", &LabeledCorpus::class_counts)
        .def_property_readonly("errors", [](const LabeledCorpus& c) {
            py::list out;
            for (const auto& e : c.errors) out.append(py::make_tuple(e.id, e.message));
            return out;
        })
        .def("__len__", &LabeledCorpus::size)
        .def("write_jsonl", [](const LabeledCorpus& c, const std::string& path) {
            write_jsonl_file(c.source_records(), path);
        });
    m.def("generate_synthetic", [](std::size_t n, std::uint64_t seed) { return generate_synthetic(n, seed); },
          py::arg("n") = 829, py::arg("seed") = 7);
    m.def("read_corpus", [](const std::string& path, const Vocabulary* vocab) {
              return ingest(read_jsonl_file(path), vocab ? *vocab : default_vocabulary());
          },
          py::arg("path"), py::arg("vocab") = nullptr);

    py::class_<ModelConfig>(m, "ModelConfig")
        .def(py::init([](std::uint32_t e, std::uint32_t t, const std::string& pooling, std::uint64_t seed,
                         std::uint32_t max_epochs, std::uint32_t patience, double lr) {
                 ModelConfig c;
                 c.embed_dim = e;
                 c.rnn_units = t;
                 c.pooling = pooling_arg(pooling);
                 c.seed = seed;
                 c.max_epochs = max_epochs;
                 c.patience = patience;
                 c.learning_rate = lr;
                 return c;
             }),
             py::arg("embed_dim") = 16, py::arg("rnn_units") = 64, py::arg("pooling") = "min", py::arg("seed") = 7,
             py::arg("max_epochs") = 50, py::arg("patience") = 10, py::arg("learning_rate") = 1e-3)
        .def_readwrite("embed_dim", &ModelConfig::embed_dim)
        .def_readwrite("rnn_units", &ModelConfig::rnn_units)
        .def_readwrite("seed", &ModelConfig::seed)
        .def_readwrite("max_epochs", &ModelConfig::max_epochs);

    py::class_<Model>(m, "Model")
        .def_property_readonly("embed_dim", [](const Model& x) { return x.config.embed_dim; })
        .def_property_readonly("rnn_units", [](const Model& x) { return x.config.rnn_units; })
        .def_property_readonly("vocab_size", [](const Model& x) { return x.config.vocab_size; })
        .def("save", [](const Model& x, const std::string& path) { save_checkpoint_file(x, path); })
        .def("checkpoint_bytes", [](const Model& x) { return py::bytes(checkpoint_bytes(x)); })
        .def("features", [](const Model& x, const std::vector<Code>& codes) {
            auto fv = extract_features(codes, x);
            return py::array_t<float>(static_cast<py::ssize_t>(fv.values.size()), fv.values.data());
        })
        .def("predict", [](const Model& x, const std::vector<Code>& codes) {
            return std::string(to_string(static_cast<ComplexityLabel>(predict(codes, x))));
        })
        .def("heatmap", [](const Model& x, const std::string& latex) {
            return to_array(heatmap(latex, x, default_vocabulary()));
        });
    m.def("initialize_model", [](const ModelConfig& c) {
        return initialize_model(c, CodeIndex::from_vocabulary(default_vocabulary()));
    });
    m.def("load_checkpoint", [](const std::string& path, const std::string& pooling) {
              return load_checkpoint_file(path, pooling_arg(pooling));
          },
          py::arg("path"), py::arg("pooling") = "min");
    m.def("train", [](const LabeledCorpus& corpus, const ModelConfig& config) {
              TrainResult r;
              {
                  py::gil_scoped_release release;
                  r = train(corpus.records, config, CodeIndex::from_vocabulary(default_vocabulary()));
              }
              return py::make_tuple(std::move(r.model), report_dict(r.report));
          },
          py::arg("corpus"), py::arg("config") = ModelConfig{});

    py::class_<FeatureDatabase>(m, "FeatureDatabase")
        .def("__len__", &FeatureDatabase::size)
        .def_property_readonly("dim", &FeatureDatabase::dim)
        .def_property_readonly("ids", &FeatureDatabase::ids)
        .def("vector", [](const FeatureDatabase& db, std::size_t i) {
            if (i >= db.size()) throw py::index_error();
            auto v = db.vector(i);
            return py::array_t<float>(static_cast<py::ssize_t>(v.size()), v.data());
        })
        .def("save", [](const FeatureDatabase& db, const std::string& path) { save_db_file(db, path); })
        .def("__eq__", [](const FeatureDatabase& a, const FeatureDatabase& b) { return a == b; });
    m.def("build_feature_db", [](const LabeledCorpus& corpus, const Model& model) {
        return build_feature_db(corpus.records, model);
    });
    m.def("load_feature_db", &load_db_file, py::arg("path"));

    m.def("query_semantic", [](const std::string& latex, const FeatureDatabase& db, const Model& model, std::size_t k,
                               bool exclude_self) {
              return hits_of(query_semantic(latex, db, model, default_vocabulary(), options(k, exclude_self, false, 1)));
          },
          py::arg("latex"), py::arg("db"), py::arg("model"), py::arg("k") = 5, py::arg("exclude_self") = false);
    m.def("query_lcs", [](const std::string& latex, const LabeledCorpus& corpus, std::size_t k, bool exclude_self,
                          bool normalized, unsigned workers) {
              return hits_of(query_lcs(latex, corpus.records, default_vocabulary(),
                                       options(k, exclude_self, normalized, workers)));
          },
          py::arg("latex"), py::arg("corpus"), py::arg("k") = 5, py::arg("exclude_self") = false,
          py::arg("normalized") = false, py::arg("workers") = 1);
    m.def("lcs_length", [](const std::vector<Code>& a, const std::vector<Code>& b) { return lcs_length(a, b); });
    m.def("euclidean_distance", [](const std::vector<float>& a, const std::vector<float>& b) {
        return euclidean_distance(a, b);
    });
}
