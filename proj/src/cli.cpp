#include "formulafind/cli.hpp"
#include "formulafind/corpus.hpp"
#include "formulafind/inspect.hpp"
#include "formulafind/retrieval.hpp"
#include "formulafind/service.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <csignal>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace formulafind {

namespace {

using json = nlohmann::json;

// Error in user-supplied data (files, expressions); maps to kExitData.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string vocab;
    std::string corpus;
    std::string checkpoint;
    std::string features;
    std::uint64_t seed = 7;
    std::uint32_t embed_dim = 16;
    std::uint32_t rnn_units = 64;
    std::string pooling = "min";
    std::size_t k = 5;
    std::string method = "semantic";
    std::string bind = "127.0.0.1:8080";

    std::string latex;
    std::string out;
    std::size_t count = 829;
    std::uint32_t max_epochs = 50;
    std::uint32_t patience = 10;
    double learning_rate = 1e-3;
    std::string report;
    std::vector<std::string> configs = {"16x32", "16x64", "32x32", "32x64"};
    bool include_self = false;
    bool normalized = false;
    unsigned workers = 1;
    std::string csv;
    std::string pgm;
    std::vector<std::size_t> sizes = {1000, 2000, 4000};
    std::size_t trials = 9;
    std::size_t code_length = 200;
    std::uint32_t dim = 64;
    std::string static_dir;
};

Pooling pooling_of(const Options& o) {
    auto p = parse_pooling(o.pooling);
    if (!p) throw CLI::ValidationError("--pooling", "expected min, avg or max");
    return *p;
}

Vocabulary vocabulary_of(const Options& o) {
    return o.vocab.empty() ? default_vocabulary() : load_vocabulary_file(o.vocab);
}

LabeledCorpus corpus_of(const Options& o, const Vocabulary& vocab, std::ostream& err) {
    auto corpus = ingest(read_jsonl_file(o.corpus), vocab);
    for (const auto& e : corpus.errors) err << "skipped " << e.id << ": " << e.message << '\n';
    return corpus;
}

std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
    if (!f) throw DataError("cannot write " + path);
    return f;
}

std::pair<std::uint32_t, std::uint32_t> parse_config(const std::string& s) {
    const auto x = s.find('x');
    try {
        if (x == std::string::npos) throw std::invalid_argument(s);
        return {static_cast<std::uint32_t>(std::stoul(s.substr(0, x))),
                static_cast<std::uint32_t>(std::stoul(s.substr(x + 1)))};
    } catch (const std::logic_error&) {
        throw CLI::ValidationError("--configs", "expected ExT such as 16x64, got '" + s + "'");
    }
}

ModelConfig model_config(const Options& o, const Vocabulary& vocab) {
    ModelConfig cfg;
    cfg.vocab_size = static_cast<std::uint32_t>(CodeIndex::from_vocabulary(vocab).size());
    cfg.embed_dim = o.embed_dim;
    cfg.rnn_units = o.rnn_units;
    cfg.pooling = pooling_of(o);
    cfg.seed = o.seed;
    cfg.max_epochs = o.max_epochs;
    cfg.patience = o.patience;
    cfg.learning_rate = o.learning_rate;
    cfg.validate();
    return cfg;
}

json report_json(const TrainingReport& r) {
    json epochs = json::array();
    for (const auto& e : r.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"train_loss", e.train_loss},
                          {"train_accuracy", e.train_accuracy},
                          {"validation_loss", e.validation_loss},
                          {"validation_accuracy", e.validation_accuracy}});
    }
    return {{"embed_dim", r.embed_dim},
            {"rnn_units", r.rnn_units},
            {"pooling", std::string(to_string(r.pooling))},
            {"seed", r.seed},
            {"fit_size", r.fit_size},
            {"validation_size", r.validation_size},
            {"test_size", r.test_size},
            {"best_epoch", r.best_epoch},
            {"train_accuracy", r.train_accuracy},
            {"validation_accuracy", r.validation_accuracy},
            {"test_accuracy", r.test_accuracy},
            {"epochs", epochs}};
}

void run_encode(const Options& o, std::ostream& out) {
    const auto expr = encode(o.latex, vocabulary_of(o));
    for (std::size_t i = 0; i < expr.codes.size(); ++i) out << (i ? " " : "") << expr.codes[i];
    out << "\ndepth: " << expr.depth << "\nlabel: " << to_string(expr.label) << '\n';
}

void run_gen(const Options& o, std::ostream& out) {
    const auto corpus = generate_synthetic(o.count, o.seed, vocabulary_of(o));
    const auto records = corpus.source_records();
    if (o.out.empty()) {
        write_jsonl(records, out);
    } else {
        write_jsonl_file(records, o.out);
        out << "wrote " << records.size() << " expressions to " << o.out << " (simple " << corpus.class_counts[0]
            << ", medium " << corpus.class_counts[1] << ", complex " << corpus.class_counts[2] << ")\n";
    }
}

void run_train(const Options& o, std::ostream& out, std::ostream& err) {
    const auto vocab = vocabulary_of(o);
    const auto corpus = corpus_of(o, vocab, err);
    const auto cfg = model_config(o, vocab);
    auto result = train(corpus.records, cfg, CodeIndex::from_vocabulary(vocab), [](const EpochStats& s) {
        spdlog::info("epoch {:2d} loss {:.4f} acc {:.4f} val_loss {:.4f} val_acc {:.4f}", s.epoch, s.train_loss,
                     s.train_accuracy, s.validation_loss, s.validation_accuracy);
    });
    save_checkpoint_file(result.model, o.checkpoint);
    const auto& r = result.report;
    out << std::fixed << std::setprecision(4) << "epochs: " << r.epochs.size() << "\nbest_epoch: " << r.best_epoch
        << "\ntrain_accuracy: " << r.train_accuracy << "\nvalidation_accuracy: " << r.validation_accuracy
        << "\ntest_accuracy: " << r.test_accuracy << "\ncheckpoint: " << o.checkpoint << '\n';
    if (!o.report.empty()) open_out(o.report) << report_json(r).dump(2) << '\n';
}

void run_sweep(const Options& o, std::ostream& out, std::ostream& err) {
    const auto vocab = vocabulary_of(o);
    const auto corpus = corpus_of(o, vocab, err);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> configs;
    for (const auto& c : o.configs) configs.push_back(parse_config(c));
    const auto rows = sweep(corpus.records, model_config(o, vocab), configs, CodeIndex::from_vocabulary(vocab));
    std::ofstream file;
    if (!o.out.empty()) file = open_out(o.out);
    std::ostream& sink = o.out.empty() ? out : file;
    sink << "embed_dim,rnn_units,train_accuracy,test_accuracy,best_epoch\n";
    for (const auto& r : rows) {
        sink << r.embed_dim << ',' << r.rnn_units << ',' << r.train_accuracy << ',' << r.test_accuracy << ','
             << r.report.best_epoch << '\n';
    }
}

void run_extract(const Options& o, std::ostream& out, std::ostream& err) {
    const auto vocab = vocabulary_of(o);
    const auto corpus = corpus_of(o, vocab, err);
    const auto model = load_checkpoint_file(o.checkpoint, pooling_of(o));
    const auto db = build_feature_db(corpus.records, model);
    save_db_file(db, o.features);
    out << "wrote " << db.size() << " feature vectors of length " << db.dim() << " to " << o.features << '\n';
}

void run_query(const Options& o, std::ostream& out, std::ostream& err) {
    const auto vocab = vocabulary_of(o);
    const auto corpus = corpus_of(o, vocab, err);
    QueryOptions q;
    q.k = o.k;
    q.exclude_self = !o.include_self;
    q.normalized_lcs = o.normalized;
    q.workers = o.workers;
    const auto method = parse_method(o.method);
    if (!method) throw CLI::ValidationError("--method", "expected semantic or lcs");

    RankedResult result;
    if (*method == Method::Semantic) {
        if (o.checkpoint.empty() || o.features.empty()) {
            throw CLI::ValidationError("query", "semantic queries need --checkpoint and --features");
        }
        ArtifactPaths paths{o.checkpoint, o.features, o.corpus, o.vocab, pooling_of(o)};
        const auto a = load_artifacts(paths);
        result = query_semantic(o.latex, a->db, a->model, a->vocab, q);
    } else {
        result = query_lcs(o.latex, corpus.records, vocab, q);
    }
    out << "rank\tid\tscore\tlabel\tlatex\n";
    for (std::size_t i = 0; i < result.hits.size(); ++i) {
        const auto& h = result.hits[i];
        const auto& rec = corpus.records[h.index];
        out << i + 1 << '\t' << h.id << '\t' << std::setprecision(9) << h.score << '\t' << to_string(rec.label)
            << '\t' << rec.latex << '\n';
    }
}

void run_inspect(const Options& o, std::ostream& out) {
    const auto model = load_checkpoint_file(o.checkpoint, pooling_of(o));
    const auto m = heatmap(o.latex, model, vocabulary_of(o));
    if (o.csv.empty()) {
        write_heatmap_csv(m, out);
    } else {
        auto f = open_out(o.csv);
        write_heatmap_csv(m, f);
    }
    if (!o.pgm.empty()) {
        auto f = open_out(o.pgm, true);
        write_heatmap_pgm(m, f);
    }
}

void run_bench(const Options& o, std::ostream& out) {
    BenchOptions b;
    b.sizes = o.sizes;
    b.trials = o.trials;
    b.code_length = o.code_length;
    b.dim = o.dim;
    b.k = o.k;
    b.seed = o.seed;
    const auto rows = bench_scaling(b);
    if (o.out.empty()) {
        write_bench_csv(rows, out);
    } else {
        auto f = open_out(o.out);
        write_bench_csv(rows, f);
    }
}

httplib::Server* g_server = nullptr;

void run_serve(const Options& o, std::ostream& out) {
    const auto colon = o.bind.rfind(':');
    int port = -1;
    if (colon != std::string::npos) {
        try {
            port = std::stoi(o.bind.substr(colon + 1));
        } catch (const std::logic_error&) {
        }
    }
    if (port < 0 || port > 65535) throw CLI::ValidationError("--bind", "expected ADDR:PORT, got '" + o.bind + "'");
    const auto host = o.bind.substr(0, colon);

    ArtifactPaths paths{o.checkpoint, o.features, o.corpus, o.vocab, pooling_of(o)};
    Service service(load_artifacts(paths), paths);
    httplib::Server server;
    service.install(server, o.static_dir);
    if (!server.bind_to_port(host, port)) throw DataError("cannot bind " + o.bind);
    out << "serving on http://" << o.bind << '\n' << std::flush;
    g_server = &server;
    std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_server) g_server->stop();
    });
    server.listen_after_bind();
    g_server = nullptr;
}

} // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    configure_logging();
    Options o;
    CLI::App app{"LaTeX formula encoding, training and retrieval", "formulafind"};
    app.require_subcommand(1);

    auto vocab_opt = [&](CLI::App* s) { s->add_option("--vocab", o.vocab, "Vocabulary TSV (keyword<TAB>code)")->check(CLI::ExistingFile); };
    auto model_opts = [&](CLI::App* s) {
        s->add_option("--seed", o.seed, "Random seed");
        s->add_option("--embed-dim", o.embed_dim, "Embedding size e");
        s->add_option("--rnn-units", o.rnn_units, "LSTM units t");
        s->add_option("--max-epochs", o.max_epochs, "Epoch limit");
        s->add_option("--patience", o.patience, "Early-stopping patience");
        s->add_option("--learning-rate", o.learning_rate, "Adam step size");
    };
    auto pooling_opt = [&](CLI::App* s) {
        s->add_option("--pooling", o.pooling, "Global pooling: min, avg or max")->check(CLI::IsMember({"min", "avg", "max"}));
    };

    auto* enc = app.add_subcommand("encode", "Print the code sequence, nested depth and label of a LaTeX expression");
    enc->add_option("latex", o.latex, "LaTeX expression")->required();
    vocab_opt(enc);

    auto* gen = app.add_subcommand("gen", "Generate a labelled synthetic corpus as JSONL");
    gen->add_option("--n", o.count, "Number of expressions");
    gen->add_option("--seed", o.seed, "Random seed");
    gen->add_option("--out", o.out, "Output file (default: stdout)");
    vocab_opt(gen);

    auto* tr = app.add_subcommand("train", "Train the complexity classifier and write a checkpoint");
    tr->add_option("--corpus", o.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    tr->add_option("--checkpoint", o.checkpoint, "Checkpoint to write")->required();
    tr->add_option("--report", o.report, "Write the training report as JSON");
    model_opts(tr);
    pooling_opt(tr);
    vocab_opt(tr);

    auto* sw = app.add_subcommand("sweep", "Train one model per (embed-dim, rnn-units) pair");
    sw->add_option("--corpus", o.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    sw->add_option("--configs", o.configs, "Pairs as ExT")->delimiter(',');
    sw->add_option("--out", o.out, "CSV file (default: stdout)");
    model_opts(sw);
    pooling_opt(sw);
    vocab_opt(sw);

    auto* ex = app.add_subcommand("extract", "Build the feature database from a checkpoint");
    ex->add_option("--corpus", o.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    ex->add_option("--checkpoint", o.checkpoint, "Trained checkpoint")->required()->check(CLI::ExistingFile);
    ex->add_option("--features", o.features, "Feature database to write")->required();
    pooling_opt(ex);
    vocab_opt(ex);

    auto* qu = app.add_subcommand("query", "Rank corpus expressions against a LaTeX query");
    qu->add_option("latex", o.latex, "LaTeX query")->required();
    qu->add_option("--corpus", o.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    qu->add_option("--checkpoint", o.checkpoint, "Trained checkpoint")->check(CLI::ExistingFile);
    qu->add_option("--features", o.features, "Feature database")->check(CLI::ExistingFile);
    qu->add_option("--k", o.k, "Number of hits")->check(CLI::PositiveNumber);
    qu->add_option("--method", o.method, "semantic or lcs")->check(CLI::IsMember({"semantic", "lcs"}));
    qu->add_flag("--include-self", o.include_self, "Keep exact self matches in the results");
    qu->add_flag("--normalized", o.normalized, "LCS: score by length / max(|a|, |b|)");
    qu->add_option("--workers", o.workers, "LCS: scan threads (0 = all cores)");
    pooling_opt(qu);
    vocab_opt(qu);

    auto* in = app.add_subcommand("inspect", "Export the recurrent output of one expression as a heat map");
    in->add_option("latex", o.latex, "LaTeX expression")->required();
    in->add_option("--checkpoint", o.checkpoint, "Trained checkpoint")->required()->check(CLI::ExistingFile);
    in->add_option("--csv", o.csv, "CSV file (default: stdout)");
    in->add_option("--pgm", o.pgm, "Also write an 8-bit PGM image");
    pooling_opt(in);
    vocab_opt(in);

    auto* be = app.add_subcommand("bench", "Time semantic and LCS scans over growing databases");
    be->add_option("--sizes", o.sizes, "Database sizes, ascending")->delimiter(',');
    be->add_option("--trials", o.trials, "Timed trials per size");
    be->add_option("--code-length", o.code_length, "Code sequence length for LCS");
    be->add_option("--dim", o.dim, "Feature vector length");
    be->add_option("--k", o.k, "Number of hits")->check(CLI::PositiveNumber);
    be->add_option("--seed", o.seed, "Random seed");
    be->add_option("--out", o.out, "CSV file (default: stdout)");

    auto* se = app.add_subcommand("serve", "Serve the JSON API over HTTP");
    se->add_option("--corpus", o.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    se->add_option("--checkpoint", o.checkpoint, "Trained checkpoint")->required()->check(CLI::ExistingFile);
    se->add_option("--features", o.features, "Feature database")->required()->check(CLI::ExistingFile);
    se->add_option("--bind", o.bind, "ADDR:PORT");
    se->add_option("--static", o.static_dir, "Directory served at /");
    pooling_opt(se);
    vocab_opt(se);

    std::vector<const char*> argv{"formulafind"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        if (args.empty()) err << app.help();
        return kExitUsage;
    }

    try {
        if (enc->parsed()) run_encode(o, out);
        else if (gen->parsed()) run_gen(o, out);
        else if (tr->parsed()) run_train(o, out, err);
        else if (sw->parsed()) run_sweep(o, out, err);
        else if (ex->parsed()) run_extract(o, out, err);
        else if (qu->parsed()) run_query(o, out, err);
        else if (in->parsed()) run_inspect(o, out);
        else if (be->parsed()) run_bench(o, out);
        else if (se->parsed()) run_serve(o, out);
    } catch (const CLI::ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const EncodeError& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const ModelError& e) {
        err << "error: " << e.what() << '\n';
        return e.kind() == ModelError::Kind::InvalidConfig ? kExitUsage : kExitData;
    } catch (const RetrievalError& e) {
        err << "error: " << e.what() << '\n';
        return e.kind() == RetrievalError::Kind::InvalidArgument ? kExitUsage : kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitOk;
}

} // namespace formulafind
