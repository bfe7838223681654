#include "formulafind/service.hpp"

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>

namespace formulafind {

using json = nlohmann::json;

namespace {

HttpResponse reply(int status, const json& body) { return {status, body.dump()}; }

HttpResponse error(int status, const std::string& message) { return reply(status, {{"error", message}}); }

HttpResponse unavailable() { return error(503, "artifacts not loaded"); }

HttpResponse encode_failure(const EncodeError& e) {
    json body = {{"error", e.what()}, {"kind", std::string(to_string(e.kind()))}};
    if (e.position() != EncodeError::npos) body["position"] = e.position();
    return reply(422, body);
}

json describe(const EncodedExpression& e) {
    return {{"codes", e.codes}, {"depth", e.depth}, {"label", std::string(to_string(e.label))}};
}

std::string hex(const Digest& d) { return to_hex(d); }

struct QueryRequest {
    std::string latex;
    std::size_t k = 5;
    Method method = Method::Semantic;
    bool exclude_self = true;
};

// Returns an error message, or nullopt when `req` was filled.
std::optional<std::string> parse_query(std::string_view body, QueryRequest& req) {
    const json obj = json::parse(body, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) return "request body must be a JSON object";
    if (!obj.contains("latex") || !obj["latex"].is_string()) return "\"latex\" must be a string";
    req.latex = obj["latex"].get<std::string>();
    if (req.latex.empty()) return "\"latex\" must not be empty";
    if (obj.contains("k")) {
        const auto& k = obj["k"];
        if (!k.is_number_integer() || k.get<std::int64_t>() < 1) return "\"k\" must be a positive integer";
        req.k = k.get<std::size_t>();
    }
    if (obj.contains("method")) {
        const auto& m = obj["method"];
        const auto parsed = m.is_string() ? parse_method(m.get<std::string>()) : std::nullopt;
        if (!parsed) return "\"method\" must be \"semantic\" or \"lcs\"";
        req.method = *parsed;
    }
    if (obj.contains("exclude_self")) {
        if (!obj["exclude_self"].is_boolean()) return "\"exclude_self\" must be a boolean";
        req.exclude_self = obj["exclude_self"].get<bool>();
    }
    return std::nullopt;
}

void validate(const Artifacts& a) {
    if (a.db.checkpoint_digest() != a.checkpoint_digest) {
        throw ArtifactError("feature database was built from checkpoint " + hex(a.db.checkpoint_digest()) +
                            ", loaded checkpoint is " + hex(a.checkpoint_digest));
    }
    if (!a.db.empty() && a.db.dim() != a.model.config.rnn_units) {
        throw ArtifactError("feature vectors have length " + std::to_string(a.db.dim()) + ", checkpoint has " +
                            std::to_string(a.model.config.rnn_units) + " units");
    }
    if (a.db.size() != a.corpus.size()) {
        throw ArtifactError("feature database has " + std::to_string(a.db.size()) + " entries, corpus has " +
                            std::to_string(a.corpus.size()));
    }
    for (std::size_t i = 0; i < a.db.size(); ++i) {
        if (a.db.id(i) != a.corpus.records[i].id) {
            throw ArtifactError("feature entry " + std::to_string(i) + " is '" + a.db.id(i) + "', corpus has '" +
                                a.corpus.records[i].id + "'");
        }
    }
}

} // namespace

std::shared_ptr<const Artifacts> make_artifacts(Vocabulary vocab, Model model, LabeledCorpus corpus,
                                                FeatureDatabase db) {
    auto a = std::make_shared<Artifacts>();
    a->checkpoint_digest = sha256(checkpoint_bytes(model));
    a->features_digest = sha256(db_bytes(db));
    a->vocab = std::move(vocab);
    a->model = std::move(model);
    a->corpus = std::move(corpus);
    a->db = std::move(db);
    validate(*a);
    for (std::size_t i = 0; i < a->corpus.size(); ++i) a->by_id.emplace(a->corpus.records[i].id, i);
    return a;
}

std::shared_ptr<const Artifacts> load_artifacts(const ArtifactPaths& paths) {
    try {
        Vocabulary vocab = paths.vocab.empty() ? default_vocabulary() : load_vocabulary_file(paths.vocab);
        Model model = load_checkpoint_file(paths.checkpoint, paths.pooling);
        LabeledCorpus corpus = ingest(read_jsonl_file(paths.corpus), vocab);
        FeatureDatabase db = load_db_file(paths.features);
        auto a = make_artifacts(std::move(vocab), std::move(model), std::move(corpus), std::move(db));
        // The files on disk must be the bytes that were validated.
        if (sha256_file(paths.checkpoint) != a->checkpoint_digest || sha256_file(paths.features) != a->features_digest) {
            throw ArtifactError("artifact files changed while loading");
        }
        return a;
    } catch (const ArtifactError&) {
        throw;
    } catch (const std::exception& e) {
        throw ArtifactError(e.what());
    }
}

Service::Service(std::shared_ptr<const Artifacts> artifacts, std::optional<ArtifactPaths> paths)
    : artifacts_(std::move(artifacts)), paths_(std::move(paths)) {}

std::shared_ptr<const Artifacts> Service::snapshot() const {
    std::lock_guard lock(mutex_);
    return artifacts_;
}

void Service::replace(std::shared_ptr<const Artifacts> artifacts) {
    std::lock_guard lock(mutex_);
    artifacts_ = std::move(artifacts);
}

HttpResponse Service::query(std::string_view body) const {
    const auto a = snapshot();
    if (!a) return unavailable();
    QueryRequest req;
    if (auto problem = parse_query(body, req)) return error(400, *problem);

    const auto start = std::chrono::steady_clock::now();
    EncodedExpression expr;
    try {
        expr = formulafind::encode(req.latex, a->vocab);
    } catch (const EncodeError& e) {
        return encode_failure(e);
    }
    QueryOptions opts;
    opts.k = req.k;
    opts.exclude_self = req.exclude_self;
    RankedResult result;
    try {
        result = req.method == Method::Semantic ? rank_semantic(extract_features(expr.codes, a->model).values, a->db, opts)
                                                : rank_lcs(expr.codes, a->corpus.records, opts);
    } catch (const ModelError& e) {
        // A vocabulary code the checkpoint was not trained with.
        return reply(422, {{"error", e.what()}, {"kind", std::string(to_string(e.kind()))}});
    }
    const double elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    json hits = json::array();
    for (std::size_t r = 0; r < result.hits.size(); ++r) {
        const auto& h = result.hits[r];
        const auto& rec = a->corpus.records[h.index];
        hits.push_back({{"rank", r + 1},
                        {"id", h.id},
                        {"latex", rec.latex},
                        {"score", h.score},
                        {"label", std::string(to_string(rec.label))}});
    }
    json out = {{"method", std::string(to_string(result.method))},
                {"k", req.k},
                {"exclude_self", req.exclude_self},
                {"query", describe(expr)},
                {"hits", std::move(hits)},
                {"elapsed_ms", elapsed}};
    spdlog::debug("query method={} k={} hits={} {:.3f} ms", to_string(result.method), req.k, result.hits.size(),
                  elapsed);
    return reply(200, out);
}

HttpResponse Service::encode(std::string_view body) const {
    const auto a = snapshot();
    if (!a) return unavailable();
    const json obj = json::parse(body, nullptr, false);
    if (obj.is_discarded() || !obj.is_object() || !obj.contains("latex") || !obj["latex"].is_string() ||
        obj["latex"].get<std::string>().empty()) {
        return error(400, "request body must be {\"latex\": non-empty string}");
    }
    try {
        const auto expr = formulafind::encode(obj["latex"].get<std::string>(), a->vocab);
        json out = describe(expr);
        out["length"] = expr.codes.size();
        return reply(200, out);
    } catch (const EncodeError& e) {
        return encode_failure(e);
    }
}

HttpResponse Service::expression(std::string_view id) const {
    const auto a = snapshot();
    if (!a) return unavailable();
    auto it = a->by_id.find(std::string(id));
    if (it == a->by_id.end()) return error(404, "unknown expression id '" + std::string(id) + "'");
    const auto& rec = a->corpus.records[it->second];
    json out = describe(rec);
    out["id"] = rec.id;
    out["latex"] = rec.latex;
    return reply(200, out);
}

HttpResponse Service::health() const {
    const auto a = snapshot();
    if (!a) return reply(503, {{"status", "unavailable"}, {"error", "artifacts not loaded"}});
    return reply(200, {{"status", "ok"},
                       {"checkpoint_digest", hex(a->checkpoint_digest)},
                       {"features_digest", hex(a->features_digest)},
                       {"T", a->db.size()},
                       {"t", a->model.config.rnn_units},
                       {"pooling", std::string(to_string(a->model.config.pooling))},
                       {"corpus_size", a->corpus.size()}});
}

HttpResponse Service::reload() {
    if (!paths_) return error(409, "service was not started from artifact files");
    try {
        replace(load_artifacts(*paths_));
    } catch (const ArtifactError& e) {
        spdlog::error("reload failed: {}", e.what());
        return error(500, std::string("reload failed: ") + e.what());
    }
    spdlog::info("artifacts reloaded");
    return health();
}

void Service::install(httplib::Server& server, const std::string& static_dir) {
    auto send = [](httplib::Response& res, const HttpResponse& r) {
        res.status = r.status;
        res.set_content(r.body, "application/json");
    };
    server.Post("/api/query", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, query(req.body));
    });
    server.Post("/api/encode", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, encode(req.body));
    });
    server.Get(R"(/api/expressions/(.+))", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, expression(req.matches[1].str()));
    });
    server.Get("/api/health", [this, send](const httplib::Request&, httplib::Response& res) { send(res, health()); });
    server.Post("/api/reload", [this, send](const httplib::Request&, httplib::Response& res) { send(res, reload()); });
    server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
        spdlog::info("{} {} -> {}", req.method, req.path, res.status);
    });
    if (!static_dir.empty() && !server.set_mount_point("/", static_dir)) {
        spdlog::warn("static directory {} not found; UI not served", static_dir);
    }
}

void configure_logging() {
    const char* level = std::getenv("FORMULAFIND_LOG");
    if (!level || !*level) {
        spdlog::set_level(spdlog::level::warn);
        return;
    }
    const auto parsed = spdlog::level::from_str(level);
    if (parsed == spdlog::level::off && std::string_view(level) != "off") {
        spdlog::set_level(spdlog::level::warn);
        spdlog::warn("unknown FORMULAFIND_LOG level '{}'", level);
        return;
    }
    spdlog::set_level(parsed);
}

} // namespace formulafind
