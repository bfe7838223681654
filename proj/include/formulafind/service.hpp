#pragma once

#include "formulafind/corpus.hpp"
#include "formulafind/digest.hpp"
#include "formulafind/model.hpp"
#include "formulafind/retrieval.hpp"

#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>

namespace httplib {
class Server;
}

namespace formulafind {

/// Artifacts that fail to load or do not belong together.
class ArtifactError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ArtifactPaths {
    std::string checkpoint;
    std::string features;
    std::string corpus;
    std::string vocab; // empty: built-in vocabulary
    Pooling pooling = Pooling::Min;
};

/// One immutable, mutually validated set of loaded files.
struct Artifacts {
    Vocabulary vocab;
    Model model;
    LabeledCorpus corpus;
    FeatureDatabase db;
    Digest checkpoint_digest{};
    Digest features_digest{};
    std::unordered_map<std::string, std::size_t> by_id;
};

/// Digests are taken over the serialized bytes. Throws ArtifactError when the
/// database was not built from this checkpoint or does not list the corpus
/// records in order.
std::shared_ptr<const Artifacts> make_artifacts(Vocabulary vocab, Model model, LabeledCorpus corpus,
                                                FeatureDatabase db);
std::shared_ptr<const Artifacts> load_artifacts(const ArtifactPaths& paths);

struct HttpResponse {
    int status = 200;
    std::string body; // JSON
};

/// Request handlers over the current snapshot. Handlers copy the snapshot
/// pointer once, so a concurrent reload never changes an in-flight answer.
class Service {
public:
    explicit Service(std::shared_ptr<const Artifacts> artifacts = nullptr,
                     std::optional<ArtifactPaths> paths = std::nullopt);

    std::shared_ptr<const Artifacts> snapshot() const;
    void replace(std::shared_ptr<const Artifacts> artifacts);

    HttpResponse query(std::string_view body) const;
    HttpResponse encode(std::string_view body) const;
    HttpResponse expression(std::string_view id) const;
    HttpResponse health() const;
    /// Reloads from the configured paths; the old snapshot stays on failure.
    HttpResponse reload();

    /// Registers the /api routes, plus a static mount at / when given.
    void install(httplib::Server& server, const std::string& static_dir = {});

private:
    mutable std::mutex mutex_;
    std::shared_ptr<const Artifacts> artifacts_;
    std::optional<ArtifactPaths> paths_;
};

/// Applies FORMULAFIND_LOG (trace, debug, info, warn, error, off) to the
/// default logger.
void configure_logging();

} // namespace formulafind
