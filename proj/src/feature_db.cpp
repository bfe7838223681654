#include "binary_io.hpp"
#include "formulafind/retrieval.hpp"

#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace formulafind {

namespace {

constexpr char kMagic[4] = {'M', 'E', 'R', 'F'};

[[noreturn]] void fail(RetrievalError::Kind kind, const std::string& what) {
    throw RetrievalError(kind, "feature db: " + what);
}

} // namespace

std::string db_bytes(const FeatureDatabase& db) {
    std::string out;
    out.reserve(kFeatureDbHeaderBytes + db.size() * (2 + 16 + 4ull * db.dim()));
    out.append(kMagic, 4);
    detail::put_u32(out, kFeatureDbVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(db.size()));
    detail::put_u32(out, db.dim());
    out.append(reinterpret_cast<const char*>(db.checkpoint_digest().data()), db.checkpoint_digest().size());
    for (std::size_t i = 0; i < db.size(); ++i) {
        const auto& id = db.id(i);
        if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
            fail(RetrievalError::Kind::InvalidArgument, "id longer than 65535 bytes");
        }
        detail::put_u16(out, static_cast<std::uint16_t>(id.size()));
        out.append(id);
        const auto v = db.vector(i);
        out.append(reinterpret_cast<const char*>(v.data()), v.size() * 4);
    }
    return out;
}

void save_db(const FeatureDatabase& db, std::ostream& sink) {
    const auto bytes = db_bytes(db);
    sink.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!sink) fail(RetrievalError::Kind::Io, "write failed");
}

FeatureDatabase load_db_bytes(std::string_view bytes) {
    detail::Reader in(bytes);
    char magic[4];
    if (!in.raw(magic, 4)) fail(RetrievalError::Kind::TruncatedFile, "missing magic");
    if (std::memcmp(magic, kMagic, 4) != 0) fail(RetrievalError::Kind::BadMagic, "not a MERF feature database");

    std::uint32_t version = 0, count = 0, dim = 0;
    if (!in.u32(version)) fail(RetrievalError::Kind::TruncatedFile, "missing version");
    if (version != kFeatureDbVersion) {
        fail(RetrievalError::Kind::VersionMismatch, "unsupported version " + std::to_string(version));
    }
    Digest digest{};
    if (!in.u32(count) || !in.u32(dim) || !in.raw(digest.data(), digest.size())) {
        fail(RetrievalError::Kind::TruncatedFile, "short header");
    }
    if (dim == 0 && count > 0) fail(RetrievalError::Kind::DimensionMismatch, "zero vector length");

    FeatureDatabase db(dim, digest);
    std::vector<float> values(dim);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint16_t len = 0;
        std::string id;
        if (!in.u16(len) || !in.bytes(id, len) || !in.f32(values.data(), dim)) {
            fail(RetrievalError::Kind::TruncatedFile, "entry " + std::to_string(i) + " of " + std::to_string(count) +
                                                          " is incomplete");
        }
        db.add(std::move(id), values);
    }
    if (in.remaining() != 0) fail(RetrievalError::Kind::DimensionMismatch, "trailing bytes after last entry");
    return db;
}

FeatureDatabase load_db(std::istream& source) {
    std::ostringstream buf;
    buf << source.rdbuf();
    return load_db_bytes(buf.str());
}

void save_db_file(const FeatureDatabase& db, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(RetrievalError::Kind::Io, "cannot open " + path + " for writing");
    save_db(db, out);
}

FeatureDatabase load_db_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(RetrievalError::Kind::Io, "cannot open " + path);
    return load_db(in);
}

} // namespace formulafind
