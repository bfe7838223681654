#include "binary_io.hpp"
#include "formulafind/model.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace formulafind {

namespace {

constexpr char kMagic[4] = {'M', 'E', 'R', 'M'};

[[noreturn]] void fail(ModelError::Kind kind, const std::string& what) { throw ModelError(kind, "checkpoint: " + what); }

} // namespace

std::string checkpoint_bytes(const Model& model) {
    const auto& p = model.params;
    const auto V = static_cast<std::uint32_t>(p.vocab_size());
    if (model.index.size() != V) fail(ModelError::Kind::DimensionMismatch, "code remap size differs from V");

    std::string out;
    out.reserve(kCheckpointHeaderBytes + 4 * V + 4 * p.parameter_count());
    out.append(kMagic, 4);
    detail::put_u32(out, kCheckpointVersion);
    detail::put_u32(out, V);
    detail::put_u32(out, static_cast<std::uint32_t>(p.embed_dim()));
    detail::put_u32(out, static_cast<std::uint32_t>(p.rnn_units()));
    detail::put_u32(out, static_cast<std::uint32_t>(p.num_classes()));
    for (Code c : model.index.codes()) detail::put_u32(out, c);
    p.for_each_tensor([&](const float* data, Eigen::Index n) {
        out.append(reinterpret_cast<const char*>(data), static_cast<std::size_t>(n) * 4);
    });
    return out;
}

void save_checkpoint(const Model& model, std::ostream& sink) {
    const auto bytes = checkpoint_bytes(model);
    sink.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!sink) fail(ModelError::Kind::Io, "write failed");
}

Model load_checkpoint_bytes(std::string_view bytes, Pooling pooling) {
    detail::Reader in(bytes);
    char magic[4];
    if (!in.raw(magic, 4)) fail(ModelError::Kind::TruncatedFile, "missing magic");
    if (std::memcmp(magic, kMagic, 4) != 0) fail(ModelError::Kind::BadMagic, "not a MERM checkpoint");

    std::uint32_t version = 0, V = 0, e = 0, t = 0, c = 0;
    if (!in.u32(version)) fail(ModelError::Kind::TruncatedFile, "missing version");
    if (version != kCheckpointVersion) {
        fail(ModelError::Kind::VersionMismatch, "unsupported version " + std::to_string(version));
    }
    if (!in.u32(V) || !in.u32(e) || !in.u32(t) || !in.u32(c)) fail(ModelError::Kind::TruncatedFile, "short header");
    if (V == 0 || e == 0 || t == 0 || c == 0) fail(ModelError::Kind::DimensionMismatch, "zero dimension in header");

    const std::uint64_t expected = 4ull * V + 4ull * (std::uint64_t{V} * e + 4ull * t * e + 4ull * t * t + 4ull * t +
                                                      std::uint64_t{c} * t + c);
    if (in.remaining() < expected) fail(ModelError::Kind::TruncatedFile, "payload shorter than header dimensions");
    if (in.remaining() > expected) fail(ModelError::Kind::DimensionMismatch, "trailing bytes after payload");

    std::vector<Code> remap(V);
    in.raw(remap.data(), 4ull * V);

    Model model;
    model.index = CodeIndex(std::move(remap));
    model.config.vocab_size = V;
    model.config.embed_dim = e;
    model.config.rnn_units = t;
    model.config.num_classes = c;
    model.config.pooling = pooling;
    model.params = ModelParams::zeros(model.config);
    model.params.for_each_tensor(
        [&](float* data, Eigen::Index n) { in.f32(data, static_cast<std::size_t>(n)); });
    return model;
}

Model load_checkpoint(std::istream& source, Pooling pooling) {
    std::ostringstream buf;
    buf << source.rdbuf();
    return load_checkpoint_bytes(buf.str(), pooling);
}

void save_checkpoint_file(const Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ModelError::Kind::Io, "cannot open " + path + " for writing");
    save_checkpoint(model, out);
}

Model load_checkpoint_file(const std::string& path, Pooling pooling) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ModelError::Kind::Io, "cannot open " + path);
    return load_checkpoint(in, pooling);
}

} // namespace formulafind
