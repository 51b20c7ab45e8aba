#include "duplex/trace_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "duplex/channel.hpp"

namespace duplex {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void put_u32le(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

std::uint32_t get_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_file(const fs::path& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write: " + path.string());
}

std::vector<unsigned char> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw DataError("cannot open for reading: " + path.string());
    const auto size = in.tellg();
    in.seekg(0);
    std::vector<unsigned char> bytes(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in) throw DataError("short read: " + path.string());
    return bytes;
}

void write_activations(const fs::path& path, const ActivationMatrix& act) {
    std::vector<unsigned char> bytes;
    bytes.reserve(static_cast<std::size_t>(act.size()) * 4);
    for (Eigen::Index r = 0; r < act.rows(); ++r)
        for (Eigen::Index c = 0; c < act.cols(); ++c)
            put_u32le(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(act(r, c))));
    write_file(path, bytes);
}

ActivationMatrix read_activations(const fs::path& path, std::int64_t n_frames, std::int64_t dim) {
    const auto bytes = read_file(path);
    const std::size_t expected = static_cast<std::size_t>(n_frames) * static_cast<std::size_t>(dim) * 4;
    if (bytes.size() != expected)
        throw SizeMismatchError(path.filename().string() + ": expected " + std::to_string(expected) +
                                " bytes for " + std::to_string(n_frames) + "x" + std::to_string(dim) +
                                " float32, found " + std::to_string(bytes.size()));
    ActivationMatrix act(n_frames, dim);
    const unsigned char* p = bytes.data();
    for (std::int64_t r = 0; r < n_frames; ++r)
        for (std::int64_t c = 0; c < dim; ++c, p += 4) {
            const float v = std::bit_cast<float>(get_u32le(p));
            if (!std::isfinite(v))
                throw NonFiniteError(path.filename().string() + ": non-finite value at frame " +
                                     std::to_string(r) + ", dim " + std::to_string(c));
            act(r, c) = static_cast<double>(v);
        }
    return act;
}

void write_tokens(const fs::path& path, const TokenTrack& tokens) {
    std::vector<unsigned char> bytes;
    bytes.reserve(tokens.tokens.size() * 4);
    for (std::uint32_t tok : tokens.tokens) put_u32le(bytes, tok);
    write_file(path, bytes);
}

std::vector<std::uint32_t> read_tokens(const fs::path& path, std::int64_t n_frames,
                                       std::int64_t tokens_per_frame) {
    const auto bytes = read_file(path);
    const std::size_t expected =
        static_cast<std::size_t>(n_frames) * static_cast<std::size_t>(tokens_per_frame) * 4;
    if (bytes.size() != expected)
        throw SizeMismatchError(path.filename().string() + ": expected " + std::to_string(expected) +
                                " bytes for " + std::to_string(n_frames) + " frames x " +
                                std::to_string(tokens_per_frame) + " uint32, found " +
                                std::to_string(bytes.size()));
    // Multi-token frames are reserved in the format; only index 0 is consumed.
    std::vector<std::uint32_t> tokens(static_cast<std::size_t>(n_frames));
    for (std::int64_t t = 0; t < n_frames; ++t)
        tokens[static_cast<std::size_t>(t)] = get_u32le(bytes.data() + t * tokens_per_frame * 4);
    return tokens;
}

void write_vad(const fs::path& path, const VadTrack& vad) {
    write_file(path, std::vector<unsigned char>(vad.voiced.begin(), vad.voiced.end()));
}

std::vector<std::uint8_t> read_vad(const fs::path& path, std::int64_t n_frames) {
    const auto bytes = read_file(path);
    if (bytes.size() != static_cast<std::size_t>(n_frames))
        throw SizeMismatchError(path.filename().string() + ": expected " + std::to_string(n_frames) +
                                " bytes, found " + std::to_string(bytes.size()));
    return {bytes.begin(), bytes.end()};
}

template <typename T>
T manifest_get(const json& j, const char* key) {
    if (!j.contains(key)) throw ManifestError(std::string("manifest missing key '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ManifestError(std::string("manifest key '") + key + "': " + e.what());
    }
}

}  // namespace

void write_trace(const DialogueTrace& trace, const fs::path& dir) {
    validate_trace(trace);
    if (trace.a.tokens.vocab_size != trace.b.tokens.vocab_size ||
        trace.a.tokens.pad_id != trace.b.tokens.pad_id)
        throw ValidationError("participants must share vocab_size and pad_id in the container format");

    fs::create_directories(dir);

    json manifest;
    manifest["format_version"] = kTraceFormatVersion;
    manifest["frame_ms"] = trace.clock.frame_ms;
    manifest["n_frames"] = trace.duration_frames;
    manifest["dim_a"] = trace.a.activations.cols();
    manifest["dim_b"] = trace.b.activations.cols();
    manifest["vocab_size"] = trace.a.tokens.vocab_size;
    manifest["pad_id"] = trace.a.tokens.pad_id;
    manifest["tokens_per_frame"] = 1;
    manifest["condition"] = {
        {"noise_p", trace.condition.noise_p},
        {"pad_bias_a", trace.condition.pad_bias_a},
        {"pad_bias_b", trace.condition.pad_bias_b},
        {"variant_a", to_string(trace.condition.variant_a)},
        {"variant_b", to_string(trace.condition.variant_b)},
        {"seed", trace.condition.seed},
    };
    // Channel configuration, reconstructible from the dialogue seed and the
    // fixed per-direction substream labels. Optional on ingestion.
    manifest["channel"] = {
        {"noise_p", trace.condition.noise_p},
        {"rng_seed", trace.condition.seed},
        {"stream_a_to_b", std::string(kChannelStreamAToB)},
        {"stream_b_to_a", std::string(kChannelStreamBToA)},
    };

    std::ofstream mf(dir / "manifest.json", std::ios::trunc);
    if (!mf) throw DataError("cannot open for writing: " + (dir / "manifest.json").string());
    mf << manifest.dump(2) << "\n";
    if (!mf) throw DataError("short write: " + (dir / "manifest.json").string());
    mf.close();

    write_activations(dir / "act_A.f32", trace.a.activations);
    write_activations(dir / "act_B.f32", trace.b.activations);
    write_tokens(dir / "tok_A.u32", trace.a.tokens);
    write_tokens(dir / "tok_B.u32", trace.b.tokens);
    write_vad(dir / "vad_A.u8", trace.a.vad);
    write_vad(dir / "vad_B.u8", trace.b.vad);
}

DialogueTrace read_trace(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) throw ManifestError("no manifest.json in " + dir.string());

    json manifest;
    {
        std::ifstream mf(manifest_path);
        if (!mf) throw ManifestError("cannot open " + manifest_path.string());
        try {
            manifest = json::parse(mf);
        } catch (const json::exception& e) {
            throw ManifestError("malformed manifest.json: " + std::string(e.what()));
        }
    }

    const int version = manifest_get<int>(manifest, "format_version");
    if (version != kTraceFormatVersion)
        throw ManifestError("unsupported format_version " + std::to_string(version));

    DialogueTrace trace;
    trace.clock.frame_ms = manifest_get<int>(manifest, "frame_ms");
    trace.duration_frames = manifest_get<std::int64_t>(manifest, "n_frames");
    const auto dim_a = manifest_get<std::int64_t>(manifest, "dim_a");
    const auto dim_b = manifest_get<std::int64_t>(manifest, "dim_b");
    const auto vocab_size = manifest_get<std::uint32_t>(manifest, "vocab_size");
    const auto pad_id = manifest_get<std::uint32_t>(manifest, "pad_id");
    const auto tokens_per_frame = manifest_get<std::int64_t>(manifest, "tokens_per_frame");
    if (trace.duration_frames < 0) throw ManifestError("negative n_frames");
    if (dim_a < 1 || dim_b < 1) throw ManifestError("activation dims must be >= 1");
    if (tokens_per_frame < 1) throw ManifestError("tokens_per_frame must be >= 1");

    if (!manifest.contains("condition")) throw ManifestError("manifest missing key 'condition'");
    const json& cond = manifest.at("condition");
    trace.condition.noise_p = manifest_get<double>(cond, "noise_p");
    trace.condition.pad_bias_a = manifest_get<double>(cond, "pad_bias_a");
    trace.condition.pad_bias_b = manifest_get<double>(cond, "pad_bias_b");
    trace.condition.variant_a = variant_from_string(manifest_get<std::string>(cond, "variant_a"));
    trace.condition.variant_b = variant_from_string(manifest_get<std::string>(cond, "variant_b"));
    trace.condition.seed = manifest_get<std::uint64_t>(cond, "seed");

    auto load_participant = [&](ParticipantTrack& p, const char* act, const char* tok,
                                const char* vad, std::int64_t dim) {
        p.activations = read_activations(dir / act, trace.duration_frames, dim);
        p.tokens.vocab_size = vocab_size;
        p.tokens.pad_id = pad_id;
        p.tokens.tokens = read_tokens(dir / tok, trace.duration_frames, tokens_per_frame);
        p.vad.voiced = read_vad(dir / vad, trace.duration_frames);
    };
    load_participant(trace.a, "act_A.f32", "tok_A.u32", "vad_A.u8", dim_a);
    load_participant(trace.b, "act_B.f32", "tok_B.u32", "vad_B.u8", dim_b);

    validate_trace(trace);
    return trace;
}

}  // namespace duplex
