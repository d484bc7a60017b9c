#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "fcn/model.hpp"

namespace fcn::model {

namespace {

constexpr std::array<char, 8> kMagic = {'F', 'C', 'N', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 8);
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(os, bits);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw CheckpointError(CheckpointErrorKind::Truncated,
                              "checkpoint: unexpected end of file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8))
        throw CheckpointError(CheckpointErrorKind::Truncated,
                              "checkpoint: unexpected end of file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& is) {
    const std::uint64_t bits = get_u64(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void save_checkpoint(const FcnetParams& p, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw CheckpointError(CheckpointErrorKind::Io,
                              "checkpoint: cannot open " + path + " for write");
    os.write(kMagic.data(), kMagic.size());
    put_u32(os, kVersion);
    const FcnetConfig& c = p.cfg;
    for (std::size_t v : {c.d_s, c.d_a, c.d_h, c.d_q, c.L, c.n, c.m, c.ffn_mult})
        put_u32(os, static_cast<std::uint32_t>(v));
    put_u32(os, static_cast<std::uint32_t>(p.layout.tensors.size()));
    for (const auto& spec : p.layout.tensors) {
        put_u32(os, static_cast<std::uint32_t>(spec.name.size()));
        os.write(spec.name.data(),
                 static_cast<std::streamsize>(spec.name.size()));
        put_u64(os, spec.count);
        for (std::size_t i = 0; i < spec.count; ++i)
            put_f64(os, p.flat[spec.offset + i]);
    }
    if (!os)
        throw CheckpointError(CheckpointErrorKind::Io,
                              "checkpoint: write to " + path + " failed");
}

FcnetParams load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw CheckpointError(CheckpointErrorKind::Io,
                              "checkpoint: cannot open " + path);
    std::array<char, 8> magic{};
    if (!is.read(magic.data(), magic.size()))
        throw CheckpointError(CheckpointErrorKind::Truncated,
                              "checkpoint: file too short for header");
    if (magic != kMagic)
        throw CheckpointError(CheckpointErrorKind::BadMagic,
                              "checkpoint: bad magic");
    const std::uint32_t version = get_u32(is);
    if (version != kVersion)
        throw CheckpointError(CheckpointErrorKind::BadVersion,
                              "checkpoint: unsupported version " +
                                  std::to_string(version));
    FcnetConfig cfg;
    cfg.d_s = get_u32(is);
    cfg.d_a = get_u32(is);
    cfg.d_h = get_u32(is);
    cfg.d_q = get_u32(is);
    cfg.L = get_u32(is);
    cfg.n = get_u32(is);
    cfg.m = get_u32(is);
    cfg.ffn_mult = get_u32(is);
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw CheckpointError(CheckpointErrorKind::Parse,
                              std::string("checkpoint: invalid config: ") +
                                  e.what());
    }

    FcnetParams p;
    p.cfg = cfg;
    p.layout = ParamLayout::build(cfg);
    p.flat.assign(p.layout.total, 0.0);

    const std::uint32_t count = get_u32(is);
    if (count != p.layout.tensors.size())
        throw CheckpointError(CheckpointErrorKind::Parse,
                              "checkpoint: tensor count mismatch");
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = get_u32(is);
        if (name_len > 4096)
            throw CheckpointError(CheckpointErrorKind::Parse,
                                  "checkpoint: implausible tensor name length");
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len))
            throw CheckpointError(CheckpointErrorKind::Truncated,
                                  "checkpoint: truncated tensor name");
        const TensorSpec& spec = p.layout.tensors[i];
        if (name != spec.name)
            throw CheckpointError(CheckpointErrorKind::Parse,
                                  "checkpoint: unexpected tensor " + name);
        const std::uint64_t n = get_u64(is);
        if (n != spec.count)
            throw CheckpointError(CheckpointErrorKind::Parse,
                                  "checkpoint: size mismatch for " + name);
        for (std::uint64_t j = 0; j < n; ++j)
            p.flat[spec.offset + j] = get_f64(is);
    }
    return p;
}

}  // namespace fcn::model
