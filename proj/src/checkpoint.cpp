#include "mglstm/checkpoint.hpp"

#include <cstring>

#include "mglstm/errors.hpp"
#include "mglstm/fileio.hpp"

namespace mglstm {

namespace {
constexpr char kMagic[4] = {'M', 'G', 'C', 'K'};
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 2 + 1 + 4 + 4 + 4;
}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck) {
    fileio::ByteWriter w;
    w.raw(std::span(reinterpret_cast<const std::uint8_t*>(kMagic), 4));
    w.u16(kVersion);
    w.u8(static_cast<std::uint8_t>(variant_of(ck.model)));
    w.u32(static_cast<std::uint32_t>(hidden_size(ck.model)));
    w.u32(static_cast<std::uint32_t>(feature_dim(ck.model)));
    w.u32(ck.steps);
    for (const auto& t : tensors(ck.model)) {
        for (double v : t) w.f64(v);
    }
    const auto payload = std::span(w.bytes()).subspan(kHeaderBytes);
    w.u32(fileio::crc32(payload));
    return std::move(w.bytes());
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& name) {
    fileio::ByteReader r(bytes, name);
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) r.fail("bad magic, expected MGCK");
    r.take(4);
    const std::uint16_t version = r.u16();
    if (version != kVersion) r.fail("unsupported version " + std::to_string(version));
    const std::uint8_t tag = r.u8();
    if (tag > 1) r.fail("unknown variant tag " + std::to_string(tag));
    const std::uint32_t hidden = r.u32();
    const std::uint32_t dim = r.u32();
    const std::uint32_t steps = r.u32();
    if (hidden == 0 || dim == 0) r.fail("zero hidden size or feature dimension");
    if (hidden > (1u << 16) || dim > (1u << 24)) r.fail("implausible model shape");

    Checkpoint ck{make_model(static_cast<Variant>(tag), dim, hidden), steps};
    std::size_t count = 0;
    for (const auto& t : tensors(ck.model)) count += t.size();
    if (r.remaining() != 8 * count + 4) r.fail("payload size does not match header shape");
    const std::size_t payload_start = r.offset();
    for (auto t : tensors(ck.model)) {
        for (double& v : t) v = r.f64();
    }
    const std::uint32_t expected = fileio::crc32(bytes.subspan(payload_start, 8 * count));
    if (r.u32() != expected) throw FormatError(name, payload_start + 8 * count, "CRC32 mismatch");
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    fileio::write_atomic(path, encode_checkpoint(ck));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const auto bytes = fileio::read_bytes(path);
    return decode_checkpoint(bytes, path.string());
}

}  // namespace mglstm
