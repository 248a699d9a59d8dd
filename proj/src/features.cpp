#include "mglstm/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "mglstm/errors.hpp"
#include "mglstm/fileio.hpp"

namespace mglstm {

namespace {
constexpr char kMagic[4] = {'M', 'G', 'F', 'T'};
constexpr std::uint16_t kVersion = 1;
}  // namespace

void ExtractorConfig::validate() const {
    if (grid < 2) throw ConfigError("extractor.grid must be >= 2");
}

std::vector<double> resize_bilinear(const std::vector<double>& src, int src_w, int src_h, int dst_w, int dst_h) {
    if (src_w == dst_w && src_h == dst_h) return src;
    std::vector<double> out(static_cast<std::size_t>(dst_w) * dst_h);
    const double sx = static_cast<double>(src_w) / dst_w;
    const double sy = static_cast<double>(src_h) / dst_h;
    for (int y = 0; y < dst_h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src_h - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, src_h - 1);
        const double wy = fy - y0;
        for (int x = 0; x < dst_w; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src_w - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, src_w - 1);
            const double wx = fx - x0;
            const double top = src[y0 * src_w + x0] * (1.0 - wx) + src[y0 * src_w + x1] * wx;
            const double bottom = src[y1 * src_w + x0] * (1.0 - wx) + src[y1 * src_w + x1] * wx;
            out[static_cast<std::size_t>(y) * dst_w + x] = top * (1.0 - wy) + bottom * wy;
        }
    }
    return out;
}

void standardize(std::vector<double>& values) {
    if (values.empty()) return;
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= n;
    if (var < 1e-12) {
        std::fill(values.begin(), values.end(), 0.0);
        return;
    }
    const double inv_std = 1.0 / std::sqrt(var);
    for (double& v : values) v = (v - mean) * inv_std;
}

namespace {

std::vector<double> finish(std::vector<double> plane, int w, int h, const ExtractorConfig& config) {
    auto grid = resize_bilinear(plane, w, h, config.grid, config.grid);
    standardize(grid);
    return grid;
}

}  // namespace

std::vector<double> extract_patch(const ColorPatch& patch, const ExtractorConfig& config) {
    if (patch.empty()) return std::vector<double>(static_cast<std::size_t>(config.dim()), 0.0);
    std::vector<double> luminance(static_cast<std::size_t>(patch.width) * patch.height);
    for (std::size_t i = 0; i < luminance.size(); ++i) {
        const std::uint8_t* rgb = &patch.data[3 * i];
        luminance[i] = 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2];
    }
    return finish(std::move(luminance), patch.width, patch.height, config);
}

std::vector<double> extract_patch(const DepthPatch& patch, const ExtractorConfig& config) {
    if (patch.empty()) return std::vector<double>(static_cast<std::size_t>(config.dim()), 0.0);
    std::vector<double> meters(patch.data.size());
    // Missing returns map to 0.
    std::transform(patch.data.begin(), patch.data.end(), meters.begin(),
                   [](std::uint16_t mm) { return mm * 1e-3; });
    return finish(std::move(meters), patch.width, patch.height, config);
}

FeatureSequence extract_sequence(const GlimpseSet& set, const ColorImage& color, const DepthMap& depth,
                                 const ExtractorConfig& config) {
    const std::size_t steps = set.size();
    const std::size_t dim = static_cast<std::size_t>(config.dim());
    FeatureSequence seq;
    seq.color = Matrix(steps, dim);
    seq.depth = Matrix(steps, dim);
    for (std::size_t t = 0; t < steps; ++t) {
        const Rect& r = set.windows()[t];
        const auto c = extract_patch(clip_patch(color, r), config);
        const auto d = extract_patch(clip_patch(depth, r), config);
        std::copy(c.begin(), c.end(), seq.color.row(t).begin());
        std::copy(d.begin(), d.end(), seq.depth.row(t).begin());
    }
    return seq;
}

FeatureSequence keep_last_steps(const FeatureSequence& seq, std::size_t steps) {
    const std::size_t total = seq.steps();
    if (steps == 0 || steps >= total) return seq;
    FeatureSequence out;
    out.label = seq.label;
    out.id = seq.id;
    out.color = Matrix(steps, seq.dim());
    out.depth = Matrix(steps, seq.dim());
    const std::size_t first = total - steps;
    for (std::size_t t = 0; t < steps; ++t) {
        std::ranges::copy(seq.color.row(first + t), out.color.row(t).begin());
        std::ranges::copy(seq.depth.row(first + t), out.depth.row(t).begin());
    }
    return out;
}

std::vector<std::uint8_t> encode_features(const std::vector<FeatureSequence>& batch, const std::string& name) {
    const std::size_t steps = batch.empty() ? 0 : batch.front().steps();
    const std::size_t dim = batch.empty() ? 0 : batch.front().dim();
    if (steps > 0xFFFF) throw ContractViolation("save_features: T exceeds u16");
    if (dim > 0xFFFFFFFFu || batch.size() > 0xFFFFFFFFu) throw ContractViolation("save_features: size exceeds u32");
    fileio::ByteWriter w;
    w.raw(std::span(reinterpret_cast<const std::uint8_t*>(kMagic), 4));
    w.u16(kVersion);
    w.u32(static_cast<std::uint32_t>(batch.size()));
    w.u16(static_cast<std::uint16_t>(steps));
    w.u32(static_cast<std::uint32_t>(dim));
    for (const auto& seq : batch) {
        if (seq.color.rows != steps || seq.depth.rows != steps || seq.color.cols != dim || seq.depth.cols != dim) {
            throw FormatError(name, w.bytes().size(), "record T/D differs from header");
        }
        w.u32(seq.id.image);
        w.u32(seq.id.proposal);
        w.u8(seq.label.value_or(kUnlabeled));
        for (double v : seq.color.values) w.f32(static_cast<float>(v));
        for (double v : seq.depth.values) w.f32(static_cast<float>(v));
    }
    return std::move(w.bytes());
}

std::vector<FeatureSequence> decode_features(std::span<const std::uint8_t> bytes, const std::string& name) {
    fileio::ByteReader r(bytes, name);
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) r.fail("bad magic, expected MGFT");
    r.take(4);
    const std::uint16_t version = r.u16();
    if (version != kVersion) r.fail("unsupported version " + std::to_string(version));
    const std::uint32_t count = r.u32();
    const std::size_t steps = r.u16();
    const std::size_t dim = r.u32();
    const std::size_t record_bytes = 9 + 8 * steps * dim;
    if (record_bytes > 0 && r.remaining() / record_bytes < count) r.fail("truncated: record count exceeds payload");
    std::vector<FeatureSequence> batch;
    batch.reserve(count);
    for (std::uint32_t n = 0; n < count; ++n) {
        FeatureSequence seq;
        seq.id.image = r.u32();
        seq.id.proposal = r.u32();
        const std::uint8_t label = r.u8();
        if (label > 1 && label != kUnlabeled) r.fail("invalid label " + std::to_string(label));
        if (label != kUnlabeled) seq.label = label;
        seq.color = Matrix(steps, dim);
        seq.depth = Matrix(steps, dim);
        for (double& v : seq.color.values) v = r.f32();
        for (double& v : seq.depth.values) v = r.f32();
        batch.push_back(std::move(seq));
    }
    if (r.remaining() != 0) r.fail("trailing bytes after last record");
    return batch;
}

void save_features(const std::filesystem::path& path, const std::vector<FeatureSequence>& batch) {
    fileio::write_atomic(path, encode_features(batch, path.string()));
}

std::vector<FeatureSequence> load_features(const std::filesystem::path& path) {
    const auto bytes = fileio::read_bytes(path);
    return decode_features(bytes, path.string());
}

}  // namespace mglstm
