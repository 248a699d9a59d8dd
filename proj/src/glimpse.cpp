#include "mglstm/glimpse.hpp"

#include <algorithm>

#include "mglstm/errors.hpp"

namespace mglstm {

void GlimpseConfig::validate() const {
    if (!(head_size_m > 0.0 && head_size_m < upper_size_m && upper_size_m < body_size_m)) {
        throw ConfigError("glimpse: sizes must satisfy 0 < head < upper < body");
    }
    if (peripheral_count < 0) throw ConfigError("glimpse.peripheral_count must be >= 0");
    if (!(headroom >= 0.0 && headroom < 1.0)) throw ConfigError("glimpse.headroom must be in [0, 1)");
}

std::string ScaleLabel::name() const {
    switch (kind) {
        case ScaleKind::Peripheral: return "peripheral-" + std::to_string(index);
        case ScaleKind::Body: return "body";
        case ScaleKind::UpperBody: return "upperbody";
        case ScaleKind::Head: return "head";
    }
    return "?";
}

int peripheral_size(int body_side, int n) {
    if (body_side < 1 || n < 0) throw ContractViolation("peripheral_size: need body_side >= 1 and n >= 0");
    // s_b * (10 + 3n) / 10, rounded half up without floating point.
    const long long tenths = static_cast<long long>(body_side) * (10 + 3LL * n);
    return static_cast<int>((tenths + 5) / 10);
}

Rect window_for_scale(const Proposal& p, int side, double headroom, int width, int height) {
    if (side < 1) throw ContractViolation("window_for_scale: side must be >= 1");
    const int lift = static_cast<int>(round_half_up(headroom * side));
    const Rect raw{p.u - side / 2, p.v - lift, side, side};
    return clamp_rect(raw, width, height);
}

GlimpseSet build_glimpse_set(const Proposal& p, const CameraIntrinsics& k, int width, int height,
                             const GlimpseConfig& config) {
    if (p.depth_mm <= 0) throw InvalidDepthError("build_glimpse_set: proposal has no depth");
    const int head = project_size(config.head_size_m, p.depth_mm, k.fx);
    const int upper = project_size(config.upper_size_m, p.depth_mm, k.fx);
    const int body = project_size(config.body_size_m, p.depth_mm, k.fx);

    GlimpseSet set;
    set.proposal_ = p;
    auto push = [&](int side, ScaleLabel label) {
        set.sides_.push_back(side);
        set.windows_.push_back(window_for_scale(p, side, config.headroom, width, height));
        set.scales_.push_back(label);
    };
    for (int n = config.peripheral_count; n >= 1; --n) {
        push(peripheral_size(body, n), {ScaleKind::Peripheral, n});
    }
    push(body, {ScaleKind::Body, 0});
    push(upper, {ScaleKind::UpperBody, 0});
    push(head, {ScaleKind::Head, 0});
    return set;
}

namespace {

template <typename Pixel, typename Image>
Patch<Pixel> copy_window(const Image& image, const Rect& r, int channels) {
    Patch<Pixel> patch;
    patch.channels = channels;
    if (r.empty()) return patch;
    if (r.x0 < 0 || r.y0 < 0 || r.x0 + r.w > image.width || r.y0 + r.h > image.height) {
        throw ContractViolation("clip_patch: rect outside image bounds");
    }
    patch.width = r.w;
    patch.height = r.h;
    patch.data.resize(static_cast<std::size_t>(r.w) * r.h * channels);
    auto out = patch.data.begin();
    for (int y = r.y0; y < r.y0 + r.h; ++y) {
        const auto row = image.data.begin() + (static_cast<std::ptrdiff_t>(y) * image.width + r.x0) * channels;
        out = std::copy(row, row + static_cast<std::ptrdiff_t>(r.w) * channels, out);
    }
    return patch;
}

}  // namespace

DepthPatch clip_patch(const DepthMap& depth, const Rect& r) { return copy_window<std::uint16_t>(depth, r, 1); }

ColorPatch clip_patch(const ColorImage& image, const Rect& r) { return copy_window<std::uint8_t>(image, r, 3); }

}  // namespace mglstm
