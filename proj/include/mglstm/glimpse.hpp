#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mglstm/imaging.hpp"
#include "mglstm/proposals.hpp"

namespace mglstm {

struct GlimpseConfig {
    double head_size_m = 0.30;
    double upper_size_m = 0.70;
    double body_size_m = 1.90;
    int peripheral_count = 6;
    double headroom = 0.1;

    /// Sequence length T.
    int steps() const { return peripheral_count + 3; }
    void validate() const;
};

enum class ScaleKind { Peripheral, Body, UpperBody, Head };

struct ScaleLabel {
    ScaleKind kind = ScaleKind::Head;
    int index = 0;  ///< n for peripheral scales, 0 otherwise

    std::string name() const;
    friend bool operator==(const ScaleLabel&, const ScaleLabel&) = default;
};

/// Windows of one proposal, largest first and head last. `sides` holds the
/// pre-clamp square sides, `windows` the rectangles clamped to the image.
class GlimpseSet {
public:
    const Proposal& proposal() const { return proposal_; }
    const std::vector<Rect>& windows() const { return windows_; }
    const std::vector<int>& sides() const { return sides_; }
    const std::vector<ScaleLabel>& scales() const { return scales_; }
    std::size_t size() const { return windows_.size(); }

private:
    friend GlimpseSet build_glimpse_set(const Proposal&, const CameraIntrinsics&, int, int, const GlimpseConfig&);

    Proposal proposal_;
    std::vector<Rect> windows_;
    std::vector<int> sides_;
    std::vector<ScaleLabel> scales_;
};

/// S_n = S_b * (1 + 0.3 n), rounded half up (computed in integers).
int peripheral_size(int body_side, int n);

/// Square of `side` horizontally centered on the proposal with its top edge
/// `round(headroom * side)` above the head-top, cropped to the image.
Rect window_for_scale(const Proposal& p, int side, double headroom, int width, int height);

GlimpseSet build_glimpse_set(const Proposal& p, const CameraIntrinsics& k, int width, int height, const GlimpseConfig& config);

/// Copied sub-window. Zero-area rects give an empty patch; rects reaching
/// outside the image are a ContractViolation.
template <typename Pixel>
struct Patch {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<Pixel> data;

    bool empty() const { return width == 0 || height == 0; }
};

using DepthPatch = Patch<std::uint16_t>;
using ColorPatch = Patch<std::uint8_t>;

DepthPatch clip_patch(const DepthMap& depth, const Rect& r);
ColorPatch clip_patch(const ColorImage& image, const Rect& r);

}  // namespace mglstm
