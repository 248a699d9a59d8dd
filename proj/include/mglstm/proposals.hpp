#pragma once

#include <string>
#include <vector>

#include "mglstm/imaging.hpp"

namespace mglstm {

/// Candidate head-top pixel.
struct Proposal {
    int u = 0;
    int v = 0;
    int depth_mm = 0;

    friend bool operator==(const Proposal&, const Proposal&) = default;
};

/// Thresholds of the per-pixel head-top test.
///
/// The test is a reconstruction: a pixel is a head-top if the band of
/// head width above it is free (farther by at least `top_margin_mm`, or
/// missing), and a head-sized square hanging below it is mostly at the
/// pixel's own depth.
struct ProposalParams {
    double head_width_m = 0.25;
    int depth_tolerance_mm = 300;
    double fill_ratio = 0.6;
    int top_margin_mm = 400;
    double suppression_radius_factor = 0.5;

    void validate() const;
};

/// Head-top test at (u, v). Rows above the image count as free, but a pixel
/// on the top row has nothing observable above it and is rejected.
bool is_head_top(const DepthMap& depth, int u, int v, const CameraIntrinsics& k, const ProposalParams& params);

/// Fraction of the w x w window below (u, v) within the depth tolerance of
/// the pixel's depth; the window is cropped to the image.
double head_fill_fraction(const DepthMap& depth, int u, int v, int w, int tolerance_mm);

/// Scans every pixel, then suppresses greedily, nearest first. Ties on depth
/// prefer the better-filled candidate, then row-major order. The result is
/// sorted by (v, u).
std::vector<Proposal> generate_proposals(const DepthMap& depth, const CameraIntrinsics& k, const ProposalParams& params);

/// One JSON Lines record: {"image_id", "u", "v", "depth_mm"}.
std::string proposal_to_jsonl(const std::string& image_id, const Proposal& p);

struct ImageProposals {
    std::string image_id;
    std::vector<Proposal> proposals;
};

/// Groups records by image_id in order of first appearance.
std::vector<ImageProposals> load_proposals_jsonl(const std::string& path);
void save_proposals_jsonl(const std::string& path, const std::vector<ImageProposals>& all);

}  // namespace mglstm
