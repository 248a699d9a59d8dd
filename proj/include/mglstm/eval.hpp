#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mglstm/imaging.hpp"

namespace mglstm {

struct Detection {
    std::string image_id;
    int u = 0;
    int v = 0;
    double score = 0.0;
    int depth_mm = 0;  ///< 0 when unknown; used by the adaptive radius
};

struct GroundTruth {
    std::string image_id;
    std::vector<std::pair<int, int>> head_tops;
};

/// Point matching radius. With `adaptive` set and a known detection depth,
/// the radius is half the projected head width instead of `radius_px`.
struct MatchParams {
    double radius_px = 25.0;
    bool adaptive = false;
    double head_width_m = 0.25;

    double radius_for(int depth_mm, double fx) const;
    void validate() const;
};

struct MatchCounts {
    int tp = 0;
    int fp = 0;
    int fn = 0;

    friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

/// Greedy matching by descending score; each detection takes the nearest
/// still-unmatched truth within its radius (distance <= radius).
MatchCounts match_image(std::vector<Detection> detections, const std::vector<std::pair<int, int>>& truths,
                        const MatchParams& params, double fx = 525.0);

struct CurvePoint {
    double threshold = 0.0;
    double fppi = 0.0;
    double miss_rate = 1.0;

    friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct EvalCurve {
    std::vector<CurvePoint> points;
};

/// One point per distinct score (descending thresholds, so fppi ascending),
/// consecutive duplicates removed. With no detections the curve is the
/// single point (fppi 0, miss 1) at threshold +inf. Images are the union of
/// ids in `truths` and `detections`.
EvalCurve compute_curve(const std::vector<Detection>& detections, const std::vector<GroundTruth>& truths,
                        const MatchParams& params, double fx = 525.0);

/// Geometric mean of the miss rate at 9 log-spaced FPPI values in [0.01, 1].
double log_average_miss_rate(const EvalCurve& curve);

enum class CurveFormat { Csv, Svg };
void emit_curve(const EvalCurve& curve, const std::filesystem::path& path, CurveFormat format);
std::string curve_to_csv(const EvalCurve& curve);
std::string curve_to_svg(const EvalCurve& curve);
EvalCurve load_curve_csv(const std::filesystem::path& path);

std::vector<GroundTruth> load_truth_jsonl(const std::filesystem::path& path);
std::string truth_to_jsonl(const std::vector<GroundTruth>& truths);
std::vector<Detection> load_detections_jsonl(const std::filesystem::path& path);
std::string detections_to_jsonl(const std::vector<Detection>& detections);

}  // namespace mglstm
