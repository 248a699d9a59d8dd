#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "mglstm/glimpse.hpp"
#include "mglstm/imaging.hpp"
#include "mglstm/matrix.hpp"

namespace mglstm {

enum class Modality { Color, Depth };

/// Deterministic stand-in for a learned patch encoder: grayscale or depth
/// values, bilinear resize to grid x grid, per-patch standardization.
struct ExtractorConfig {
    int grid = 16;

    int dim() const { return grid * grid; }
    void validate() const;
};

struct ProposalId {
    std::uint32_t image = 0;
    std::uint32_t proposal = 0;

    friend bool operator==(const ProposalId&, const ProposalId&) = default;
};

/// Per-modality T x D glimpse features of one proposal, rows largest glimpse first.
struct FeatureSequence {
    Matrix color;
    Matrix depth;
    std::optional<std::uint8_t> label;
    ProposalId id;

    std::size_t steps() const { return color.rows; }
    std::size_t dim() const { return color.cols; }

    friend bool operator==(const FeatureSequence&, const FeatureSequence&) = default;
};

/// Bilinear resampling with pixel-center alignment; identity when the sizes match.
std::vector<double> resize_bilinear(const std::vector<double>& src, int src_w, int src_h, int dst_w, int dst_h);

/// Zero mean, unit population variance in place; all zeros when the
/// variance is below 1e-12.
void standardize(std::vector<double>& values);

std::vector<double> extract_patch(const ColorPatch& patch, const ExtractorConfig& config);
std::vector<double> extract_patch(const DepthPatch& patch, const ExtractorConfig& config);

FeatureSequence extract_sequence(const GlimpseSet& set, const ColorImage& color, const DepthMap& depth,
                                 const ExtractorConfig& config);

/// Keeps the last `steps` rows (the smallest glimpses). steps == 0 or >= T
/// returns the sequence unchanged.
FeatureSequence keep_last_steps(const FeatureSequence& seq, std::size_t steps);

inline constexpr std::uint8_t kUnlabeled = 255;

/// "MGFT" container: little-endian header (version, count, T, D) followed by
/// records of (image u32, proposal u32, label u8, 2*T*D float32).
/// Values are stored as float32, so round trips are exact for values that
/// are representable in single precision.
std::vector<std::uint8_t> encode_features(const std::vector<FeatureSequence>& batch,
                                          const std::string& name = "<features>");
std::vector<FeatureSequence> decode_features(std::span<const std::uint8_t> bytes, const std::string& name);
void save_features(const std::filesystem::path& path, const std::vector<FeatureSequence>& batch);
std::vector<FeatureSequence> load_features(const std::filesystem::path& path);

}  // namespace mglstm
