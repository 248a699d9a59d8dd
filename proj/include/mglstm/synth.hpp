#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mglstm/eval.hpp"
#include "mglstm/imaging.hpp"

namespace mglstm {

/// A standing person: head disc of diameter head_w on top of a
/// shoulder-wide slab reaching the floor, all at depth z.
struct HumanSpec {
    double x = 0.0;  ///< lateral offset from the optical axis, meters
    double z = 3.0;  ///< meters
    double height = 1.7;
    double head_w = 0.25;
    double shoulder_w = 0.5;
};

struct SceneSpec {
    std::vector<HumanSpec> humans;
    int background_depth_mm = 6000;
    int clutter = 0;
    double noise_sigma_mm = 10.0;
    std::uint64_t seed = 0;
    /// Height of the horizontally-looking camera above the floor, meters.
    double camera_height = 1.2;

    void validate() const;
};

struct RenderedScene {
    DepthMap depth;
    ColorImage color;
    GroundTruth truth;
    std::vector<std::string> warnings;  ///< one entry per dropped human
};

/// Paints the wall, clutter boxes and people with a z-buffer, then adds
/// depth noise truncated at 3 sigma. Ground truth is the center of the
/// topmost visible head row of each person.
RenderedScene render_scene(const SceneSpec& spec, const CameraIntrinsics& k, int width, int height,
                           const std::string& image_id = "img");

/// Parameters of the random scene layouts used by generate_dataset.
struct SceneDistribution {
    int min_humans = 1;
    int max_humans = 3;
    int clutter = 3;
    double noise_sigma_mm = 10.0;
    /// Deeper than the farthest person plus the head-top margin.
    int background_depth_mm = 8000;
    double min_z = 1.5;
    double max_z = 6.0;
    double min_height = 1.55;
    double max_height = 1.85;
    int width = 640;
    int height = 480;
    CameraIntrinsics intrinsics;

    void validate() const;
};

/// Random layout whose people do not overlap horizontally in the image.
SceneSpec sample_scene(const SceneDistribution& dist, std::uint64_t seed);

struct ManifestEntry {
    std::string id;
    std::string depth;  ///< paths relative to the dataset directory
    std::string color;
    std::string sha256;  ///< SHA-256 of the depth file bytes followed by the color file bytes
};

struct Manifest {
    std::vector<ManifestEntry> images;
    std::string intrinsics;
    std::string truth;
};

/// Writes depth_NNNN.pgm, color_NNNN.ppm, truth.jsonl, intrinsics.json and
/// manifest.json into out_dir.
Manifest generate_dataset(int n_images, const SceneDistribution& dist, std::uint64_t seed,
                          const std::filesystem::path& out_dir);

Manifest load_manifest(const std::filesystem::path& path);
std::string manifest_to_json(const Manifest& m);
std::string image_id_for(int index);

}  // namespace mglstm
