#include <cmath>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "mglstm/errors.hpp"
#include "mglstm/fileio.hpp"
#include "mglstm/synth.hpp"

using namespace mglstm;

namespace {

SceneDistribution small_distribution() {
    SceneDistribution dist;
    dist.width = 160;
    dist.height = 120;
    dist.intrinsics = {131.25, 131.25, 79.5, 59.5};
    return dist;
}

}  // namespace

TEST_CASE("empty scene is a flat wall") {
    SceneSpec spec;
    spec.noise_sigma_mm = 0.0;
    const auto scene = render_scene(spec, CameraIntrinsics{}, 64, 48);
    for (auto d : scene.depth.data) CHECK(d == 6000);
    CHECK(scene.truth.head_tops.empty());
}

TEST_CASE("one centered person at two meters") {
    SceneSpec spec;
    spec.noise_sigma_mm = 0.0;
    spec.humans.push_back(HumanSpec{0.0, 2.0});
    const auto scene = render_scene(spec, CameraIntrinsics{}, 640, 480);
    // head disc: center row 239.5 - 525 * (1.575 - 1.2) / 2 = 141.06, radius 32.81 px
    int width = 0;
    for (int u = 0; u < 640; ++u) width += scene.depth.at(u, 141) == 2000;
    CHECK(std::abs(width - project_size(0.25, 2000, 525.0)) <= 1);
    // top of the disc at 108.25: row 108 is the first whose centers fall inside,
    // for columns 315..323
    REQUIRE(scene.truth.head_tops.size() == 1);
    CHECK(scene.truth.head_tops[0] == std::pair<int, int>{319, 108});
    CHECK(scene.depth.at(319, 107) == 6000);
}

TEST_CASE("nearer people occlude farther ones") {
    SceneSpec spec;
    spec.noise_sigma_mm = 0.0;
    spec.humans.push_back(HumanSpec{0.0, 4.0});
    spec.humans.push_back(HumanSpec{0.1, 2.0});
    const auto scene = render_scene(spec, CameraIntrinsics{}, 640, 480);
    CHECK(scene.depth.at(330, 300) == 2000);
    // the far head is hidden behind the near body
    CHECK(scene.truth.head_tops.size() == 1);
    CHECK(scene.warnings.size() == 1);
}

TEST_CASE("people outside the frame are dropped with a warning") {
    SceneSpec spec;
    spec.humans.push_back(HumanSpec{50.0, 2.0});
    const auto scene = render_scene(spec, CameraIntrinsics{}, 640, 480);
    CHECK(scene.truth.head_tops.empty());
    CHECK(scene.warnings.size() == 1);
}

TEST_CASE("scene validation") {
    SceneSpec spec;
    spec.humans.push_back(HumanSpec{0.0, 3.0});
    spec.humans.push_back(HumanSpec{0.3, 3.0});
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.humans[1].x = 0.7;
    CHECK_NOTHROW(spec.validate());
    spec.humans[1].height = 0.2;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("rendering is deterministic") {
    const auto dist = small_distribution();
    const auto spec = sample_scene(dist, 17);
    const auto a = render_scene(spec, dist.intrinsics, dist.width, dist.height);
    const auto b = render_scene(spec, dist.intrinsics, dist.width, dist.height);
    CHECK(a.depth == b.depth);
    CHECK(a.color == b.color);
    CHECK(a.truth.head_tops == b.truth.head_tops);
}

TEST_CASE("ground-truth head-tops have the person's depth") {
    const auto dist = small_distribution();
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto spec = sample_scene(dist, seed);
        const auto scene = render_scene(spec, dist.intrinsics, dist.width, dist.height);
        CHECK(scene.truth.head_tops.size() == spec.humans.size());
        for (const auto& [u, v] : scene.truth.head_tops) {
            const int d = scene.depth.at(u, v);
            double best = INFINITY;
            for (const auto& h : spec.humans) best = std::min(best, std::abs(d - 1000.0 * h.z));
            CHECK(best <= 3.0 * spec.noise_sigma_mm + 50.0);
        }
    }
}

TEST_CASE("dataset files and hashes") {
    fixtures::TempDir dir("ds");
    const auto m = generate_dataset(1, small_distribution(), 3, dir.path());
    REQUIRE(m.images.size() == 1);
    CHECK(std::filesystem::exists(dir / m.images[0].depth));
    CHECK(std::filesystem::exists(dir / m.images[0].color));
    CHECK(std::filesystem::exists(dir / "manifest.json"));
    CHECK(std::filesystem::exists(dir / m.truth));
    CHECK(std::filesystem::exists(dir / m.intrinsics));
    auto bytes = fileio::read_bytes(dir / m.images[0].depth);
    const auto color = fileio::read_bytes(dir / m.images[0].color);
    bytes.insert(bytes.end(), color.begin(), color.end());
    CHECK(fileio::sha256_hex(bytes) == m.images[0].sha256);
    CHECK(manifest_to_json(load_manifest(dir / "manifest.json")) == manifest_to_json(m));
    CHECK_THROWS(generate_dataset(0, small_distribution(), 3, dir.path()));
}

TEST_CASE("distinct seeds give distinct scenes") {
    fixtures::TempDir dir("seeds");
    int distinct = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        // fresh directories: replacing existing files forces a disk flush on some filesystems
        const auto a = generate_dataset(1, small_distribution(), 2 * s, dir / ("a" + std::to_string(s)));
        const auto b = generate_dataset(1, small_distribution(), 2 * s + 1, dir / ("b" + std::to_string(s)));
        distinct += a.images[0].sha256 != b.images[0].sha256;
    }
    CHECK(distinct >= 99);
}

TEST_CASE("image ids") {
    CHECK(image_id_for(0) == "img_0000");
    CHECK(image_id_for(123) == "img_0123");
}
