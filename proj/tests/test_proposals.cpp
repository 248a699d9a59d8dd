#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "mglstm/imaging.hpp"
#include "mglstm/proposals.hpp"
#include "mglstm/synth.hpp"

using namespace mglstm;

namespace {

// 10 px block at 2000 mm on a 4000 mm wall. With fx = 80 the head width at
// 2000 mm is 80 * 250 / 2000 = 10 px.
DepthMap block_scene(int width, const std::vector<int>& block_x0) {
    DepthMap map(width, 40, 4000);
    for (int x0 : block_x0) {
        for (int v = 15; v < 25; ++v) {
            for (int u = x0; u < x0 + 10; ++u) map.at(u, v) = 2000;
        }
    }
    return map;
}

CameraIntrinsics small_camera() { return {80.0, 80.0, 29.5, 19.5}; }

}  // namespace

TEST_CASE("head-top test on a block") {
    const auto map = block_scene(60, {20});
    const auto k = small_camera();
    const ProposalParams params;
    CHECK(is_head_top(map, 25, 15, k, params));
    CHECK_FALSE(is_head_top(map, 25, 20, k, params));
    CHECK_FALSE(is_head_top(map, 5, 0, k, params));

    auto holed = map;
    holed.at(25, 15) = 0;
    CHECK_FALSE(is_head_top(holed, 25, 15, k, params));
}

TEST_CASE("head fill fraction") {
    const auto map = block_scene(60, {20});
    // window centered on u = 20 covers columns 15..24, half of them on the wall
    CHECK(head_fill_fraction(map, 20, 15, 10, 300) == doctest::Approx(0.5));
    // window at u = 25 covers columns 20..29 entirely
    CHECK(head_fill_fraction(map, 25, 15, 10, 300) == doctest::Approx(1.0));
    // window cropped at the bottom edge: rows 35..39 of the wall
    CHECK(head_fill_fraction(map, 5, 35, 10, 300) == doctest::Approx(1.0));
}

TEST_CASE("one block gives one proposal at its top center") {
    const auto props = generate_proposals(block_scene(60, {20}), small_camera(), {});
    REQUIRE(props.size() == 1);
    CHECK(props[0].v == 15);
    CHECK(props[0].depth_mm == 2000);
    CHECK(props[0].u >= 20);
    CHECK(props[0].u <= 29);
}

TEST_CASE("two distant blocks give two proposals") {
    const auto props = generate_proposals(block_scene(300, {20, 220}), small_camera(), {});
    REQUIRE(props.size() == 2);
    CHECK(props[0].u < 30);
    CHECK(props[1].u >= 220);
}

TEST_CASE("no valid depth gives no proposals") {
    CHECK(generate_proposals(DepthMap(64, 48, 0), CameraIntrinsics{}, {}).empty());
}

TEST_CASE("params validation") {
    ProposalParams p;
    p.fill_ratio = 1.5;
    CHECK_THROWS(p.validate());
    p = {};
    p.head_width_m = 0.0;
    CHECK_THROWS(p.validate());
}

TEST_CASE("proposals pass the test, are separated and deterministic") {
    SceneDistribution dist;
    dist.width = 160;
    dist.height = 120;
    dist.intrinsics = {131.25, 131.25, 79.5, 59.5};
    const ProposalParams params;
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        const auto scene = render_scene(sample_scene(dist, seed), dist.intrinsics, dist.width, dist.height);
        const auto props = generate_proposals(scene.depth, dist.intrinsics, params);
        CHECK(props == generate_proposals(scene.depth, dist.intrinsics, params));
        for (std::size_t a = 0; a < props.size(); ++a) {
            CHECK(is_head_top(scene.depth, props[a].u, props[a].v, dist.intrinsics, params));
            CHECK(props[a].depth_mm == scene.depth.at(props[a].u, props[a].v));
            if (a > 0) {
                const bool ordered = props[a - 1].v < props[a].v ||
                                     (props[a - 1].v == props[a].v && props[a - 1].u < props[a].u);
                CHECK(ordered);
            }
            for (std::size_t b = a + 1; b < props.size(); ++b) {
                const int wa = project_size(params.head_width_m, props[a].depth_mm, dist.intrinsics.fx);
                const int wb = project_size(params.head_width_m, props[b].depth_mm, dist.intrinsics.fx);
                const double dist_px = std::hypot(props[a].u - props[b].u, props[a].v - props[b].v);
                CHECK(dist_px > params.suppression_radius_factor * std::min(wa, wb));
            }
        }
    }
}

TEST_CASE("proposal JSONL round trip") {
    fixtures::TempDir dir("props");
    std::vector<ImageProposals> all{{"img_0000", {{1, 2, 3000}, {40, 5, 1200}}}, {"img_0001", {}}, {"img_0002", {{7, 8, 9}}}};
    save_proposals_jsonl((dir / "p.jsonl").string(), all);
    const auto back = load_proposals_jsonl((dir / "p.jsonl").string());
    // images without proposals have no records
    REQUIRE(back.size() == 2);
    CHECK(back[0].image_id == "img_0000");
    CHECK(back[0].proposals == all[0].proposals);
    CHECK(back[1].proposals == all[2].proposals);
}
