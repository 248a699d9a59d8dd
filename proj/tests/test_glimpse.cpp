#include "doctest.h"
#include "fixtures.hpp"
#include "mglstm/errors.hpp"
#include "mglstm/glimpse.hpp"

using namespace mglstm;

TEST_CASE("peripheral sizes") {
    CHECK(peripheral_size(100, 3) == 190);
    CHECK(peripheral_size(100, 0) == 100);
    CHECK(peripheral_size(37, 1) == 48);  // 48.1
    CHECK(peripheral_size(5, 1) == 7);    // 6.5 rounds up
}

TEST_CASE("window placement") {
    CHECK(window_for_scale({320, 100, 2000}, 100, 0.1, 640, 480) == Rect{270, 90, 100, 100});
    // cropped at the top-left corner, never shifted
    CHECK(window_for_scale({5, 5, 2000}, 100, 0.1, 640, 480) == Rect{0, 0, 55, 95});
    CHECK(window_for_scale({320, 100, 2000}, 100, 0.0, 640, 480) == Rect{270, 100, 100, 100});
    CHECK_THROWS_AS(window_for_scale({320, 100, 2000}, 0, 0.1, 640, 480), ContractViolation);
    CHECK(window_for_scale({-500, 100, 2000}, 100, 0.1, 640, 480).area() == 0);
}

TEST_CASE("glimpse set for a 100 px body") {
    // 525 * 1900 / 9975 = 100 exactly; upper 36.84 -> 37, head 15.79 -> 16
    const auto set = build_glimpse_set({320, 200, 9975}, CameraIntrinsics{}, 640, 480, GlimpseConfig{});
    REQUIRE(set.size() == 9);
    CHECK(set.sides() == std::vector<int>{280, 250, 220, 190, 160, 130, 100, 37, 16});
    CHECK(set.scales().front().name() == "peripheral-6");
    CHECK(set.scales()[6].kind == ScaleKind::Body);
    CHECK(set.scales()[7].kind == ScaleKind::UpperBody);
    CHECK(set.scales()[8].kind == ScaleKind::Head);
    CHECK(set.windows()[8] == Rect{312, 198, 16, 16});
}

TEST_CASE("sequence length follows the peripheral count") {
    GlimpseConfig cfg;
    cfg.peripheral_count = 0;
    CHECK(cfg.steps() == 3);
    CHECK(build_glimpse_set({320, 200, 3000}, CameraIntrinsics{}, 640, 480, cfg).size() == 3);
    cfg.peripheral_count = -1;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("corner proposal stays in bounds") {
    const auto set = build_glimpse_set({0, 0, 1500}, CameraIntrinsics{}, 640, 480, GlimpseConfig{});
    for (const auto& r : set.windows()) {
        CHECK(r.x0 >= 0);
        CHECK(r.y0 >= 0);
        CHECK(r.x0 + r.w <= 640);
        CHECK(r.y0 + r.h <= 480);
    }
}

TEST_CASE("random proposals keep the window invariants") {
    Rng rng(21);
    GlimpseConfig cfg;
    for (int n = 0; n < 2000; ++n) {
        const int w = 1 + static_cast<int>(rng.below(700));
        const int h = 1 + static_cast<int>(rng.below(500));
        const Proposal p{static_cast<int>(rng.below(w)), static_cast<int>(rng.below(h)),
                         1 + static_cast<int>(rng.below(12000))};
        const auto set = build_glimpse_set(p, CameraIntrinsics{}, w, h, cfg);
        REQUIRE(set.size() == static_cast<std::size_t>(cfg.steps()));
        for (std::size_t t = 0; t < set.size(); ++t) {
            const Rect& r = set.windows()[t];
            if (!r.empty()) {
                CHECK(r.x0 >= 0);
                CHECK(r.y0 >= 0);
                CHECK(r.x0 + r.w <= w);
                CHECK(r.y0 + r.h <= h);
            }
            if (t > 0) CHECK(set.sides()[t - 1] >= set.sides()[t]);
        }
    }
}

TEST_CASE("clip_patch") {
    DepthMap map(4, 3);
    for (std::size_t i = 0; i < map.data.size(); ++i) map.data[i] = static_cast<std::uint16_t>(i);
    const auto full = clip_patch(map, {0, 0, 4, 3});
    CHECK(full.data == map.data);
    const auto one = clip_patch(map, {2, 1, 1, 1});
    CHECK(one.data == std::vector<std::uint16_t>{6});
    CHECK(clip_patch(map, {1, 1, 0, 2}).empty());
    CHECK_THROWS_AS(clip_patch(map, {3, 0, 2, 1}), ContractViolation);

    ColorImage img(2, 2);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<std::uint8_t>(i);
    const auto c = clip_patch(img, {1, 1, 1, 1});
    CHECK(c.channels == 3);
    CHECK(c.data == std::vector<std::uint8_t>{9, 10, 11});
}
