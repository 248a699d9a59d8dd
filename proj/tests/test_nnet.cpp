#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "mglstm/errors.hpp"
#include "mglstm/nnet.hpp"
#include "oracle.hpp"

using namespace mglstm;

TEST_CASE("zero parameters give half-open gates") {
    LstmParams p(3, 2);
    const std::vector<double> x{0.3, -1.0, 2.0};
    const auto step = lstm_cell(p, x, CellState::zeros(2));
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(step.gates.i[k] == 0.5);
        CHECK(step.gates.f[k] == 0.5);
        CHECK(step.gates.o[k] == 0.5);
        CHECK(step.gates.u[k] == 0.0);
        CHECK(step.state.c[k] == 0.0);
        CHECK(step.state.h[k] == 0.0);
    }
}

TEST_CASE("saturated forget gate carries the cell") {
    LstmParams p(1, 1);
    p.bias[1] = 30.0;  // forget block
    CellState prev = CellState::zeros(1);
    prev.c[0] = 0.8;
    const auto step = lstm_cell(p, std::vector<double>{1.0}, prev);
    CHECK(std::abs(step.state.c[0] - 0.8) < 1e-9);
}

TEST_CASE("cell matches the straight-line evaluation") {
    Rng rng(31);
    for (int n = 0; n < 50; ++n) {
        LstmParams p(3, 2);
        for (double& w : p.weights.values) w = rng.uniform(-2, 2);
        for (double& b : p.bias) b = rng.uniform(-1, 1);
        std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        CellState prev{{rng.uniform(-1, 1), rng.uniform(-1, 1)}, {rng.uniform(-2, 2), rng.uniform(-2, 2)}};
        const auto got = lstm_cell(p, x, prev);
        oracle::Vec h = prev.h, c = prev.c;
        oracle::step(oracle::copy_chain(p), x, h, c);
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(std::abs(got.state.h[k] - h[k]) <= 1e-12);
            CHECK(std::abs(got.state.c[k] - c[k]) <= 1e-12);
        }
    }
}

TEST_CASE("shape mismatch is rejected") {
    LstmParams p(3, 2);
    CHECK_THROWS_AS(lstm_cell(p, std::vector<double>{1.0}, CellState::zeros(2)), ContractViolation);
    Rng rng(1);
    const auto m = make_model(Variant::Concat, 4, 2);
    CHECK_THROWS_AS(forward(m, fixtures::random_sequence(3, 5, rng)), ContractViolation);
}

TEST_CASE("zero model predicts one half") {
    Rng rng(2);
    for (Variant v : {Variant::Concat, Variant::Fusion}) {
        const auto m = make_model(v, 4, 3);
        CHECK(predict(m, fixtures::random_sequence(5, 4, rng)) == 0.5);
        CHECK(predict(m, fixtures::random_sequence(1, 4, rng)) == 0.5);
    }
}

TEST_CASE("forward agrees with the reference evaluation") {
    Rng rng(33);
    for (int n = 0; n < 40; ++n) {
        const Variant v = n % 2 ? Variant::Fusion : Variant::Concat;
        const std::size_t T = 1 + rng.below(6), D = 1 + rng.below(5), H = 1 + rng.below(4);
        const auto m = fixtures::random_model(v, D, H, rng);
        const auto seq = fixtures::random_sequence(T, D, rng);
        CHECK(std::abs(predict(m, seq) - oracle::probability(m, seq)) <= 1e-12);
    }
}

TEST_CASE("fusion ignores depth when its depth columns are zero") {
    Rng rng(34);
    auto m = std::get<FusionModel>(fixtures::random_model(Variant::Fusion, 4, 3, rng));
    for (std::size_t r = 0; r < m.fusion.weights.rows; ++r) {
        for (std::size_t k = 3; k < 6; ++k) m.fusion.weights(r, k) = 0.0;
    }
    auto seq = fixtures::random_sequence(4, 4, rng);
    const double p = forward_fusion(m, seq).p;
    for (double& d : seq.depth.values) d = rng.uniform(-5, 5);
    CHECK(forward_fusion(m, seq).p == p);
}

TEST_CASE("negative log-likelihood") {
    CHECK(loss_nll(0.5, 1) == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(loss_nll(0.9, 0) == doctest::Approx(2.302585).epsilon(1e-6));
    CHECK(std::isfinite(loss_nll(0.0, 1)));
    CHECK(loss_nll(0.0, 1) == doctest::Approx(-std::log(1e-12)));
    CHECK(sigmoid(-800.0) >= 0.0);
    CHECK(sigmoid(800.0) == 1.0);
}

TEST_CASE("saturated correct prediction has vanishing gradient") {
    Rng rng(35);
    auto m = std::get<ConcatModel>(fixtures::random_model(Variant::Concat, 3, 2, rng));
    m.head_b = 30.0;
    const auto seq = fixtures::random_sequence(4, 3, rng);
    const Model model = m;
    const Model g = backward(model, forward(model, seq), 1);
    for (auto t : tensors(g)) {
        for (double v : t) CHECK(std::abs(v) < 1e-9);
    }
}

TEST_CASE("gradients match central differences") {
    Rng rng(36);
    for (Variant v : {Variant::Concat, Variant::Fusion}) {
        for (int n = 0; n < 4; ++n) {
            const auto m = fixtures::random_model(v, 2, 3, rng);
            const auto seq = fixtures::random_sequence(4, 2, rng);
            const auto check = oracle::gradient_check(m, seq, n % 2);
            CHECK(check.checked > 0);
            CHECK(check.max_rel_error <= 1e-5);
        }
    }
}

TEST_CASE("gate activations stay in range") {
    Rng rng(37);
    for (int n = 0; n < 30; ++n) {
        const auto m = fixtures::random_model(Variant::Fusion, 3, 3, rng, 4.0);
        const auto trace = forward(m, fixtures::random_sequence(5, 3, rng, 3.0));
        for (const ChainTrace* ch : {&trace.main, &trace.color, &trace.depth}) {
            for (std::size_t t = 0; t < ch->steps(); ++t) {
                for (std::size_t k = 0; k < 3; ++k) {
                    CHECK(ch->i[t][k] >= 0.0);
                    CHECK(ch->i[t][k] <= 1.0);
                    CHECK(ch->f[t][k] >= 0.0);
                    CHECK(ch->f[t][k] <= 1.0);
                    CHECK(ch->o[t][k] >= 0.0);
                    CHECK(ch->o[t][k] <= 1.0);
                    CHECK(std::abs(ch->u[t][k]) <= 1.0);
                    CHECK(std::abs(ch->h[t + 1][k]) <= 1.0);
                }
            }
        }
        CHECK(trace.p >= 0.0);
        CHECK(trace.p <= 1.0);
    }
}

TEST_CASE("decision rule") {
    CHECK_FALSE(classify(0.5));
    CHECK(classify(0.5000001));
}

TEST_CASE("initialization") {
    Rng rng(38);
    const auto m = std::get<FusionModel>(init_model(Variant::Fusion, 10, 4, rng));
    const double k = 1.0 / std::sqrt(14.0);
    for (double w : m.color.weights.values) CHECK(std::abs(w) <= k);
    for (std::size_t r = 0; r < 16; ++r) CHECK(m.color.bias[r] == (r >= 4 && r < 8 ? 1.0 : 0.0));
    CHECK(m.head_b == 0.0);
    for (double w : m.head_w) CHECK(std::abs(w) <= 0.5);
    CHECK(m.fusion.input_dim == 8);
    CHECK(feature_dim(m) == 10);
    CHECK(hidden_size(m) == 4);
    CHECK(parse_variant("concat") == Variant::Concat);
    CHECK_THROWS(parse_variant("lstm"));
}
