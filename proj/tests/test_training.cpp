#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "mglstm/checkpoint.hpp"
#include "mglstm/errors.hpp"
#include "mglstm/training.hpp"

using namespace mglstm;

namespace {

Dataset counted(std::size_t pos, std::size_t neg) {
    Rng rng(51);
    Dataset d;
    for (std::size_t n = 0; n < pos; ++n) {
        d.positives.push_back(fixtures::random_sequence(2, 2, rng));
        d.positives.back().label = 1;
    }
    for (std::size_t n = 0; n < neg; ++n) {
        d.negatives.push_back(fixtures::random_sequence(2, 2, rng));
        d.negatives.back().label = 0;
    }
    return d;
}

TrainConfig fixture_config() {
    TrainConfig cfg;
    cfg.variant = Variant::Concat;
    cfg.hidden = 8;
    cfg.batch_size = 1;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST_CASE("resampling counts") {
    const auto d = counted(10, 100);
    Rng rng(1);
    const auto epoch = resample_epoch(d, 3.0, rng);
    CHECK(epoch.size() == 40);
    const auto pos = std::count_if(epoch.begin(), epoch.end(), [](const FeatureSequence* s) { return *s->label == 1; });
    CHECK(pos == 10);
    CHECK(std::set<const FeatureSequence*>(epoch.begin(), epoch.end()).size() == 40);

    Rng capped(1);
    CHECK(resample_epoch(counted(10, 5), 3.0, capped).size() == 15);
}

TEST_CASE("resampling is determined by the seed") {
    const auto d = counted(10, 100);
    Rng a(9), b(9), c(10);
    const auto ea = resample_epoch(d, 3.0, a);
    CHECK(ea == resample_epoch(d, 3.0, b));
    CHECK(ea != resample_epoch(d, 3.0, c));
    Rng r(1);
    CHECK_THROWS_AS(resample_epoch(counted(0, 5), 3.0, r), ConfigError);
}

TEST_CASE("learning rate schedule") {
    CHECK(learning_rate(0.0004, 0.97, 0) == 0.0004);
    CHECK(learning_rate(0.0004, 0.97, 1) == doctest::Approx(0.000388).epsilon(1e-12));
    CHECK(learning_rate(0.0004, 1.0, 37) == 0.0004);
}

TEST_CASE("zero epochs return the initialization") {
    auto cfg = fixture_config();
    cfg.epochs = 0;
    const auto d = fixtures::separable_dataset(20, 60, 3, 4, 3.0, 1.0, 2);
    const auto result = train(d, cfg);
    CHECK(result.log.empty());
    Rng rng(cfg.seed);
    CHECK(result.best.model == init_model(Variant::Concat, 4, 8, rng));
    CHECK(result.best.steps == 3);
}

TEST_CASE("training is deterministic") {
    auto cfg = fixture_config();
    cfg.epochs = 5;
    cfg.batch_size = 4;
    cfg.variant = Variant::Fusion;
    const auto d = fixtures::separable_dataset(20, 70, 3, 4, 3.0, 1.0, 3);
    const auto a = train(d, cfg);
    const auto b = train(d, cfg);
    CHECK(encode_checkpoint(a.best) == encode_checkpoint(b.best));
    CHECK(training_log_csv(a.log) == training_log_csv(b.log));
}

TEST_CASE("per-epoch class ratio") {
    auto cfg = fixture_config();
    cfg.epochs = 3;
    const auto d = fixtures::separable_dataset(20, 70, 3, 4, 3.0, 1.0, 4);
    for (const auto& e : train(d, cfg).log) {
        CHECK(e.positives == 20);
        CHECK(e.negatives == 60);
    }
}

TEST_CASE("separable fixture is learned") {
    auto cfg = fixture_config();
    cfg.epochs = 200;
    const auto d = fixtures::separable_dataset(200, 600, 3, 16, 3.0, 1.0, 7);
    const auto result = train(d, cfg);
    CHECK(result.log.back().accuracy >= 0.95);

    // smoothed (3-epoch mean) loss does not rise by more than 5% over the first 10 epochs
    std::vector<double> smooth;
    for (std::size_t e = 0; e + 2 < 10; ++e) {
        smooth.push_back((result.log[e].mean_loss + result.log[e + 1].mean_loss + result.log[e + 2].mean_loss) / 3.0);
    }
    for (std::size_t e = 1; e < smooth.size(); ++e) CHECK(smooth[e] <= 1.05 * smooth[e - 1]);

    const auto best = std::min_element(result.log.begin(), result.log.end(),
                                       [](const EpochLog& a, const EpochLog& b) { return a.mean_loss < b.mean_loss; });
    CHECK(result.best_epoch == best->epoch);
}

TEST_CASE("non-finite input aborts with a diagnostic") {
    auto d = fixtures::separable_dataset(4, 4, 2, 2, 1.0, 1.0, 5);
    d.positives[0].color(0, 0) = std::nan("");
    auto cfg = fixture_config();
    cfg.epochs = 1;
    try {
        train(d, cfg);
        FAIL("expected a training error");
    } catch (const TrainingError& e) {
        CHECK(std::string(e.what()).find("epoch 0") != std::string::npos);
        CHECK(std::string(e.what()).find("batch") != std::string::npos);
    }
}

TEST_CASE("log CSV") {
    std::vector<EpochLog> log{{0, 0.0004, 0.5, 0.75, 1, 3}};
    const auto csv = training_log_csv(log);
    CHECK(csv.rfind("epoch,lr,mean_loss,train_accuracy\n", 0) == 0);
    CHECK(csv.find("\n0,0.00040000000000000002,0.5,0.75\n") != std::string::npos);
}

TEST_CASE("config validation") {
    TrainConfig cfg;
    cfg.decay = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
