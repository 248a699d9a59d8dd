#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mglstm/checkpoint.hpp"
#include "mglstm/features.hpp"
#include "mglstm/nnet.hpp"
#include "mglstm/rng.hpp"

namespace mglstm {

struct TrainConfig {
    double lr0 = 0.0004;
    double decay = 0.97;
    int epochs = 50;
    int batch_size = 32;
    double neg_ratio = 3.0;
    std::uint64_t seed = 1;
    Variant variant = Variant::Fusion;
    int hidden = 256;
    /// Number of trailing (smallest) glimpses fed to the network; 0 keeps all.
    int sequence_length = 0;

    void validate() const;
};

struct Dataset {
    std::vector<FeatureSequence> positives;
    std::vector<FeatureSequence> negatives;

    /// Splits labeled records by label; unlabeled records are dropped.
    static Dataset from_records(std::vector<FeatureSequence> records);
    std::size_t steps() const;
    std::size_t dim() const;
    void validate() const;
};

/// Every positive plus min(floor(neg_ratio * |pos|), |neg|) negatives drawn
/// without replacement, shuffled together. The returned pointers refer into
/// `data`.
std::vector<const FeatureSequence*> resample_epoch(const Dataset& data, double neg_ratio, Rng& rng);

/// lr0 * decay^epoch
double learning_rate(double lr0, double decay, int epoch);

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    double mean_loss = 0.0;
    double accuracy = 0.0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

struct TrainResult {
    Checkpoint best;   ///< parameters at the end of the lowest-loss epoch
    Model final_model;
    std::vector<EpochLog> log;
    int best_epoch = -1;
};

/// Mini-batch SGD with batch-averaged BPTT gradients. Single-threaded and
/// deterministic in (data, config). Throws TrainingError on a non-finite loss.
TrainResult train(const Dataset& data, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

std::string training_log_csv(const std::vector<EpochLog>& log);

}  // namespace mglstm
