#include "mglstm/training.hpp"

#include <cmath>
#include <cstdio>

#include "mglstm/errors.hpp"

namespace mglstm {

void TrainConfig::validate() const {
    if (!(lr0 > 0.0)) throw ConfigError("train.lr0 must be positive");
    if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("train.decay must be in (0, 1]");
    if (!(neg_ratio > 0.0)) throw ConfigError("train.neg_ratio must be positive");
    if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (hidden < 1) throw ConfigError("train.hidden must be >= 1");
    if (sequence_length < 0) throw ConfigError("train.sequence_length must be >= 0");
}

Dataset Dataset::from_records(std::vector<FeatureSequence> records) {
    Dataset d;
    for (auto& r : records) {
        if (!r.label) continue;
        (*r.label ? d.positives : d.negatives).push_back(std::move(r));
    }
    return d;
}

std::size_t Dataset::steps() const { return positives.empty() ? 0 : positives.front().steps(); }
std::size_t Dataset::dim() const { return positives.empty() ? 0 : positives.front().dim(); }

void Dataset::validate() const {
    if (positives.empty()) throw ConfigError("dataset has no positive samples");
    const std::size_t T = steps();
    const std::size_t D = dim();
    auto check = [&](const std::vector<FeatureSequence>& list) {
        for (const auto& s : list) {
            if (s.steps() != T || s.dim() != D || s.depth.rows != T || s.depth.cols != D) {
                throw ConfigError("dataset sequences disagree on T or D");
            }
        }
    };
    check(positives);
    check(negatives);
}

std::vector<const FeatureSequence*> resample_epoch(const Dataset& data, double neg_ratio, Rng& rng) {
    if (data.positives.empty()) throw ConfigError("resample_epoch: no positive samples");
    const auto wanted = static_cast<std::size_t>(std::floor(neg_ratio * static_cast<double>(data.positives.size())));
    const std::size_t take = std::min(wanted, data.negatives.size());

    // Partial Fisher-Yates: the first `take` slots become a uniform sample.
    std::vector<std::size_t> index(data.negatives.size());
    for (std::size_t k = 0; k < index.size(); ++k) index[k] = k;
    for (std::size_t k = 0; k < take; ++k) {
        const std::size_t j = k + static_cast<std::size_t>(rng.below(index.size() - k));
        std::swap(index[k], index[j]);
    }

    std::vector<const FeatureSequence*> out;
    out.reserve(data.positives.size() + take);
    for (const auto& p : data.positives) out.push_back(&p);
    for (std::size_t k = 0; k < take; ++k) out.push_back(&data.negatives[index[k]]);
    rng.shuffle(out);
    return out;
}

double learning_rate(double lr0, double decay, int epoch) { return lr0 * std::pow(decay, epoch); }

namespace {

void axpy(double alpha, const Model& x, Model& y) {
    auto xs = tensors(x);
    auto ys = tensors(y);
    for (std::size_t t = 0; t < xs.size(); ++t) {
        for (std::size_t k = 0; k < xs[t].size(); ++k) ys[t][k] += alpha * xs[t][k];
    }
}

void zero(Model& m) {
    for (auto t : tensors(m)) std::fill(t.begin(), t.end(), 0.0);
}

}  // namespace

TrainResult train(const Dataset& data, const TrainConfig& config, const std::function<void(const EpochLog&)>& on_epoch) {
    config.validate();
    data.validate();
    Rng rng(config.seed);
    const auto steps = static_cast<std::uint32_t>(data.steps());
    Model model = init_model(config.variant, data.dim(), static_cast<std::size_t>(config.hidden), rng);

    TrainResult result{Checkpoint{model, steps}, model, {}, -1};
    double best_loss = INFINITY;
    Model grad = make_model(config.variant, data.dim(), static_cast<std::size_t>(config.hidden));

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = learning_rate(config.lr0, config.decay, epoch);
        const auto samples = resample_epoch(data, config.neg_ratio, rng);
        EpochLog entry;
        entry.epoch = epoch;
        entry.lr = lr;
        double loss_sum = 0.0;
        std::size_t correct = 0;
        const auto batch = static_cast<std::size_t>(config.batch_size);
        for (std::size_t start = 0; start < samples.size(); start += batch) {
            const std::size_t end = std::min(start + batch, samples.size());
            zero(grad);
            for (std::size_t n = start; n < end; ++n) {
                const FeatureSequence& s = *samples[n];
                const int y = *s.label;
                const ForwardTrace trace = forward(model, s);
                const double loss = loss_nll(trace.p, y);
                if (!std::isfinite(loss) || !std::isfinite(trace.p)) {
                    throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                        std::to_string(start / batch));
                }
                loss_sum += loss;
                if (classify(trace.p) == (y == 1)) ++correct;
                (y == 1 ? entry.positives : entry.negatives) += 1;
                axpy(1.0, backward(model, trace, y), grad);
            }
            axpy(-lr / static_cast<double>(end - start), grad, model);
        }
        entry.mean_loss = loss_sum / static_cast<double>(samples.size());
        entry.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
        if (entry.mean_loss < best_loss) {
            best_loss = entry.mean_loss;
            result.best = Checkpoint{model, steps};
            result.best_epoch = epoch;
        }
        result.log.push_back(entry);
        if (on_epoch) on_epoch(entry);
    }
    result.final_model = std::move(model);
    return result;
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
    std::string out = "epoch,lr,mean_loss,train_accuracy\n";
    char line[160];
    for (const auto& e : log) {
        std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g\n", e.epoch, e.lr, e.mean_loss, e.accuracy);
        out += line;
    }
    return out;
}

}  // namespace mglstm
