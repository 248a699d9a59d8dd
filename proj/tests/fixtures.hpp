#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "mglstm/features.hpp"
#include "mglstm/nnet.hpp"
#include "mglstm/rng.hpp"
#include "mglstm/training.hpp"

namespace fixtures {

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("mglstm_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline mglstm::FeatureSequence random_sequence(std::size_t steps, std::size_t dim, mglstm::Rng& rng,
                                               double scale = 1.0) {
    mglstm::FeatureSequence s;
    s.color = mglstm::Matrix(steps, dim);
    s.depth = mglstm::Matrix(steps, dim);
    for (double& v : s.color.values) v = rng.uniform(-scale, scale);
    for (double& v : s.depth.values) v = rng.uniform(-scale, scale);
    return s;
}

/// Random model with weights uniform in [-scale, scale] (larger than the
/// training init so every gate is exercised away from its linear regime).
inline mglstm::Model random_model(mglstm::Variant variant, std::size_t dim, std::size_t hidden, mglstm::Rng& rng,
                                  double scale = 1.0) {
    mglstm::Model m = mglstm::make_model(variant, dim, hidden);
    for (auto t : mglstm::tensors(m)) {
        for (double& v : t) v = rng.uniform(-scale, scale);
    }
    return m;
}

/// Linearly separable sequences: only the last step carries the class,
/// +mu (positives) or -mu (negatives) plus Gaussian noise; earlier steps
/// are pure noise.
inline mglstm::Dataset separable_dataset(std::size_t positives, std::size_t negatives, std::size_t steps,
                                         std::size_t dim, double mu, double noise, std::uint64_t seed) {
    mglstm::Rng rng(seed);
    auto make = [&](int label) {
        mglstm::FeatureSequence s;
        s.color = mglstm::Matrix(steps, dim);
        s.depth = mglstm::Matrix(steps, dim);
        for (std::size_t t = 0; t < steps; ++t) {
            const double shift = (t + 1 == steps) ? (label ? mu : -mu) : 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                s.color(t, k) = shift + noise * rng.normal();
                s.depth(t, k) = shift + noise * rng.normal();
            }
        }
        s.label = static_cast<std::uint8_t>(label);
        return s;
    };
    mglstm::Dataset d;
    for (std::size_t n = 0; n < positives; ++n) d.positives.push_back(make(1));
    for (std::size_t n = 0; n < negatives; ++n) d.negatives.push_back(make(0));
    return d;
}

}  // namespace fixtures
