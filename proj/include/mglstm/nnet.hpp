#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "mglstm/features.hpp"
#include "mglstm/matrix.hpp"
#include "mglstm/rng.hpp"

namespace mglstm {

enum class Variant : std::uint8_t { Concat = 0, Fusion = 1 };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);

/// One LSTM chain. `weights` is the affine map applied to [x_t; h_{t-1}],
/// shape 4H x (input_dim + H), with row blocks ordered [i; f; o; u].
struct LstmParams {
    std::size_t input_dim = 0;
    std::size_t hidden = 0;
    Matrix weights;
    std::vector<double> bias;

    LstmParams() = default;
    LstmParams(std::size_t input, std::size_t hidden_size);

    friend bool operator==(const LstmParams&, const LstmParams&) = default;
};

struct CellState {
    std::vector<double> h;
    std::vector<double> c;

    static CellState zeros(std::size_t hidden) { return {std::vector<double>(hidden), std::vector<double>(hidden)}; }
};

struct GateRecord {
    std::vector<double> i, f, o, u;
};

struct CellStep {
    CellState state;
    GateRecord gates;
};

CellStep lstm_cell(const LstmParams& params, std::span<const double> x, const CellState& prev);

/// Single chain over x_t = [color_t; depth_t] with a logistic head on h_T.
struct ConcatModel {
    LstmParams chain;
    std::vector<double> head_w;
    double head_b = 0.0;

    friend bool operator==(const ConcatModel&, const ConcatModel&) = default;
};

/// Color and depth bypass chains feeding a fusion chain whose input at step t
/// is [h^C_t; h^D_t]. The logistic head reads the fusion chain's last state.
struct FusionModel {
    LstmParams color;
    LstmParams depth;
    LstmParams fusion;
    std::vector<double> head_w;
    double head_b = 0.0;

    friend bool operator==(const FusionModel&, const FusionModel&) = default;
};

using Model = std::variant<ConcatModel, FusionModel>;

/// All-zero parameters for feature dimension `dim` and hidden size `hidden`.
Model make_model(Variant variant, std::size_t dim, std::size_t hidden);

/// Uniform [-k, k] weights with k = 1/sqrt(fan_in), forget-gate bias 1, other biases 0.
Model init_model(Variant variant, std::size_t dim, std::size_t hidden, Rng& rng);

Variant variant_of(const Model& m);
std::size_t hidden_size(const Model& m);
std::size_t feature_dim(const Model& m);

/// Every parameter tensor in declaration order (weights, bias per chain, then
/// head_w, head_b). Used for updates, serialization and gradient checks.
std::vector<std::span<double>> tensors(Model& m);
std::vector<std::span<const double>> tensors(const Model& m);

/// Per-step record of one chain. `h` and `c` have T + 1 entries, index 0 is
/// the zero initial state.
struct ChainTrace {
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> i, f, o, u;
    std::vector<std::vector<double>> c, h;

    std::size_t steps() const { return inputs.size(); }
};

struct ForwardTrace {
    Variant variant = Variant::Concat;
    ChainTrace main;  ///< the concat chain or the fusion chain
    ChainTrace color;
    ChainTrace depth;
    double logit = 0.0;
    double p = 0.5;
};

double sigmoid(double x);

ForwardTrace forward_concat(const ConcatModel& model, const FeatureSequence& seq);
ForwardTrace forward_fusion(const FusionModel& model, const FeatureSequence& seq);
ForwardTrace forward(const Model& model, const FeatureSequence& seq);

/// Negative log-likelihood with p clamped to [1e-12, 1 - 1e-12].
double loss_nll(double p, int y);

/// Exact BPTT gradient of loss_nll(p, y). The logit gradient is p - y, the
/// derivative of the unclamped loss.
ConcatModel backward(const ConcatModel& model, const ForwardTrace& trace, int y);
FusionModel backward(const FusionModel& model, const ForwardTrace& trace, int y);
Model backward(const Model& model, const ForwardTrace& trace, int y);

double predict(const Model& model, const FeatureSequence& seq);

/// Decision rule: strictly above 0.5 is positive; a tie is negative.
inline bool classify(double p) { return p > 0.5; }

}  // namespace mglstm
