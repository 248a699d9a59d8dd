#include "mglstm/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mglstm/errors.hpp"

namespace mglstm {

const char* variant_name(Variant v) { return v == Variant::Concat ? "concat" : "fusion"; }

Variant parse_variant(const std::string& name) {
    if (name == "concat") return Variant::Concat;
    if (name == "fusion") return Variant::Fusion;
    throw ConfigError("unknown variant '" + name + "' (expected concat or fusion)");
}

LstmParams::LstmParams(std::size_t input, std::size_t hidden_size)
    : input_dim(input), hidden(hidden_size), weights(4 * hidden_size, input + hidden_size), bias(4 * hidden_size) {}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

CellStep lstm_cell(const LstmParams& params, std::span<const double> x, const CellState& prev) {
    const std::size_t H = params.hidden;
    const std::size_t in = params.input_dim;
    if (x.size() != in || prev.h.size() != H || prev.c.size() != H) {
        throw ContractViolation("lstm_cell: input or state size does not match parameters");
    }
    std::vector<double> pre(params.bias);
    for (std::size_t r = 0; r < 4 * H; ++r) {
        const auto w = params.weights.row(r);
        double acc = 0.0;
        for (std::size_t k = 0; k < in; ++k) acc += w[k] * x[k];
        for (std::size_t k = 0; k < H; ++k) acc += w[in + k] * prev.h[k];
        pre[r] += acc;
    }
    CellStep step;
    auto& g = step.gates;
    g.i.resize(H);
    g.f.resize(H);
    g.o.resize(H);
    g.u.resize(H);
    step.state = CellState::zeros(H);
    for (std::size_t k = 0; k < H; ++k) {
        g.i[k] = sigmoid(pre[k]);
        g.f[k] = sigmoid(pre[H + k]);
        g.o[k] = sigmoid(pre[2 * H + k]);
        g.u[k] = std::tanh(pre[3 * H + k]);
        step.state.c[k] = g.i[k] * g.u[k] + g.f[k] * prev.c[k];
        step.state.h[k] = g.o[k] * std::tanh(step.state.c[k]);
    }
    return step;
}

namespace {

void init_chain(LstmParams& p, Rng& rng) {
    const double k = 1.0 / std::sqrt(static_cast<double>(p.input_dim + p.hidden));
    for (double& w : p.weights.values) w = rng.uniform(-k, k);
    std::fill(p.bias.begin(), p.bias.end(), 0.0);
    std::fill(p.bias.begin() + static_cast<std::ptrdiff_t>(p.hidden),
              p.bias.begin() + static_cast<std::ptrdiff_t>(2 * p.hidden), 1.0);
}

void init_head(std::vector<double>& head_w, Rng& rng) {
    const double k = 1.0 / std::sqrt(static_cast<double>(head_w.size()));
    for (double& w : head_w) w = rng.uniform(-k, k);
}

void begin_trace(ChainTrace& tr, std::size_t hidden) {
    tr = ChainTrace{};
    tr.c.emplace_back(hidden, 0.0);
    tr.h.emplace_back(hidden, 0.0);
}

// Advances one chain by a step and records it.
void run_step(const LstmParams& p, std::vector<double> x, ChainTrace& tr) {
    CellStep s = lstm_cell(p, x, CellState{tr.h.back(), tr.c.back()});
    tr.inputs.push_back(std::move(x));
    tr.i.push_back(std::move(s.gates.i));
    tr.f.push_back(std::move(s.gates.f));
    tr.o.push_back(std::move(s.gates.o));
    tr.u.push_back(std::move(s.gates.u));
    tr.c.push_back(std::move(s.state.c));
    tr.h.push_back(std::move(s.state.h));
}

double head_logit(const std::vector<double>& head_w, double head_b, const std::vector<double>& h) {
    double z = head_b;
    for (std::size_t k = 0; k < h.size(); ++k) z += head_w[k] * h[k];
    return z;
}

void check_sequence(const FeatureSequence& seq, std::size_t dim) {
    if (seq.color.cols != dim || seq.depth.cols != dim || seq.color.rows != seq.depth.rows) {
        throw ContractViolation("forward: feature sequence shape does not match model");
    }
    if (seq.color.rows == 0) throw ContractViolation("forward: empty sequence");
}

// BPTT through one chain. dh_ext[t] is the loss gradient reaching h_{t+1}
// from outside the chain. Accumulates into grad and returns d(loss)/d(x_t).
std::vector<std::vector<double>> backward_chain(const LstmParams& p, const ChainTrace& tr,
                                                const std::vector<std::vector<double>>& dh_ext, LstmParams& grad) {
    const std::size_t H = p.hidden;
    const std::size_t in = p.input_dim;
    const std::size_t T = tr.steps();
    if (dh_ext.size() != T || tr.h.size() != T + 1 || (T > 0 && tr.inputs[0].size() != in) ||
        tr.h[0].size() != H) {
        throw ContractViolation("backward: trace does not match parameters");
    }
    std::vector<std::vector<double>> dx(T, std::vector<double>(in, 0.0));
    std::vector<double> dh_next(H, 0.0);
    std::vector<double> dc_next(H, 0.0);
    std::vector<double> dz(4 * H);
    for (std::size_t s = T; s-- > 0;) {
        const auto& i = tr.i[s];
        const auto& f = tr.f[s];
        const auto& o = tr.o[s];
        const auto& u = tr.u[s];
        const auto& c = tr.c[s + 1];
        const auto& c_prev = tr.c[s];
        for (std::size_t k = 0; k < H; ++k) {
            const double dh = dh_ext[s][k] + dh_next[k];
            const double tc = std::tanh(c[k]);
            const double dc = dc_next[k] + dh * o[k] * (1.0 - tc * tc);
            dz[k] = dc * u[k] * i[k] * (1.0 - i[k]);
            dz[H + k] = dc * c_prev[k] * f[k] * (1.0 - f[k]);
            dz[2 * H + k] = dh * tc * o[k] * (1.0 - o[k]);
            dz[3 * H + k] = dc * i[k] * (1.0 - u[k] * u[k]);
            dc_next[k] = dc * f[k];
        }
        const auto& x = tr.inputs[s];
        const auto& h_prev = tr.h[s];
        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        for (std::size_t r = 0; r < 4 * H; ++r) {
            const double g = dz[r];
            grad.bias[r] += g;
            if (g == 0.0) continue;
            auto gw = grad.weights.row(r);
            const auto w = p.weights.row(r);
            for (std::size_t k = 0; k < in; ++k) {
                gw[k] += g * x[k];
                dx[s][k] += g * w[k];
            }
            for (std::size_t k = 0; k < H; ++k) {
                gw[in + k] += g * h_prev[k];
                dh_next[k] += g * w[in + k];
            }
        }
    }
    return dx;
}

}  // namespace

Model make_model(Variant variant, std::size_t dim, std::size_t hidden) {
    if (variant == Variant::Concat) {
        ConcatModel m{LstmParams(2 * dim, hidden), std::vector<double>(hidden), 0.0};
        return m;
    }
    FusionModel m{LstmParams(dim, hidden), LstmParams(dim, hidden), LstmParams(2 * hidden, hidden),
                  std::vector<double>(hidden), 0.0};
    return m;
}

Model init_model(Variant variant, std::size_t dim, std::size_t hidden, Rng& rng) {
    if (dim == 0 || hidden == 0) throw ConfigError("init_model: dimensions must be positive");
    Model model = make_model(variant, dim, hidden);
    std::visit(
        [&](auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ConcatModel>) {
                init_chain(m.chain, rng);
            } else {
                init_chain(m.color, rng);
                init_chain(m.depth, rng);
                init_chain(m.fusion, rng);
            }
            init_head(m.head_w, rng);
            m.head_b = 0.0;
        },
        model);
    return model;
}

Variant variant_of(const Model& m) { return std::holds_alternative<ConcatModel>(m) ? Variant::Concat : Variant::Fusion; }

std::size_t hidden_size(const Model& m) {
    return std::visit([](const auto& x) { return x.head_w.size(); }, m);
}

std::size_t feature_dim(const Model& m) {
    if (const auto* c = std::get_if<ConcatModel>(&m)) return c->chain.input_dim / 2;
    return std::get<FusionModel>(m).color.input_dim;
}

std::vector<std::span<double>> tensors(Model& m) {
    std::vector<std::span<double>> out;
    auto chain = [&](LstmParams& p) {
        out.emplace_back(p.weights.values);
        out.emplace_back(p.bias);
    };
    std::visit(
        [&](auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, ConcatModel>) {
                chain(x.chain);
            } else {
                chain(x.color);
                chain(x.depth);
                chain(x.fusion);
            }
            out.emplace_back(x.head_w);
            out.emplace_back(&x.head_b, 1);
        },
        m);
    return out;
}

std::vector<std::span<const double>> tensors(const Model& m) {
    auto mutable_views = tensors(const_cast<Model&>(m));
    return {mutable_views.begin(), mutable_views.end()};
}

ForwardTrace forward_concat(const ConcatModel& model, const FeatureSequence& seq) {
    const std::size_t dim = model.chain.input_dim / 2;
    check_sequence(seq, dim);
    ForwardTrace trace;
    trace.variant = Variant::Concat;
    begin_trace(trace.main, model.chain.hidden);
    for (std::size_t t = 0; t < seq.steps(); ++t) {
        std::vector<double> x(2 * dim);
        std::ranges::copy(seq.color.row(t), x.begin());
        std::ranges::copy(seq.depth.row(t), x.begin() + static_cast<std::ptrdiff_t>(dim));
        run_step(model.chain, std::move(x), trace.main);
    }
    trace.logit = head_logit(model.head_w, model.head_b, trace.main.h.back());
    trace.p = sigmoid(trace.logit);
    return trace;
}

ForwardTrace forward_fusion(const FusionModel& model, const FeatureSequence& seq) {
    const std::size_t H = model.fusion.hidden;
    if (model.color.hidden != H || model.depth.hidden != H || model.fusion.input_dim != 2 * H) {
        throw ContractViolation("forward_fusion: chains disagree on hidden size");
    }
    check_sequence(seq, model.color.input_dim);
    ForwardTrace trace;
    trace.variant = Variant::Fusion;
    begin_trace(trace.color, H);
    begin_trace(trace.depth, H);
    begin_trace(trace.main, H);
    for (std::size_t t = 0; t < seq.steps(); ++t) {
        run_step(model.color, {seq.color.row(t).begin(), seq.color.row(t).end()}, trace.color);
        run_step(model.depth, {seq.depth.row(t).begin(), seq.depth.row(t).end()}, trace.depth);
        std::vector<double> x(2 * H);
        std::ranges::copy(trace.color.h.back(), x.begin());
        std::ranges::copy(trace.depth.h.back(), x.begin() + static_cast<std::ptrdiff_t>(H));
        run_step(model.fusion, std::move(x), trace.main);
    }
    trace.logit = head_logit(model.head_w, model.head_b, trace.main.h.back());
    trace.p = sigmoid(trace.logit);
    return trace;
}

ForwardTrace forward(const Model& model, const FeatureSequence& seq) {
    if (const auto* c = std::get_if<ConcatModel>(&model)) return forward_concat(*c, seq);
    return forward_fusion(std::get<FusionModel>(model), seq);
}

double loss_nll(double p, int y) {
    const double q = std::clamp(p, 1e-12, 1.0 - 1e-12);
    return y != 0 ? -std::log(q) : -std::log(1.0 - q);
}

namespace {

// Gradient reaching each h_t of the chain that feeds the head: only the last step.
std::vector<std::vector<double>> head_backward(const std::vector<double>& head_w, const ForwardTrace& trace, int y,
                                               std::vector<double>& grad_w, double& grad_b) {
    const std::size_t T = trace.main.steps();
    const std::size_t H = head_w.size();
    const double dlogit = trace.p - (y != 0 ? 1.0 : 0.0);
    const auto& h_last = trace.main.h.back();
    if (h_last.size() != H) throw ContractViolation("backward: trace does not match parameters");
    for (std::size_t k = 0; k < H; ++k) grad_w[k] = dlogit * h_last[k];
    grad_b = dlogit;
    std::vector<std::vector<double>> dh(T, std::vector<double>(H, 0.0));
    for (std::size_t k = 0; k < H; ++k) dh[T - 1][k] = dlogit * head_w[k];
    return dh;
}

}  // namespace

ConcatModel backward(const ConcatModel& model, const ForwardTrace& trace, int y) {
    if (trace.variant != Variant::Concat) throw ContractViolation("backward: trace is not from the concat variant");
    ConcatModel grad{LstmParams(model.chain.input_dim, model.chain.hidden), std::vector<double>(model.head_w.size()),
                     0.0};
    const auto dh = head_backward(model.head_w, trace, y, grad.head_w, grad.head_b);
    backward_chain(model.chain, trace.main, dh, grad.chain);
    return grad;
}

FusionModel backward(const FusionModel& model, const ForwardTrace& trace, int y) {
    if (trace.variant != Variant::Fusion) throw ContractViolation("backward: trace is not from the fusion variant");
    const std::size_t H = model.fusion.hidden;
    FusionModel grad{LstmParams(model.color.input_dim, H), LstmParams(model.depth.input_dim, H),
                     LstmParams(model.fusion.input_dim, H), std::vector<double>(H), 0.0};
    const auto dh = head_backward(model.head_w, trace, y, grad.head_w, grad.head_b);
    const auto dx = backward_chain(model.fusion, trace.main, dh, grad.fusion);
    const std::size_t T = dx.size();
    std::vector<std::vector<double>> dh_color(T, std::vector<double>(H));
    std::vector<std::vector<double>> dh_depth(T, std::vector<double>(H));
    for (std::size_t t = 0; t < T; ++t) {
        std::copy_n(dx[t].begin(), H, dh_color[t].begin());
        std::copy_n(dx[t].begin() + static_cast<std::ptrdiff_t>(H), H, dh_depth[t].begin());
    }
    backward_chain(model.color, trace.color, dh_color, grad.color);
    backward_chain(model.depth, trace.depth, dh_depth, grad.depth);
    return grad;
}

Model backward(const Model& model, const ForwardTrace& trace, int y) {
    if (const auto* c = std::get_if<ConcatModel>(&model)) return backward(*c, trace, y);
    return backward(std::get<FusionModel>(model), trace, y);
}

double predict(const Model& model, const FeatureSequence& seq) { return forward(model, seq).p; }

}  // namespace mglstm
