#include "mglstm/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mglstm/checkpoint.hpp"
#include "mglstm/errors.hpp"
#include "mglstm/fileio.hpp"
#include "mglstm/synth.hpp"

namespace mglstm::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

void PipelineConfig::validate() const {
    proposals.validate();
    glimpse.validate();
    extractor.validate();
    train.validate();
    eval.validate();
}

namespace {

template <typename T>
void read_key(const json& section, const char* key, T& target, const std::string& where) {
    if (!section.contains(key)) return;
    try {
        target = section.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

const json& section_of(const json& root, const char* name) {
    static const json empty = json::object();
    if (!root.contains(name)) return empty;
    const json& s = root.at(name);
    if (!s.is_object()) throw ConfigError(std::string(name) + " must be an object");
    return s;
}

}  // namespace

PipelineConfig config_from_json_text(const std::string& text, const std::string& name) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(name, e.byte, "invalid JSON config");
    }
    if (!root.is_object()) throw FormatError(name, 0, "config must be a JSON object");
    PipelineConfig c;
    read_key(root, "intrinsics_path", c.intrinsics_path, "config");

    const json& p = section_of(root, "proposals");
    read_key(p, "head_width", c.proposals.head_width_m, "proposals");
    read_key(p, "depth_tolerance", c.proposals.depth_tolerance_mm, "proposals");
    read_key(p, "fill_ratio", c.proposals.fill_ratio, "proposals");
    read_key(p, "top_margin", c.proposals.top_margin_mm, "proposals");
    read_key(p, "suppression_radius_factor", c.proposals.suppression_radius_factor, "proposals");

    const json& g = section_of(root, "glimpse");
    read_key(g, "head_size", c.glimpse.head_size_m, "glimpse");
    read_key(g, "upper_size", c.glimpse.upper_size_m, "glimpse");
    read_key(g, "body_size", c.glimpse.body_size_m, "glimpse");
    read_key(g, "peripheral_count", c.glimpse.peripheral_count, "glimpse");
    read_key(g, "headroom", c.glimpse.headroom, "glimpse");

    read_key(section_of(root, "extractor"), "grid", c.extractor.grid, "extractor");

    const json& t = section_of(root, "train");
    read_key(t, "lr0", c.train.lr0, "train");
    read_key(t, "decay", c.train.decay, "train");
    read_key(t, "epochs", c.train.epochs, "train");
    read_key(t, "batch_size", c.train.batch_size, "train");
    read_key(t, "neg_ratio", c.train.neg_ratio, "train");
    read_key(t, "seed", c.train.seed, "train");
    read_key(t, "hidden", c.train.hidden, "train");
    read_key(t, "sequence_length", c.train.sequence_length, "train");
    if (t.contains("variant")) {
        std::string v;
        read_key(t, "variant", v, "train");
        c.train.variant = parse_variant(v);
    }

    const json& e = section_of(root, "eval");
    read_key(e, "radius", c.eval.radius_px, "eval");
    read_key(e, "adaptive", c.eval.adaptive, "eval");
    read_key(e, "head_width", c.eval.head_width_m, "eval");

    c.validate();
    return c;
}

PipelineConfig load_config(const fs::path& path) { return config_from_json_text(fileio::read_text(path), path.string()); }

std::string config_to_json(const PipelineConfig& c) {
    nlohmann::ordered_json j;
    j["intrinsics_path"] = c.intrinsics_path;
    j["proposals"] = {{"head_width", c.proposals.head_width_m},
                      {"depth_tolerance", c.proposals.depth_tolerance_mm},
                      {"fill_ratio", c.proposals.fill_ratio},
                      {"top_margin", c.proposals.top_margin_mm},
                      {"suppression_radius_factor", c.proposals.suppression_radius_factor}};
    j["glimpse"] = {{"head_size", c.glimpse.head_size_m},
                    {"upper_size", c.glimpse.upper_size_m},
                    {"body_size", c.glimpse.body_size_m},
                    {"peripheral_count", c.glimpse.peripheral_count},
                    {"headroom", c.glimpse.headroom}};
    j["extractor"] = {{"grid", c.extractor.grid}};
    j["train"] = {{"lr0", c.train.lr0},           {"decay", c.train.decay},
                  {"epochs", c.train.epochs},     {"batch_size", c.train.batch_size},
                  {"neg_ratio", c.train.neg_ratio}, {"seed", c.train.seed},
                  {"variant", variant_name(c.train.variant)}, {"hidden", c.train.hidden},
                  {"sequence_length", c.train.sequence_length}};
    j["eval"] = {{"radius", c.eval.radius_px}, {"adaptive", c.eval.adaptive}, {"head_width", c.eval.head_width_m}};
    return j.dump(2) + "\n";
}

namespace {

/// Diagnostics sink shared by the subcommands.
class Reporter {
public:
    explicit Reporter(std::ostream& err) : err_(err) {}

    void log(const char* level, const std::string& msg, const std::string& path = {}) {
        nlohmann::ordered_json j;
        j["level"] = level;
        j["msg"] = msg;
        j["path"] = path;
        err_ << j.dump() << "\n";
    }

private:
    std::ostream& err_;
};

/// Runs a command body, translating exceptions into the exit-code taxonomy.
template <typename Body>
int guarded(Reporter& rep, Body body) {
    try {
        return body();
    } catch (const FormatError& e) {
        rep.log("error", e.what(), e.path());
        return kFormat;
    } catch (const IoError& e) {
        rep.log("error", e.what(), e.path());
        return kIo;
    } catch (const fs::filesystem_error& e) {
        rep.log("error", e.what(), e.path1().string());
        return kIo;
    } catch (const ConfigError& e) {
        rep.log("error", e.what());
        return kUsage;
    } catch (const ContractViolation& e) {
        rep.log("error", e.what());
        return kFormat;
    } catch (const std::exception& e) {
        rep.log("error", e.what());
        return 1;
    }
}

PipelineConfig config_or_default(const std::string& path) {
    return path.empty() ? PipelineConfig{} : load_config(path);
}

struct DatasetView {
    fs::path dir;
    Manifest manifest;
    std::vector<GroundTruth> truth;  // empty when the dataset has none
};

DatasetView open_dataset(const fs::path& dir) {
    DatasetView d{dir, load_manifest(dir / "manifest.json"), {}};
    if (!d.manifest.truth.empty() && fs::exists(dir / d.manifest.truth)) d.truth = load_truth_jsonl(dir / d.manifest.truth);
    return d;
}

/// Resolves the intrinsics file; returns empty when it does not exist.
fs::path intrinsics_file(const PipelineConfig& c, const DatasetView& d) {
    fs::path p = !c.intrinsics_path.empty() ? fs::path(c.intrinsics_path)
                 : !d.manifest.intrinsics.empty() ? d.dir / d.manifest.intrinsics
                                                   : fs::path();
    if (p.empty() || !fs::exists(p)) return {};
    return p;
}

const std::vector<std::pair<int, int>>* truth_for(const DatasetView& d, const std::string& id) {
    for (const auto& g : d.truth) {
        if (g.image_id == id) return &g.head_tops;
    }
    return nullptr;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

struct HumansRange {
    int lo = 1;
    int hi = 3;
};

HumansRange parse_humans(const std::string& text) {
    HumansRange r;
    const auto dots = text.find("..");
    try {
        if (dots == std::string::npos) {
            r.lo = r.hi = std::stoi(text);
        } else {
            r.lo = std::stoi(text.substr(0, dots));
            r.hi = std::stoi(text.substr(dots + 2));
        }
    } catch (const std::exception&) {
        throw ConfigError("--humans expects min..max");
    }
    if (r.lo < 0 || r.hi < r.lo) throw ConfigError("--humans expects 0 <= min <= max");
    return r;
}

struct SynthArgs {
    std::string out;
    int images = 10;
    std::uint64_t seed = 1;
    std::string humans = "1..3";
    int clutter = 3;
    double noise = 10.0;
    int width = 640;
    int height = 480;
};

int cmd_synth(const SynthArgs& a, std::ostream& out, Reporter& rep) {
    return guarded(rep, [&] {
        if (a.images < 1) throw ConfigError("--images must be >= 1");
        const HumansRange h = parse_humans(a.humans);
        SceneDistribution dist;
        dist.min_humans = h.lo;
        dist.max_humans = h.hi;
        dist.clutter = a.clutter;
        dist.noise_sigma_mm = a.noise;
        dist.width = a.width;
        dist.height = a.height;
        // Same field of view as the 640-pixel-wide default camera.
        dist.intrinsics.fx = dist.intrinsics.fy = 525.0 * a.width / 640.0;
        dist.intrinsics.cx = 0.5 * (a.width - 1);
        dist.intrinsics.cy = 0.5 * (a.height - 1);
        const Manifest m = generate_dataset(a.images, dist, a.seed, a.out);
        out << "images=" << m.images.size() << "\n";
        out << "manifest=" << (fs::path(a.out) / "manifest.json").string() << "\n";
        return static_cast<int>(kOk);
    });
}

struct ProposeArgs {
    std::string data;
    std::string config;
    std::string out;
};

int cmd_propose(const ProposeArgs& a, std::ostream& out, Reporter& rep) {
    return guarded(rep, [&] {
        const PipelineConfig config = config_or_default(a.config);
        const DatasetView data = open_dataset(a.data);
        const fs::path kpath = intrinsics_file(config, data);
        if (kpath.empty()) {
            rep.log("error", "intrinsics file not found", config.intrinsics_path);
            return static_cast<int>(kUsage);
        }
        const CameraIntrinsics k = load_intrinsics(kpath);

        std::vector<ImageProposals> all;
        std::size_t total = 0;
        long long truths = 0;
        long long hits = 0;
        for (const auto& img : data.manifest.images) {
            const DepthMap depth = load_depth_pgm(data.dir / img.depth);
            ImageProposals ip{img.id, generate_proposals(depth, k, config.proposals)};
            total += ip.proposals.size();
            if (const auto* gt = truth_for(data, img.id)) {
                std::vector<Detection> dets;
                for (const auto& p : ip.proposals) dets.push_back({img.id, p.u, p.v, 1.0, p.depth_mm});
                const MatchCounts c = match_image(std::move(dets), *gt, config.eval, k.fx);
                truths += c.tp + c.fn;
                hits += c.tp;
            }
            all.push_back(std::move(ip));
        }
        save_proposals_jsonl(a.out, all);
        const double images = static_cast<double>(data.manifest.images.size());
        out << "images=" << data.manifest.images.size() << "\n";
        out << "mean_proposals=" << fmt(images > 0 ? static_cast<double>(total) / images : 0.0) << "\n";
        if (!data.truth.empty()) {
            out << "recall=" << fmt(truths > 0 ? static_cast<double>(hits) / static_cast<double>(truths) : 1.0) << "\n";
        }
        return static_cast<int>(kOk);
    });
}

struct ExtractArgs {
    std::string data;
    std::string proposals;
    std::string config;
    std::string out;
};

int cmd_extract(const ExtractArgs& a, std::ostream& out, Reporter& rep) {
    return guarded(rep, [&] {
        const PipelineConfig config = config_or_default(a.config);
        const DatasetView data = open_dataset(a.data);
        const fs::path kpath = intrinsics_file(config, data);
        if (kpath.empty()) {
            rep.log("error", "intrinsics file not found", config.intrinsics_path);
            return static_cast<int>(kUsage);
        }
        const CameraIntrinsics k = load_intrinsics(kpath);
        const auto proposals = load_proposals_jsonl(a.proposals);
        std::map<std::string, const std::vector<Proposal>*> by_image;
        for (const auto& ip : proposals) by_image[ip.image_id] = &ip.proposals;

        std::vector<FeatureSequence> records;
        std::size_t positives = 0;
        for (std::size_t n = 0; n < data.manifest.images.size(); ++n) {
            const auto& img = data.manifest.images[n];
            const auto it = by_image.find(img.id);
            if (it == by_image.end()) continue;
            const DepthMap depth = load_depth_pgm(data.dir / img.depth);
            const ColorImage color = load_color_ppm(data.dir / img.color);
            if (color.width != depth.width || color.height != depth.height) {
                throw FormatError((data.dir / img.color).string(), 0, "color and depth sizes differ");
            }
            const auto* gt = truth_for(data, img.id);
            for (std::size_t j = 0; j < it->second->size(); ++j) {
                const Proposal& p = (*it->second)[j];
                if (!depth.contains(p.u, p.v) || p.depth_mm <= 0) {
                    throw FormatError(a.proposals, 0, "proposal outside image or without depth");
                }
                const GlimpseSet set = build_glimpse_set(p, k, depth.width, depth.height, config.glimpse);
                FeatureSequence seq = extract_sequence(set, color, depth, config.extractor);
                seq.id = {static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(j)};
                if (gt) {
                    // Positive iff some head-top lies within the match radius.
                    const double radius = config.eval.radius_for(p.depth_mm, k.fx);
                    const bool hit = std::any_of(gt->begin(), gt->end(), [&](const auto& t) {
                        return std::hypot(static_cast<double>(p.u - t.first), static_cast<double>(p.v - t.second)) <=
                               radius;
                    });
                    seq.label = hit ? 1 : 0;
                    positives += hit ? 1 : 0;
                }
                records.push_back(std::move(seq));
            }
        }
        save_features(a.out, records);
        out << "records=" << records.size() << "\n";
        out << "positives=" << positives << "\n";
        out << "steps=" << config.glimpse.steps() << "\n";
        out << "dim=" << config.extractor.dim() << "\n";
        return static_cast<int>(kOk);
    });
}

struct TrainArgs {
    std::string features;
    std::string config;
    std::string out;
    std::string log;
};

int cmd_train(const TrainArgs& a, std::ostream& out, Reporter& rep) {
    return guarded(rep, [&] {
        const PipelineConfig config = config_or_default(a.config);
        auto records = load_features(a.features);
        if (!records.empty()) {
            const auto steps = static_cast<std::size_t>(config.glimpse.steps());
            const auto dim = static_cast<std::size_t>(config.extractor.dim());
            if (records.front().steps() != steps || records.front().dim() != dim) {
                throw FormatError(a.features, 0,
                                  "feature file has T=" + std::to_string(records.front().steps()) + ", D=" +
                                      std::to_string(records.front().dim()) + " but config expects T=" +
                                      std::to_string(steps) + ", D=" + std::to_string(dim));
            }
        }
        const auto keep = static_cast<std::size_t>(config.train.sequence_length);
        if (keep > 0) {
            for (auto& r : records) r = keep_last_steps(r, keep);
        }
        const Dataset dataset = Dataset::from_records(std::move(records));
        const TrainResult result = train(dataset, config.train);
        save_checkpoint(a.out, result.best);
        const std::string log_path = a.log.empty() ? a.out + ".csv" : a.log;
        fileio::write_atomic(log_path, training_log_csv(result.log));
        out << "positives=" << dataset.positives.size() << "\n";
        out << "negatives=" << dataset.negatives.size() << "\n";
        out << "epochs=" << result.log.size() << "\n";
        out << "best_epoch=" << result.best_epoch << "\n";
        if (!result.log.empty()) {
            out << "final_loss=" << fmt(result.log.back().mean_loss) << "\n";
            out << "final_accuracy=" << fmt(result.log.back().accuracy) << "\n";
        }
        return static_cast<int>(kOk);
    });
}

struct EvalArgs {
    std::string model;
    std::string features;
    std::string proposals;
    std::string truth;
    std::string out_curve;
    std::string svg;
    std::string config;
    std::string detections;
    std::string intrinsics;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, Reporter& rep) {
    return guarded(rep, [&] {
        const PipelineConfig config = config_or_default(a.config);
        const Checkpoint ck = load_checkpoint(a.model);
        const auto records = load_features(a.features);
        const auto proposals = load_proposals_jsonl(a.proposals);
        const auto truths = load_truth_jsonl(a.truth);
        double fx = 525.0;
        if (!a.intrinsics.empty()) fx = load_intrinsics(a.intrinsics).fx;

        std::map<std::string, const std::vector<Proposal>*> by_image;
        for (const auto& ip : proposals) by_image[ip.image_id] = &ip.proposals;

        std::vector<Detection> detections;
        for (const auto& rec : records) {
            if (rec.dim() != feature_dim(ck.model)) {
                throw FormatError(a.features, 0, "feature dimension does not match the model");
            }
            if (rec.steps() < ck.steps) throw FormatError(a.features, 0, "feature sequences shorter than the model's");
            if (rec.id.image >= truths.size()) throw FormatError(a.features, 0, "record refers to an unknown image");
            const std::string& id = truths[rec.id.image].image_id;
            const auto it = by_image.find(id);
            if (it == by_image.end() || rec.id.proposal >= it->second->size()) {
                throw FormatError(a.proposals, 0, "record refers to an unknown proposal of " + id);
            }
            const Proposal& p = (*it->second)[rec.id.proposal];
            const double score = predict(ck.model, keep_last_steps(rec, ck.steps));
            detections.push_back({id, p.u, p.v, score, p.depth_mm});
        }
        const EvalCurve curve = compute_curve(detections, truths, config.eval, fx);
        emit_curve(curve, a.out_curve, CurveFormat::Csv);
        if (!a.svg.empty()) emit_curve(curve, a.svg, CurveFormat::Svg);
        if (!a.detections.empty()) fileio::write_atomic(a.detections, detections_to_jsonl(detections));
        out << "detections=" << detections.size() << "\n";
        out << "curve_points=" << curve.points.size() << "\n";
        out << "LAMR=" << fmt(log_average_miss_rate(curve)) << "\n";
        return static_cast<int>(kOk);
    });
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Reporter rep(err);
    CLI::App app{"Multi-glimpse LSTM RGB-D human detection pipeline", "mglstm"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic RGB-D dataset");
    s->add_option("--out", synth.out, "Output directory")->required();
    s->add_option("--images", synth.images, "Number of images");
    s->add_option("--seed", synth.seed, "Random seed");
    s->add_option("--humans", synth.humans, "People per image, min..max");
    s->add_option("--clutter", synth.clutter, "Distractor boxes per image");
    s->add_option("--noise", synth.noise, "Depth noise sigma in mm");
    s->add_option("--width", synth.width, "Image width");
    s->add_option("--height", synth.height, "Image height");

    ProposeArgs propose;
    auto* p = app.add_subcommand("propose", "Generate head-top proposals");
    p->add_option("--data", propose.data, "Dataset directory")->required();
    p->add_option("--config", propose.config, "Pipeline JSON config");
    p->add_option("--out", propose.out, "Output JSON Lines file")->required();

    ExtractArgs extract;
    auto* x = app.add_subcommand("extract", "Extract glimpse feature sequences");
    x->add_option("--data", extract.data, "Dataset directory")->required();
    x->add_option("--proposals", extract.proposals, "Proposals JSON Lines")->required();
    x->add_option("--config", extract.config, "Pipeline JSON config");
    x->add_option("--out", extract.out, "Output feature file")->required();

    TrainArgs trainer;
    auto* t = app.add_subcommand("train", "Train an MG-LSTM classifier");
    t->add_option("--features", trainer.features, "Feature file")->required();
    t->add_option("--config", trainer.config, "Pipeline JSON config");
    t->add_option("--out", trainer.out, "Output checkpoint")->required();
    t->add_option("--log", trainer.log, "Training log CSV (default <out>.csv)");

    EvalArgs evaluate;
    auto* e = app.add_subcommand("eval", "Score proposals and compute the FPPI/miss-rate curve");
    e->add_option("--model", evaluate.model, "Checkpoint")->required();
    e->add_option("--features", evaluate.features, "Feature file")->required();
    e->add_option("--proposals", evaluate.proposals, "Proposals JSON Lines")->required();
    e->add_option("--truth", evaluate.truth, "Ground truth JSON Lines")->required();
    e->add_option("--out-curve", evaluate.out_curve, "Curve CSV output")->required();
    e->add_option("--svg", evaluate.svg, "Curve SVG output");
    e->add_option("--config", evaluate.config, "Pipeline JSON config");
    e->add_option("--detections", evaluate.detections, "Scored detections JSON Lines output");
    e->add_option("--intrinsics", evaluate.intrinsics, "Intrinsics JSON (for the adaptive radius)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& ex) {
        rep.log("error", ex.what());
        return kUsage;
    }

    if (s->parsed()) return cmd_synth(synth, out, rep);
    if (p->parsed()) return cmd_propose(propose, out, rep);
    if (x->parsed()) return cmd_extract(extract, out, rep);
    if (t->parsed()) return cmd_train(trainer, out, rep);
    return cmd_eval(evaluate, out, rep);
}

}  // namespace mglstm::pipeline
