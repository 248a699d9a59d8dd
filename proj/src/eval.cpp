#include "mglstm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mglstm/errors.hpp"
#include "mglstm/fileio.hpp"

namespace mglstm {

double MatchParams::radius_for(int depth_mm, double fx) const {
    if (adaptive && depth_mm > 0) return 0.5 * project_size(head_width_m, depth_mm, fx);
    return radius_px;
}

void MatchParams::validate() const {
    if (!(radius_px > 0.0)) throw ConfigError("eval.radius must be positive");
    if (adaptive && !(head_width_m > 0.0)) throw ConfigError("eval.head_width must be positive");
}

MatchCounts match_image(std::vector<Detection> detections, const std::vector<std::pair<int, int>>& truths,
                        const MatchParams& params, double fx) {
    std::stable_sort(detections.begin(), detections.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    std::vector<bool> taken(truths.size(), false);
    MatchCounts counts;
    for (const Detection& d : detections) {
        const double radius = params.radius_for(d.depth_mm, fx);
        std::size_t best = truths.size();
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < truths.size(); ++k) {
            if (taken[k]) continue;
            const double dist = std::hypot(static_cast<double>(d.u - truths[k].first),
                                           static_cast<double>(d.v - truths[k].second));
            if (dist <= radius && dist < best_dist) {
                best = k;
                best_dist = dist;
            }
        }
        if (best < truths.size()) {
            taken[best] = true;
            ++counts.tp;
        } else {
            ++counts.fp;
        }
    }
    counts.fn = static_cast<int>(std::count(taken.begin(), taken.end(), false));
    return counts;
}

EvalCurve compute_curve(const std::vector<Detection>& detections, const std::vector<GroundTruth>& truths,
                        const MatchParams& params, double fx) {
    std::map<std::string, std::vector<std::pair<int, int>>> truth_by_image;
    long long total_truths = 0;
    for (const auto& g : truths) {
        auto& list = truth_by_image[g.image_id];
        list.insert(list.end(), g.head_tops.begin(), g.head_tops.end());
        total_truths += static_cast<long long>(g.head_tops.size());
    }
    if (total_truths == 0) throw ContractViolation("compute_curve: no ground-truth objects");

    std::map<std::string, std::vector<Detection>> dets_by_image;
    for (const auto& d : detections) dets_by_image[d.image_id].push_back(d);
    for (const auto& [id, list] : dets_by_image) truth_by_image.try_emplace(id);
    const double images = static_cast<double>(truth_by_image.size());

    EvalCurve curve;
    if (detections.empty()) {
        curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 1.0});
        return curve;
    }
    std::vector<double> thresholds;
    for (const auto& d : detections) thresholds.push_back(d.score);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    for (double s : thresholds) {
        long long fp = 0;
        long long fn = 0;
        for (const auto& [id, image_truths] : truth_by_image) {
            std::vector<Detection> kept;
            if (auto it = dets_by_image.find(id); it != dets_by_image.end()) {
                for (const auto& d : it->second) {
                    if (d.score >= s) kept.push_back(d);
                }
            }
            const MatchCounts c = match_image(std::move(kept), image_truths, params, fx);
            fp += c.fp;
            fn += c.fn;
        }
        const CurvePoint point{s, static_cast<double>(fp) / images,
                               static_cast<double>(fn) / static_cast<double>(total_truths)};
        if (!curve.points.empty() && curve.points.back().fppi == point.fppi &&
            curve.points.back().miss_rate == point.miss_rate) {
            continue;
        }
        curve.points.push_back(point);
    }
    return curve;
}

double log_average_miss_rate(const EvalCurve& curve) {
    if (curve.points.empty()) throw ContractViolation("log_average_miss_rate: empty curve");
    double log_sum = 0.0;
    constexpr int kSamples = 9;
    for (int k = 0; k < kSamples; ++k) {
        const double ref = std::pow(10.0, -2.0 + 2.0 * k / (kSamples - 1));
        double miss = 1.0;
        // Points are sorted by fppi; the last one at or below ref wins.
        for (const auto& p : curve.points) {
            if (p.fppi <= ref) miss = p.miss_rate;
        }
        log_sum += std::log(std::max(miss, 1e-4));
    }
    return std::exp(log_sum / kSamples);
}

std::string curve_to_csv(const EvalCurve& curve) {
    std::string out = "threshold,fppi,miss_rate\n";
    char line[128];
    for (const auto& p : curve.points) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", p.threshold, p.fppi, p.miss_rate);
        out += line;
    }
    return out;
}

std::string curve_to_svg(const EvalCurve& curve) {
    // log10(fppi) in [-3, 1] across, miss rate in [0, 1] down.
    constexpr double kW = 480, kH = 360, kPad = 40;
    auto sx = [&](double fppi) {
        const double lx = std::log10(std::clamp(fppi, 1e-3, 10.0));
        return kPad + (lx + 3.0) / 4.0 * (kW - 2 * kPad);
    };
    auto sy = [&](double miss) { return kPad + (1.0 - miss) * (kH - 2 * kPad); };
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
    svg << "<rect x=\"" << kPad << "\" y=\"" << kPad << "\" width=\"" << kW - 2 * kPad << "\" height=\""
        << kH - 2 * kPad << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int e = -3; e <= 1; ++e) {
        svg << "<text x=\"" << sx(std::pow(10.0, e)) << "\" y=\"" << kH - kPad / 3 << "\" font-size=\"10\">1e" << e
            << "</text>\n";
    }
    svg << "<text x=\"4\" y=\"" << kPad << "\" font-size=\"10\">miss</text>\n";
    svg << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (const auto& p : curve.points) svg << sx(p.fppi) << "," << sy(p.miss_rate) << " ";
    svg << "\"/>\n</svg>\n";
    return svg.str();
}

void emit_curve(const EvalCurve& curve, const std::filesystem::path& path, CurveFormat format) {
    if (curve.points.empty()) throw ContractViolation("emit_curve: empty curve");
    fileio::write_atomic(path, format == CurveFormat::Csv ? curve_to_csv(curve) : curve_to_svg(curve));
}

EvalCurve load_curve_csv(const std::filesystem::path& path) {
    const std::string text = fileio::read_text(path);
    std::istringstream in(text);
    std::string line;
    EvalCurve curve;
    std::size_t offset = 0;
    if (!std::getline(in, line) || line != "threshold,fppi,miss_rate") {
        throw FormatError(path.string(), 0, "missing curve CSV header");
    }
    offset += line.size() + 1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        CurvePoint p;
        char* end = nullptr;
        const char* s = line.c_str();
        p.threshold = std::strtod(s, &end);
        if (*end != ',') throw FormatError(path.string(), offset, "bad curve row");
        p.fppi = std::strtod(end + 1, &end);
        if (*end != ',') throw FormatError(path.string(), offset, "bad curve row");
        p.miss_rate = std::strtod(end + 1, &end);
        if (*end != '\0') throw FormatError(path.string(), offset, "bad curve row");
        curve.points.push_back(p);
        offset += line.size() + 1;
    }
    return curve;
}

namespace {

template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn fn) {
    const std::string text = fileio::read_text(path);
    std::istringstream in(text);
    std::string line;
    std::size_t offset = 0;
    while (std::getline(in, line)) {
        const std::size_t start = offset;
        offset += line.size() + 1;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            fn(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path.string(), start, e.what());
        }
    }
}

}  // namespace

std::vector<GroundTruth> load_truth_jsonl(const std::filesystem::path& path) {
    std::vector<GroundTruth> out;
    for_each_json_line(path, [&](const nlohmann::json& j) {
        GroundTruth g;
        g.image_id = j.at("image_id").get<std::string>();
        for (const auto& pt : j.at("head_tops")) g.head_tops.emplace_back(pt.at(0).get<int>(), pt.at(1).get<int>());
        out.push_back(std::move(g));
    });
    return out;
}

std::string truth_to_jsonl(const std::vector<GroundTruth>& truths) {
    std::string out;
    for (const auto& g : truths) {
        nlohmann::ordered_json j;
        j["image_id"] = g.image_id;
        j["head_tops"] = nlohmann::json::array();
        for (const auto& [u, v] : g.head_tops) j["head_tops"].push_back({u, v});
        out += j.dump() + "\n";
    }
    return out;
}

std::vector<Detection> load_detections_jsonl(const std::filesystem::path& path) {
    std::vector<Detection> out;
    for_each_json_line(path, [&](const nlohmann::json& j) {
        Detection d;
        d.image_id = j.at("image_id").get<std::string>();
        d.u = j.at("u").get<int>();
        d.v = j.at("v").get<int>();
        d.score = j.at("score").get<double>();
        d.depth_mm = j.value("depth_mm", 0);
        out.push_back(std::move(d));
    });
    return out;
}

std::string detections_to_jsonl(const std::vector<Detection>& detections) {
    std::string out;
    for (const auto& d : detections) {
        nlohmann::ordered_json j;
        j["image_id"] = d.image_id;
        j["u"] = d.u;
        j["v"] = d.v;
        j["score"] = d.score;
        if (d.depth_mm > 0) j["depth_mm"] = d.depth_mm;
        out += j.dump() + "\n";
    }
    return out;
}

}  // namespace mglstm
