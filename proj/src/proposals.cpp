#include "mglstm/proposals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "mglstm/errors.hpp"
#include "mglstm/fileio.hpp"

namespace mglstm {

void ProposalParams::validate() const {
    if (!(head_width_m > 0.0)) throw ConfigError("proposals.head_width must be positive");
    if (!(fill_ratio > 0.0 && fill_ratio <= 1.0)) throw ConfigError("proposals.fill_ratio must be in (0, 1]");
    if (depth_tolerance_mm < 0) throw ConfigError("proposals.depth_tolerance must be non-negative");
    if (top_margin_mm < 0) throw ConfigError("proposals.top_margin must be non-negative");
    if (suppression_radius_factor < 0.0) throw ConfigError("proposals.suppression_radius_factor must be non-negative");
}

namespace {

bool top_band_free(const DepthMap& depth, int u, int v, int w, int z, int margin) {
    if (v <= 0) return false;
    const int x0 = std::max(u - w / 2, 0);
    const int x1 = std::min(u - w / 2 + w, depth.width);
    const int y_top = std::max(v - w / 2, 0);
    const long long limit = static_cast<long long>(z) + margin;
    // Nearest rows first: interior pixels fail on the row directly above.
    for (int y = v - 1; y >= y_top; --y) {
        if (const int d = depth.at(u, y); d != 0 && d <= limit) return false;
        for (int x = x0; x < x1; ++x) {
            const int d = depth.at(x, y);
            if (d != 0 && d <= limit) return false;
        }
    }
    return true;
}

}  // namespace

double head_fill_fraction(const DepthMap& depth, int u, int v, int w, int tolerance_mm) {
    const Rect window = clamp_rect(Rect{u - w / 2, v, w, w}, depth.width, depth.height);
    if (window.empty()) return 0.0;
    const int z = depth.at(u, v);
    long long hits = 0;
    for (int y = window.y0; y < window.y0 + window.h; ++y) {
        for (int x = window.x0; x < window.x0 + window.w; ++x) {
            const int d = depth.at(x, y);
            if (d != 0 && std::abs(d - z) <= tolerance_mm) ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(window.area());
}

bool is_head_top(const DepthMap& depth, int u, int v, const CameraIntrinsics& k, const ProposalParams& params) {
    if (!depth.contains(u, v)) throw ContractViolation("is_head_top: pixel out of bounds");
    const int z = depth.at(u, v);
    if (z == 0) return false;
    const int w = project_size(params.head_width_m, z, k.fx);
    if (!top_band_free(depth, u, v, w, z, params.top_margin_mm)) return false;
    return head_fill_fraction(depth, u, v, w, params.depth_tolerance_mm) >= params.fill_ratio;
}

std::vector<Proposal> generate_proposals(const DepthMap& depth, const CameraIntrinsics& k, const ProposalParams& params) {
    struct Candidate {
        Proposal p;
        double fill;
        int w;
    };
    std::vector<Candidate> candidates;
    for (int v = 0; v < depth.height; ++v) {
        for (int u = 0; u < depth.width; ++u) {
            const int z = depth.at(u, v);
            if (z == 0) continue;
            const int w = project_size(params.head_width_m, z, k.fx);
            if (!top_band_free(depth, u, v, w, z, params.top_margin_mm)) continue;
            const double fill = head_fill_fraction(depth, u, v, w, params.depth_tolerance_mm);
            if (fill < params.fill_ratio) continue;
            candidates.push_back({Proposal{u, v, z}, fill, w});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.p.depth_mm != b.p.depth_mm) return a.p.depth_mm < b.p.depth_mm;
        if (a.fill != b.fill) return a.fill > b.fill;
        return std::tie(a.p.v, a.p.u) < std::tie(b.p.v, b.p.u);
    });

    std::vector<Proposal> kept;
    for (const Candidate& c : candidates) {
        const double radius = params.suppression_radius_factor * c.w;
        const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Proposal& q) {
            const double du = q.u - c.p.u;
            const double dv = q.v - c.p.v;
            return std::sqrt(du * du + dv * dv) <= radius;
        });
        if (!suppressed) kept.push_back(c.p);
    }
    std::sort(kept.begin(), kept.end(), [](const Proposal& a, const Proposal& b) {
        return std::tie(a.v, a.u) < std::tie(b.v, b.u);
    });
    return kept;
}

std::string proposal_to_jsonl(const std::string& image_id, const Proposal& p) {
    nlohmann::ordered_json j;
    j["image_id"] = image_id;
    j["u"] = p.u;
    j["v"] = p.v;
    j["depth_mm"] = p.depth_mm;
    return j.dump();
}

std::vector<ImageProposals> load_proposals_jsonl(const std::string& path) {
    const std::string text = fileio::read_text(path);
    std::vector<ImageProposals> out;
    std::istringstream in(text);
    std::string line;
    std::size_t offset = 0;
    while (std::getline(in, line)) {
        const std::size_t line_start = offset;
        offset += line.size() + 1;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            const std::string id = j.at("image_id").get<std::string>();
            Proposal p{j.at("u").get<int>(), j.at("v").get<int>(), j.at("depth_mm").get<int>()};
            if (out.empty() || out.back().image_id != id) {
                auto it = std::find_if(out.begin(), out.end(), [&](const ImageProposals& ip) { return ip.image_id == id; });
                if (it == out.end()) {
                    out.push_back({id, {}});
                } else {
                    it->proposals.push_back(p);
                    continue;
                }
            }
            out.back().proposals.push_back(p);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path, line_start, std::string("bad proposal record: ") + e.what());
        }
    }
    return out;
}

void save_proposals_jsonl(const std::string& path, const std::vector<ImageProposals>& all) {
    std::string text;
    for (const auto& ip : all) {
        for (const auto& p : ip.proposals) text += proposal_to_jsonl(ip.image_id, p) + "\n";
    }
    fileio::write_atomic(path, text);
}

}  // namespace mglstm
