#include "mglstm/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "mglstm/errors.hpp"
#include "mglstm/fileio.hpp"
#include "mglstm/rng.hpp"

namespace mglstm {

void SceneSpec::validate() const {
    for (const auto& h : humans) {
        if (!(h.z > 0.0)) throw ConfigError("human depth must be positive");
        if (!(h.height > h.head_w) || !(h.head_w > 0.0) || !(h.shoulder_w > 0.0)) {
            throw ConfigError("human needs height > head_w > 0 and shoulder_w > 0");
        }
    }
    for (std::size_t a = 0; a < humans.size(); ++a) {
        for (std::size_t b = a + 1; b < humans.size(); ++b) {
            if (humans[a].z == humans[b].z && std::abs(humans[a].x - humans[b].x) < 0.6) {
                throw ConfigError("humans at equal depth must be at least 0.6 m apart laterally");
            }
        }
    }
    if (background_depth_mm <= 0 || background_depth_mm > 65535) throw ConfigError("background depth out of range");
    if (clutter < 0) throw ConfigError("clutter count must be >= 0");
    if (noise_sigma_mm < 0.0) throw ConfigError("noise sigma must be >= 0");
}

namespace {

constexpr int kBackgroundId = 0;

struct Canvas {
    DepthMap depth;
    std::vector<int> owner;  // entity id per pixel
    std::vector<std::uint8_t> is_head;

    Canvas(int w, int h, int background)
        : depth(w, h, static_cast<std::uint16_t>(background)),
          owner(static_cast<std::size_t>(w) * h, kBackgroundId),
          is_head(static_cast<std::size_t>(w) * h, 0) {}

    void plot(int u, int v, int mm, int id, bool head) {
        if (!depth.contains(u, v)) return;
        const std::size_t k = static_cast<std::size_t>(v) * depth.width + u;
        if (mm < depth.data[k]) {
            depth.data[k] = static_cast<std::uint16_t>(mm);
            owner[k] = id;
            is_head[k] = head ? 1 : 0;
        }
    }
};

struct Projector {
    const CameraIntrinsics& k;
    double camera_height;

    double u(double x, double z) const { return k.cx + k.fx * x / z; }
    double v(double y, double z) const { return k.cy - k.fy * (y - camera_height) / z; }
};

// Fills pixels whose centers fall inside the world-space box [x0,x1]x[y0,y1] at depth z.
void paint_box(Canvas& canvas, const Projector& pr, double x0, double x1, double y0, double y1, double z, int id,
               bool head) {
    const int mm = static_cast<int>(std::lround(z * 1000.0));
    const int u0 = static_cast<int>(std::ceil(pr.u(x0, z) - 0.5));
    const int u1 = static_cast<int>(std::floor(pr.u(x1, z) - 0.5));
    const int v0 = static_cast<int>(std::ceil(pr.v(y1, z) - 0.5));
    const int v1 = static_cast<int>(std::floor(pr.v(y0, z) - 0.5));
    for (int v = std::max(v0, 0); v <= std::min(v1, canvas.depth.height - 1); ++v) {
        for (int u = std::max(u0, 0); u <= std::min(u1, canvas.depth.width - 1); ++u) canvas.plot(u, v, mm, id, head);
    }
}

void paint_disc(Canvas& canvas, const Projector& pr, double cx, double cy, double radius, double z, int id) {
    const int mm = static_cast<int>(std::lround(z * 1000.0));
    const double uc = pr.u(cx, z);
    const double vc = pr.v(cy, z);
    const double ru = pr.k.fx * radius / z;
    const double rv = pr.k.fy * radius / z;
    const int u0 = static_cast<int>(std::floor(uc - ru));
    const int u1 = static_cast<int>(std::ceil(uc + ru));
    const int v0 = static_cast<int>(std::floor(vc - rv));
    const int v1 = static_cast<int>(std::ceil(vc + rv));
    for (int v = std::max(v0, 0); v <= std::min(v1, canvas.depth.height - 1); ++v) {
        for (int u = std::max(u0, 0); u <= std::min(u1, canvas.depth.width - 1); ++u) {
            const double du = (u + 0.5 - uc) / ru;
            const double dv = (v + 0.5 - vc) / rv;
            if (du * du + dv * dv <= 1.0) canvas.plot(u, v, mm, id, true);
        }
    }
}

double truncated_normal(Rng& rng) {
    for (;;) {
        const double n = rng.normal();
        if (std::abs(n) <= 3.0) return n;
    }
}

std::uint8_t clamp_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

RenderedScene render_scene(const SceneSpec& spec, const CameraIntrinsics& k, int width, int height,
                           const std::string& image_id) {
    spec.validate();
    k.validate();
    if (width <= 0 || height <= 0) throw ConfigError("render_scene: image size must be positive");
    Rng rng(spec.seed);
    const Projector pr{k, spec.camera_height};
    Canvas canvas(width, height, spec.background_depth_mm);

    // Entity ids: 0 background, 1..H humans, H+1.. clutter.
    const int first_clutter = static_cast<int>(spec.humans.size()) + 1;
    for (std::size_t n = 0; n < spec.humans.size(); ++n) {
        const HumanSpec& h = spec.humans[n];
        const int id = static_cast<int>(n) + 1;
        const double r = 0.5 * h.head_w;
        paint_disc(canvas, pr, h.x, h.height - r, r, h.z, id);
        paint_box(canvas, pr, h.x - 0.5 * h.shoulder_w, h.x + 0.5 * h.shoulder_w, 0.0, h.height - h.head_w, h.z, id,
                  false);
    }
    // Clutter stays below 1.1 m so it never covers a head.
    const double max_z = std::max(1.0, spec.background_depth_mm / 1000.0 - 0.5);
    for (int c = 0; c < spec.clutter; ++c) {
        const double z = rng.uniform(1.0, max_z);
        const double w = rng.uniform(0.2, 1.0);
        const double top = rng.uniform(0.3, 1.1);
        const double bottom = rng.uniform(0.0, top - 0.2);
        const double half_fov = (k.cx + 0.5) / k.fx * z;
        const double x = rng.uniform(-half_fov, half_fov);
        paint_box(canvas, pr, x - 0.5 * w, x + 0.5 * w, bottom, top, z, first_clutter + c, false);
    }

    RenderedScene out;
    out.truth.image_id = image_id;
    // Ground truth from the noiseless z-buffer.
    for (std::size_t n = 0; n < spec.humans.size(); ++n) {
        const int id = static_cast<int>(n) + 1;
        bool found = false;
        for (int v = 0; v < height && !found; ++v) {
            int lo = -1;
            int hi = -1;
            for (int u = 0; u < width; ++u) {
                const std::size_t idx = static_cast<std::size_t>(v) * width + u;
                if (canvas.owner[idx] == id && canvas.is_head[idx]) {
                    if (lo < 0) lo = u;
                    hi = u;
                }
            }
            if (lo >= 0) {
                out.truth.head_tops.emplace_back((lo + hi) / 2, v);
                found = true;
            }
        }
        if (!found) {
            out.warnings.push_back("human " + std::to_string(n) + " has no visible head; dropped from ground truth");
        }
    }

    // Per-entity colors: background grey, random hues otherwise.
    const int entities = first_clutter + spec.clutter;
    std::vector<std::array<double, 3>> palette(static_cast<std::size_t>(entities));
    palette[0] = {128.0, 128.0, 128.0};
    for (int e = 1; e < entities; ++e) {
        palette[e] = {rng.uniform(30.0, 225.0), rng.uniform(30.0, 225.0), rng.uniform(30.0, 225.0)};
    }

    out.depth = canvas.depth;
    out.color = ColorImage(width, height);
    for (std::size_t idx = 0; idx < out.depth.data.size(); ++idx) {
        if (spec.noise_sigma_mm > 0.0) {
            const double noisy = out.depth.data[idx] + spec.noise_sigma_mm * truncated_normal(rng);
            out.depth.data[idx] = static_cast<std::uint16_t>(std::clamp(std::lround(noisy), 1L, 65535L));
        }
        const auto& base = palette[static_cast<std::size_t>(canvas.owner[idx])];
        std::uint8_t* px = &out.color.data[3 * idx];
        for (int ch = 0; ch < 3; ++ch) px[ch] = clamp_byte(base[ch] + rng.uniform(-8.0, 8.0));
    }
    return out;
}

void SceneDistribution::validate() const {
    if (min_humans < 0 || max_humans < min_humans) throw ConfigError("humans range must satisfy 0 <= min <= max");
    if (clutter < 0) throw ConfigError("clutter must be >= 0");
    if (!(min_z > 0.0 && max_z >= min_z)) throw ConfigError("depth range invalid");
    if (width <= 0 || height <= 0) throw ConfigError("image size must be positive");
    intrinsics.validate();
}

SceneSpec sample_scene(const SceneDistribution& dist, std::uint64_t seed) {
    dist.validate();
    Rng rng(seed);
    SceneSpec spec;
    spec.background_depth_mm = dist.background_depth_mm;
    spec.clutter = dist.clutter;
    spec.noise_sigma_mm = dist.noise_sigma_mm;
    spec.seed = rng.next();
    const int count = dist.min_humans + static_cast<int>(rng.below(static_cast<std::uint64_t>(dist.max_humans - dist.min_humans + 1)));
    const CameraIntrinsics& k = dist.intrinsics;

    // Image-space horizontal extent of a person, with a small margin.
    auto extent = [&](const HumanSpec& h) {
        const double half = 0.5 * h.shoulder_w * k.fx / h.z + 4.0;
        const double u = k.cx + k.fx * h.x / h.z;
        return std::pair{u - half, u + half};
    };
    for (int n = 0; n < count; ++n) {
        for (int attempt = 0; attempt < 200; ++attempt) {
            HumanSpec h;
            h.z = rng.uniform(dist.min_z, dist.max_z);
            h.height = rng.uniform(dist.min_height, dist.max_height);
            // Keep the whole head inside the frame.
            const double head_half = 0.5 * h.head_w * k.fx / h.z;
            const double u_lo = head_half + 2.0;
            const double u_hi = dist.width - 1.0 - head_half - 2.0;
            if (u_hi <= u_lo) continue;
            const double u = rng.uniform(u_lo, u_hi);
            h.x = (u - k.cx) * h.z / k.fx;
            const double top_v = k.cy - k.fy * (h.height - spec.camera_height) / h.z;
            if (top_v < 2.0) continue;
            const auto [a0, a1] = extent(h);
            const bool overlaps = std::any_of(spec.humans.begin(), spec.humans.end(), [&](const HumanSpec& o) {
                const auto [b0, b1] = extent(o);
                return a0 < b1 && b0 < a1;
            });
            if (overlaps) continue;
            spec.humans.push_back(h);
            break;
        }
    }
    return spec;
}

std::string image_id_for(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "img_%04d", index);
    return buf;
}

std::string manifest_to_json(const Manifest& m) {
    nlohmann::ordered_json j;
    j["images"] = nlohmann::json::array();
    for (const auto& e : m.images) {
        nlohmann::ordered_json item;
        item["id"] = e.id;
        item["depth"] = e.depth;
        item["color"] = e.color;
        item["sha256"] = e.sha256;
        j["images"].push_back(item);
    }
    j["intrinsics"] = m.intrinsics;
    j["truth"] = m.truth;
    return j.dump(2) + "\n";
}

Manifest load_manifest(const std::filesystem::path& path) {
    const std::string text = fileio::read_text(path);
    Manifest m;
    try {
        const auto j = nlohmann::json::parse(text);
        for (const auto& item : j.at("images")) {
            m.images.push_back({item.at("id").get<std::string>(), item.at("depth").get<std::string>(),
                                item.at("color").get<std::string>(), item.value("sha256", std::string())});
        }
        m.intrinsics = j.value("intrinsics", std::string());
        m.truth = j.value("truth", std::string());
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string(), e.byte, "invalid manifest JSON");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string(), 0, std::string("invalid manifest: ") + e.what());
    }
    return m;
}

Manifest generate_dataset(int n_images, const SceneDistribution& dist, std::uint64_t seed,
                          const std::filesystem::path& out_dir) {
    if (n_images < 1) throw ConfigError("generate_dataset: need at least one image");
    dist.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) throw IoError(out_dir.string(), "cannot create directory");

    Manifest manifest;
    manifest.intrinsics = "intrinsics.json";
    manifest.truth = "truth.jsonl";
    std::vector<GroundTruth> truths;
    for (int n = 0; n < n_images; ++n) {
        const std::string id = image_id_for(n);
        const SceneSpec spec = sample_scene(dist, derive_seed(seed, static_cast<std::uint64_t>(n)));
        const RenderedScene scene = render_scene(spec, dist.intrinsics, dist.width, dist.height, id);
        char name[64];
        std::snprintf(name, sizeof name, "depth_%04d.pgm", n);
        const std::string depth_name = name;
        std::snprintf(name, sizeof name, "color_%04d.ppm", n);
        const std::string color_name = name;
        auto depth_bytes = encode_depth_pgm(scene.depth);
        const auto color_bytes = encode_color_ppm(scene.color);
        fileio::write_atomic(out_dir / depth_name, depth_bytes);
        fileio::write_atomic(out_dir / color_name, color_bytes);
        depth_bytes.insert(depth_bytes.end(), color_bytes.begin(), color_bytes.end());
        manifest.images.push_back({id, depth_name, color_name, fileio::sha256_hex(depth_bytes)});
        truths.push_back(scene.truth);
    }
    save_intrinsics(dist.intrinsics, out_dir / manifest.intrinsics);
    fileio::write_atomic(out_dir / manifest.truth, truth_to_jsonl(truths));
    fileio::write_atomic(out_dir / "manifest.json", manifest_to_json(manifest));
    return manifest;
}

}  // namespace mglstm
