#include "mglstm/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include <json.hpp>

#include "mglstm/errors.hpp"
#include "mglstm/fileio.hpp"

namespace mglstm {

DepthMap::DepthMap(int w, int h, std::uint16_t fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

ColorImage::ColorImage(int w, int h) : width(w), height(h), data(3 * static_cast<std::size_t>(w) * h, 0) {}

void CameraIntrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw ConfigError("intrinsics: fx and fy must be positive");
}

long long round_half_up(double x) { return static_cast<long long>(std::floor(x + 0.5)); }

int project_size(double real_size_m, int depth_mm, double fx) {
    if (depth_mm <= 0) throw InvalidDepthError("project_size: depth must be positive");
    if (!(real_size_m > 0.0)) throw ContractViolation("project_size: real size must be positive");
    const long long px = round_half_up(fx * real_size_m * 1000.0 / depth_mm);
    return static_cast<int>(std::clamp<long long>(px, 1, 1LL << 30));
}

Rect clamp_rect(const Rect& r, int width, int height) {
    const long long x0 = std::max<long long>(r.x0, 0);
    const long long y0 = std::max<long long>(r.y0, 0);
    const long long x1 = std::min<long long>(static_cast<long long>(r.x0) + r.w, width);
    const long long y1 = std::min<long long>(static_cast<long long>(r.y0) + r.h, height);
    if (x1 <= x0 || y1 <= y0) {
        // Keep the origin inside bounds so the result is still a valid clamp.
        return Rect{static_cast<int>(std::min<long long>(x0, std::max(width - 1, 0))),
                    static_cast<int>(std::min<long long>(y0, std::max(height - 1, 0))), 0, 0};
    }
    return Rect{static_cast<int>(x0), static_cast<int>(y0), static_cast<int>(x1 - x0), static_cast<int>(y1 - y0)};
}

namespace {

struct NetpbmHeader {
    int width = 0;
    int height = 0;
    int maxval = 0;
    std::size_t payload_offset = 0;
};

// Parses "Px <w> <h> <maxval>" followed by exactly one whitespace byte.
NetpbmHeader parse_header(const std::vector<std::uint8_t>& bytes, const std::string& name, char kind) {
    std::size_t pos = 0;
    auto fail = [&](const std::string& what) -> void { throw FormatError(name, pos, what); };
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != static_cast<std::uint8_t>(kind)) {
        fail(std::string("expected magic P") + kind);
    }
    pos = 2;
    auto skip_space = [&] {
        for (;;) {
            while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
            if (pos < bytes.size() && bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&](const char* field) {
        skip_space();
        if (pos >= bytes.size() || !std::isdigit(bytes[pos])) fail(std::string("expected ") + field);
        long long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > (1LL << 30)) fail(std::string(field) + " too large");
            ++pos;
        }
        return static_cast<int>(v);
    };
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) fail("expected whitespace after magic");
    NetpbmHeader h;
    h.width = read_int("width");
    h.height = read_int("height");
    h.maxval = read_int("maxval");
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) fail("expected single whitespace before raster");
    ++pos;
    if (h.width <= 0 || h.height <= 0) fail("dimensions must be positive");
    h.payload_offset = pos;
    return h;
}

}  // namespace

std::vector<std::uint8_t> encode_depth_pgm(const DepthMap& map) {
    fileio::ByteWriter w;
    w.text("P5\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n65535\n");
    auto& out = w.bytes();
    out.reserve(out.size() + 2 * map.data.size());
    for (std::uint16_t d : map.data) {
        out.push_back(static_cast<std::uint8_t>(d >> 8));
        out.push_back(static_cast<std::uint8_t>(d & 0xFF));
    }
    return out;
}

DepthMap decode_depth_pgm(const std::vector<std::uint8_t>& bytes, const std::string& name) {
    const NetpbmHeader h = parse_header(bytes, name, '5');
    if (h.maxval != 65535) throw FormatError(name, h.payload_offset, "maxval must be 65535");
    const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
    if (bytes.size() - h.payload_offset < 2 * n) throw FormatError(name, bytes.size(), "truncated raster");
    DepthMap map(h.width, h.height);
    const std::uint8_t* p = bytes.data() + h.payload_offset;
    for (std::size_t i = 0; i < n; ++i) map.data[i] = static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1]);
    return map;
}

std::vector<std::uint8_t> encode_color_ppm(const ColorImage& image) {
    fileio::ByteWriter w;
    w.text("P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n");
    w.raw(image.data);
    return std::move(w.bytes());
}

ColorImage decode_color_ppm(const std::vector<std::uint8_t>& bytes, const std::string& name) {
    const NetpbmHeader h = parse_header(bytes, name, '6');
    if (h.maxval != 255) throw FormatError(name, h.payload_offset, "maxval must be 255");
    const std::size_t n = 3 * static_cast<std::size_t>(h.width) * h.height;
    if (bytes.size() - h.payload_offset < n) throw FormatError(name, bytes.size(), "truncated raster");
    ColorImage image(h.width, h.height);
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(h.payload_offset), n, image.data.begin());
    return image;
}

DepthMap load_depth_pgm(const std::filesystem::path& path) {
    return decode_depth_pgm(fileio::read_bytes(path), path.string());
}

void save_depth_pgm(const DepthMap& map, const std::filesystem::path& path) {
    fileio::write_atomic(path, encode_depth_pgm(map));
}

ColorImage load_color_ppm(const std::filesystem::path& path) {
    return decode_color_ppm(fileio::read_bytes(path), path.string());
}

void save_color_ppm(const ColorImage& image, const std::filesystem::path& path) {
    fileio::write_atomic(path, encode_color_ppm(image));
}

CameraIntrinsics load_intrinsics(const std::filesystem::path& path) {
    const std::string text = fileio::read_text(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string(), e.byte, "invalid JSON");
    }
    CameraIntrinsics k;
    try {
        k.fx = j.at("fx").get<double>();
        k.fy = j.at("fy").get<double>();
        k.cx = j.at("cx").get<double>();
        k.cy = j.at("cy").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string(), 0, std::string("intrinsics: ") + e.what());
    }
    k.validate();
    return k;
}

void save_intrinsics(const CameraIntrinsics& k, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["fx"] = k.fx;
    j["fy"] = k.fy;
    j["cx"] = k.cx;
    j["cy"] = k.cy;
    fileio::write_atomic(path, j.dump(2) + "\n");
}

}  // namespace mglstm
