#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mglstm {

/// Row-major depth frame in integer millimeters; 0 marks a missing return.
struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> data;

    DepthMap() = default;
    DepthMap(int w, int h, std::uint16_t fill = 0);

    std::uint16_t at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
    std::uint16_t& at(int u, int v) { return data[static_cast<std::size_t>(v) * width + u]; }
    bool contains(int u, int v) const { return u >= 0 && v >= 0 && u < width && v < height; }

    friend bool operator==(const DepthMap&, const DepthMap&) = default;
};

/// Row-major interleaved 8-bit RGB frame, registered with the depth frame.
struct ColorImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    ColorImage() = default;
    ColorImage(int w, int h);

    const std::uint8_t* pixel(int u, int v) const { return &data[3 * (static_cast<std::size_t>(v) * width + u)]; }
    std::uint8_t* pixel(int u, int v) { return &data[3 * (static_cast<std::size_t>(v) * width + u)]; }

    friend bool operator==(const ColorImage&, const ColorImage&) = default;
};

struct CameraIntrinsics {
    double fx = 525.0;
    double fy = 525.0;
    double cx = 319.5;
    double cy = 239.5;

    void validate() const;
};

/// Axis-aligned pixel rectangle; (x0, y0) is the inclusive top-left corner.
struct Rect {
    int x0 = 0;
    int y0 = 0;
    int w = 0;
    int h = 0;

    bool empty() const { return w <= 0 || h <= 0; }
    long long area() const { return empty() ? 0 : static_cast<long long>(w) * h; }

    friend bool operator==(const Rect&, const Rect&) = default;
};

/// floor(x + 0.5)
long long round_half_up(double x);

/// Pinhole image extent of an object of `real_size_m` meters seen at
/// `depth_mm`. Never less than one pixel. Throws InvalidDepthError on 0 depth.
int project_size(double real_size_m, int depth_mm, double fx);

/// Intersection with [0,width) x [0,height). Sides are cropped independently,
/// the window is never shifted. An empty intersection yields a zero-area Rect.
Rect clamp_rect(const Rect& r, int width, int height);

DepthMap load_depth_pgm(const std::filesystem::path& path);
void save_depth_pgm(const DepthMap& map, const std::filesystem::path& path);
ColorImage load_color_ppm(const std::filesystem::path& path);
void save_color_ppm(const ColorImage& image, const std::filesystem::path& path);

// In-memory codecs behind the file functions; `name` is used in errors.
std::vector<std::uint8_t> encode_depth_pgm(const DepthMap& map);
DepthMap decode_depth_pgm(const std::vector<std::uint8_t>& bytes, const std::string& name);
std::vector<std::uint8_t> encode_color_ppm(const ColorImage& image);
ColorImage decode_color_ppm(const std::vector<std::uint8_t>& bytes, const std::string& name);

CameraIntrinsics load_intrinsics(const std::filesystem::path& path);
void save_intrinsics(const CameraIntrinsics& k, const std::filesystem::path& path);

}  // namespace mglstm
