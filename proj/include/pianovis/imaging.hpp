#ifndef PIANOVIS_IMAGING_HPP
#define PIANOVIS_IMAGING_HPP

#include <string>
#include <vector>

namespace pianovis {

// Single-channel raster, intensities normalized to [0,1], row-major.
struct GrayFrame {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    GrayFrame() = default;
    GrayFrame(int w, int h, float fill = 0.0f);

    float &at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return data.size(); }
};

// Axis-aligned pixel rectangle, inclusive-exclusive.
struct Rect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    long long area() const { return static_cast<long long>(width()) * height(); }
    bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }

    bool operator==(const Rect &o) const = default;
};

double rect_iou(const Rect &a, const Rect &b);

// out[i] = |a[i] - b[i]|. Throws on dimension mismatch.
GrayFrame difference(const GrayFrame &a, const GrayFrame &b);

// Local-mean threshold: out = 1 where f > mean(window) - offset, else 0.
// Window must be odd and >= 3; borders use clamped windows.
GrayFrame adaptive_threshold(const GrayFrame &f, int window, float offset);

GrayFrame resize_bilinear(const GrayFrame &f, int out_w, int out_h);

GrayFrame crop(const GrayFrame &f, const Rect &r);

// Binary PGM (P5, 8-bit). Round-trips byte-exact.
void write_pgm(const GrayFrame &f, const std::string &path);
GrayFrame read_pgm(const std::string &path);

// frame_000001.pgm, frame_000002.pgm, ... under dir (1-based on disk).
std::string frame_path(const std::string &dir, int index);

} // namespace pianovis

#endif
