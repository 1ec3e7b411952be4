#include "pianovis/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace pianovis {

GrayFrame::GrayFrame(int w, int h, float fill) : width(w), height(h) {
    if (w <= 0 || h <= 0)
        throw std::invalid_argument("GrayFrame: dimensions must be positive");
    data.assign(static_cast<size_t>(w) * h, fill);
}

double rect_iou(const Rect &a, const Rect &b) {
    int ix0 = std::max(a.x0, b.x0), iy0 = std::max(a.y0, b.y0);
    int ix1 = std::min(a.x1, b.x1), iy1 = std::min(a.y1, b.y1);
    long long inter = 0;
    if (ix1 > ix0 && iy1 > iy0) inter = static_cast<long long>(ix1 - ix0) * (iy1 - iy0);
    long long uni = a.area() + b.area() - inter;
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

GrayFrame difference(const GrayFrame &a, const GrayFrame &b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("difference: dimension mismatch");
    GrayFrame out(a.width, a.height);
    for (size_t i = 0; i < a.data.size(); ++i)
        out.data[i] = std::fabs(a.data[i] - b.data[i]);
    return out;
}

GrayFrame adaptive_threshold(const GrayFrame &f, int window, float offset) {
    if (window < 3 || window % 2 == 0)
        throw std::invalid_argument("adaptive_threshold: window must be odd and >= 3");
    int r = window / 2;
    // Summed-area table; clamped windows at the borders.
    std::vector<double> sat(static_cast<size_t>(f.width + 1) * (f.height + 1), 0.0);
    auto S = [&](int x, int y) -> double & {
        return sat[static_cast<size_t>(y) * (f.width + 1) + x];
    };
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            S(x + 1, y + 1) = f.at(x, y) + S(x, y + 1) + S(x + 1, y) - S(x, y);

    GrayFrame out(f.width, f.height);
    for (int y = 0; y < f.height; ++y) {
        int wy0 = std::max(0, y - r), wy1 = std::min(f.height - 1, y + r);
        for (int x = 0; x < f.width; ++x) {
            int wx0 = std::max(0, x - r), wx1 = std::min(f.width - 1, x + r);
            double sum = S(wx1 + 1, wy1 + 1) - S(wx0, wy1 + 1) - S(wx1 + 1, wy0) + S(wx0, wy0);
            double mean = sum / ((wx1 - wx0 + 1) * (wy1 - wy0 + 1));
            out.at(x, y) = (f.at(x, y) > mean - offset) ? 1.0f : 0.0f;
        }
    }
    return out;
}

GrayFrame resize_bilinear(const GrayFrame &f, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1)
        throw std::invalid_argument("resize_bilinear: target dimensions must be >= 1");
    GrayFrame out(out_w, out_h);
    // Pixel-center alignment: src = (dst + 0.5) * scale - 0.5.
    double sx = static_cast<double>(f.width) / out_w;
    double sy = static_cast<double>(f.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double wy = fy - y0;
        int ya = std::clamp(y0, 0, f.height - 1);
        int yb = std::clamp(y0 + 1, 0, f.height - 1);
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            double wx = fx - x0;
            int xa = std::clamp(x0, 0, f.width - 1);
            int xb = std::clamp(x0 + 1, 0, f.width - 1);
            double v = (1 - wy) * ((1 - wx) * f.at(xa, ya) + wx * f.at(xb, ya)) +
                       wy * ((1 - wx) * f.at(xa, yb) + wx * f.at(xb, yb));
            out.at(x, y) = static_cast<float>(v);
        }
    }
    return out;
}

GrayFrame crop(const GrayFrame &f, const Rect &r) {
    if (r.x0 < 0 || r.y0 < 0 || r.x1 > f.width || r.y1 > f.height || r.width() <= 0 || r.height() <= 0)
        throw std::invalid_argument("crop: rect outside frame bounds");
    GrayFrame out(r.width(), r.height());
    for (int y = r.y0; y < r.y1; ++y)
        for (int x = r.x0; x < r.x1; ++x)
            out.at(x - r.x0, y - r.y0) = f.at(x, y);
    return out;
}

void write_pgm(const GrayFrame &f, const std::string &path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_pgm: cannot open " + path);
    os << "P5\n" << f.width << " " << f.height << "\n255\n";
    std::vector<uint8_t> row(f.width);
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            float v = std::clamp(f.at(x, y), 0.0f, 1.0f);
            row[x] = static_cast<uint8_t>(std::lround(v * 255.0f));
        }
        os.write(reinterpret_cast<const char *>(row.data()), f.width);
    }
    if (!os) throw std::runtime_error("write_pgm: write failed on " + path);
}

namespace {
int pgm_next_int(std::istream &is) {
    // Skips whitespace and '#' comment lines.
    int c;
    while ((c = is.get()) != EOF) {
        if (c == '#') {
            while ((c = is.get()) != EOF && c != '\n') {}
        } else if (!std::isspace(c)) {
            is.unget();
            break;
        }
    }
    int v;
    if (!(is >> v)) throw std::runtime_error("read_pgm: malformed header");
    return v;
}
} // namespace

GrayFrame read_pgm(const std::string &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_pgm: cannot open " + path);
    char m0 = 0, m1 = 0;
    is.get(m0);
    is.get(m1);
    if (m0 != 'P' || m1 != '5') throw std::runtime_error("read_pgm: not a P5 PGM: " + path);
    int w = pgm_next_int(is);
    int h = pgm_next_int(is);
    int maxval = pgm_next_int(is);
    if (maxval != 255) throw std::runtime_error("read_pgm: only 8-bit PGM supported");
    is.get(); // single whitespace after maxval
    GrayFrame f(w, h);
    std::vector<uint8_t> row(w);
    for (int y = 0; y < h; ++y) {
        is.read(reinterpret_cast<char *>(row.data()), w);
        if (!is) throw std::runtime_error("read_pgm: truncated pixel data in " + path);
        for (int x = 0; x < w; ++x)
            f.at(x, y) = row[x] / 255.0f;
    }
    return f;
}

std::string frame_path(const std::string &dir, int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06d.pgm", index);
    return dir + "/" + buf;
}

} // namespace pianovis
