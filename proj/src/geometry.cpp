#include "pianovis/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace pianovis {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr int kMaxLinesPerAxis = 8; // strongest lines considered for rectangle pairing
} // namespace

bool midi_is_black(int midi_note) {
    int pc = ((midi_note % 12) + 12) % 12;
    return pc == 1 || pc == 3 || pc == 6 || pc == 8 || pc == 10;
}

int count_white_keys(const LayoutSpec &spec) {
    int n = 0;
    for (int i = 0; i < spec.n_keys; ++i)
        if (!midi_is_black(spec.first_midi + i)) ++n;
    return n;
}

int count_black_keys(const LayoutSpec &spec) { return spec.n_keys - count_white_keys(spec); }

const KeyRegion *KeyboardLayout::find_midi(int midi_note) const {
    for (const auto &k : keys)
        if (k.midi_note == midi_note) return &k;
    return nullptr;
}

std::vector<HoughLine> hough_lines(const GrayFrame &f, double rho_step, double theta_step,
                                   int threshold, double edge_percentile) {
    if (rho_step <= 0 || theta_step <= 0)
        throw std::invalid_argument("hough_lines: steps must be positive");
    if (threshold < 1) throw std::invalid_argument("hough_lines: threshold must be >= 1");
    if (f.width < 3 || f.height < 3) return {};

    // Gradient magnitude via central differences, binarized at a percentile.
    std::vector<float> mag(f.size(), 0.0f);
    for (int y = 1; y < f.height - 1; ++y) {
        for (int x = 1; x < f.width - 1; ++x) {
            float gx = 0.5f * (f.at(x + 1, y) - f.at(x - 1, y));
            float gy = 0.5f * (f.at(x, y + 1) - f.at(x, y - 1));
            mag[static_cast<size_t>(y) * f.width + x] = std::sqrt(gx * gx + gy * gy);
        }
    }
    std::vector<float> sorted = mag;
    size_t idx = std::min(sorted.size() - 1,
                          static_cast<size_t>(edge_percentile * (sorted.size() - 1)));
    std::nth_element(sorted.begin(), sorted.begin() + idx, sorted.end());
    float cutoff = std::max(sorted[idx], 1e-6f);

    int n_theta = std::max(1, static_cast<int>(std::lround(kPi / theta_step)));
    double diag = std::hypot(f.width, f.height);
    int n_rho_half = static_cast<int>(std::ceil(diag / rho_step));
    int n_rho = 2 * n_rho_half + 1;

    std::vector<double> cos_t(n_theta), sin_t(n_theta);
    for (int t = 0; t < n_theta; ++t) {
        cos_t[t] = std::cos(t * theta_step);
        sin_t[t] = std::sin(t * theta_step);
    }

    std::vector<int> acc(static_cast<size_t>(n_theta) * n_rho, 0);
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            if (mag[static_cast<size_t>(y) * f.width + x] < cutoff) continue;
            for (int t = 0; t < n_theta; ++t) {
                double rho = x * cos_t[t] + y * sin_t[t];
                int r = static_cast<int>(std::lround(rho / rho_step)) + n_rho_half;
                if (r >= 0 && r < n_rho) ++acc[static_cast<size_t>(t) * n_rho + r];
            }
        }
    }

    // 3x3 non-maximum suppression over (theta, rho).
    auto A = [&](int t, int r) { return acc[static_cast<size_t>(t) * n_rho + r]; };
    std::vector<HoughLine> out;
    for (int t = 0; t < n_theta; ++t) {
        for (int r = 0; r < n_rho; ++r) {
            int v = A(t, r);
            if (v < threshold) continue;
            bool peak = true;
            for (int dt = -1; dt <= 1 && peak; ++dt) {
                for (int dr = -1; dr <= 1; ++dr) {
                    if (dt == 0 && dr == 0) continue;
                    int tt = t + dt, rr = r + dr;
                    if (tt < 0 || tt >= n_theta || rr < 0 || rr >= n_rho) continue;
                    int nv = A(tt, rr);
                    // Strict inequality on trailing neighbors breaks plateau ties.
                    if (nv > v || (nv == v && (dt > 0 || (dt == 0 && dr > 0)))) {
                        peak = false;
                        break;
                    }
                }
            }
            if (peak)
                out.push_back({(r - n_rho_half) * rho_step, t * theta_step, v});
        }
    }
    std::sort(out.begin(), out.end(), [](const HoughLine &a, const HoughLine &b) {
        if (a.votes != b.votes) return a.votes > b.votes;
        if (a.theta != b.theta) return a.theta < b.theta;
        return a.rho < b.rho;
    });
    return out;
}

double score_keyboard_rect(const GrayFrame &f, const Rect &r, const RectScoreConfig &cfg) {
    if (r.width() <= 1 || r.height() <= 1) return -1.0;
    int step_x = std::max(1, r.width() / 64);
    int step_y = std::max(1, r.height() / 64);
    float lo = 1.0f, hi = 0.0f;
    for (int y = r.y0; y < r.y1; y += step_y)
        for (int x = r.x0; x < r.x1; x += step_x) {
            float v = f.at(x, y);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    float span = std::max(hi - lo, 1e-6f);
    int y_mid = r.y0 + r.height() / 2;
    long long dark = 0, bright = 0, n_up = 0, n_lo = 0;
    for (int y = r.y0; y < r.y1; y += step_y) {
        for (int x = r.x0; x < r.x1; x += step_x) {
            double v = (f.at(x, y) - lo) / span;
            if (y < y_mid) {
                ++n_up;
                if (v < cfg.dark_cutoff) ++dark;
            } else {
                ++n_lo;
                if (v > cfg.bright_cutoff) ++bright;
            }
        }
    }
    double s = 0.0;
    if (n_up > 0) s += static_cast<double>(dark) / n_up;
    if (n_lo > 0) s += static_cast<double>(bright) / n_lo;
    return s;
}

Rect find_keyboard_rect(const GrayFrame &f, const std::vector<HoughLine> &lines,
                        const RectScoreConfig &cfg) {
    // Keep only lines comparable in strength to the strongest one per
    // orientation; short interior edges (key boundaries) fall away, the
    // long border lines stay.
    int max_h = 0, max_v = 0;
    double xc = f.width / 2.0, yc = f.height / 2.0;
    for (const auto &l : lines) {
        if (std::fabs(l.theta - kPi / 2) <= cfg.axis_tolerance) max_h = std::max(max_h, l.votes);
        else if (std::min(l.theta, kPi - l.theta) <= cfg.axis_tolerance)
            max_v = std::max(max_v, l.votes);
    }
    std::vector<double> ys, xs; // line positions at the frame center
    for (const auto &l : lines) {
        double d_h = std::fabs(l.theta - kPi / 2);
        double d_v = std::min(l.theta, kPi - l.theta);
        if (d_h <= cfg.axis_tolerance && ys.size() < kMaxLinesPerAxis &&
            l.votes >= 0.7 * max_h) {
            ys.push_back((l.rho - xc * std::cos(l.theta)) / std::sin(l.theta));
        } else if (d_v <= cfg.axis_tolerance && xs.size() < kMaxLinesPerAxis &&
                   l.votes >= 0.7 * max_v) {
            double c = std::cos(l.theta);
            // theta near pi points the normal the other way
            xs.push_back((l.rho - yc * std::sin(l.theta)) / c);
        }
    }
    if (ys.size() < 2 || xs.size() < 2)
        throw std::runtime_error("keyboard not found: need >=2 horizontal and >=2 vertical lines");

    double min_area = cfg.min_area_fraction * f.width * f.height;
    Rect best;
    double best_score = -1.0;
    for (size_t i = 0; i < ys.size(); ++i) {
        for (size_t j = i + 1; j < ys.size(); ++j) {
            int y0 = static_cast<int>(std::lround(std::min(ys[i], ys[j])));
            int y1 = static_cast<int>(std::lround(std::max(ys[i], ys[j])));
            for (size_t a = 0; a < xs.size(); ++a) {
                for (size_t b = a + 1; b < xs.size(); ++b) {
                    int x0 = static_cast<int>(std::lround(std::min(xs[a], xs[b])));
                    int x1 = static_cast<int>(std::lround(std::max(xs[a], xs[b])));
                    Rect r{std::clamp(x0, 0, f.width - 1), std::clamp(y0, 0, f.height - 1),
                           std::clamp(x1, 1, f.width), std::clamp(y1, 1, f.height)};
                    if (r.width() <= 1 || r.height() <= 1) continue;
                    if (static_cast<double>(r.area()) < min_area) continue;
                    double s = score_keyboard_rect(f, r, cfg);
                    if (s > best_score) {
                        best_score = s;
                        best = r;
                    }
                }
            }
        }
    }
    if (best_score < 0)
        throw std::runtime_error("keyboard not found: no candidate rectangle");
    return best;
}

namespace {

struct Component {
    Rect box;
    int area = 0;
};

// 4-connected components of zero-valued pixels inside `region` of a binary frame.
std::vector<Component> dark_components(const GrayFrame &bin, const Rect &region) {
    std::vector<uint8_t> seen(bin.size(), 0);
    std::vector<Component> comps;
    for (int sy = region.y0; sy < region.y1; ++sy) {
        for (int sx = region.x0; sx < region.x1; ++sx) {
            size_t si = static_cast<size_t>(sy) * bin.width + sx;
            if (seen[si] || bin.data[si] != 0.0f) continue;
            Component c{{sx, sy, sx + 1, sy + 1}, 0};
            std::deque<std::pair<int, int>> q{{sx, sy}};
            seen[si] = 1;
            while (!q.empty()) {
                auto [x, y] = q.front();
                q.pop_front();
                ++c.area;
                c.box.x0 = std::min(c.box.x0, x);
                c.box.y0 = std::min(c.box.y0, y);
                c.box.x1 = std::max(c.box.x1, x + 1);
                c.box.y1 = std::max(c.box.y1, y + 1);
                const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
                for (int d = 0; d < 4; ++d) {
                    int nx = x + dx[d], ny = y + dy[d];
                    if (!region.contains(nx, ny)) continue;
                    size_t ni = static_cast<size_t>(ny) * bin.width + nx;
                    if (!seen[ni] && bin.data[ni] == 0.0f) {
                        seen[ni] = 1;
                        q.emplace_back(nx, ny);
                    }
                }
            }
            comps.push_back(c);
        }
    }
    return comps;
}

} // namespace

KeyboardLayout segment_keys(const GrayFrame &f, const Rect &bounds, const LayoutSpec &spec) {
    if (bounds.x0 < 0 || bounds.y0 < 0 || bounds.x1 > f.width || bounds.y1 > f.height ||
        bounds.width() < 8 || bounds.height() < 8)
        throw std::invalid_argument("segment_keys: invalid keyboard bounds");

    int n_white = count_white_keys(spec);
    int n_black = count_black_keys(spec);
    if (n_black == 0)
        throw std::invalid_argument("segment_keys: layout without black keys is not supported");

    int win = bounds.height() / 2;
    if (win % 2 == 0) ++win;
    win = std::max(win, 3);
    GrayFrame band = crop(f, bounds);
    GrayFrame bin = adaptive_threshold(band, win, 0.05f);

    // Inset to keep border pixels of the (possibly off-by-a-couple-px) rect out
    // of the component search.
    int inset = std::max(2, bounds.height() / 50);
    Rect search{inset, inset, band.width - inset, bounds.height() / 2 + bounds.height() / 4};

    double expected_black_w = static_cast<double>(bounds.width()) / n_white * 0.6;
    auto comps = dark_components(bin, search);
    std::vector<Rect> black_boxes;
    for (const auto &c : comps) {
        int w = c.box.width(), h = c.box.height();
        if (w < 3 || w < 0.3 * expected_black_w || w > 2.5 * expected_black_w) continue;
        if (h < 0.15 * bounds.height() || h > 0.8 * bounds.height()) continue;
        if (c.box.y0 > bounds.height() / 2) continue; // must start in the upper band
        black_boxes.push_back({c.box.x0 + bounds.x0, c.box.y0 + bounds.y0,
                               c.box.x1 + bounds.x0, c.box.y1 + bounds.y0});
    }
    if (static_cast<int>(black_boxes.size()) != n_black) {
        std::ostringstream msg;
        msg << "segmentation mismatch: found " << black_boxes.size() << " black keys, expected "
            << n_black;
        throw std::runtime_error(msg.str());
    }
    std::sort(black_boxes.begin(), black_boxes.end(),
              [](const Rect &a, const Rect &b) { return a.x0 < b.x0; });

    int split = 0;
    for (const auto &b : black_boxes) split = std::max(split, b.y1);

    // White keys tile the full width uniformly; upper rects are the gaps left by
    // the black boxes.
    auto slot_edge = [&](int i) {
        return bounds.x0 +
               static_cast<int>(std::lround(static_cast<double>(i) * bounds.width() / n_white));
    };

    KeyboardLayout layout;
    layout.frame_width = f.width;
    layout.frame_height = f.height;
    layout.bounds = bounds;
    layout.n_white = n_white;
    layout.n_black = n_black;
    layout.black_row_split = split;

    int white_idx = 0, black_idx = 0;
    for (int i = 0; i < spec.n_keys; ++i) {
        int midi = spec.first_midi + i;
        KeyRegion key;
        key.key_id = i;
        key.midi_note = midi;
        if (midi_is_black(midi)) {
            key.color = KeyColor::Black;
            key.box = black_boxes[black_idx++];
        } else {
            key.color = KeyColor::White;
            int xl = slot_edge(white_idx), xr = slot_edge(white_idx + 1);
            ++white_idx;
            key.lower = Rect{xl, split, xr, bounds.y1};
            int ux0 = xl, ux1 = xr;
            for (const auto &b : black_boxes) {
                if (b.x0 <= ux0 && b.x1 > ux0) ux0 = b.x1;
                if (b.x0 < ux1 && b.x1 >= ux1) ux1 = b.x0;
            }
            if (ux1 <= ux0) { // degenerate; fall back to the raw slot
                ux0 = xl;
                ux1 = xr;
            }
            key.upper = Rect{ux0, bounds.y0, ux1, split};
        }
        layout.keys.push_back(key);
    }
    return layout;
}

KeyboardLayout detect_keyboard(const GrayFrame &frame, const LayoutSpec &spec, HoughConfig hough,
                               const RectScoreConfig &score) {
    if (hough.threshold <= 0)
        hough.threshold = std::max(20, std::min(frame.width, frame.height) / 4);
    auto lines = hough_lines(frame, hough.rho_step, hough.theta_step, hough.threshold,
                             hough.edge_percentile);
    Rect bounds = find_keyboard_rect(frame, lines, score);
    return segment_keys(frame, bounds, spec);
}

void write_layout(const KeyboardLayout &layout, const std::string &path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_layout: cannot open " + path);
    os << "KEYBOARD " << layout.frame_width << " " << layout.frame_height << " "
       << layout.bounds.x0 << " " << layout.bounds.y0 << " " << layout.bounds.x1 << " "
       << layout.bounds.y1 << "\n";
    for (const auto &k : layout.keys) {
        os << "KEY " << k.key_id << " " << (k.color == KeyColor::White ? "WHITE" : "BLACK") << " "
           << k.midi_note;
        if (k.color == KeyColor::White) {
            os << " " << k.upper.x0 << " " << k.upper.y0 << " " << k.upper.x1 << " " << k.upper.y1
               << " " << k.lower.x0 << " " << k.lower.y0 << " " << k.lower.x1 << " " << k.lower.y1;
        } else {
            os << " " << k.box.x0 << " " << k.box.y0 << " " << k.box.x1 << " " << k.box.y1;
        }
        os << "\n";
    }
    if (!os) throw std::runtime_error("write_layout: write failed on " + path);
}

KeyboardLayout read_layout(const std::string &path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_layout: cannot open " + path);
    KeyboardLayout layout;
    std::string tag;
    if (!(is >> tag) || tag != "KEYBOARD")
        throw std::runtime_error("read_layout: missing KEYBOARD header in " + path);
    if (!(is >> layout.frame_width >> layout.frame_height >> layout.bounds.x0 >>
          layout.bounds.y0 >> layout.bounds.x1 >> layout.bounds.y1))
        throw std::runtime_error("read_layout: malformed KEYBOARD header");
    while (is >> tag) {
        if (tag != "KEY") throw std::runtime_error("read_layout: unexpected token " + tag);
        KeyRegion k;
        std::string color;
        if (!(is >> k.key_id >> color >> k.midi_note))
            throw std::runtime_error("read_layout: malformed KEY line");
        if (color == "WHITE") {
            k.color = KeyColor::White;
            if (!(is >> k.upper.x0 >> k.upper.y0 >> k.upper.x1 >> k.upper.y1 >> k.lower.x0 >>
                  k.lower.y0 >> k.lower.x1 >> k.lower.y1))
                throw std::runtime_error("read_layout: malformed white KEY line");
            ++layout.n_white;
        } else if (color == "BLACK") {
            k.color = KeyColor::Black;
            if (!(is >> k.box.x0 >> k.box.y0 >> k.box.x1 >> k.box.y1))
                throw std::runtime_error("read_layout: malformed black KEY line");
            layout.black_row_split = std::max(layout.black_row_split, k.box.y1);
            ++layout.n_black;
        } else {
            throw std::runtime_error("read_layout: unknown key color " + color);
        }
        layout.keys.push_back(k);
    }
    return layout;
}

} // namespace pianovis
