#include "pianovis/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace pianovis {

int approach_frames(int velocity) {
    if (velocity < 1 || velocity > 127)
        throw std::invalid_argument("approach_frames: velocity out of [1,127]");
    return std::max(2, static_cast<int>(std::lround(22.0 - 20.0 * (velocity - 1) / 126.0)));
}

namespace {

void fill_rect(GrayFrame &f, const Rect &r, float v) {
    for (int y = std::max(0, r.y0); y < std::min(f.height, r.y1); ++y)
        for (int x = std::max(0, r.x0); x < std::min(f.width, r.x1); ++x) f.at(x, y) = v;
}

void darken_rect(GrayFrame &f, const Rect &r, float amount) {
    for (int y = std::max(0, r.y0); y < std::min(f.height, r.y1); ++y)
        for (int x = std::max(0, r.x0); x < std::min(f.width, r.x1); ++x)
            f.at(x, y) = std::max(0.0f, f.at(x, y) - amount);
}

void fill_ellipse(GrayFrame &f, double cx, double cy, double rx, double ry, float v) {
    int y0 = std::max(0, static_cast<int>(std::floor(cy - ry)));
    int y1 = std::min(f.height - 1, static_cast<int>(std::ceil(cy + ry)));
    int x0 = std::max(0, static_cast<int>(std::floor(cx - rx)));
    int x1 = std::min(f.width - 1, static_cast<int>(std::ceil(cx + rx)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            double dx = (x - cx) / rx, dy = (y - cy) / ry;
            if (dx * dx + dy * dy <= 1.0) f.at(x, y) = v;
        }
}

// Ideal key geometry over the given bounds; also the renderer's ground truth.
KeyboardLayout ideal_layout(const Rect &bounds, const LayoutSpec &spec, int frame_w, int frame_h) {
    int n_white = count_white_keys(spec);
    if (n_white < 2) throw std::invalid_argument("synth: layout needs at least 2 white keys");
    auto edge = [&](int i) {
        return bounds.x0 +
               static_cast<int>(std::lround(static_cast<double>(i) * bounds.width() / n_white));
    };
    int top_margin = std::max(3, bounds.height() * 4 / 100);
    int black_bottom = bounds.y0 + static_cast<int>(std::lround(0.58 * bounds.height()));
    int black_w = std::max(4, static_cast<int>(std::lround(0.56 * bounds.width() / n_white)));

    KeyboardLayout layout;
    layout.frame_width = frame_w;
    layout.frame_height = frame_h;
    layout.bounds = bounds;
    layout.n_white = n_white;
    layout.n_black = count_black_keys(spec);
    layout.black_row_split = black_bottom;

    std::vector<Rect> black_boxes;
    int white_idx = 0;
    for (int i = 0; i < spec.n_keys; ++i) {
        int midi = spec.first_midi + i;
        KeyRegion key;
        key.key_id = i;
        key.midi_note = midi;
        if (midi_is_black(midi)) {
            key.color = KeyColor::Black;
            int cx = edge(white_idx);
            key.box = Rect{cx - black_w / 2, bounds.y0 + top_margin, cx - black_w / 2 + black_w,
                           black_bottom};
            black_boxes.push_back(key.box);
        } else {
            key.color = KeyColor::White;
            key.lower = Rect{edge(white_idx), black_bottom, edge(white_idx + 1), bounds.y1};
            key.upper = Rect{edge(white_idx), bounds.y0, edge(white_idx + 1), black_bottom};
            ++white_idx;
        }
        layout.keys.push_back(key);
    }
    // Trim white upper rects around their black neighbors.
    for (auto &key : layout.keys) {
        if (key.color != KeyColor::White) continue;
        for (const auto &b : black_boxes) {
            if (b.x0 <= key.upper.x0 && b.x1 > key.upper.x0) key.upper.x0 = b.x1;
            if (b.x0 < key.upper.x1 && b.x1 >= key.upper.x1) key.upper.x1 = b.x0;
        }
    }
    return layout;
}

struct HandPose {
    double cx, cy;
    bool visible;
};

} // namespace

SynthPerformance::SynthPerformance(std::vector<NoteEvent> score, RenderConfig cfg)
    : cfg_(cfg), score_(std::move(score)) {
    validate_events(score_);
    if (cfg_.keyboard.area() == 0) {
        int mx = cfg_.frame_width / 12, my = cfg_.frame_height / 10;
        cfg_.keyboard = Rect{mx, my, cfg_.frame_width - mx, cfg_.frame_height - my};
    }
    layout_ = ideal_layout(cfg_.keyboard, cfg_.layout, cfg_.frame_width, cfg_.frame_height);
    for (const auto &e : score_)
        if (!layout_.find_midi(e.midi_note))
            throw std::invalid_argument("synth: note " + std::to_string(e.midi_note) +
                                        " outside the rendered keyboard");

    base_ = GrayFrame(cfg_.frame_width, cfg_.frame_height, cfg_.desk_level);
    if (cfg_.bezel_px > 0) {
        Rect ring{cfg_.keyboard.x0 - cfg_.bezel_px, cfg_.keyboard.y0 - cfg_.bezel_px,
                  cfg_.keyboard.x1 + cfg_.bezel_px, cfg_.keyboard.y1 + cfg_.bezel_px};
        fill_rect(base_, ring, cfg_.bezel_level);
    }
    fill_rect(base_, cfg_.keyboard, cfg_.white_level);
    for (const auto &k : layout_.keys)
        if (k.color == KeyColor::Black) fill_rect(base_, k.box, cfg_.black_level);

    n_frames_ = 30;
    for (const auto &e : score_)
        n_frames_ = std::max(n_frames_, e.off_frame + cfg_.release_frames + 8);
}

std::vector<Rect> SynthPerformance::truth_black_boxes() const {
    std::vector<Rect> out;
    for (const auto &k : layout_.keys)
        if (k.color == KeyColor::Black) out.push_back(k.box);
    return out;
}

GrayFrame SynthPerformance::render_frame(int index) const {
    if (index < 0 || index >= n_frames_)
        throw std::invalid_argument("render_frame: index out of range");
    GrayFrame f = base_;

    for (const auto &e : score_) {
        if (!e.sounding_at(index)) continue;
        const KeyRegion *key = layout_.find_midi(e.midi_note);
        if (key->color == KeyColor::White) {
            darken_rect(f, key->upper, cfg_.press_darkening);
            darken_rect(f, key->lower, cfg_.press_darkening);
        } else {
            darken_rect(f, key->box, cfg_.press_darkening);
        }
    }

    // Hand blobs: hover near the keyboard front, approach the key at a
    // velocity-dependent speed, rest on it, and retreat after release.
    double white_w = static_cast<double>(cfg_.keyboard.width()) / layout_.n_white;
    double rx = 0.9 * white_w, ry = std::max(4.0, 0.16 * cfg_.keyboard.height());
    for (const auto &e : score_) {
        const KeyRegion *key = layout_.find_midi(e.midi_note);
        double tx = (key->color == KeyColor::White)
                        ? (key->lower.x0 + key->lower.x1) / 2.0
                        : (key->box.x0 + key->box.x1) / 2.0;
        double ty = (key->color == KeyColor::White)
                        ? (key->lower.y0 + key->lower.y1) / 2.0
                        : (key->box.y0 + 0.75 * key->box.height());
        double sy = cfg_.keyboard.y1 - ry - 2.0;
        if (sy <= ty) sy = std::min<double>(cfg_.keyboard.y1 - 1, ty + 1);

        int af = approach_frames(e.velocity);
        int t_hover = e.on_frame - af - cfg_.hover_frames;
        int t_approach = e.on_frame - af;
        HandPose pose{tx, sy, false};
        if (index >= t_hover && index < t_approach) {
            pose.visible = true;
        } else if (index >= t_approach && index < e.on_frame) {
            double s = static_cast<double>(index - t_approach) / af;
            pose = {tx, sy + s * (ty - sy), true};
        } else if (e.sounding_at(index)) {
            pose = {tx, ty, true};
        } else if (index >= e.off_frame && index < e.off_frame + cfg_.release_frames) {
            double s = static_cast<double>(index - e.off_frame) / cfg_.release_frames;
            pose = {tx, ty + s * (sy - ty), true};
        }
        if (pose.visible) {
            fill_ellipse(f, pose.cx, pose.cy, rx, ry, cfg_.hand_level);
            // finger-like protrusion toward the key top
            fill_ellipse(f, pose.cx, pose.cy - 0.9 * ry, 0.45 * rx, 0.6 * ry, cfg_.hand_level);
        }
    }

    std::mt19937_64 rng(cfg_.seed * 0x100000001b3ull + static_cast<uint64_t>(index));
    std::normal_distribution<float> noise(0.0f, cfg_.noise_sigma);
    for (auto &v : f.data) {
        v = v * cfg_.brightness;
        if (cfg_.noise_sigma > 0) v += noise(rng);
        v = std::clamp(v, 0.0f, 1.0f);
    }
    return f;
}

void SynthPerformance::write_frames(const std::string &dir) const {
    for (int i = 0; i < n_frames_; ++i) write_pgm(render_frame(i), frame_path(dir, i + 1));
}

} // namespace pianovis
