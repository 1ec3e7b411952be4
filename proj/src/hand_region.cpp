#include "pianovis/hand_region.hpp"

#include <algorithm>
#include <stdexcept>

namespace pianovis {

namespace {

// Separable min/max filter; radius 0 is the identity.
GrayFrame morph(const GrayFrame &f, int radius, bool dilate) {
    if (radius <= 0) return f;
    GrayFrame tmp(f.width, f.height);
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            float v = dilate ? 0.0f : 1.0f;
            for (int dx = -radius; dx <= radius; ++dx) {
                int xx = std::clamp(x + dx, 0, f.width - 1);
                v = dilate ? std::max(v, f.at(xx, y)) : std::min(v, f.at(xx, y));
            }
            tmp.at(x, y) = v;
        }
    }
    GrayFrame out(f.width, f.height);
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            float v = dilate ? 0.0f : 1.0f;
            for (int dy = -radius; dy <= radius; ++dy) {
                int yy = std::clamp(y + dy, 0, f.height - 1);
                v = dilate ? std::max(v, tmp.at(x, yy)) : std::min(v, tmp.at(x, yy));
            }
            out.at(x, y) = v;
        }
    }
    return out;
}

} // namespace

GrayFrame binary_erode(const GrayFrame &f, int radius) { return morph(f, radius, false); }
GrayFrame binary_dilate(const GrayFrame &f, int radius) { return morph(f, radius, true); }

HandColumnMask detect_hand_columns(const GrayFrame &frame, const GrayFrame &background,
                                   const Rect &bounds, const HandDetectConfig &cfg,
                                   int frame_index) {
    if (frame.width != background.width || frame.height != background.height)
        throw std::invalid_argument("detect_hand_columns: dimension mismatch");
    if (bounds.x0 < 0 || bounds.y0 < 0 || bounds.x1 > frame.width || bounds.y1 > frame.height ||
        bounds.width() <= 0 || bounds.height() <= 0)
        throw std::invalid_argument("detect_hand_columns: invalid bounds");

    GrayFrame bin(bounds.width(), bounds.height());
    for (int y = bounds.y0; y < bounds.y1; ++y)
        for (int x = bounds.x0; x < bounds.x1; ++x) {
            float d = std::abs(frame.at(x, y) - background.at(x, y));
            bin.at(x - bounds.x0, y - bounds.y0) = d > cfg.diff_threshold ? 1.0f : 0.0f;
        }

    // "Noise reduction": morphological opening.
    GrayFrame opened = binary_dilate(binary_erode(bin, cfg.open_radius), cfg.open_radius);

    HandColumnMask mask;
    mask.frame_index = frame_index;
    mask.columns.assign(bounds.width(), false);
    std::vector<bool> raw(bounds.width(), false);
    for (int x = 0; x < bounds.width(); ++x) {
        int count = 0;
        for (int y = 0; y < bounds.height(); ++y)
            if (opened.at(x, y) > 0.5f) ++count;
        raw[x] = count >= cfg.min_column_mass;
    }
    // Dilate columns to cover hand borders eaten by the opening.
    for (int x = 0; x < bounds.width(); ++x) {
        if (!raw[x]) continue;
        int lo = std::max(0, x - cfg.open_radius);
        int hi = std::min(bounds.width() - 1, x + cfg.open_radius);
        for (int i = lo; i <= hi; ++i) mask.columns[i] = true;
    }
    return mask;
}

} // namespace pianovis
