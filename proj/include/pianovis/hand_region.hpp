#ifndef PIANOVIS_HAND_REGION_HPP
#define PIANOVIS_HAND_REGION_HPP

#include "pianovis/imaging.hpp"

#include <vector>

namespace pianovis {

// Per-column hand occupancy inside the keyboard bounds, indexed from bounds.x0.
struct HandColumnMask {
    std::vector<bool> columns;
    int frame_index = 0;

    bool any_in(int x_begin, int x_end, int bounds_x0) const {
        for (int x = x_begin; x < x_end; ++x) {
            int i = x - bounds_x0;
            if (i >= 0 && i < static_cast<int>(columns.size()) && columns[i]) return true;
        }
        return false;
    }
};

struct HandDetectConfig {
    float diff_threshold = 0.08f; // ~20/255
    int open_radius = 2;
    int min_column_mass = 3;
};

HandColumnMask detect_hand_columns(const GrayFrame &frame, const GrayFrame &background,
                                   const Rect &bounds, const HandDetectConfig &cfg,
                                   int frame_index = 0);

// Binary morphology on {0,1} frames, square structuring element of the given radius.
GrayFrame binary_erode(const GrayFrame &f, int radius);
GrayFrame binary_dilate(const GrayFrame &f, int radius);

} // namespace pianovis

#endif
