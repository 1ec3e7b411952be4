#ifndef PIANOVIS_OPTICAL_FLOW_HPP
#define PIANOVIS_OPTICAL_FLOW_HPP

#include "pianovis/imaging.hpp"

#include <vector>

namespace pianovis {

struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<float> u; // x displacement, pixels
    std::vector<float> v; // y displacement, pixels

    FlowField() = default;
    FlowField(int w, int h)
        : width(w), height(h), u(static_cast<size_t>(w) * h, 0.0f),
          v(static_cast<size_t>(w) * h, 0.0f) {}
};

struct FlowConfig {
    int window = 7;             // odd, >= 3
    int iterations = 3;         // warp-and-refine passes
    double regularization = 1e-3; // added to the structure tensor diagonal
};

// Dense Lucas-Kanade with windowed least squares; single scale. The
// regularization term keeps aperture-degenerate systems solvable (their
// solution damps to zero).
FlowField dense_flow(const GrayFrame &prev, const GrayFrame &next, const FlowConfig &cfg = {});

} // namespace pianovis

#endif
