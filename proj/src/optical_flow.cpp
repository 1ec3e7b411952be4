#include "pianovis/optical_flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pianovis {

namespace {

float sample_bilinear(const GrayFrame &f, double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(f.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(f.height - 1));
    int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    int x1 = std::min(x0 + 1, f.width - 1), y1 = std::min(y0 + 1, f.height - 1);
    double wx = x - x0, wy = y - y0;
    return static_cast<float>((1 - wy) * ((1 - wx) * f.at(x0, y0) + wx * f.at(x1, y0)) +
                              wy * ((1 - wx) * f.at(x0, y1) + wx * f.at(x1, y1)));
}

} // namespace

FlowField dense_flow(const GrayFrame &prev, const GrayFrame &next, const FlowConfig &cfg) {
    if (prev.width != next.width || prev.height != next.height)
        throw std::invalid_argument("dense_flow: dimension mismatch");
    if (cfg.window < 3 || cfg.window % 2 == 0)
        throw std::invalid_argument("dense_flow: window must be odd and >= 3");

    const int w = prev.width, h = prev.height, r = cfg.window / 2;
    FlowField flow(w, h);

    std::vector<double> ix(prev.size()), iy(prev.size()), it(prev.size());
    for (int iter = 0; iter < cfg.iterations; ++iter) {
        // Warp `next` back by the current flow, then solve for the residual.
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                size_t i = static_cast<size_t>(y) * w + x;
                double wx = x + flow.u[i], wy = y + flow.v[i];
                it[i] = sample_bilinear(next, wx, wy) - prev.at(x, y);
                int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
                int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
                ix[i] = (prev.at(xp, y) - prev.at(xm, y)) / (xp - xm > 0 ? xp - xm : 1);
                iy[i] = (prev.at(x, yp) - prev.at(x, ym)) / (yp - ym > 0 ? yp - ym : 1);
            }
        }
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double sxx = 0, sxy = 0, syy = 0, sxt = 0, syt = 0;
                for (int dy = -r; dy <= r; ++dy) {
                    int yy = std::clamp(y + dy, 0, h - 1);
                    for (int dx = -r; dx <= r; ++dx) {
                        int xx = std::clamp(x + dx, 0, w - 1);
                        size_t j = static_cast<size_t>(yy) * w + xx;
                        sxx += ix[j] * ix[j];
                        sxy += ix[j] * iy[j];
                        syy += iy[j] * iy[j];
                        sxt += ix[j] * it[j];
                        syt += iy[j] * it[j];
                    }
                }
                sxx += cfg.regularization;
                syy += cfg.regularization;
                double det = sxx * syy - sxy * sxy;
                double du = (-sxt * syy + sxy * syt) / det;
                double dv = (sxy * sxt - sxx * syt) / det;
                size_t i = static_cast<size_t>(y) * w + x;
                flow.u[i] += static_cast<float>(du);
                flow.v[i] += static_cast<float>(dv);
            }
        }
    }
    return flow;
}

} // namespace pianovis
