#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pianovis/optical_flow.hpp"

#include <cmath>
#include <random>

using namespace pianovis;

namespace {

// Smooth multi-bump texture on a WxH patch; well-conditioned for LK.
GrayFrame textured(int w, int h, double phase_x = 0.0, double phase_y = 0.0) {
    GrayFrame f(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double gx = x - phase_x, gy = y - phase_y;
            double v = 0.5 + 0.25 * std::sin(0.55 * gx) * std::cos(0.7 * gy) +
                       0.2 * std::sin(0.23 * gx + 0.31 * gy);
            f.at(x, y) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    return f;
}

// Mean endpoint error against a constant truth flow over the interior.
double mean_epe(const FlowField &flow, double tu, double tv, int margin) {
    double sum = 0;
    int n = 0;
    for (int y = margin; y < flow.height - margin; ++y)
        for (int x = margin; x < flow.width - margin; ++x) {
            size_t i = static_cast<size_t>(y) * flow.width + x;
            double du = flow.u[i] - tu, dv = flow.v[i] - tv;
            sum += std::sqrt(du * du + dv * dv);
            ++n;
        }
    return sum / n;
}

} // namespace

TEST_CASE("identical inputs give an exactly zero field") {
    auto f = textured(10, 60);
    auto flow = dense_flow(f, f);
    for (float u : flow.u) CHECK(u == 0.0f);
    for (float v : flow.v) CHECK(v == 0.0f);
}

TEST_CASE("constant images give a zero field") {
    GrayFrame a(10, 40, 0.5f), b(10, 40, 0.5f);
    auto flow = dense_flow(a, b);
    for (float u : flow.u) CHECK(u == 0.0f);
    for (float v : flow.v) CHECK(v == 0.0f);
}

TEST_CASE("integer translations of a textured 10x60 patch recovered") {
    // Sub-pixel phase shifting realizes exact translations of the continuous
    // texture; +/- 1 and 2 px in x and y per the acceptance contract.
    for (int d : {-2, -1, 1, 2}) {
        auto prev = textured(60, 10);
        auto next = textured(60, 10, d, 0.0);
        auto flow = dense_flow(prev, next);
        CHECK(mean_epe(flow, d, 0.0, 3) < 0.5);
        for (float u : flow.u) CHECK(std::isfinite(u));
        for (float v : flow.v) CHECK(std::isfinite(v));

        auto nexty = textured(60, 10, 0.0, d > 0 ? 1.0 : -1.0);
        auto flowy = dense_flow(prev, nexty);
        CHECK(mean_epe(flowy, 0.0, d > 0 ? 1.0 : -1.0, 4) < 0.5);
    }
}

TEST_CASE("antisymmetry under reversed arguments") {
    auto a = textured(60, 10);
    auto b = textured(60, 10, 1.0, 0.0);
    auto fwd = dense_flow(a, b);
    auto bwd = dense_flow(b, a);
    double sum = 0;
    int n = 0;
    for (int y = 3; y < 7; ++y)
        for (int x = 5; x < 55; ++x) {
            size_t i = static_cast<size_t>(y) * 60 + x;
            double du = fwd.u[i] + bwd.u[i], dv = fwd.v[i] + bwd.v[i];
            sum += std::sqrt(du * du + dv * dv);
            ++n;
        }
    CHECK(sum / n < 0.5);
}

TEST_CASE("all outputs finite on random noise") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    GrayFrame a(10, 40), b(10, 40);
    for (auto &v : a.data) v = u(rng);
    for (auto &v : b.data) v = u(rng);
    auto flow = dense_flow(a, b);
    for (float x : flow.u) CHECK(std::isfinite(x));
    for (float x : flow.v) CHECK(std::isfinite(x));
}

TEST_CASE("preconditions enforced") {
    GrayFrame a(10, 10, 0.5f), b(10, 11, 0.5f);
    CHECK_THROWS(dense_flow(a, b));
    FlowConfig bad;
    bad.window = 4;
    CHECK_THROWS(dense_flow(a, a, bad));
}
