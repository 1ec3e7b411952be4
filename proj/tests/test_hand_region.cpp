#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pianovis/hand_region.hpp"

#include <random>

using namespace pianovis;

namespace {

GrayFrame flat(int w, int h, float v) { return GrayFrame(w, h, v); }

// Dark blob on a bright background over columns [x0, x1) and rows [y0, y1).
GrayFrame with_blob(const GrayFrame &bg, int x0, int x1, int y0, int y1, float contrast) {
    GrayFrame f = bg;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) f.at(x, y) = bg.at(x, y) - contrast;
    return f;
}

} // namespace

TEST_CASE("identical frame gives an all-false mask") {
    auto bg = flat(200, 60, 0.8f);
    Rect bounds{10, 5, 190, 55};
    auto mask = detect_hand_columns(bg, bg, bounds, HandDetectConfig{});
    CHECK(static_cast<int>(mask.columns.size()) == bounds.width());
    for (bool c : mask.columns) CHECK_FALSE(c);
}

TEST_CASE("sub-threshold noise gives an all-false mask") {
    auto bg = flat(200, 60, 0.8f);
    GrayFrame f = bg;
    std::mt19937 rng(9);
    std::uniform_real_distribution<float> u(-0.05f, 0.05f); // below the 0.08 threshold
    for (auto &v : f.data) v += u(rng);
    auto mask = detect_hand_columns(f, bg, Rect{10, 5, 190, 55}, HandDetectConfig{});
    for (bool c : mask.columns) CHECK_FALSE(c);
}

TEST_CASE("blob at known columns marks exactly [x0-r, x1+r)") {
    auto bg = flat(300, 80, 0.8f);
    Rect bounds{0, 0, 300, 80};
    HandDetectConfig cfg;
    auto f = with_blob(bg, 100, 151, 20, 60, 0.5f);
    auto mask = detect_hand_columns(f, bg, bounds, cfg);
    int r = cfg.open_radius;
    for (int x = 0; x < 300; ++x) {
        bool expect = x >= 100 - r && x <= 150 + r;
        CHECK(mask.columns[x] == expect);
    }
}

TEST_CASE("opening removes isolated speckle") {
    auto bg = flat(120, 40, 0.8f);
    GrayFrame f = bg;
    f.at(30, 20) -= 0.5f; // single hot pixel
    f.at(71, 11) -= 0.5f;
    auto mask = detect_hand_columns(f, bg, Rect{0, 0, 120, 40}, HandDetectConfig{});
    for (bool c : mask.columns) CHECK_FALSE(c);
}

TEST_CASE("monotonicity: a larger blob never loses columns") {
    auto bg = flat(300, 80, 0.8f);
    Rect bounds{0, 0, 300, 80};
    HandDetectConfig cfg;
    auto small = detect_hand_columns(with_blob(bg, 120, 140, 25, 55, 0.5f), bg, bounds, cfg);
    auto big = detect_hand_columns(with_blob(bg, 110, 160, 20, 60, 0.5f), bg, bounds, cfg);
    for (int x = 0; x < 300; ++x)
        if (small.columns[x]) CHECK(big.columns[x]);
}

TEST_CASE("min_column_mass suppresses thin responses") {
    auto bg = flat(120, 40, 0.8f);
    // Blob only 2 px tall after opening with radius 1: passes with mass 1,
    // blocked with mass 8.
    auto f = with_blob(bg, 50, 70, 18, 24, 0.5f);
    HandDetectConfig lo{0.08f, 1, 1};
    HandDetectConfig hi{0.08f, 1, 8};
    auto m_lo = detect_hand_columns(f, bg, Rect{0, 0, 120, 40}, lo);
    auto m_hi = detect_hand_columns(f, bg, Rect{0, 0, 120, 40}, hi);
    CHECK(m_lo.any_in(50, 70, 0));
    // Check hi is a subset of lo.
    for (int x = 0; x < 120; ++x)
        if (m_hi.columns[x]) CHECK(m_lo.columns[x]);
}

TEST_CASE("dimension mismatch rejected") {
    CHECK_THROWS(detect_hand_columns(flat(10, 10, 0.5f), flat(10, 11, 0.5f), Rect{0, 0, 10, 10},
                                     HandDetectConfig{}));
}

TEST_CASE("binary morphology basics") {
    GrayFrame f(9, 9, 0.0f);
    for (int y = 3; y < 6; ++y)
        for (int x = 3; x < 6; ++x) f.at(x, y) = 1.0f;
    auto er = binary_erode(f, 1);
    // 3x3 square erodes to its single center pixel.
    int on = 0;
    for (float v : er.data) on += v > 0.5f;
    CHECK(on == 1);
    CHECK(er.at(4, 4) == 1.0f);
    auto di = binary_dilate(er, 1);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 9; ++x)
            CHECK(di.at(x, y) == ((x >= 3 && x < 6 && y >= 3 && y < 6) ? 1.0f : 0.0f));
}

TEST_CASE("any_in respects bounds offset") {
    HandColumnMask mask;
    mask.columns.assign(20, false);
    mask.columns[5] = true; // absolute x = bounds.x0 + 5
    CHECK(mask.any_in(105, 106, 100));
    CHECK_FALSE(mask.any_in(90, 105, 100));
    CHECK_FALSE(mask.any_in(106, 120, 100));
}
