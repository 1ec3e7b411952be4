#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pianovis/geometry.hpp"
#include "pianovis/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace pianovis;

namespace {
constexpr double kPi = std::numbers::pi;

SynthPerformance make_perf(LayoutSpec spec = {60, 24}, RenderConfig rc = {}) {
    rc.layout = spec;
    return SynthPerformance({{spec.first_midi, 45, 60, 64}}, rc);
}
} // namespace

TEST_CASE("midi pitch-class arithmetic") {
    CHECK_FALSE(midi_is_black(60)); // C4
    CHECK(midi_is_black(61));       // C#4
    CHECK_FALSE(midi_is_black(64)); // E4
    CHECK(count_white_keys({21, 88}) == 52);
    CHECK(count_black_keys({21, 88}) == 36);
    CHECK(count_white_keys({60, 24}) == 14);
    CHECK(count_black_keys({60, 24}) == 10);
}

TEST_CASE("hough_lines finds axis-aligned single lines") {
    GrayFrame f(64, 64, 0.0f);
    for (int x = 0; x < 64; ++x) f.at(x, 10) = 1.0f;
    auto lines = hough_lines(f, 1.0, kPi / 180.0, 30, 0.95);
    REQUIRE(!lines.empty());
    CHECK(std::abs(lines[0].theta - kPi / 2) < kPi / 180.0 + 1e-9);
    CHECK(std::abs(lines[0].rho - 10.0) <= 1.0 + 1e-9);

    GrayFrame g(64, 64, 0.0f);
    for (int y = 0; y < 64; ++y) g.at(5, y) = 1.0f;
    auto vlines = hough_lines(g, 1.0, kPi / 180.0, 30, 0.95);
    REQUIRE(!vlines.empty());
    CHECK(std::min(vlines[0].theta, kPi - vlines[0].theta) < kPi / 180.0 + 1e-9);
    CHECK(std::abs(std::abs(vlines[0].rho) - 5.0) <= 1.0 + 1e-9);
}

TEST_CASE("hough_lines sorted by votes, degenerate frame yields nothing") {
    GrayFrame f(48, 48, 0.0f);
    for (int x = 0; x < 48; ++x) f.at(x, 8) = 1.0f;
    for (int x = 10; x < 30; ++x) f.at(x, 30) = 1.0f;
    auto lines = hough_lines(f, 1.0, kPi / 180.0, 10, 0.9);
    REQUIRE(lines.size() >= 2);
    for (size_t i = 1; i < lines.size(); ++i) CHECK(lines[i - 1].votes >= lines[i].votes);

    CHECK(hough_lines(GrayFrame(2, 2), 1.0, kPi / 180.0, 5, 0.95).empty());
    CHECK(hough_lines(GrayFrame(32, 32, 0.5f), 1.0, kPi / 180.0, 5, 0.95).empty());
    CHECK_THROWS(hough_lines(f, 0.0, kPi / 180.0, 5, 0.95));
    CHECK_THROWS(hough_lines(f, 1.0, kPi / 180.0, 0, 0.95));
}

TEST_CASE("hough_lines rotation consistency") {
    // The same line content rotated by 90 degrees shifts theta by pi/2.
    GrayFrame h(64, 64, 0.0f), v(64, 64, 0.0f);
    for (int x = 0; x < 64; ++x) h.at(x, 20) = 1.0f;
    for (int y = 0; y < 64; ++y) v.at(20, y) = 1.0f;
    auto lh = hough_lines(h, 1.0, kPi / 180.0, 30, 0.95);
    auto lv = hough_lines(v, 1.0, kPi / 180.0, 30, 0.95);
    REQUIRE(!lh.empty());
    REQUIRE(!lv.empty());
    double d = std::abs(lh[0].theta - lv[0].theta);
    d = std::min(d, kPi - d);
    CHECK(d == doctest::Approx(kPi / 2).epsilon(0.02));
}

TEST_CASE("synthetic render: all four keyboard border lines appear") {
    auto perf = make_perf();
    auto bg = perf.background();
    Rect truth = perf.truth_bounds();
    auto lines = hough_lines(bg, 1.0, kPi / 180.0, 40, 0.95);
    auto has_h = [&](double y) {
        return std::any_of(lines.begin(), lines.end(), [&](const HoughLine &l) {
            return std::abs(l.theta - kPi / 2) < 2 * kPi / 180 && std::abs(l.rho - y) <= 2.0;
        });
    };
    auto has_v = [&](double x) {
        return std::any_of(lines.begin(), lines.end(), [&](const HoughLine &l) {
            return std::min(l.theta, kPi - l.theta) < 2 * kPi / 180 &&
                   std::abs(std::abs(l.rho) - x) <= 2.0;
        });
    };
    CHECK(has_h(truth.y0));
    CHECK(has_h(truth.y1));
    CHECK(has_v(truth.x0));
    CHECK(has_v(truth.x1));
}

TEST_CASE("find_keyboard_rect trivial bimodal frame") {
    GrayFrame f(40, 40);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x) f.at(x, y) = y < 20 ? 0.0f : 1.0f;
    std::vector<HoughLine> lines{{0.5, kPi / 2, 40},
                                 {38.5, kPi / 2, 40},
                                 {0.5, 0.0, 40},
                                 {38.5, 0.0, 40}};
    RectScoreConfig cfg;
    Rect r = find_keyboard_rect(f, lines, cfg);
    CHECK(r.x0 <= 1);
    CHECK(r.y0 <= 1);
    CHECK(r.x1 >= 38);
    CHECK(r.y1 >= 38);
}

TEST_CASE("find_keyboard_rect on synthetic render within 2 px of truth") {
    auto perf = make_perf();
    auto bg = perf.background();
    HoughConfig hc;
    RectScoreConfig sc;
    auto lines = hough_lines(bg, hc.rho_step, hc.theta_step, hc.threshold, hc.edge_percentile);
    Rect r = find_keyboard_rect(bg, lines, sc);
    Rect t = perf.truth_bounds();
    CHECK(std::abs(r.x0 - t.x0) <= 2);
    CHECK(std::abs(r.y0 - t.y0) <= 2);
    CHECK(std::abs(r.x1 - t.x1) <= 2);
    CHECK(std::abs(r.y1 - t.y1) <= 2);
}

TEST_CASE("find_keyboard_rect prefers the keyboard over a bright distractor") {
    auto perf = make_perf();
    auto bg = perf.background();
    // Bright slab above the keyboard: a candidate with no dark upper half.
    Rect distract{60, 1, 300, 12};
    for (int y = distract.y0; y < distract.y1; ++y)
        for (int x = distract.x0; x < distract.x1; ++x) bg.at(x, y) = 1.0f;
    RectScoreConfig sc;
    // Oracle: the distractor candidate must score strictly below the truth rect.
    CHECK(score_keyboard_rect(bg, perf.truth_bounds(), sc) >
          score_keyboard_rect(bg, distract, sc));
    HoughConfig hc;
    auto lines = hough_lines(bg, hc.rho_step, hc.theta_step, hc.threshold, hc.edge_percentile);
    Rect r = find_keyboard_rect(bg, lines, sc);
    Rect t = perf.truth_bounds();
    CHECK(rect_iou(r, t) > 0.9);
}

TEST_CASE("find_keyboard_rect fails cleanly without enough lines") {
    GrayFrame f(32, 32, 0.5f);
    CHECK_THROWS_WITH_AS(find_keyboard_rect(f, {}, RectScoreConfig{}),
                         doctest::Contains("keyboard not found"), std::runtime_error);
}

TEST_CASE("find_keyboard_rect invariant to global brightness scaling") {
    auto perf = make_perf();
    HoughConfig hc;
    RectScoreConfig sc;
    Rect base;
    bool first = true;
    for (double s : {0.8, 0.9, 1.0, 1.1, 1.2}) {
        auto bg = perf.background();
        for (auto &v : bg.data) v = std::min(1.0f, static_cast<float>(v * s));
        auto lines = hough_lines(bg, hc.rho_step, hc.theta_step, hc.threshold, hc.edge_percentile);
        Rect r = find_keyboard_rect(bg, lines, sc);
        if (first) {
            base = r;
            first = false;
        } else {
            CHECK(std::abs(r.x0 - base.x0) <= 1);
            CHECK(std::abs(r.y0 - base.y0) <= 1);
            CHECK(std::abs(r.x1 - base.x1) <= 1);
            CHECK(std::abs(r.y1 - base.y1) <= 1);
        }
    }
}

TEST_CASE("segment_keys two-octave counts and black pattern") {
    auto perf = make_perf();
    auto layout = segment_keys(perf.background(), perf.truth_bounds(), {60, 24});
    CHECK(layout.n_white == 14);
    CHECK(layout.n_black == 10);
    CHECK(layout.keys.size() == 24);
    // 2+3 black pattern per octave, starting at C.
    std::vector<int> black_midi;
    for (const auto &k : layout.keys)
        if (k.color == KeyColor::Black) black_midi.push_back(k.midi_note);
    CHECK(black_midi == std::vector<int>{61, 63, 66, 68, 70, 73, 75, 78, 80, 82});
    // Keys sorted by x; black boxes pairwise disjoint.
    for (size_t i = 0; i + 1 < layout.keys.size(); ++i)
        CHECK(layout.keys[i].x_begin() <= layout.keys[i + 1].x_begin());
    for (const auto &a : layout.keys)
        for (const auto &b : layout.keys)
            if (a.color == KeyColor::Black && b.color == KeyColor::Black && a.key_id != b.key_id)
                CHECK(rect_iou(a.box, b.box) == 0.0);
}

TEST_CASE("segment_keys 88-key render") {
    RenderConfig rc;
    rc.frame_width = 1280;
    rc.frame_height = 200;
    rc.layout = {21, 88};
    SynthPerformance perf({{60, 45, 60, 64}}, rc);
    auto layout = segment_keys(perf.background(), perf.truth_bounds(), {21, 88});
    CHECK(layout.n_white == 52);
    CHECK(layout.n_black == 36);
}

TEST_CASE("segment_keys black boxes IoU >= 0.8 against renderer truth") {
    auto perf = make_perf();
    auto layout = segment_keys(perf.background(), perf.truth_bounds(), {60, 24});
    auto truth = perf.truth_black_boxes();
    std::vector<Rect> found;
    for (const auto &k : layout.keys)
        if (k.color == KeyColor::Black) found.push_back(k.box);
    REQUIRE(found.size() == truth.size());
    for (size_t i = 0; i < found.size(); ++i) CHECK(rect_iou(found[i], truth[i]) >= 0.8);
}

TEST_CASE("segment_keys white lower rects tile the lower band") {
    auto perf = make_perf();
    auto layout = segment_keys(perf.background(), perf.truth_bounds(), {60, 24});
    std::vector<Rect> lowers;
    for (const auto &k : layout.keys)
        if (k.color == KeyColor::White) lowers.push_back(k.lower);
    std::sort(lowers.begin(), lowers.end(), [](const Rect &a, const Rect &b) { return a.x0 < b.x0; });
    CHECK(lowers.front().x0 == layout.bounds.x0);
    CHECK(lowers.back().x1 == layout.bounds.x1);
    for (size_t i = 0; i + 1 < lowers.size(); ++i)
        CHECK(std::abs(lowers[i].x1 - lowers[i + 1].x0) <= 1);
}

TEST_CASE("segment_keys mismatch error carries counts") {
    auto perf = make_perf();
    // Wrong spec: expect 15 black keys where the render has 10.
    CHECK_THROWS_WITH_AS(segment_keys(perf.background(), perf.truth_bounds(), {60, 36}),
                         doctest::Contains("segmentation mismatch"), std::runtime_error);
}

TEST_CASE("detect_keyboard composes the stages") {
    auto perf = make_perf();
    auto layout = detect_keyboard(perf.background(), {60, 24}, HoughConfig{}, RectScoreConfig{});
    CHECK(layout.n_white == 14);
    CHECK(layout.n_black == 10);
    CHECK(rect_iou(layout.bounds, perf.truth_bounds()) > 0.9);
}

TEST_CASE("layout file round-trip is exact") {
    auto perf = make_perf();
    auto layout = detect_keyboard(perf.background(), {60, 24}, HoughConfig{}, RectScoreConfig{});
    auto dir = std::filesystem::temp_directory_path() / "pianovis_geometry_test";
    std::filesystem::create_directories(dir);
    auto p1 = (dir / "layout.txt").string();
    auto p2 = (dir / "layout2.txt").string();
    write_layout(layout, p1);
    auto back = read_layout(p1);
    CHECK(back.bounds == layout.bounds);
    CHECK(back.n_white == layout.n_white);
    CHECK(back.n_black == layout.n_black);
    CHECK(back.black_row_split == layout.black_row_split);
    REQUIRE(back.keys.size() == layout.keys.size());
    for (size_t i = 0; i < back.keys.size(); ++i) {
        CHECK(back.keys[i].key_id == layout.keys[i].key_id);
        CHECK(back.keys[i].color == layout.keys[i].color);
        CHECK(back.keys[i].midi_note == layout.keys[i].midi_note);
        CHECK(back.keys[i].upper == layout.keys[i].upper);
        CHECK(back.keys[i].lower == layout.keys[i].lower);
        CHECK(back.keys[i].box == layout.keys[i].box);
    }
    write_layout(back, p2);
    std::ifstream a(p1), b(p2);
    std::string sa((std::istreambuf_iterator<char>(a)), {});
    std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
    std::filesystem::remove_all(dir);
}
