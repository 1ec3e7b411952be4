#ifndef PIANOVIS_GEOMETRY_HPP
#define PIANOVIS_GEOMETRY_HPP

#include "pianovis/imaging.hpp"

#include <string>
#include <vector>

namespace pianovis {

struct HoughLine {
    double rho = 0.0;   // signed distance from origin, pixels
    double theta = 0.0; // [0, pi)
    int votes = 0;
};

enum class KeyColor { White, Black };

struct KeyRegion {
    int key_id = 0;
    KeyColor color = KeyColor::White;
    int midi_note = 0;
    Rect upper; // white only
    Rect lower; // white only
    Rect box;   // black only

    // x-extent of the key within the frame.
    int x_begin() const { return color == KeyColor::White ? std::min(upper.x0, lower.x0) : box.x0; }
    int x_end() const { return color == KeyColor::White ? std::max(upper.x1, lower.x1) : box.x1; }
};

struct KeyboardLayout {
    int frame_width = 0; // dimensions of the frame the layout was detected in
    int frame_height = 0;
    Rect bounds;
    std::vector<KeyRegion> keys; // midi order == x order
    int n_white = 0;
    int n_black = 0;
    int black_row_split = 0; // y separating black-key zone from lower-white zone

    const KeyRegion *find_midi(int midi_note) const;
};

// Keyboard span: first MIDI note and total key count.
// An 88-key piano is {21, 88}; two octaves from middle C is {60, 24}.
struct LayoutSpec {
    int first_midi = 21;
    int n_keys = 88;
};

bool midi_is_black(int midi_note);
int count_white_keys(const LayoutSpec &spec);
int count_black_keys(const LayoutSpec &spec);

struct HoughConfig {
    double rho_step = 1.0;
    double theta_step = 0.017453292519943295; // 1 degree
    int threshold = 40;
    double edge_percentile = 0.95; // gradient-magnitude binarization cutoff
};

struct RectScoreConfig {
    double dark_cutoff = 0.3;   // after per-candidate min-max normalization
    double bright_cutoff = 0.6;
    double axis_tolerance = 0.17453292519943295; // +/- 10 degrees
    double min_area_fraction = 0.05;
};

// Edge extraction + accumulator voting + 3x3 non-maximum suppression,
// sorted by votes descending.
std::vector<HoughLine> hough_lines(const GrayFrame &f, double rho_step, double theta_step,
                                   int threshold, double edge_percentile = 0.95);

// Best-scoring rectangle among near-horizontal x near-vertical line pairs.
// Score = dark fraction of the upper half + bright fraction of the lower half,
// computed after min-max normalization inside the candidate.
Rect find_keyboard_rect(const GrayFrame &f, const std::vector<HoughLine> &lines,
                        const RectScoreConfig &cfg = {});

double score_keyboard_rect(const GrayFrame &f, const Rect &r, const RectScoreConfig &cfg = {});

KeyboardLayout segment_keys(const GrayFrame &f, const Rect &bounds, const LayoutSpec &spec);

// Full detection pipeline: hough_lines -> find_keyboard_rect -> segment_keys.
// A non-positive hough.threshold is auto-scaled from the frame size.
KeyboardLayout detect_keyboard(const GrayFrame &frame, const LayoutSpec &spec,
                               HoughConfig hough = {.threshold = 0},
                               const RectScoreConfig &score = {});

// Line-oriented text format; round-trips bit-exact.
void write_layout(const KeyboardLayout &layout, const std::string &path);
KeyboardLayout read_layout(const std::string &path);

} // namespace pianovis

#endif
