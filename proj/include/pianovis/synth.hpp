#ifndef PIANOVIS_SYNTH_HPP
#define PIANOVIS_SYNTH_HPP

#include "pianovis/geometry.hpp"
#include "pianovis/imaging.hpp"
#include "pianovis/midi.hpp"

#include <cstdint>
#include <vector>

namespace pianovis {

struct RenderConfig {
    LayoutSpec layout{60, 24}; // two octaves from middle C
    int frame_width = 360;
    int frame_height = 160;
    Rect keyboard; // zero rect -> centered with default margins
    float desk_level = 0.40f;
    float bezel_level = 0.05f; // dark case ring around the key bed
    int bezel_px = 3;
    float white_level = 0.80f;
    float black_level = 0.10f;
    float press_darkening = 0.25f;
    float hand_level = 0.55f;
    float brightness = 1.0f; // global scale applied before noise
    float noise_sigma = 0.02f;
    double fps = 30.0;
    int hover_frames = 16; // hand idles near the keyboard front before approaching
    int release_frames = 6;
    uint64_t seed = 1;
};

// Frames-per-approach decreases with velocity: hard presses come in fast.
int approach_frames(int velocity);

// Deterministic synthetic keyboard performance with exact ground truth.
// Frames are rendered on demand (random access) so long scores never need
// to be held in memory.
class SynthPerformance {
public:
    SynthPerformance(std::vector<NoteEvent> score, RenderConfig cfg);

    const RenderConfig &config() const { return cfg_; }
    const std::vector<NoteEvent> &events() const { return score_; }
    const KeyboardLayout &truth_layout() const { return layout_; }
    const Rect &truth_bounds() const { return layout_.bounds; }
    std::vector<Rect> truth_black_boxes() const;

    int frame_count() const { return n_frames_; }
    // Clean hands-free render, no noise; the differencing background.
    const GrayFrame &background() const { return base_; }
    GrayFrame render_frame(int index) const;

    // Writes frame_000001.pgm ... under dir.
    void write_frames(const std::string &dir) const;

private:
    RenderConfig cfg_;
    std::vector<NoteEvent> score_;
    KeyboardLayout layout_;
    GrayFrame base_;
    int n_frames_ = 0;
};

} // namespace pianovis

#endif
