#ifndef PIANOVIS_TRANSCRIBE_HPP
#define PIANOVIS_TRANSCRIBE_HPP

#include "pianovis/config.hpp"
#include "pianovis/dataset.hpp"
#include "pianovis/nn.hpp"

#include <functional>
#include <vector>

namespace pianovis {

struct TranscribeModels {
    nn::NetworkWeights onoff_white;
    nn::NetworkWeights onoff_black;
    nn::NetworkWeights intensity_white;
    nn::NetworkWeights intensity_black;
};

// Full pipeline over a frame sequence: per-key on/off predictions (debounced
// over 2 consecutive agreeing frames unless disabled) open and close note
// events; intensity is predicted once per onset, at the first frame with a
// complete stack window, and mapped to the bin-midpoint velocity.
std::vector<NoteEvent> transcribe(const std::function<GrayFrame(int)> &frame_at, int n_frames,
                                  const GrayFrame &background, const KeyboardLayout &layout,
                                  const TranscribeModels &models, const PipelineConfig &cfg);

} // namespace pianovis

#endif
