#ifndef PIANOVIS_DATASET_HPP
#define PIANOVIS_DATASET_HPP

#include "pianovis/features.hpp"
#include "pianovis/geometry.hpp"
#include "pianovis/hand_region.hpp"
#include "pianovis/midi.hpp"

#include <functional>
#include <string>
#include <vector>

namespace pianovis {

enum class SampleTask { OnOff, Intensity };

struct SampleRecord {
    FeatureVector feature;
    int label = 0; // onoff: {0,1}; intensity: {0..4}
    SampleTask task = SampleTask::OnOff;
};

struct DatasetStats {
    std::vector<size_t> per_label;
    size_t total = 0;
};

// Equal-width bins over velocity [1,127], edges {26, 51, 76, 102}.
int velocity_to_intensity(int velocity);
// Representative (midpoint) velocity for a bin, for transcription output.
int intensity_to_velocity(int label);
// Quantile alternative: edges from the observed velocity distribution.
std::vector<int> quantile_velocity_edges(std::vector<int> velocities);
int velocity_to_intensity(int velocity, const std::vector<int> &edges);

struct AlignConfig {
    double fps = 30.0;
    HandDetectConfig hand;
    FlowStackConfig flow;
};

struct AlignResult {
    std::vector<SampleRecord> records;
    size_t skipped_incomplete = 0; // frames whose stack window was not fully available
};

// Frame-ordered pass over the video: per frame, difference against the
// background, hand-column gating, per-key feature extraction, and labeling
// against the event list. OnOff emits single vectors; Intensity emits stack5
// (flowstack=false) or flowstack5 (flowstack=true) samples for frames inside
// a sounding event.
AlignResult align(const std::function<GrayFrame(int)> &frame_at, int n_frames,
                  const GrayFrame &background, const std::vector<NoteEvent> &events,
                  const KeyboardLayout &layout, SampleTask task, bool flowstack,
                  const AlignConfig &cfg);

// Binary container: text header (task, color, kind, count, payload length)
// followed by per-record key id / frame index / label and the little-endian
// float payload. Round-trips byte-exact.
void dataset_save(const std::vector<SampleRecord> &records, const std::string &path);
std::vector<SampleRecord> dataset_load(const std::string &path);

DatasetStats dataset_stats(const std::vector<SampleRecord> &records);

} // namespace pianovis

#endif
