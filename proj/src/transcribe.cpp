#include "pianovis/transcribe.hpp"

#include "pianovis/features.hpp"
#include "pianovis/hand_region.hpp"
#include "pianovis/models.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace pianovis {

namespace {

struct KeyState {
    bool on = false;
    bool prev_raw = false;
    int on_frame = -1;
    int intensity = -1;
    std::map<int, FeatureVector> ring; // frame -> single vector
};

int argmax(const std::vector<double> &p) {
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

} // namespace

std::vector<NoteEvent> transcribe(const std::function<GrayFrame(int)> &frame_at, int n_frames,
                                  const GrayFrame &background, const KeyboardLayout &layout,
                                  const TranscribeModels &models, const PipelineConfig &cfg) {
    nn::Network onoff_w(models.onoff_white), onoff_b(models.onoff_black);
    nn::Network inten_w(models.intensity_white), inten_b(models.intensity_black);

    StackSchedule sched = StackSchedule::for_fps(cfg.fps);
    const int window = sched.stack5_offsets[0];

    std::map<int, KeyState> states;
    std::vector<NoteEvent> events;

    auto close_note = [&](const KeyRegion &key, KeyState &st, int off_frame) {
        int label = st.intensity >= 0 ? st.intensity : 2; // window never completed
        events.push_back({key.midi_note, st.on_frame, off_frame, intensity_to_velocity(label)});
        st.on = false;
        st.on_frame = -1;
        st.intensity = -1;
    };

    for (int f = 0; f < n_frames; ++f) {
        GrayFrame frame = frame_at(f);
        GrayFrame diff = difference(frame, background);
        HandColumnMask mask = detect_hand_columns(frame, background, layout.bounds, cfg.hand, f);

        for (const auto &key : layout.keys) {
            KeyState &st = states[key.key_id];
            auto fv = extract_key_feature(diff, key, mask, layout.bounds.x0, f);

            bool raw = false;
            if (fv) {
                auto &net = key.color == KeyColor::White ? onoff_w : onoff_b;
                raw = argmax(nn::predict(net, fv->payload)) == 1;
                st.ring[f] = std::move(*fv);
                while (!st.ring.empty() && st.ring.begin()->first < f - window)
                    st.ring.erase(st.ring.begin());
            }

            bool flip = cfg.debounce ? (raw == st.prev_raw && raw != st.on) : (raw != st.on);
            st.prev_raw = raw;
            if (flip) {
                if (raw) {
                    st.on = true;
                    st.on_frame = f;
                } else {
                    close_note(key, st, f);
                }
            }

            if (st.on && st.intensity < 0 && f >= window) {
                std::vector<const FeatureVector *> singles;
                bool complete = true;
                for (int off : sched.stack5_offsets) {
                    auto it = st.ring.find(f - off);
                    if (it == st.ring.end()) {
                        complete = false;
                        break;
                    }
                    singles.push_back(&it->second);
                }
                if (complete) {
                    FeatureVector stacked = build_stack5(singles);
                    auto &net = key.color == KeyColor::White ? inten_w : inten_b;
                    st.intensity = argmax(nn::predict(net, stacked.payload));
                }
            }
        }
    }
    for (const auto &key : layout.keys) {
        KeyState &st = states[key.key_id];
        if (st.on) close_note(key, st, n_frames);
    }

    std::sort(events.begin(), events.end(), [](const NoteEvent &a, const NoteEvent &b) {
        if (a.on_frame != b.on_frame) return a.on_frame < b.on_frame;
        return a.midi_note < b.midi_note;
    });
    return events;
}

} // namespace pianovis
