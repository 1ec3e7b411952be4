#include "pianovis/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace pianovis {

int velocity_to_intensity(int velocity) {
    static const std::vector<int> edges{26, 51, 76, 102};
    return velocity_to_intensity(velocity, edges);
}

int velocity_to_intensity(int velocity, const std::vector<int> &edges) {
    if (velocity < 1 || velocity > 127)
        throw std::invalid_argument("velocity_to_intensity: velocity out of [1,127]");
    int label = 0;
    for (int e : edges)
        if (velocity >= e) ++label;
    return label;
}

int intensity_to_velocity(int label) {
    // Bin midpoints of [1,26), [26,51), [51,76), [76,102), [102,127].
    static const int mid[5] = {13, 38, 63, 88, 114};
    if (label < 0 || label > 4)
        throw std::invalid_argument("intensity_to_velocity: label out of [0,4]");
    return mid[label];
}

std::vector<int> quantile_velocity_edges(std::vector<int> velocities) {
    if (velocities.empty())
        throw std::invalid_argument("quantile_velocity_edges: empty velocity list");
    std::sort(velocities.begin(), velocities.end());
    std::vector<int> edges;
    for (int q = 1; q <= 4; ++q) {
        size_t i = std::min(velocities.size() - 1, q * velocities.size() / 5);
        edges.push_back(velocities[i]);
    }
    return edges;
}

AlignResult align(const std::function<GrayFrame(int)> &frame_at, int n_frames,
                  const GrayFrame &background, const std::vector<NoteEvent> &events,
                  const KeyboardLayout &layout, SampleTask task, bool flowstack,
                  const AlignConfig &cfg) {
    if (cfg.fps <= 0) throw std::invalid_argument("align: fps must be positive");
    validate_events(events);
    for (const auto &e : events)
        if (!layout.find_midi(e.midi_note))
            throw std::invalid_argument("align: note " + std::to_string(e.midi_note) +
                                        " not present in layout");

    StackSchedule sched = StackSchedule::for_fps(cfg.fps);
    const bool temporal = task == SampleTask::Intensity;
    const int window = temporal ? (flowstack ? sched.flow_offsets[0] : sched.stack5_offsets[0]) : 0;

    // Per-key ring of recent single vectors, keyed by frame index.
    std::map<int, std::map<int, FeatureVector>> history;

    AlignResult result;
    for (int f = 0; f < n_frames; ++f) {
        GrayFrame frame = frame_at(f);
        GrayFrame diff = difference(frame, background);
        HandColumnMask mask = detect_hand_columns(frame, background, layout.bounds, cfg.hand, f);

        for (const auto &key : layout.keys) {
            auto fv = extract_key_feature(diff, key, mask, layout.bounds.x0, f);
            if (!fv) continue;

            if (!temporal) {
                bool on = false;
                for (const auto &e : events)
                    if (e.midi_note == key.midi_note && e.sounding_at(f)) on = true;
                result.records.push_back({std::move(*fv), on ? 1 : 0, SampleTask::OnOff});
                continue;
            }

            auto &ring = history[key.key_id];
            ring[f] = std::move(*fv);
            while (!ring.empty() && ring.begin()->first < f - window) ring.erase(ring.begin());

            const NoteEvent *ev = nullptr;
            for (const auto &e : events)
                if (e.midi_note == key.midi_note && e.sounding_at(f)) ev = &e;
            if (!ev) continue;
            if (f < window) continue; // earlier than the stack window

            std::vector<const FeatureVector *> singles;
            bool complete = true;
            auto offsets_begin = flowstack ? sched.flow_offsets.data() : sched.stack5_offsets.data();
            int n_off = flowstack ? 6 : 5;
            for (int i = 0; i < n_off; ++i) {
                auto it = ring.find(f - offsets_begin[i]);
                if (it == ring.end()) {
                    complete = false;
                    break;
                }
                singles.push_back(&it->second);
            }
            if (!complete) {
                ++result.skipped_incomplete;
                continue;
            }
            FeatureVector stacked =
                flowstack ? build_flowstack5(singles, cfg.flow) : build_stack5(singles);
            result.records.push_back(
                {std::move(stacked), velocity_to_intensity(ev->velocity), SampleTask::Intensity});
        }
    }
    return result;
}

namespace {

const char *task_name(SampleTask t) { return t == SampleTask::OnOff ? "onoff" : "intensity"; }
const char *color_name(KeyColor c) { return c == KeyColor::White ? "white" : "black"; }
const char *kind_name(FeatureKind k) {
    switch (k) {
    case FeatureKind::Single: return "single";
    case FeatureKind::Stack5: return "stack5";
    case FeatureKind::FlowStack5: return "flowstack5";
    }
    return "?";
}

void write_i32_le(std::ostream &os, int32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b, 4);
}

int32_t read_i32_le(std::istream &is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char *>(b), 4);
    if (!is) throw std::runtime_error("dataset_load: truncated record");
    return static_cast<int32_t>(static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
                                (static_cast<uint32_t>(b[2]) << 16) |
                                (static_cast<uint32_t>(b[3]) << 24));
}

} // namespace

void dataset_save(const std::vector<SampleRecord> &records, const std::string &path) {
    if (records.empty()) throw std::invalid_argument("dataset_save: empty record list");
    const auto &first = records.front();
    size_t payload_len = first.feature.payload.size();
    for (const auto &r : records) {
        if (r.task != first.task || r.feature.color != first.feature.color ||
            r.feature.kind != first.feature.kind)
            throw std::invalid_argument("dataset_save: records must share task/color/kind");
        if (r.feature.payload.size() != payload_len)
            throw std::invalid_argument("dataset_save: inhomogeneous payload lengths");
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("dataset_save: cannot open " + path);
    os << "PVDS 1 " << task_name(first.task) << " " << color_name(first.feature.color) << " "
       << kind_name(first.feature.kind) << " " << records.size() << " " << payload_len << "\n";
    for (const auto &r : records) {
        write_i32_le(os, r.feature.key_id);
        write_i32_le(os, r.feature.frame_index);
        write_i32_le(os, r.label);
        for (float v : r.feature.payload) {
            uint32_t bits;
            std::memcpy(&bits, &v, 4);
            write_i32_le(os, static_cast<int32_t>(bits));
        }
    }
    if (!os) throw std::runtime_error("dataset_save: write failed on " + path);
}

std::vector<SampleRecord> dataset_load(const std::string &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("dataset_load: cannot open " + path);
    std::string magic, task, color, kind;
    int version = 0;
    size_t count = 0, payload_len = 0;
    if (!(is >> magic >> version >> task >> color >> kind >> count >> payload_len) ||
        magic != "PVDS" || version != 1)
        throw std::runtime_error("dataset_load: malformed header in " + path);
    is.get(); // newline

    SampleTask t;
    if (task == "onoff")
        t = SampleTask::OnOff;
    else if (task == "intensity")
        t = SampleTask::Intensity;
    else
        throw std::runtime_error("dataset_load: unknown task " + task);
    KeyColor c;
    if (color == "white")
        c = KeyColor::White;
    else if (color == "black")
        c = KeyColor::Black;
    else
        throw std::runtime_error("dataset_load: unknown color " + color);
    FeatureKind k;
    if (kind == "single")
        k = FeatureKind::Single;
    else if (kind == "stack5")
        k = FeatureKind::Stack5;
    else if (kind == "flowstack5")
        k = FeatureKind::FlowStack5;
    else
        throw std::runtime_error("dataset_load: unknown kind " + kind);
    if (payload_len != expected_payload_length(c, k))
        throw std::runtime_error("dataset_load: payload length " + std::to_string(payload_len) +
                                 " does not match " + color + "/" + kind);

    std::vector<SampleRecord> records;
    records.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        SampleRecord r;
        r.task = t;
        r.feature.color = c;
        r.feature.kind = k;
        r.feature.key_id = read_i32_le(is);
        r.feature.frame_index = read_i32_le(is);
        r.label = read_i32_le(is);
        r.feature.payload.resize(payload_len);
        for (auto &v : r.feature.payload) {
            uint32_t bits = static_cast<uint32_t>(read_i32_le(is));
            std::memcpy(&v, &bits, 4);
        }
        records.push_back(std::move(r));
    }
    return records;
}

DatasetStats dataset_stats(const std::vector<SampleRecord> &records) {
    DatasetStats s;
    for (const auto &r : records) {
        if (r.label >= static_cast<int>(s.per_label.size())) s.per_label.resize(r.label + 1, 0);
        ++s.per_label[r.label];
        ++s.total;
    }
    return s;
}

} // namespace pianovis
