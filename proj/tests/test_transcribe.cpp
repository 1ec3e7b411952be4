#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pianovis/models.hpp"
#include "pianovis/synth.hpp"
#include "pianovis/transcribe.hpp"

#include <cmath>

using namespace pianovis;

namespace {

RenderConfig small_render() {
    RenderConfig rc;
    rc.frame_width = 240;
    rc.frame_height = 120;
    rc.layout = {60, 12}; // one octave: 7 white, 5 black
    return rc;
}

nn::NetworkWeights untrained(ModelKind kind) {
    nn::Network net(build_model(kind), 1);
    return net.snapshot();
}

std::vector<SampleRecord> filter_color(std::vector<SampleRecord> records, KeyColor color) {
    std::erase_if(records, [&](const SampleRecord &r) { return r.feature.color != color; });
    return records;
}

nn::NetworkWeights train_for(ModelKind kind, const std::vector<SampleRecord> &records,
                             int epochs) {
    std::vector<std::vector<float>> inputs;
    std::vector<int> labels;
    for (const auto &r : records) {
        inputs.push_back(r.feature.payload);
        labels.push_back(r.label);
    }
    auto cfg = model_recipe(kind);
    cfg.epochs = epochs;
    cfg.seed = 5;
    return nn::train(build_model(kind, 0.1), inputs, labels, cfg).weights;
}

} // namespace

TEST_CASE("empty performance transcribes to zero notes") {
    auto rc = small_render();
    SynthPerformance perf({}, rc);
    TranscribeModels models{
        untrained({ModelTask::OnOff, KeyColor::White}),
        untrained({ModelTask::OnOff, KeyColor::Black}),
        untrained({ModelTask::Intensity, KeyColor::White}),
        untrained({ModelTask::Intensity, KeyColor::Black}),
    };
    PipelineConfig cfg;
    cfg.layout = rc.layout;
    auto events = transcribe([&](int i) { return perf.render_frame(i); }, perf.frame_count(),
                             perf.background(), perf.truth_layout(), models, cfg);
    CHECK(events.empty());
}

TEST_CASE("single sustained note round-trips through the full pipeline") {
    auto rc = small_render();
    // Training performance: presses on several keys of both colors with a
    // spread of velocities.
    std::vector<NoteEvent> score;
    int t = 45;
    int i = 0;
    for (int midi : {60, 62, 61, 64, 63, 65, 67, 66, 69, 71, 70, 60}) {
        int vel = 20 + (i * 37) % 100;
        score.push_back({midi, t, t + 12, vel});
        t += 26;
        ++i;
    }
    SynthPerformance train_perf(score, rc);
    auto frame_at = [&](int f) { return train_perf.render_frame(f); };
    AlignConfig acfg;
    auto onoff = align(frame_at, train_perf.frame_count(), train_perf.background(), score,
                       train_perf.truth_layout(), SampleTask::OnOff, false, acfg);
    auto intensity = align(frame_at, train_perf.frame_count(), train_perf.background(), score,
                           train_perf.truth_layout(), SampleTask::Intensity, false, acfg);

    TranscribeModels models{
        train_for({ModelTask::OnOff, KeyColor::White},
                  filter_color(onoff.records, KeyColor::White), 6),
        train_for({ModelTask::OnOff, KeyColor::Black},
                  filter_color(onoff.records, KeyColor::Black), 6),
        train_for({ModelTask::Intensity, KeyColor::White},
                  filter_color(intensity.records, KeyColor::White), 4),
        train_for({ModelTask::Intensity, KeyColor::Black},
                  filter_color(intensity.records, KeyColor::Black), 4),
    };

    // Held-out single sustained note.
    std::vector<NoteEvent> solo{{62, 60, 95, 88}};
    SynthPerformance perf(solo, rc);
    PipelineConfig cfg;
    cfg.layout = rc.layout;
    auto events = transcribe([&](int f) { return perf.render_frame(f); }, perf.frame_count(),
                             perf.background(), perf.truth_layout(), models, cfg);
    REQUIRE(events.size() == 1);
    CHECK(events[0].midi_note == 62);
    CHECK(std::abs(events[0].on_frame - 60) <= 2);
    CHECK(std::abs(events[0].off_frame - 95) <= 2);
    // Velocity is a bin midpoint by construction.
    bool midpoint = false;
    for (int label = 0; label < 5; ++label)
        midpoint |= events[0].velocity == intensity_to_velocity(label);
    CHECK(midpoint);

    // Disabling debounce still finds the note (timing may differ slightly).
    PipelineConfig raw = cfg;
    raw.debounce = false;
    auto raw_events = transcribe([&](int f) { return perf.render_frame(f); }, perf.frame_count(),
                                 perf.background(), perf.truth_layout(), models, raw);
    REQUIRE(!raw_events.empty());
    CHECK(raw_events[0].midi_note == 62);

    // A black-key note exercises the second model pair.
    std::vector<NoteEvent> black_solo{{61, 60, 90, 64}};
    SynthPerformance bperf(black_solo, rc);
    auto bevents = transcribe([&](int f) { return bperf.render_frame(f); }, bperf.frame_count(),
                              bperf.background(), bperf.truth_layout(), models, cfg);
    REQUIRE(bevents.size() == 1);
    CHECK(bevents[0].midi_note == 61);
    CHECK(std::abs(bevents[0].on_frame - 60) <= 2);
    CHECK(std::abs(bevents[0].off_frame - 90) <= 2);
}
