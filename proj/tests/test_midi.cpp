#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pianovis/midi.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

using namespace pianovis;

namespace {

std::filesystem::path tmp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "pianovis_midi_test";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::string &path) {
    std::ifstream is(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)), {});
}

void spit(const std::string &path, const std::string &bytes) {
    std::ofstream os(path, std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

} // namespace

TEST_CASE("validate_events rules") {
    CHECK_NOTHROW(validate_events({{60, 0, 10, 64}, {60, 10, 20, 64}})); // touching is fine
    CHECK_THROWS(validate_events({{60, 10, 10, 64}}));                   // empty interval
    CHECK_THROWS(validate_events({{60, 0, 10, 0}}));                     // velocity 0
    CHECK_THROWS(validate_events({{60, 0, 10, 128}}));
    CHECK_THROWS(validate_events({{128, 0, 10, 64}}));
    CHECK_THROWS(validate_events({{60, 0, 10, 64}, {60, 5, 15, 64}})); // same-note overlap
    CHECK_NOTHROW(validate_events({{60, 0, 10, 64}, {62, 5, 15, 64}})); // different notes overlap
}

TEST_CASE("empty event list round-trips") {
    auto p = (tmp_dir() / "empty.mid").string();
    midi_write({}, p, 30.0);
    auto events = midi_read(p, 30.0);
    CHECK(events.empty());
}

TEST_CASE("single note round-trips identically") {
    auto p = (tmp_dir() / "one.mid").string();
    std::vector<NoteEvent> in{{60, 0, 30, 64}};
    midi_write(in, p, 30.0);
    CHECK(midi_read(p, 30.0) == in);
}

TEST_CASE("polyphonic score round-trips; write->read->write is byte-identical") {
    auto p1 = (tmp_dir() / "a.mid").string();
    auto p2 = (tmp_dir() / "b.mid").string();
    std::vector<NoteEvent> in{
        {60, 5, 40, 1},   {64, 5, 38, 127}, {67, 12, 60, 90},
        {60, 45, 70, 33}, {72, 50, 52, 101},
    };
    midi_write(in, p1, 30.0);
    auto back = midi_read(p1, 30.0);
    CHECK(back == in);
    midi_write(back, p2, 30.0);
    CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("note-on with velocity zero acts as note-off") {
    // Hand-built SMF: division 30, note-on (vel 64) at 0, then running-status
    // note-on vel 0 at delta 12.
    std::string bytes;
    auto be16 = [&](int v) {
        bytes.push_back(static_cast<char>(v >> 8));
        bytes.push_back(static_cast<char>(v & 0xff));
    };
    bytes += "MThd";
    bytes += std::string{0, 0, 0, 6};
    be16(0); // format 0
    be16(1); // one track
    be16(30);
    std::string track;
    // Tempo: 1,000,000 us per quarter, so 1 tick = 1 frame at division 30.
    track += std::string{0x00, static_cast<char>(0xff), 0x51, 0x03, 0x0f, 0x42, 0x40};
    track += std::string{0x00, static_cast<char>(0x90), 0x3c, 0x40}; // on, note 60, vel 64
    track += std::string{0x0c, 0x3c, 0x00};                          // running status, vel 0
    track += std::string{0x00, static_cast<char>(0xff), 0x2f, 0x00}; // end of track
    bytes += "MTrk";
    bytes.push_back(0);
    bytes.push_back(0);
    bytes.push_back(0);
    bytes.push_back(static_cast<char>(track.size()));
    bytes += track;
    auto p = (tmp_dir() / "vel0.mid").string();
    spit(p, bytes);
    auto events = midi_read(p, 30.0);
    REQUIRE(events.size() == 1);
    CHECK(events[0].midi_note == 60);
    CHECK(events[0].on_frame == 0);
    CHECK(events[0].off_frame == 12);
}

TEST_CASE("malformed input reports a byte offset") {
    auto p = (tmp_dir() / "bad.mid").string();
    spit(p, "MThx garbage");
    try {
        midi_read(p, 30.0);
        FAIL("expected parse error");
    } catch (const std::exception &e) {
        std::string msg = e.what();
        CHECK(msg.find("offset") != std::string::npos);
    }

    // Truncated track payload.
    auto good = (tmp_dir() / "good.mid").string();
    midi_write({{60, 0, 10, 64}}, good, 30.0);
    auto bytes = slurp(good);
    spit(p, bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS(midi_read(p, 30.0));
}

TEST_CASE("fps controls tick quantization consistently") {
    auto p = (tmp_dir() / "fps.mid").string();
    std::vector<NoteEvent> in{{72, 7, 19, 80}};
    for (double fps : {15.0, 30.0, 60.0}) {
        midi_write(in, p, fps);
        CHECK(midi_read(p, fps) == in);
    }
}

TEST_CASE("events come back sorted by onset") {
    auto p = (tmp_dir() / "sort.mid").string();
    std::vector<NoteEvent> in{{70, 50, 60, 10}, {60, 5, 30, 99}, {65, 20, 40, 50}};
    midi_write(in, p, 30.0);
    auto back = midi_read(p, 30.0);
    REQUIRE(back.size() == 3);
    CHECK(back[0].on_frame == 5);
    CHECK(back[1].on_frame == 20);
    CHECK(back[2].on_frame == 50);
}
