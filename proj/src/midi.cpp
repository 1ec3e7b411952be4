#include "pianovis/midi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <map>
#include <stdexcept>

namespace pianovis {

void validate_events(const std::vector<NoteEvent> &events) {
    for (const auto &e : events) {
        if (e.midi_note < 0 || e.midi_note > 127)
            throw std::invalid_argument("note out of MIDI range");
        if (e.velocity < 1 || e.velocity > 127)
            throw std::invalid_argument("velocity must be in [1,127]");
        if (e.on_frame >= e.off_frame) throw std::invalid_argument("on_frame must precede off_frame");
    }
    // Same-note overlap is ill-formed for this pipeline.
    std::map<int, std::vector<const NoteEvent *>> by_note;
    for (const auto &e : events) by_note[e.midi_note].push_back(&e);
    for (auto &[note, evs] : by_note) {
        std::sort(evs.begin(), evs.end(),
                  [](const NoteEvent *a, const NoteEvent *b) { return a->on_frame < b->on_frame; });
        for (size_t i = 1; i < evs.size(); ++i)
            if (evs[i]->on_frame < evs[i - 1]->off_frame)
                throw std::invalid_argument("overlapping events on note " + std::to_string(note));
    }
}

namespace {

void put_u32(std::string &out, uint32_t v) {
    out.push_back(static_cast<char>((v >> 24) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

void put_u16(std::string &out, uint16_t v) {
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

void put_varlen(std::string &out, uint32_t v) {
    char buf[4];
    int n = 0;
    buf[n++] = static_cast<char>(v & 0x7f);
    while ((v >>= 7) != 0) buf[n++] = static_cast<char>((v & 0x7f) | 0x80);
    while (n > 0) out.push_back(buf[--n]);
}

struct Reader {
    const std::string &bytes;
    size_t pos = 0;

    [[noreturn]] void fail(const std::string &msg) const {
        throw std::runtime_error("midi parse error at byte offset " + std::to_string(pos) + ": " +
                                 msg);
    }
    uint8_t u8() {
        if (pos >= bytes.size()) fail("unexpected end of file");
        return static_cast<uint8_t>(bytes[pos++]);
    }
    uint16_t u16() { return static_cast<uint16_t>(u8() << 8 | u8()); }
    uint32_t u32() {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | u8();
        return v;
    }
    uint32_t varlen() {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            uint8_t b = u8();
            v = (v << 7) | (b & 0x7f);
            if (!(b & 0x80)) return v;
        }
        fail("variable-length quantity too long");
    }
    void expect(const char *tag) {
        for (int i = 0; i < 4; ++i)
            if (u8() != static_cast<uint8_t>(tag[i])) {
                --pos;
                fail(std::string("expected chunk '") + tag + "'");
            }
    }
    void skip(size_t n) {
        if (pos + n > bytes.size()) fail("chunk overruns file");
        pos += n;
    }
};

} // namespace

void midi_write(const std::vector<NoteEvent> &events, const std::string &path, double fps) {
    if (fps <= 0) throw std::invalid_argument("midi_write: fps must be positive");
    validate_events(events);

    int division = std::max(1, static_cast<int>(std::lround(fps)));
    uint32_t tempo = static_cast<uint32_t>(std::lround(division * 1e6 / fps));

    struct Msg {
        long tick;
        int order; // offs before ons at the same tick
        uint8_t status, d1, d2;
    };
    std::vector<Msg> msgs;
    for (const auto &e : events) {
        msgs.push_back({e.on_frame, 1, 0x90, static_cast<uint8_t>(e.midi_note),
                        static_cast<uint8_t>(e.velocity)});
        msgs.push_back({e.off_frame, 0, 0x80, static_cast<uint8_t>(e.midi_note), 64});
    }
    std::sort(msgs.begin(), msgs.end(), [](const Msg &a, const Msg &b) {
        if (a.tick != b.tick) return a.tick < b.tick;
        if (a.order != b.order) return a.order < b.order;
        return a.d1 < b.d1;
    });

    std::string track;
    put_varlen(track, 0); // tempo meta at tick 0
    track += '\xff';
    track += '\x51';
    track += '\x03';
    track.push_back(static_cast<char>((tempo >> 16) & 0xff));
    track.push_back(static_cast<char>((tempo >> 8) & 0xff));
    track.push_back(static_cast<char>(tempo & 0xff));
    long cursor = 0;
    for (const auto &m : msgs) {
        put_varlen(track, static_cast<uint32_t>(m.tick - cursor));
        cursor = m.tick;
        track.push_back(static_cast<char>(m.status));
        track.push_back(static_cast<char>(m.d1));
        track.push_back(static_cast<char>(m.d2));
    }
    put_varlen(track, 0); // end of track
    track += '\xff';
    track += '\x2f';
    track += '\x00';

    std::string out;
    out += "MThd";
    put_u32(out, 6);
    put_u16(out, 0); // format 0
    put_u16(out, 1);
    put_u16(out, static_cast<uint16_t>(division));
    out += "MTrk";
    put_u32(out, static_cast<uint32_t>(track.size()));
    out += track;

    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("midi_write: cannot open " + path);
    os.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!os) throw std::runtime_error("midi_write: write failed on " + path);
}

std::vector<NoteEvent> midi_read(const std::string &path, double fps) {
    if (fps <= 0) throw std::invalid_argument("midi_read: fps must be positive");
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("midi_read: cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

    Reader r{bytes};
    r.expect("MThd");
    uint32_t hlen = r.u32();
    if (hlen < 6) r.fail("header chunk too short");
    uint16_t format = r.u16();
    if (format > 1) r.fail("unsupported SMF format " + std::to_string(format));
    uint16_t ntrks = r.u16();
    uint16_t division = r.u16();
    if (division == 0 || (division & 0x8000)) r.fail("unsupported division");
    r.skip(hlen - 6);

    std::vector<NoteEvent> events;
    for (int trk = 0; trk < ntrks; ++trk) {
        r.expect("MTrk");
        uint32_t tlen = r.u32();
        size_t track_end = r.pos + tlen;
        if (track_end > bytes.size()) r.fail("track overruns file");

        double tempo = 500000.0; // SMF default, microseconds per quarter
        double seconds = 0.0;
        uint8_t running = 0;
        std::map<int, std::deque<std::pair<int, int>>> open; // note -> (on_frame, velocity)
        bool ended = false;
        while (r.pos < track_end && !ended) {
            uint32_t delta = r.varlen();
            seconds += delta * tempo / (1e6 * division);
            int frame = static_cast<int>(std::lround(seconds * fps));

            uint8_t b = r.u8();
            uint8_t status;
            if (b & 0x80) {
                status = b;
            } else {
                if (!(running & 0x80)) r.fail("data byte without running status");
                status = running;
                --r.pos;
            }
            if (status == 0xff) {
                uint8_t type = r.u8();
                uint32_t len = r.varlen();
                if (type == 0x51 && len == 3) {
                    tempo = (r.u8() << 16) | (r.u8() << 8) | r.u8();
                    if (tempo <= 0) r.fail("zero tempo");
                } else {
                    if (type == 0x2f) ended = true;
                    r.skip(len);
                }
                running = 0;
                continue;
            }
            if (status == 0xf0 || status == 0xf7) {
                r.skip(r.varlen());
                running = 0;
                continue;
            }
            running = status;
            uint8_t hi = status & 0xf0;
            uint8_t d1 = r.u8();
            uint8_t d2 = (hi == 0xc0 || hi == 0xd0) ? 0 : r.u8();
            bool note_off = hi == 0x80 || (hi == 0x90 && d2 == 0);
            bool note_on = hi == 0x90 && d2 > 0;
            if (note_on) {
                open[d1].push_back({frame, d2});
            } else if (note_off) {
                auto it = open.find(d1);
                if (it == open.end() || it->second.empty())
                    r.fail("note-off without matching note-on for note " + std::to_string(d1));
                auto [on_frame, vel] = it->second.front();
                it->second.pop_front();
                NoteEvent e{d1, on_frame, frame, vel};
                if (e.off_frame <= e.on_frame) e.off_frame = e.on_frame + 1;
                events.push_back(e);
            }
        }
        for (const auto &[note, stack] : open)
            if (!stack.empty()) r.fail("unterminated note " + std::to_string(note));
        r.pos = track_end;
    }
    std::sort(events.begin(), events.end(), [](const NoteEvent &a, const NoteEvent &b) {
        if (a.on_frame != b.on_frame) return a.on_frame < b.on_frame;
        return a.midi_note < b.midi_note;
    });
    return events;
}

} // namespace pianovis
