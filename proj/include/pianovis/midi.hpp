#ifndef PIANOVIS_MIDI_HPP
#define PIANOVIS_MIDI_HPP

#include <string>
#include <vector>

namespace pianovis {

// One note with frame-indexed timing; off_frame is exclusive.
struct NoteEvent {
    int midi_note = 60;
    int on_frame = 0;
    int off_frame = 0;
    int velocity = 64; // 1..127

    bool sounding_at(int frame) const { return frame >= on_frame && frame < off_frame; }
    bool operator==(const NoteEvent &o) const = default;
};

void validate_events(const std::vector<NoteEvent> &events);

// Standard MIDI File type 0 subset: note-on/note-off plus one tempo event.
// Timing is frame-quantized: division = fps ticks per quarter at a
// one-second quarter, so one tick is one frame. Write->read round-trips
// exactly, and read->write is byte-identical for files this writer produced.
void midi_write(const std::vector<NoteEvent> &events, const std::string &path, double fps);
std::vector<NoteEvent> midi_read(const std::string &path, double fps);

} // namespace pianovis

#endif
