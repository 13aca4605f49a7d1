#pragma once

#include "m2a/common.hpp"
#include "m2a/matrix.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <tuple>
#include <vector>

namespace m2a {

struct NoteEvent {
  int pitch = 0;       // [0, 127]
  double onset = 0.0;  // seconds
  double offset = 0.0; // seconds, > onset
  int velocity = 0;    // [1, 127]

  bool operator==(const NoteEvent&) const = default;
};

/// Controller 64 (sustain pedal) change.
struct PedalEvent {
  double time = 0.0;
  int value = 0; // >= 64 means down
};

struct NoteSequence {
  std::vector<NoteEvent> notes; // sorted by (onset, pitch, offset, velocity)
  double duration = 0.0;        // >= max offset
  int ticks_per_quarter = 0;
  std::vector<PedalEvent> sustain_events;
  int unmatched_note_ons = 0; // note-ons closed at end of track
  int dropped_notes = 0;      // zero-length after tick resolution
};

struct FrameSpec {
  double sample_rate = 24000.0;
  std::size_t hop = 288;              // 12 ms at 24 kHz
  std::size_t frames_per_chunk = 800; // 9.6 s at the default hop

  void validate() const
  {
    if (sample_rate <= 0.0) throw InputError("frame spec: sample_rate must be > 0");
    if (hop < 1) throw InputError("frame spec: hop must be >= 1");
    if (frames_per_chunk < 1) throw InputError("frame spec: frames_per_chunk must be >= 1");
  }

  double frame_period() const { return static_cast<double>(hop) / sample_rate; }
};

/// Frames x 128 matrix of normalized velocities in [0, 1]. Rows past
/// valid_frames are zero padding.
struct PianoRoll {
  Matrix values;
  FrameSpec frame_spec;
  std::size_t valid_frames = 0;
};

struct Segment {
  double start = 0.0;
  double end = 0.0;
  std::vector<std::size_t> note_indices;
};

// ---------------------------------------------------------------------------
// Standard MIDI File parsing (formats 0 and 1)
// ---------------------------------------------------------------------------

namespace smf {

struct Reader {
  const std::uint8_t* p;
  const std::uint8_t* end;

  std::size_t remaining() const { return static_cast<std::size_t>(end - p); }

  std::uint8_t u8(const char* what)
  {
    if (p >= end) throw InputError(std::string("midi: truncated ") + what);
    return *p++;
  }

  std::uint32_t u16be(const char* what)
  {
    std::uint32_t hi = u8(what), lo = u8(what);
    return (hi << 8) | lo;
  }

  std::uint32_t u32be(const char* what)
  {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | u8(what);
    return v;
  }

  /// Variable-length quantity, at most 4 bytes per the SMF spec.
  std::uint32_t vlq(const char* what)
  {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const std::uint8_t b = u8(what);
      v = (v << 7) | (b & 0x7f);
      if (!(b & 0x80)) return v;
    }
    throw InputError(std::string("midi: overlong varint in ") + what);
  }

  void skip(std::size_t n, const char* what)
  {
    if (remaining() < n) throw InputError(std::string("midi: truncated ") + what);
    p += n;
  }

  bool expect_tag(const char* tag)
  {
    if (remaining() < 4) return false;
    for (int i = 0; i < 4; ++i)
      if (p[i] != static_cast<std::uint8_t>(tag[i])) return false;
    p += 4;
    return true;
  }
};

struct TickNote {
  int pitch;
  std::uint64_t on_tick;
  std::uint64_t off_tick;
  int velocity;
};

struct TempoEvent {
  std::uint64_t tick;
  double usec_per_quarter;
};

/// Piecewise-linear tick-to-seconds map from set-tempo meta events.
class TempoMap {
public:
  explicit TempoMap(std::vector<TempoEvent> events, int ticks_per_quarter)
      : tpq_(static_cast<double>(ticks_per_quarter))
  {
    std::stable_sort(events.begin(), events.end(),
                     [](const TempoEvent& a, const TempoEvent& b) { return a.tick < b.tick; });
    // later event at the same tick wins
    anchors_.push_back({0, 0.0, 500000.0}); // 120 BPM default
    for (const TempoEvent& e : events) {
      const Anchor& last = anchors_.back();
      const double sec = last.seconds + static_cast<double>(e.tick - last.tick) *
                                            last.usec_per_quarter / (tpq_ * 1e6);
      if (e.tick == anchors_.back().tick)
        anchors_.back().usec_per_quarter = e.usec_per_quarter;
      else
        anchors_.push_back({e.tick, sec, e.usec_per_quarter});
    }
  }

  double seconds(std::uint64_t tick) const
  {
    // anchors are few; linear scan from the back
    for (std::size_t i = anchors_.size(); i-- > 0;) {
      const Anchor& a = anchors_[i];
      if (tick >= a.tick)
        return a.seconds +
               static_cast<double>(tick - a.tick) * a.usec_per_quarter / (tpq_ * 1e6);
    }
    return 0.0;
  }

private:
  struct Anchor {
    std::uint64_t tick;
    double seconds;
    double usec_per_quarter;
  };
  std::vector<Anchor> anchors_;
  double tpq_;
};

} // namespace smf

/// Parse an SMF format 0 or 1 byte stream into tempo-resolved note events.
/// Note-on with velocity 0 closes like a note-off; note-ons left open at end
/// of track are closed there and counted in unmatched_note_ons.
inline NoteSequence parse_midi(const std::vector<std::uint8_t>& bytes)
{
  smf::Reader r{bytes.data(), bytes.data() + bytes.size()};

  if (!r.expect_tag("MThd")) throw InputError("midi: missing MThd header chunk");
  const std::uint32_t hlen = r.u32be("header length");
  if (hlen < 6) throw InputError("midi: malformed MThd length");
  const std::uint32_t format = r.u16be("header format");
  const std::uint32_t ntrks = r.u16be("header track count");
  const std::uint32_t division = r.u16be("header division");
  r.skip(hlen - 6, "header");
  if (format > 1) throw InputError("midi: unsupported SMF format " + std::to_string(format));
  if (division & 0x8000) throw InputError("midi: SMPTE division is not supported");
  if (division == 0) throw InputError("midi: zero ticks per quarter");
  if (format == 0 && ntrks != 1) throw InputError("midi: format 0 requires one track");

  std::vector<smf::TickNote> tick_notes;
  std::vector<smf::TempoEvent> tempo_events;
  std::vector<std::pair<std::uint64_t, int>> pedal_ticks;
  int unmatched = 0;

  for (std::uint32_t trk = 0; trk < ntrks; ++trk) {
    if (!r.expect_tag("MTrk")) throw InputError("midi: missing MTrk chunk");
    const std::uint32_t tlen = r.u32be("track length");
    if (r.remaining() < tlen) throw InputError("midi: truncated track");
    smf::Reader tr{r.p, r.p + tlen};
    r.skip(tlen, "track");

    std::uint64_t tick = 0;
    std::uint8_t running = 0;
    // open note-ons per (channel, pitch); FIFO so overlapping re-strikes pair
    // with the earliest unmatched on
    std::map<int, std::deque<std::pair<std::uint64_t, int>>> open;
    bool ended = false;

    auto close_note = [&](int key, int pitch, std::uint64_t off_tick) {
      auto it = open.find(key);
      if (it == open.end() || it->second.empty()) return false;
      auto [on_tick, vel] = it->second.front();
      it->second.pop_front();
      tick_notes.push_back({pitch, on_tick, off_tick, vel});
      return true;
    };

    while (!ended && tr.p < tr.end) {
      tick += tr.vlq("delta time");
      std::uint8_t status = tr.u8("event status");
      std::uint8_t first_data = 0;
      bool have_first = false;
      if (status & 0x80) {
        if (status < 0xf0) running = status;
      } else {
        if (!running) throw InputError("midi: data byte without running status");
        first_data = status;
        have_first = true;
        status = running;
      }

      if (status == 0xff) {
        const std::uint8_t type = tr.u8("meta type");
        const std::uint32_t len = tr.vlq("meta length");
        if (type == 0x2f) {
          tr.skip(len, "end of track");
          ended = true;
        } else if (type == 0x51) {
          if (len != 3) throw InputError("midi: malformed set-tempo event");
          std::uint32_t us = 0;
          for (int i = 0; i < 3; ++i) us = (us << 8) | tr.u8("tempo");
          tempo_events.push_back({tick, static_cast<double>(us)});
        } else {
          tr.skip(len, "meta event");
        }
        continue;
      }
      if (status == 0xf0 || status == 0xf7) {
        running = 0;
        tr.skip(tr.vlq("sysex length"), "sysex event");
        continue;
      }
      if (status < 0x80) throw InputError("midi: invalid status byte");

      const int kind = status >> 4;
      const int channel = status & 0x0f;
      auto data1 = [&] { return have_first ? first_data : tr.u8("event data"); };
      switch (kind) {
      case 0x9: { // note on
        const int pitch = data1() & 0x7f;
        const int vel = tr.u8("note velocity") & 0x7f;
        const int key = (channel << 8) | pitch;
        if (vel > 0)
          open[key].push_back({tick, vel});
        else
          close_note(key, pitch, tick);
        break;
      }
      case 0x8: { // note off
        const int pitch = data1() & 0x7f;
        tr.u8("note-off velocity");
        close_note((channel << 8) | pitch, pitch, tick);
        break;
      }
      case 0xb: { // controller
        const int cc = data1() & 0x7f;
        const int value = tr.u8("controller value") & 0x7f;
        if (cc == 64) pedal_ticks.push_back({tick, value});
        break;
      }
      case 0xa:
      case 0xe:
        data1();
        tr.u8("event data");
        break;
      case 0xc:
      case 0xd:
        data1();
        break;
      default:
        throw InputError("midi: unexpected status byte");
      }
    }

    for (auto& [key, stack] : open) {
      for (auto [on_tick, vel] : stack) {
        tick_notes.push_back({key & 0xff, on_tick, tick, vel});
        ++unmatched;
      }
    }
  }

  const smf::TempoMap tempo(std::move(tempo_events), static_cast<int>(division));

  NoteSequence seq;
  seq.ticks_per_quarter = static_cast<int>(division);
  seq.unmatched_note_ons = unmatched;
  for (const smf::TickNote& tn : tick_notes) {
    NoteEvent ev;
    ev.pitch = tn.pitch;
    ev.onset = tempo.seconds(tn.on_tick);
    ev.offset = tempo.seconds(tn.off_tick);
    ev.velocity = std::max(tn.velocity, 1);
    if (!(ev.offset > ev.onset)) {
      ++seq.dropped_notes;
      continue;
    }
    seq.notes.push_back(ev);
  }
  std::sort(seq.notes.begin(), seq.notes.end(), [](const NoteEvent& a, const NoteEvent& b) {
    return std::tie(a.onset, a.pitch, a.offset, a.velocity) <
           std::tie(b.onset, b.pitch, b.offset, b.velocity);
  });
  for (const NoteEvent& n : seq.notes) seq.duration = std::max(seq.duration, n.offset);
  for (auto [tick, value] : pedal_ticks)
    seq.sustain_events.push_back({tempo.seconds(tick), value});
  std::stable_sort(seq.sustain_events.begin(), seq.sustain_events.end(),
                   [](const PedalEvent& a, const PedalEvent& b) { return a.time < b.time; });
  return seq;
}

// ---------------------------------------------------------------------------
// Piano roll
// ---------------------------------------------------------------------------

namespace detail {

/// Sustain intervals [down, up) where controller 64 is at or above 64; an
/// unreleased pedal extends to +infinity.
inline std::vector<std::pair<double, double>> pedal_intervals(const NoteSequence& seq)
{
  std::vector<std::pair<double, double>> out;
  bool down = false;
  double down_at = 0.0;
  for (const PedalEvent& e : seq.sustain_events) {
    if (!down && e.value >= 64) {
      down = true;
      down_at = e.time;
    } else if (down && e.value < 64) {
      down = false;
      out.push_back({down_at, e.time});
    }
  }
  if (down) out.push_back({down_at, std::numeric_limits<double>::infinity()});
  return out;
}

} // namespace detail

/// A note occupies frames floor(onset/Tf) .. ceil(offset/Tf)-1 at value
/// velocity/127; a later onset overwrites an earlier note on the same pitch.
/// With sustain enabled, offsets extend to the pedal release.
inline PianoRoll to_piano_roll(const NoteSequence& seq, const FrameSpec& spec,
                               bool sustain = false)
{
  spec.validate();
  const double tf = spec.frame_period();

  std::vector<std::pair<double, double>> pedals;
  if (sustain) pedals = detail::pedal_intervals(seq);

  double span = seq.duration;
  std::vector<double> offsets(seq.notes.size());
  for (std::size_t i = 0; i < seq.notes.size(); ++i) {
    double off = seq.notes[i].offset;
    for (const auto& [down, up] : pedals)
      if (off > down && off < up) {
        off = std::isinf(up) ? std::max(seq.duration, off) : up;
        break;
      }
    offsets[i] = off;
    span = std::max(span, off);
  }

  const std::size_t frames = static_cast<std::size_t>(std::ceil(span / tf - 1e-9));
  PianoRoll roll;
  roll.frame_spec = spec;
  roll.valid_frames = frames;
  roll.values = Matrix(frames, kMidiNotes);

  // notes are onset-sorted, so painting in order gives re-strike semantics
  for (std::size_t i = 0; i < seq.notes.size(); ++i) {
    const NoteEvent& n = seq.notes[i];
    const auto fs = static_cast<std::size_t>(std::floor(n.onset / tf + 1e-9));
    auto fe = static_cast<long long>(std::ceil(offsets[i] / tf - 1e-9)) - 1;
    fe = std::min<long long>(fe, static_cast<long long>(frames) - 1);
    const double value = static_cast<double>(n.velocity) / 127.0;
    for (long long f = static_cast<long long>(fs); f <= fe; ++f)
      roll.values(static_cast<std::size_t>(f), static_cast<std::size_t>(n.pitch)) = value;
  }
  return roll;
}

// ---------------------------------------------------------------------------
// Segmentation
// ---------------------------------------------------------------------------

/// Split where no note sounds for at least min_pause, merge short segments
/// forward, then split anything longer than max_len at its longest internal
/// pause (or exactly at max_len when the activity is continuous).
inline std::vector<Segment> segment_by_pauses(const NoteSequence& seq, double min_pause,
                                              double min_len, double max_len)
{
  if (min_pause <= 0.0) throw InputError("segment: min_pause must be > 0");
  if (!(min_len < max_len)) throw InputError("segment: min_len must be < max_len");
  if (seq.notes.empty()) return {};

  // merge note intervals into activity blocks
  std::vector<std::pair<double, double>> blocks;
  for (const NoteEvent& n : seq.notes) {
    if (!blocks.empty() && n.onset <= blocks.back().second)
      blocks.back().second = std::max(blocks.back().second, n.offset);
    else
      blocks.push_back({n.onset, n.offset});
  }

  // initial pieces: maximal runs of blocks separated by qualifying pauses
  std::vector<std::pair<double, double>> pieces;
  pieces.push_back(blocks[0]);
  for (std::size_t i = 1; i < blocks.size(); ++i) {
    if (blocks[i].first - pieces.back().second >= min_pause)
      pieces.push_back(blocks[i]);
    else
      pieces.back().second = blocks[i].second;
  }

  // forward merge of short pieces
  std::vector<std::pair<double, double>> merged;
  for (std::size_t i = 0; i < pieces.size();) {
    auto cur = pieces[i++];
    while (cur.second - cur.first < min_len && i < pieces.size())
      cur.second = pieces[i++].second;
    merged.push_back(cur);
  }
  if (merged.size() > 1) {
    auto& last = merged.back();
    auto& prev = merged[merged.size() - 2];
    if (last.second - last.first < min_len && last.second - prev.first <= max_len) {
      prev.second = last.second;
      merged.pop_back();
    }
  }

  // recursive split of overlong pieces
  std::vector<std::pair<double, double>> final;
  std::vector<std::pair<double, double>> work(merged.rbegin(), merged.rend());
  while (!work.empty()) {
    auto piece = work.back();
    work.pop_back();
    if (piece.second - piece.first <= max_len + 1e-9) {
      final.push_back(piece);
      continue;
    }
    // longest strictly internal gap between activity blocks
    double best_len = 0.0, gap_start = 0.0, gap_end = 0.0;
    for (std::size_t i = 1; i < blocks.size(); ++i) {
      const double gs = blocks[i - 1].second, ge = blocks[i].first;
      if (gs <= piece.first || ge >= piece.second) continue;
      if (ge - gs > best_len) {
        best_len = ge - gs;
        gap_start = gs;
        gap_end = ge;
      }
    }
    if (best_len > 0.0) {
      work.push_back({gap_end, piece.second}); // processed after the left half
      work.push_back({piece.first, gap_start});
    } else {
      const double cut = piece.first + max_len;
      work.push_back({cut, piece.second});
      final.push_back({piece.first, cut});
    }
  }
  std::sort(final.begin(), final.end());

  std::vector<Segment> out;
  out.reserve(final.size());
  for (const auto& [s, e] : final) out.push_back({s, e, {}});
  for (std::size_t i = 0; i < seq.notes.size(); ++i) {
    const double onset = seq.notes[i].onset;
    for (std::size_t s = 0; s < out.size(); ++s) {
      const bool last = s + 1 == out.size();
      if (onset >= out[s].start - 1e-9 && (onset < out[s].end - 1e-9 || (last && onset <= out[s].end + 1e-9))) {
        out[s].note_indices.push_back(i);
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chunking
// ---------------------------------------------------------------------------

/// Consecutive chunks of exactly frames_per_chunk frames; the final chunk is
/// zero padded with valid_frames recording the unpadded count.
inline std::vector<PianoRoll> chunk_frames(const PianoRoll& roll)
{
  roll.frame_spec.validate();
  const std::size_t chunk = roll.frame_spec.frames_per_chunk;
  const std::size_t total = roll.valid_frames;

  std::vector<PianoRoll> out;
  if (total == 0) return out;
  const std::size_t n_chunks = (total + chunk - 1) / chunk;
  out.reserve(n_chunks);
  for (std::size_t c = 0; c < n_chunks; ++c) {
    PianoRoll piece;
    piece.frame_spec = roll.frame_spec;
    piece.values = Matrix(chunk, roll.values.cols());
    const std::size_t begin = c * chunk;
    const std::size_t count = std::min(chunk, total - begin);
    piece.valid_frames = count;
    for (std::size_t f = 0; f < count; ++f)
      for (std::size_t d = 0; d < roll.values.cols(); ++d)
        piece.values(f, d) = roll.values(begin + f, d);
    out.push_back(std::move(piece));
  }
  return out;
}

} // namespace m2a
