#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bat/errors.hpp"

namespace bat {

// One brightness-change event: timestamp in microseconds, pixel location,
// polarity +1/-1.
struct Event {
    uint64_t t = 0;
    uint16_t x = 0;
    uint16_t y = 0;
    int8_t p = 1;

    friend bool operator==(const Event&, const Event&) = default;
};

struct Geometry {
    uint16_t width = 0;
    uint16_t height = 0;

    friend bool operator==(const Geometry&, const Geometry&) = default;
};

// Events sorted non-decreasing in t, all inside the sensor geometry.
struct EventStream {
    Geometry geom;
    std::vector<Event> events;

    friend bool operator==(const EventStream&, const EventStream&) = default;
};

enum class EventFormat { Csv, Evt1 };

EventFormat parse_event_format(const std::string& name);

// Parses CSV ("t,x,y,p" per line) or EVT1 binary payloads into a sorted,
// bounds-checked stream. For CSV the geometry comes from the caller; EVT1
// carries its own and `geom` is ignored. With `strict` set, input that is
// not already time-sorted raises NonMonotonicTime instead of being sorted.
EventStream parse_events(const std::string& bytes, EventFormat format,
                         Geometry geom = {}, bool strict = false);

std::string write_events(const EventStream& stream, EventFormat format);

EventStream load_events(const std::string& path, Geometry geom = {});
void save_events(const EventStream& stream, const std::string& path);

// Events with t in [t0, t1], both ends included. Order preserved.
EventStream slice(const EventStream& stream, uint64_t t0, uint64_t t1);

}  // namespace bat
