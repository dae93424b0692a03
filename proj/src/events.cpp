#include "bat/events.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>

namespace bat {

namespace {

constexpr char kEvt1Magic[4] = {'E', 'V', 'T', '1'};

void append_le(std::string& out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void append_le(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint16_t read_u16(const unsigned char* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

uint64_t read_u64(const unsigned char* p) {
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

void check_bounds(const Event& e, Geometry geom, size_t record) {
    if (e.x >= geom.width || e.y >= geom.height) {
        throw OutOfBounds("event " + std::to_string(record) + " at (" + std::to_string(e.x) +
                          "," + std::to_string(e.y) + ") outside " + std::to_string(geom.width) +
                          "x" + std::to_string(geom.height));
    }
}

template <typename T>
T parse_int_field(std::string_view field, size_t line_no) {
    T value{};
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && field.front() == '+') ++first;  // from_chars rejects leading '+'
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || first == last) {
        throw MalformedRecord("line " + std::to_string(line_no) + ": bad integer field '" +
                              std::string(field) + "'");
    }
    return value;
}

EventStream parse_csv(const std::string& bytes, Geometry geom) {
    EventStream stream;
    stream.geom = geom;
    size_t pos = 0;
    size_t line_no = 0;
    while (pos < bytes.size()) {
        size_t eol = bytes.find('\n', pos);
        std::string_view line(bytes.data() + pos, (eol == std::string::npos ? bytes.size() : eol) - pos);
        pos = (eol == std::string::npos) ? bytes.size() : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        std::string_view fields[4];
        size_t nfields = 0;
        size_t start = 0;
        for (size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                if (nfields == 4) throw MalformedRecord("line " + std::to_string(line_no) + ": too many fields");
                fields[nfields++] = line.substr(start, i - start);
                start = i + 1;
            }
        }
        if (nfields != 4) throw MalformedRecord("line " + std::to_string(line_no) + ": expected 4 fields, got " +
                                                std::to_string(nfields));
        Event e;
        e.t = parse_int_field<uint64_t>(fields[0], line_no);
        e.x = parse_int_field<uint16_t>(fields[1], line_no);
        e.y = parse_int_field<uint16_t>(fields[2], line_no);
        int p = parse_int_field<int>(fields[3], line_no);
        if (p != 1 && p != -1) throw MalformedRecord("line " + std::to_string(line_no) + ": polarity must be 1 or -1");
        e.p = static_cast<int8_t>(p);
        check_bounds(e, geom, line_no);
        stream.events.push_back(e);
    }
    return stream;
}

EventStream parse_evt1(const std::string& bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kEvt1Magic, 4) != 0) {
        throw MalformedRecord("EVT1: bad magic or truncated header");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    EventStream stream;
    stream.geom.width = read_u16(p + 4);
    stream.geom.height = read_u16(p + 6);
    uint64_t count = read_u64(p + 8);
    if (bytes.size() != 16 + count * 13) {
        throw MalformedRecord("EVT1: payload size " + std::to_string(bytes.size()) +
                              " does not match event count " + std::to_string(count));
    }
    stream.events.reserve(count);
    const unsigned char* rec = p + 16;
    for (uint64_t i = 0; i < count; ++i, rec += 13) {
        Event e;
        e.t = read_u64(rec);
        e.x = read_u16(rec + 8);
        e.y = read_u16(rec + 10);
        int8_t pol = static_cast<int8_t>(rec[12]);
        if (pol != 1 && pol != -1) throw MalformedRecord("EVT1: event " + std::to_string(i) + " has polarity " +
                                                         std::to_string(pol));
        e.p = pol;
        check_bounds(e, stream.geom, i);
        stream.events.push_back(e);
    }
    return stream;
}

}  // namespace

EventFormat parse_event_format(const std::string& name) {
    if (name == "csv") return EventFormat::Csv;
    if (name == "evt1") return EventFormat::Evt1;
    throw MalformedRecord("unknown event format '" + name + "'");
}

EventStream parse_events(const std::string& bytes, EventFormat format, Geometry geom, bool strict) {
    EventStream stream = (format == EventFormat::Csv) ? parse_csv(bytes, geom) : parse_evt1(bytes);
    bool sorted = std::is_sorted(stream.events.begin(), stream.events.end(),
                                 [](const Event& a, const Event& b) { return a.t < b.t; });
    if (!sorted) {
        if (strict) throw NonMonotonicTime("event timestamps decrease and strict mode is set");
        std::stable_sort(stream.events.begin(), stream.events.end(),
                         [](const Event& a, const Event& b) { return a.t < b.t; });
    }
    return stream;
}

std::string write_events(const EventStream& stream, EventFormat format) {
    std::string out;
    if (format == EventFormat::Csv) {
        for (const Event& e : stream.events) {
            out += std::to_string(e.t);
            out += ',';
            out += std::to_string(e.x);
            out += ',';
            out += std::to_string(e.y);
            out += ',';
            out += std::to_string(static_cast<int>(e.p));
            out += '\n';
        }
    } else {
        out.reserve(16 + stream.events.size() * 13);
        out.append(kEvt1Magic, 4);
        append_le(out, stream.geom.width);
        append_le(out, stream.geom.height);
        append_le(out, static_cast<uint64_t>(stream.events.size()));
        for (const Event& e : stream.events) {
            append_le(out, e.t);
            append_le(out, e.x);
            append_le(out, e.y);
            out.push_back(static_cast<char>(e.p));
        }
    }
    return out;
}

EventStream load_events(const std::string& path, Geometry geom) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
    return parse_events(bytes, csv ? EventFormat::Csv : EventFormat::Evt1, geom);
}

void save_events(const EventStream& stream, const std::string& path) {
    bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
    std::string bytes = write_events(stream, csv ? EventFormat::Csv : EventFormat::Evt1);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path);
}

EventStream slice(const EventStream& stream, uint64_t t0, uint64_t t1) {
    if (t0 > t1) throw InvalidInterval("slice interval [" + std::to_string(t0) + "," + std::to_string(t1) + "]");
    EventStream out;
    out.geom = stream.geom;
    auto lo = std::lower_bound(stream.events.begin(), stream.events.end(), t0,
                               [](const Event& e, uint64_t t) { return e.t < t; });
    auto hi = std::upper_bound(lo, stream.events.end(), t1,
                               [](uint64_t t, const Event& e) { return t < e.t; });
    out.events.assign(lo, hi);
    return out;
}

}  // namespace bat
