#pragma once

// Sensor-sample ingestion: parse unified-API JSON Lines payloads,
// normalize raw state samples into semantic events bound to the
// topology, and serve GET-style status lookups over a loaded store.
// Formats: docs/formats.md.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sbk/errors.hpp"
#include "sbk/timeutil.hpp"
#include "sbk/topology.hpp"

namespace sbk::ingest {

// A sample's instance is either a number or a short token. The numeric
// form keeps its canonical text so re-serialization is lossless.
struct Instance {
    bool numeric = false;
    std::string text;

    static Instance number(std::int64_t v) { return {true, std::to_string(v)}; }
    static Instance token(std::string t) { return {false, std::move(t)}; }

    bool operator==(const Instance&) const = default;
};

struct SensorSample {
    std::string ucode;
    std::string name;
    Instance instance;
    Timestamp time = 0;

    bool operator==(const SensorSample&) const = default;
};

struct LineError {
    int line = 0;  // 1-based
    std::string message;
};

struct ParsedSamples {
    std::vector<SensorSample> samples;  // valid lines, input order
    std::vector<LineError> errors;      // malformed lines
};

// One JSON object per non-blank line: {ucode, name, data:{instance, time}}.
// Malformed lines are collected, not thrown; valid lines keep input order.
ParsedSamples parse_samples(std::string_view lines);
ParsedSamples parse_samples_file(const std::string& path);

enum class EventKind { LightOn, LightOff, ElevatorArriving, LandingCall, CarCall };

std::string to_string(EventKind k);
EventKind event_kind_from_string(std::string_view s);
bool is_elevator_kind(EventKind k);

struct EventRecord {
    topology::Ucode element;
    topology::Ucode space;
    EventKind kind = EventKind::LightOn;
    std::optional<int> floor;  // elevator kinds only
    Timestamp time = 0;

    bool operator==(const EventRecord&) const = default;
};

struct EventStream {
    std::vector<EventRecord> records;  // non-decreasing time
    std::string origin;
};

class InstanceDecodeError : public Error {
public:
    explicit InstanceDecodeError(const std::string& msg) : Error(msg) {}
};

// Samples are stable-sorted by time, then folded into events: light
// elements emit LightOn/LightOff on 0->1 / 1->0 transitions (the first
// sample of an element is baseline and emits nothing; equal repeats
// emit nothing); elevator-typed entities decode instance tokens
// `arrive:<floor>` | `landing:<floor>` | `car:<floor>`. Samples for
// element types with no event semantics are skipped.
EventStream normalize(const std::vector<SensorSample>& samples,
                      const topology::TopologyGraph& g,
                      std::string origin = "inline");

// Inverse of normalize up to baselines: re-encodes events as samples,
// prepending a baseline sample one second before each light element's
// first event so that normalize(to_samples(normalize(S))) reproduces
// the events of normalize(S). Names are taken from the graph.
std::vector<SensorSample> to_samples(const EventStream& stream,
                                     const topology::TopologyGraph& g);

// CSV codec, columns: element,space,kind,floor,time. Floor is blank for
// light kinds; time is ISO-8601 UTC.
std::string events_to_csv(const EventStream& stream);
EventStream events_from_csv(std::string_view csv, std::string origin = "csv");

// Immutable store behind the GET endpoint: raw sample history per
// ucode, time-ascending (stable), with display names resolved against
// the topology when possible.
class StatusStore {
public:
    static StatusStore build(const std::vector<SensorSample>& samples,
                             const topology::TopologyGraph& g);

    // JSON payload {ucode, name, data:[{instance, time}...]} with data
    // filtered to [from, to] when bounds are given. Unknown ucode
    // raises UnknownEntityError (a 404 at the HTTP layer).
    std::string payload(const std::string& ucode,
                        std::optional<Timestamp> from = std::nullopt,
                        std::optional<Timestamp> to = std::nullopt) const;

    std::vector<std::string> known_ucodes() const;  // sorted

private:
    struct Series {
        std::string name;
        std::vector<std::pair<Instance, Timestamp>> data;
    };
    std::map<std::string, Series> series_;
};

}  // namespace sbk::ingest
