#include "sbk/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace sbk::ingest {

using nlohmann::ordered_json;

std::string to_string(EventKind k) {
    switch (k) {
        case EventKind::LightOn: return "LightOn";
        case EventKind::LightOff: return "LightOff";
        case EventKind::ElevatorArriving: return "ElevatorArriving";
        case EventKind::LandingCall: return "LandingCall";
        case EventKind::CarCall: return "CarCall";
    }
    return "?";
}

EventKind event_kind_from_string(std::string_view s) {
    if (s == "LightOn") return EventKind::LightOn;
    if (s == "LightOff") return EventKind::LightOff;
    if (s == "ElevatorArriving") return EventKind::ElevatorArriving;
    if (s == "LandingCall") return EventKind::LandingCall;
    if (s == "CarCall") return EventKind::CarCall;
    throw Error("unknown event kind: " + std::string(s));
}

bool is_elevator_kind(EventKind k) {
    return k == EventKind::ElevatorArriving || k == EventKind::LandingCall ||
           k == EventKind::CarCall;
}

namespace {

void reject_unknown_fields(const ordered_json& obj,
                           std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw Error("unknown field '" + key + "'");
    }
}

SensorSample sample_from_json(const ordered_json& j) {
    if (!j.is_object()) throw Error("sample line is not a JSON object");
    reject_unknown_fields(j, {"ucode", "name", "data"});
    SensorSample s;
    if (!j.contains("ucode") || !j["ucode"].is_string())
        throw Error("missing or non-string 'ucode'");
    s.ucode = j["ucode"].get<std::string>();
    if (s.ucode.empty()) throw Error("'ucode' is empty");
    if (!j.contains("name") || !j["name"].is_string())
        throw Error("missing or non-string 'name'");
    s.name = j["name"].get<std::string>();
    if (!j.contains("data") || !j["data"].is_object())
        throw Error("missing or non-object 'data'");
    const ordered_json& d = j["data"];
    reject_unknown_fields(d, {"instance", "time"});
    if (!d.contains("instance")) throw Error("missing 'data.instance'");
    const ordered_json& inst = d["instance"];
    if (inst.is_number_integer()) {
        s.instance = Instance::number(inst.get<std::int64_t>());
    } else if (inst.is_string()) {
        s.instance = Instance::token(inst.get<std::string>());
    } else {
        throw Error("'data.instance' must be an integer or a string");
    }
    if (!d.contains("time") || !d["time"].is_string())
        throw Error("missing or non-string 'data.time'");
    s.time = parse_iso8601(d["time"].get<std::string>());
    return s;
}

}  // namespace

ParsedSamples parse_samples(std::string_view lines) {
    ParsedSamples out;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= lines.size()) {
        std::size_t nl = lines.find('\n', pos);
        std::string_view line = lines.substr(pos, nl == std::string_view::npos ? lines.size() - pos
                                                                               : nl - pos);
        pos = (nl == std::string_view::npos) ? lines.size() + 1 : nl + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            ordered_json j = ordered_json::parse(line);
            out.samples.push_back(sample_from_json(j));
        } catch (const std::exception& e) {
            out.errors.push_back({line_no, e.what()});
        }
    }
    return out;
}

ParsedSamples parse_samples_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open samples file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_samples(buf.str());
}

namespace {

// -1 = off, 1 = on, 0 = not decodable as a light state.
int light_state(const Instance& inst) {
    if (inst.numeric) {
        if (inst.text == "0") return -1;
        if (inst.text == "1") return 1;
        return 0;
    }
    std::string low = inst.text;
    std::transform(low.begin(), low.end(), low.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (low == "off") return -1;
    if (low == "on") return 1;
    return 0;
}

struct ElevatorMessage {
    EventKind kind;
    int floor;
};

ElevatorMessage decode_elevator(const Instance& inst, const std::string& ucode) {
    auto fail = [&]() -> ElevatorMessage {
        throw InstanceDecodeError("undecodable elevator instance '" + inst.text +
                                  "' for " + ucode);
    };
    if (inst.numeric) return fail();
    std::string_view t = inst.text;
    auto colon = t.find(':');
    if (colon == std::string_view::npos) return fail();
    std::string_view op = t.substr(0, colon);
    std::string_view num = t.substr(colon + 1);
    EventKind kind;
    if (op == "arrive") kind = EventKind::ElevatorArriving;
    else if (op == "landing") kind = EventKind::LandingCall;
    else if (op == "car") kind = EventKind::CarCall;
    else return fail();
    int floor = 0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), floor);
    if (ec != std::errc{} || ptr != num.data() + num.size()) return fail();
    return {kind, floor};
}

}  // namespace

EventStream normalize(const std::vector<SensorSample>& samples,
                      const topology::TopologyGraph& g, std::string origin) {
    std::vector<const SensorSample*> order;
    order.reserve(samples.size());
    for (const SensorSample& s : samples) order.push_back(&s);
    std::stable_sort(order.begin(), order.end(),
                     [](const SensorSample* a, const SensorSample* b) { return a->time < b->time; });

    EventStream out;
    out.origin = std::move(origin);
    std::map<topology::Ucode, int> light_prev;  // -1 off, 1 on

    for (const SensorSample* sp : order) {
        const SensorSample& s = *sp;
        const topology::Entity& e = g.at(s.ucode);
        if (e.kind != topology::EntityKind::Element && e.kind != topology::EntityKind::Zone)
            throw TypeViolationError("sample ucode " + s.ucode + " is a " +
                                     std::string(topology::to_string(e.kind)) +
                                     ", not an Element or Zone");
        const std::string type = e.element_type.value_or("");
        if (type == "Light") {
            int state = light_state(s.instance);
            if (state == 0)
                throw InstanceDecodeError("undecodable light instance '" + s.instance.text +
                                          "' for " + s.ucode);
            auto [it, inserted] = light_prev.try_emplace(s.ucode, state);
            if (inserted) continue;  // baseline establishes state only
            if (it->second == state) continue;
            it->second = state;
            const topology::Entity* space = g.containing_space(s.ucode);
            if (!space)
                throw TopologyResolutionError("light element " + s.ucode +
                                              " is in no space");
            out.records.push_back({s.ucode, space->id,
                                   state == 1 ? EventKind::LightOn : EventKind::LightOff,
                                   std::nullopt, s.time});
        } else if (type == "Elevator") {
            ElevatorMessage m = decode_elevator(s.instance, s.ucode);
            topology::Ucode space;
            if (e.kind == topology::EntityKind::Zone) {
                auto hall = g.elevator_hall_on(m.floor);
                if (!hall)
                    throw TopologyResolutionError("no elevator hall on floor " +
                                                  std::to_string(m.floor) + " for " + s.ucode);
                space = *hall;
            } else {
                const topology::Entity* parent = g.containing_space(s.ucode);
                if (!parent)
                    throw TopologyResolutionError("elevator element " + s.ucode +
                                                  " is in no space");
                space = parent->id;
            }
            out.records.push_back({s.ucode, space, m.kind, m.floor, s.time});
        }
        // Other element types carry no event semantics; skipped.
    }
    return out;
}

std::vector<SensorSample> to_samples(const EventStream& stream,
                                     const topology::TopologyGraph& g) {
    std::vector<SensorSample> out;
    std::map<topology::Ucode, bool> seen_light;
    for (const EventRecord& r : stream.records) {
        const topology::Entity& e = g.at(r.element);
        if (is_elevator_kind(r.kind)) {
            if (!r.floor) throw TypeViolationError("elevator record without floor");
            const char* op = r.kind == EventKind::ElevatorArriving ? "arrive"
                             : r.kind == EventKind::LandingCall    ? "landing"
                                                                   : "car";
            out.push_back({r.element, e.name,
                           Instance::token(std::string(op) + ":" + std::to_string(*r.floor)),
                           r.time});
        } else {
            bool on = r.kind == EventKind::LightOn;
            if (!seen_light[r.element]) {
                seen_light[r.element] = true;
                out.push_back({r.element, e.name, Instance::number(on ? 0 : 1), r.time - 1});
            }
            out.push_back({r.element, e.name, Instance::number(on ? 1 : 0), r.time});
        }
    }
    return out;
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

std::vector<std::string> csv_split(std::string_view line, int line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw ParseError("unterminated quoted CSV field", line_no);
    fields.push_back(std::move(cur));
    return fields;
}

}  // namespace

std::string events_to_csv(const EventStream& stream) {
    std::ostringstream out;
    out << "element,space,kind,floor,time\n";
    for (const EventRecord& r : stream.records) {
        out << csv_escape(r.element) << ',' << csv_escape(r.space) << ',' << to_string(r.kind)
            << ',';
        if (r.floor) out << *r.floor;
        out << ',' << format_iso8601(r.time) << "\n";
    }
    return out.str();
}

EventStream events_from_csv(std::string_view csv, std::string origin) {
    EventStream out;
    out.origin = std::move(origin);
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t nl = csv.find('\n', pos);
        std::string_view line =
            csv.substr(pos, nl == std::string_view::npos ? csv.size() - pos : nl - pos);
        pos = (nl == std::string_view::npos) ? csv.size() : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "element,space,kind,floor,time")
                throw ParseError("unexpected events CSV header", 1);
            continue;
        }
        auto fields = csv_split(line, line_no);
        if (fields.size() != 5)
            throw ParseError("expected 5 CSV fields, got " + std::to_string(fields.size()),
                             line_no);
        EventRecord r;
        r.element = fields[0];
        r.space = fields[1];
        try {
            r.kind = event_kind_from_string(fields[2]);
        } catch (const Error& e) {
            throw ParseError(e.what(), line_no);
        }
        if (fields[3].empty()) {
            if (is_elevator_kind(r.kind))
                throw ParseError("elevator record missing floor", line_no);
        } else {
            int floor = 0;
            auto [ptr, ec] =
                std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), floor);
            if (ec != std::errc{} || ptr != fields[3].data() + fields[3].size())
                throw ParseError("bad floor value '" + fields[3] + "'", line_no);
            if (!is_elevator_kind(r.kind))
                throw ParseError("light record carries a floor", line_no);
            r.floor = floor;
        }
        try {
            r.time = parse_iso8601(fields[4]);
        } catch (const ParseError&) {
            throw ParseError("bad timestamp '" + fields[4] + "'", line_no);
        }
        if (!out.records.empty() && r.time < out.records.back().time)
            throw ParseError("records not time-ordered", line_no);
        out.records.push_back(std::move(r));
    }
    return out;
}

StatusStore StatusStore::build(const std::vector<SensorSample>& samples,
                               const topology::TopologyGraph& g) {
    StatusStore store;
    for (const auto& [id, entity] : g.entities()) store.series_[id].name = entity.name;
    for (const SensorSample& s : samples) {
        auto [it, inserted] = store.series_.try_emplace(s.ucode);
        if (inserted) it->second.name = s.name;
        it->second.data.emplace_back(s.instance, s.time);
    }
    for (auto& [id, series] : store.series_) {
        (void)id;
        std::stable_sort(series.data.begin(), series.data.end(),
                         [](const auto& a, const auto& b) { return a.second < b.second; });
    }
    return store;
}

std::string StatusStore::payload(const std::string& ucode, std::optional<Timestamp> from,
                                 std::optional<Timestamp> to) const {
    auto it = series_.find(ucode);
    if (it == series_.end()) throw UnknownEntityError(ucode);
    ordered_json j;
    j["ucode"] = ucode;
    j["name"] = it->second.name;
    j["data"] = ordered_json::array();
    for (const auto& [inst, time] : it->second.data) {
        if (from && time < *from) continue;
        if (to && time > *to) continue;
        ordered_json d;
        if (inst.numeric) {
            d["instance"] = std::stoll(inst.text);
        } else {
            d["instance"] = inst.text;
        }
        d["time"] = format_iso8601(time);
        j["data"].push_back(std::move(d));
    }
    return j.dump();
}

std::vector<std::string> StatusStore::known_ucodes() const {
    std::vector<std::string> out;
    out.reserve(series_.size());
    for (const auto& [id, s] : series_) {
        (void)s;
        out.push_back(id);
    }
    return out;
}

}  // namespace sbk::ingest
