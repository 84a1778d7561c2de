#include "sbk/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace sbk::simulator {

using conjunction::Direction;
using ingest::Instance;
using ingest::SensorSample;
using topology::Ucode;

namespace {

// mt19937_64 plus a hand-rolled Box-Muller keeps the byte stream
// independent of the standard library's unspecified distribution
// algorithms. Every gauss() consumes exactly two raw draws.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    double u01() {  // [0, 1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double gauss(double mean, double std) {
        double u1 = 1.0 - u01();  // (0, 1]
        double u2 = u01();
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        return mean + std * z;
    }

private:
    std::mt19937_64 engine_;
};

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

// Physical level index: basement floors keep their value, floors above
// ground shift down by one (B1 -> -1, 1F -> 0, 2F -> 1).
int level_of(int floor) { return floor > 0 ? floor - 1 : floor; }

Timestamp sec_of_hour(double h) { return static_cast<Timestamp>(std::llround(h * 3600.0)); }

struct TripRequest {
    Timestamp t = 0;  // landing-call time
    int from = 0;
    int to = 0;
    enum class Kind { MorningArrival, EveningLeave, Background } kind = Kind::Background;
    std::size_t occupant = 0;
    Timestamp walk_s = 0;    // room walk for the occupant trips
    Timestamp t_off = 0;     // evening: the LightOff timestamp
    std::size_t seq = 0;     // insertion order, sort tiebreak
};

struct LightBinding {
    Ucode element;
    std::string element_name;
    Ucode space;
    int floor = 0;
    int hops = 0;
};

}  // namespace

namespace {

const OccupantProfile& profile_defaults() {
    static const OccupantProfile d{};
    return d;
}

void reject_unknown(const nlohmann::ordered_json& obj,
                    std::initializer_list<const char*> allowed, const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw ConfigError("unknown field '" + key + "' in " + where);
    }
}

double num_or(const nlohmann::ordered_json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
    return obj[key].get<double>();
}

}  // namespace

SimConfig sim_config_from_json(const std::string& json_text) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bad simulator config JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("simulator config must be a JSON object");
    reject_unknown(j,
                   {"topology", "days", "seed", "start_date", "entry_floor", "elevator_zone",
                    "elevator", "background", "profiles"},
                   "config");
    SimConfig c;
    if (j.contains("topology")) c.topology_path = j["topology"].get<std::string>();
    if (!j.contains("days") || !j["days"].is_number_integer())
        throw ConfigError("config needs integer 'days'");
    c.days = j["days"].get<int>();
    if (c.days < 1) throw ConfigError("'days' must be >= 1");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer()) throw ConfigError("'seed' must be an integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("start_date")) c.start_date = j["start_date"].get<std::string>();
    if (j.contains("entry_floor")) c.entry_floor = j["entry_floor"].get<int>();
    if (j.contains("elevator_zone")) c.elevator_zone = j["elevator_zone"].get<std::string>();
    if (j.contains("elevator")) {
        const auto& e = j["elevator"];
        if (!e.is_object()) throw ConfigError("'elevator' must be an object");
        reject_unknown(e, {"base_s", "per_floor_s", "board_delay_s"}, "elevator");
        c.elevator_base_s = num_or(e, "base_s", c.elevator_base_s);
        c.elevator_per_floor_s = num_or(e, "per_floor_s", c.elevator_per_floor_s);
        c.board_delay_s = num_or(e, "board_delay_s", c.board_delay_s);
        if (c.elevator_base_s < 0 || c.elevator_per_floor_s < 0 || c.board_delay_s < 0)
            throw ConfigError("elevator latencies must be non-negative");
    }
    if (j.contains("background")) {
        const auto& b = j["background"];
        if (!b.is_object()) throw ConfigError("'background' must be an object");
        reject_unknown(b, {"trips_per_day", "pattern"}, "background");
        if (b.contains("trips_per_day")) {
            c.background_trips_per_day = b["trips_per_day"].get<int>();
            if (c.background_trips_per_day < 0)
                throw ConfigError("'background.trips_per_day' must be >= 0");
        }
        if (b.contains("pattern")) {
            std::string p = b["pattern"].get<std::string>();
            if (p == "rush") c.background_pattern = BackgroundPattern::Rush;
            else if (p == "uniform") c.background_pattern = BackgroundPattern::Uniform;
            else throw ConfigError("'background.pattern' must be \"rush\" or \"uniform\"");
        }
    }
    if (j.contains("profiles")) {
        if (!j["profiles"].is_array()) throw ConfigError("'profiles' must be an array");
        for (const auto& p : j["profiles"]) {
            if (!p.is_object()) throw ConfigError("profile entries must be objects");
            reject_unknown(p,
                           {"id", "home_space", "role", "arrive_mean", "arrive_std", "leave_mean",
                            "leave_std", "elevator_affinity", "walk_seconds_per_hop", "noise_std"},
                           "profile");
            OccupantProfile o = profile_defaults();
            if (!p.contains("id") || !p["id"].is_string())
                throw ConfigError("profile needs string 'id'");
            o.id = p["id"].get<std::string>();
            if (!p.contains("home_space") || !p["home_space"].is_string())
                throw ConfigError("profile '" + o.id + "' needs string 'home_space'");
            o.home_space = p["home_space"].get<std::string>();
            if (p.contains("role")) o.role = p["role"].get<std::string>();
            else o.role = "staff";
            o.arrive_mean = num_or(p, "arrive_mean", o.arrive_mean);
            o.arrive_std = num_or(p, "arrive_std", o.arrive_std);
            o.leave_mean = num_or(p, "leave_mean", o.leave_mean);
            o.leave_std = num_or(p, "leave_std", o.leave_std);
            o.elevator_affinity = num_or(p, "elevator_affinity", o.elevator_affinity);
            o.walk_seconds_per_hop = num_or(p, "walk_seconds_per_hop", o.walk_seconds_per_hop);
            o.noise_std = num_or(p, "noise_std", o.noise_std);
            c.profiles.push_back(std::move(o));
        }
    }
    return c;
}

SimConfig sim_config_from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open simulator config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return sim_config_from_json(buf.str());
}

namespace {

void validate(const topology::TopologyGraph& g, const SimConfig& c,
              std::vector<LightBinding>& bindings, std::vector<int>& floors) {
    const topology::Entity* zone = g.find(c.elevator_zone);
    if (!zone || zone->kind != topology::EntityKind::Zone ||
        zone->element_type.value_or("") != "Elevator")
        throw ConfigError("'" + c.elevator_zone + "' is not an Elevator zone in the topology");
    if (!g.storey_on_floor(c.entry_floor))
        throw ConfigError("entry floor " + std::to_string(c.entry_floor) + " has no storey");

    for (const topology::Entity* s : g.entities_of_kind(topology::EntityKind::Storey))
        floors.push_back(*s->floor_value);
    std::sort(floors.begin(), floors.end());
    if (c.background_trips_per_day > 0 && floors.size() < 2)
        throw ConfigError("background trips need at least two floors");

    std::set<Ucode> homes;
    for (const OccupantProfile& p : c.profiles) {
        if (p.role != "staff" && p.role != "student")
            throw ConfigError("profile '" + p.id + "': role must be \"staff\" or \"student\"");
        if (p.arrive_std < 0 || p.leave_std < 0 || p.noise_std < 0)
            throw ConfigError("profile '" + p.id + "': stds must be >= 0");
        if (p.elevator_affinity < 0 || p.elevator_affinity > 1)
            throw ConfigError("profile '" + p.id + "': elevator_affinity must be in [0,1]");
        if (!(p.walk_seconds_per_hop > 0))
            throw ConfigError("profile '" + p.id + "': walk_seconds_per_hop must be positive");
        if (!homes.insert(p.home_space).second)
            throw ConfigError("profile '" + p.id + "': home_space " + p.home_space +
                              " already taken; one occupant per room keeps light "
                              "transitions well-defined");
        const topology::Entity* space = g.find(p.home_space);
        if (!space || space->kind != topology::EntityKind::Space)
            throw ConfigError("profile '" + p.id + "': home_space " + p.home_space +
                              " is not a Space");
        auto lights = g.elements_in_space(p.home_space, std::string("Light"));
        if (lights.empty())
            throw ConfigError("profile '" + p.id + "': home_space " + p.home_space +
                              " has no Light element");
        conjunction::SpaceFeatures f = conjunction::features_for(g, p.home_space);
        bindings.push_back(
            {lights.front()->id, lights.front()->name, p.home_space, f.floor_value, f.hops});
    }
}

}  // namespace

TraceBundle simulate(const topology::TopologyGraph& g, const SimConfig& config) {
    std::vector<LightBinding> bindings;
    std::vector<int> floors;
    validate(g, config, bindings, floors);

    Timestamp start_ts;
    try {
        start_ts = parse_iso8601(config.start_date + "T00:00:00Z");
    } catch (const ParseError&) {
        throw ConfigError("bad start_date '" + config.start_date + "', expected YYYY-MM-DD");
    }

    const std::string zone_name = g.at(config.elevator_zone).name;
    Rng rng(config.seed);
    TraceBundle bundle;
    bundle.seed = config.seed;

    // Baseline light states: every room starts dark, one second before
    // the simulated span, so day-0 morning events are real transitions.
    {
        std::vector<const LightBinding*> by_element;
        for (const LightBinding& b : bindings) by_element.push_back(&b);
        std::sort(by_element.begin(), by_element.end(),
                  [](const LightBinding* a, const LightBinding* b) {
                      return a->element < b->element;
                  });
        for (const LightBinding* b : by_element)
            bundle.samples.push_back(
                {b->element, b->element_name, Instance::number(0), start_ts - 1});
    }

    std::vector<TripRequest> requests;
    auto walk_seconds = [&](const OccupantProfile& p, const LightBinding& b, double noise) {
        double clipped = clamp(noise, -3.0 * p.noise_std, 3.0 * p.noise_std);
        double w = p.walk_seconds_per_hop * b.hops + clipped;
        return std::max<Timestamp>(1, static_cast<Timestamp>(std::llround(w)));
    };

    for (int day = 0; day < config.days; ++day) {
        const Timestamp day_start = start_ts + static_cast<Timestamp>(day) * 86400;
        for (std::size_t i = 0; i < config.profiles.size(); ++i) {
            const OccupantProfile& p = config.profiles[i];
            const LightBinding& b = bindings[i];
            // Fixed draw count per occupant-day keeps the stream stable.
            double arrive_h = clamp(rng.gauss(p.arrive_mean, p.arrive_std), 0.0, 23.0);
            double leave_h = clamp(rng.gauss(p.leave_mean, p.leave_std), arrive_h + 0.25, 23.983);
            bool morning_lift = rng.u01() < p.elevator_affinity;
            Timestamp morning_walk = walk_seconds(p, b, rng.gauss(0.0, p.noise_std));
            bool evening_lift = rng.u01() < p.elevator_affinity;
            Timestamp evening_walk = walk_seconds(p, b, rng.gauss(0.0, p.noise_std));

            const bool uses_elevator = b.floor != config.entry_floor;
            const Timestamp t_enter = day_start + sec_of_hour(arrive_h);
            const Timestamp t_off = day_start + sec_of_hour(leave_h);

            if (uses_elevator && morning_lift) {
                requests.push_back({t_enter, config.entry_floor, b.floor,
                                    TripRequest::Kind::MorningArrival, i, morning_walk, 0,
                                    requests.size()});
            } else {
                bundle.samples.push_back(
                    {b.element, b.element_name, Instance::number(1), t_enter + morning_walk});
            }

            bundle.samples.push_back({b.element, b.element_name, Instance::number(0), t_off});
            if (uses_elevator && evening_lift) {
                requests.push_back({t_off + evening_walk, b.floor, config.entry_floor,
                                    TripRequest::Kind::EveningLeave, i, evening_walk, t_off,
                                    requests.size()});
            }
        }
        for (int t = 0; t < config.background_trips_per_day; ++t) {
            double h;
            if (config.background_pattern == BackgroundPattern::Rush) {
                bool morning = rng.u01() < 0.5;
                h = clamp(rng.gauss(morning ? 9.0 : 17.5, 1.2), 0.0, 23.983);
            } else {
                h = clamp(rng.u01() * 24.0, 0.0, 23.983);
            }
            std::size_t fi = rng.raw() % floors.size();
            std::size_t ti = (fi + 1 + rng.raw() % (floors.size() - 1)) % floors.size();
            requests.push_back({day_start + sec_of_hour(h), floors[fi], floors[ti],
                                TripRequest::Kind::Background, 0, 0, 0, requests.size()});
        }
    }

    // Serve trips in time order with a stateful car; the car keeps the
    // position its previous trip left it at.
    std::stable_sort(requests.begin(), requests.end(),
                     [](const TripRequest& a, const TripRequest& b) { return a.t < b.t; });
    auto latency = [&](int from, int to) {
        return static_cast<Timestamp>(std::llround(
            config.elevator_base_s +
            config.elevator_per_floor_s * std::abs(level_of(from) - level_of(to))));
    };
    auto lift_sample = [&](const char* op, int floor, Timestamp t) {
        bundle.samples.push_back({config.elevator_zone, zone_name,
                                  Instance::token(std::string(op) + ":" + std::to_string(floor)),
                                  t});
    };

    int car = config.entry_floor;
    const Timestamp board = static_cast<Timestamp>(std::llround(config.board_delay_s));
    for (const TripRequest& r : requests) {
        const Timestamp t_arr_from = r.t + latency(car, r.from);
        const Timestamp t_board = t_arr_from + board;
        const Timestamp t_arr_to = t_board + latency(r.from, r.to);
        lift_sample("landing", r.from, r.t);
        lift_sample("arrive", r.from, t_arr_from);
        lift_sample("car", r.to, t_board);
        lift_sample("arrive", r.to, t_arr_to);
        car = r.to;

        if (r.kind == TripRequest::Kind::MorningArrival) {
            const LightBinding& b = bindings[r.occupant];
            const Timestamp t_on = t_arr_to + r.walk_s;
            bundle.samples.push_back({b.element, b.element_name, Instance::number(1), t_on});
            bundle.truth.push_back(
                {b.space, Direction::ElevatorToLightOn, t_arr_to, t_on});
        } else if (r.kind == TripRequest::Kind::EveningLeave) {
            const LightBinding& b = bindings[r.occupant];
            bundle.truth.push_back(
                {b.space, Direction::LightOffToElevator, r.t_off, t_arr_from});
        }
    }

    std::stable_sort(bundle.samples.begin(), bundle.samples.end(),
                     [](const SensorSample& a, const SensorSample& b) { return a.time < b.time; });
    std::stable_sort(bundle.truth.begin(), bundle.truth.end(),
                     [](const TruthTuple& a, const TruthTuple& b) { return a.t_i < b.t_i; });
    return bundle;
}

std::string TraceBundle::samples_jsonl() const {
    std::ostringstream out;
    for (const SensorSample& s : samples) {
        nlohmann::ordered_json j;
        j["ucode"] = s.ucode;
        j["name"] = s.name;
        nlohmann::ordered_json d;
        if (s.instance.numeric) d["instance"] = std::stoll(s.instance.text);
        else d["instance"] = s.instance.text;
        d["time"] = format_iso8601(s.time);
        j["data"] = std::move(d);
        out << j.dump() << "\n";
    }
    return out.str();
}

std::string TraceBundle::truth_csv() const {
    std::ostringstream out;
    out << "space,direction,t_i,t_j,delta_t\n";
    for (const TruthTuple& t : truth)
        out << t.space << ',' << conjunction::to_string(t.direction) << ','
            << format_iso8601(t.t_i) << ',' << format_iso8601(t.t_j) << ',' << t.delta_t()
            << "\n";
    return out.str();
}

Score score_detector(const std::vector<TruthTuple>& truth,
                     const std::vector<conjunction::PairVerdict>& verdicts) {
    Score s;
    s.truth_count = truth.size();
    std::vector<bool> used(truth.size(), false);
    for (const conjunction::PairVerdict& v : verdicts) {
        if (v.status != conjunction::PairStatus::Conjunctive) continue;
        ++s.conjunctive_count;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (used[i]) continue;
            const TruthTuple& t = truth[i];
            if (t.direction != v.sample.direction || t.space != v.sample.space) continue;
            if (std::llabs(t.t_i - v.sample.time) > 1) continue;
            used[i] = true;
            ++s.matched;
            break;
        }
    }
    s.precision = s.conjunctive_count == 0
                      ? 1.0
                      : static_cast<double>(s.matched) / static_cast<double>(s.conjunctive_count);
    s.recall = truth.empty() ? 1.0
                             : static_cast<double>(s.matched) / static_cast<double>(truth.size());
    return s;
}

}  // namespace sbk::simulator
