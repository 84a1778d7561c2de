#include "sbk/conjunction.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "json.hpp"

namespace sbk::conjunction {

using ingest::EventKind;
using ingest::EventRecord;
using topology::Ucode;

std::string to_string(Direction d) {
    return d == Direction::LightOffToElevator ? "LightOffToElevator" : "ElevatorToLightOn";
}

Direction direction_from_string(std::string_view s) {
    if (s == "LightOffToElevator") return Direction::LightOffToElevator;
    if (s == "ElevatorToLightOn") return Direction::ElevatorToLightOn;
    throw Error("unknown direction: " + std::string(s));
}

Timestamp IntervalSample::room_event_time() const {
    if (direction == Direction::LightOffToElevator) return time;
    return time + static_cast<Timestamp>(std::llround(delta_t));
}

namespace {

// Feature cache; spaces resolve once per run.
class FeatureTable {
public:
    explicit FeatureTable(const topology::TopologyGraph& g) : g_(g) {}

    const SpaceFeatures& operator()(const Ucode& space) {
        auto it = cache_.find(space);
        if (it == cache_.end()) it = cache_.emplace(space, features_for(g_, space)).first;
        return it->second;
    }

private:
    const topology::TopologyGraph& g_;
    std::map<Ucode, SpaceFeatures> cache_;
};

}  // namespace

SpaceFeatures features_for(const topology::TopologyGraph& g, const Ucode& space) {
    SpaceFeatures f;
    f.space = space;
    f.floor_value = g.floor_value_of(space);
    auto hall = g.elevator_hall_on(f.floor_value);
    if (!hall)
        throw TopologyResolutionError("no elevator hall on floor " +
                                      std::to_string(f.floor_value));
    auto h = g.hops(space, *hall);
    if (!h)
        throw TopologyResolutionError("space " + space + " cannot reach its elevator hall " +
                                      *hall);
    f.hops = *h;
    return f;
}

std::vector<IntervalSample> pair_events(const ingest::EventStream& stream,
                                        const topology::TopologyGraph& g, Direction direction,
                                        double coarse_s) {
    if (!(coarse_s > 0)) throw ConfigError("coarse_s must be positive");
    FeatureTable features(g);
    std::vector<IntervalSample> out;

    if (direction == Direction::LightOffToElevator) {
        // Arrival times per floor, with a consumption cursor: pairing is
        // one-to-one and earlier light events claim arrivals first.
        std::map<int, std::vector<Timestamp>> arrivals;
        for (const EventRecord& r : stream.records)
            if (r.kind == EventKind::ElevatorArriving) arrivals[*r.floor].push_back(r.time);
        std::map<int, std::size_t> cursor;

        for (const EventRecord& r : stream.records) {
            if (r.kind != EventKind::LightOff) continue;
            const SpaceFeatures& f = features(r.space);
            auto it = arrivals.find(f.floor_value);
            if (it == arrivals.end()) continue;
            const std::vector<Timestamp>& times = it->second;
            std::size_t& cur = cursor[f.floor_value];
            while (cur < times.size() && times[cur] <= r.time) ++cur;
            if (cur == times.size()) continue;
            double delta = static_cast<double>(times[cur] - r.time);
            if (delta > coarse_s) continue;
            out.push_back({r.space, direction, delta, f.hops, f.floor_value, r.time});
            ++cur;
        }
        return out;
    }

    // ElevatorToLightOn: one arrival may serve several spaces; light
    // events are not consumed.
    std::map<Ucode, std::vector<Timestamp>> light_on;
    std::map<int, std::vector<Ucode>> spaces_by_floor;
    for (const EventRecord& r : stream.records) {
        if (r.kind != EventKind::LightOn) continue;
        auto [it, inserted] = light_on.try_emplace(r.space);
        if (inserted) spaces_by_floor[features(r.space).floor_value].push_back(r.space);
        it->second.push_back(r.time);
    }

    for (const EventRecord& r : stream.records) {
        if (r.kind != EventKind::ElevatorArriving) continue;
        auto it = spaces_by_floor.find(*r.floor);
        if (it == spaces_by_floor.end()) continue;
        for (const Ucode& space : it->second) {
            const std::vector<Timestamp>& times = light_on.at(space);
            auto lo = std::upper_bound(times.begin(), times.end(), r.time);
            if (lo == times.end()) continue;
            double delta = static_cast<double>(*lo - r.time);
            if (delta > coarse_s) continue;
            const SpaceFeatures& f = features(space);
            out.push_back({space, direction, delta, f.hops, f.floor_value, r.time});
        }
    }
    return out;
}

OlsModel fit_ols(const std::vector<IntervalSample>& samples) {
    if (samples.size() < 3)
        throw RankDeficiencyError("need at least 3 interval samples, got " +
                                  std::to_string(samples.size()));
    OlsModel m;
    m.direction = samples.front().direction;
    m.n = samples.size();

    // Normal equations for X = [1, hops, floor]: A = X'X, b = X'Y.
    double a[3][3] = {};
    double b[3] = {};
    for (const IntervalSample& s : samples) {
        if (s.direction != m.direction) throw Error("fit_ols: mixed directions");
        double x[3] = {1.0, static_cast<double>(s.hops), static_cast<double>(s.floor_value)};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) a[i][j] += x[i] * x[j];
            b[i] += x[i] * s.delta_t;
        }
    }

    double scale = std::max({a[0][0], a[1][1], a[2][2]});
    const double tol = 1e-12 * scale;
    auto pivot = [&](double v) {
        if (!(v > tol)) throw RankDeficiencyError("design matrix is rank-deficient");
        return std::sqrt(v);
    };

    // Cholesky A = L L'.
    double l00 = pivot(a[0][0]);
    double l10 = a[1][0] / l00;
    double l20 = a[2][0] / l00;
    double l11 = pivot(a[1][1] - l10 * l10);
    double l21 = (a[2][1] - l20 * l10) / l11;
    double l22 = pivot(a[2][2] - l20 * l20 - l21 * l21);

    // Forward then backward substitution.
    double z0 = b[0] / l00;
    double z1 = (b[1] - l10 * z0) / l11;
    double z2 = (b[2] - l20 * z0 - l21 * z1) / l22;
    double beta2 = z2 / l22;
    double beta1 = (z1 - l21 * beta2) / l11;
    double alpha = (z0 - l10 * beta1 - l20 * beta2) / l00;

    m.alpha = alpha;
    m.beta1 = beta1;
    m.beta2 = beta2;

    std::map<Ucode, std::pair<double, std::size_t>> acc;  // space -> (sum r^2, n)
    for (const IntervalSample& s : samples) {
        double r = s.delta_t - m.predict(s.hops, s.floor_value);
        auto& [sum, n] = acc[s.space];
        sum += r * r;
        ++n;
    }
    for (const auto& [space, sn] : acc)
        m.residual_std_per_space[space] = std::sqrt(sn.first / static_cast<double>(sn.second));
    return m;
}

std::string model_to_json(const OlsModel& model) {
    nlohmann::ordered_json j;
    j["direction"] = to_string(model.direction);
    j["alpha"] = model.alpha;
    j["beta1"] = model.beta1;
    j["beta2"] = model.beta2;
    j["n"] = model.n;
    nlohmann::ordered_json sigmas = nlohmann::ordered_json::object();
    for (const auto& [space, sigma] : model.residual_std_per_space) sigmas[space] = sigma;
    j["per_space_sigma"] = std::move(sigmas);
    return j.dump(2) + "\n";
}

OlsModel model_from_json(const std::string& json_text) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw Error(std::string("bad model JSON: ") + e.what());
    }
    OlsModel m;
    try {
        m.direction = direction_from_string(j.at("direction").get<std::string>());
        m.alpha = j.at("alpha").get<double>();
        m.beta1 = j.at("beta1").get<double>();
        m.beta2 = j.at("beta2").get<double>();
        m.n = j.at("n").get<std::size_t>();
        for (const auto& [space, sigma] : j.at("per_space_sigma").items())
            m.residual_std_per_space[space] = sigma.get<double>();
    } catch (const nlohmann::ordered_json::exception& e) {
        throw Error(std::string("bad model JSON: ") + e.what());
    }
    return m;
}

std::map<Ucode, Window> build_windows(const OlsModel& model,
                                      const std::vector<SpaceFeatures>& spaces, double k1,
                                      double k2) {
    if (k1 < 0 || k2 < 0) throw ConfigError("k1 and k2 must be non-negative");
    std::map<Ucode, Window> out;
    for (const SpaceFeatures& f : spaces) {
        Window w;
        w.space = f.space;
        w.direction = model.direction;
        w.k1 = k1;
        w.k2 = k2;
        w.mu = model.predict(f.hops, f.floor_value);
        auto it = model.residual_std_per_space.find(f.space);
        if (it == model.residual_std_per_space.end()) {
            w.available = false;
        } else {
            w.sigma = it->second;
            w.min = std::max(0.0, w.mu - k1 * w.sigma);
            w.max = w.mu + k2 * w.sigma;
        }
        out[f.space] = std::move(w);
    }
    return out;
}

std::vector<PairVerdict> detect(const ingest::EventStream& stream,
                                const topology::TopologyGraph& g,
                                const std::map<Ucode, Window>& windows, Direction direction,
                                double coarse_s) {
    std::vector<PairVerdict> out;
    for (IntervalSample& s : pair_events(stream, g, direction, coarse_s)) {
        PairVerdict v;
        v.sample = std::move(s);
        auto it = windows.find(v.sample.space);
        if (it == windows.end() || !it->second.available) {
            v.status = PairStatus::NotRelated;
            v.reason = PairReason::NoWindow;
        } else {
            const Window& w = it->second;
            double eps = 1e-9 * std::max({1.0, std::abs(w.min), std::abs(w.max)});
            bool in = v.sample.delta_t >= w.min - eps && v.sample.delta_t <= w.max + eps;
            v.status = in ? PairStatus::Conjunctive : PairStatus::NotRelated;
            v.reason = in ? PairReason::InWindow : PairReason::OutsideWindow;
        }
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<ConjunctionReport> report(const std::vector<PairVerdict>& verdicts,
                                      const ingest::EventStream& stream, Direction direction) {
    const EventKind trigger =
        direction == Direction::LightOffToElevator ? EventKind::LightOff : EventKind::LightOn;

    std::map<Ucode, std::size_t> room_events;
    for (const EventRecord& r : stream.records)
        if (r.kind == trigger) ++room_events[r.space];

    // A room event is conjunctive when at least one Conjunctive pair
    // contains it; for ElevatorToLightOn several arrivals may share one
    // light event, so count distinct events, not pairs.
    std::set<std::pair<Ucode, Timestamp>> conjunctive_events;
    for (const PairVerdict& v : verdicts) {
        if (v.sample.direction != direction)
            throw Error("report: verdict direction does not match");
        if (v.status == PairStatus::Conjunctive)
            conjunctive_events.emplace(v.sample.space, v.sample.room_event_time());
    }
    std::map<Ucode, std::size_t> conj_count;
    for (const auto& [space, time] : conjunctive_events) {
        (void)time;
        ++conj_count[space];
    }

    std::set<Ucode> spaces;
    for (const auto& [space, n] : room_events) {
        (void)n;
        spaces.insert(space);
    }
    for (const PairVerdict& v : verdicts) spaces.insert(v.sample.space);

    std::vector<ConjunctionReport> out;
    std::size_t total_room = 0, total_conj = 0;
    for (const Ucode& space : spaces) {
        ConjunctionReport r;
        r.space = space;
        auto re = room_events.find(space);
        r.count_room_events = re == room_events.end() ? 0 : re->second;
        auto ce = conj_count.find(space);
        r.count_conjunctions = ce == conj_count.end() ? 0 : ce->second;
        r.probability = r.count_room_events == 0
                            ? 0.0
                            : static_cast<double>(r.count_conjunctions) /
                                  static_cast<double>(r.count_room_events);
        total_room += r.count_room_events;
        total_conj += r.count_conjunctions;
        out.push_back(std::move(r));
    }
    ConjunctionReport totals;
    totals.space = "Count";
    totals.count_room_events = total_room;
    totals.count_conjunctions = total_conj;
    totals.probability =
        total_room == 0 ? 0.0 : static_cast<double>(total_conj) / static_cast<double>(total_room);
    out.push_back(std::move(totals));
    return out;
}

std::string report_to_csv(const std::vector<ConjunctionReport>& reports) {
    std::ostringstream out;
    out << "space,count_room,count_conj,probability\n";
    out.precision(6);
    for (const ConjunctionReport& r : reports)
        out << r.space << ',' << r.count_room_events << ',' << r.count_conjunctions << ','
            << r.probability << "\n";
    return out.str();
}

std::string verdicts_to_csv(const std::vector<PairVerdict>& verdicts) {
    std::ostringstream out;
    out << "space,direction,t_i,t_j,delta_t,hops,floor,status,reason\n";
    out.precision(15);
    for (const PairVerdict& v : verdicts) {
        const IntervalSample& s = v.sample;
        Timestamp t_j = s.time + static_cast<Timestamp>(std::llround(s.delta_t));
        out << s.space << ',' << to_string(s.direction) << ',' << format_iso8601(s.time) << ','
            << format_iso8601(t_j) << ',' << s.delta_t << ',' << s.hops << ',' << s.floor_value
            << ',' << (v.status == PairStatus::Conjunctive ? "Conjunctive" : "NotRelated") << ','
            << (v.reason == PairReason::InWindow      ? "in-window"
                : v.reason == PairReason::OutsideWindow ? "outside-window"
                                                        : "no-window")
            << "\n";
    }
    return out.str();
}

}  // namespace sbk::conjunction
