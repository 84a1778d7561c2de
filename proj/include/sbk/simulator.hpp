#pragma once

// Deterministic trace generator: synthetic occupants move through the
// building on Gaussian schedules, every elevator trip they take is
// recorded as ground truth, and ambient background elevator traffic
// (rush-hour clustered by default) supplies the coincidental event
// pairs a real building would show. Identical (config, seed) yields
// byte-identical output.

#include <cstdint>
#include <string>
#include <vector>

#include "sbk/conjunction.hpp"
#include "sbk/errors.hpp"
#include "sbk/ingest.hpp"

namespace sbk::simulator {

struct OccupantProfile {
    std::string id;
    topology::Ucode home_space;
    std::string role;  // "staff" | "student"
    double arrive_mean = 9.0;  // hours
    double arrive_std = 0.5;
    double leave_mean = 17.0;
    double leave_std = 0.5;
    double elevator_affinity = 1.0;  // probability per trip
    double walk_seconds_per_hop = 30.0;
    double noise_std = 0.0;  // seconds, walking noise
};

enum class BackgroundPattern { Rush, Uniform };

struct SimConfig {
    std::string topology_path;  // consumed by the CLI, not simulate()
    int days = 1;
    std::uint64_t seed = 0;
    std::string start_date = "2023-05-01";
    int entry_floor = 1;
    topology::Ucode elevator_zone = "Elevator";
    double elevator_base_s = 10.0;
    double elevator_per_floor_s = 5.0;
    double board_delay_s = 3.0;
    int background_trips_per_day = 0;
    BackgroundPattern background_pattern = BackgroundPattern::Rush;
    std::vector<OccupantProfile> profiles;
};

SimConfig sim_config_from_json(const std::string& json_text);
SimConfig sim_config_from_file(const std::string& path);

struct TruthTuple {
    topology::Ucode space;
    conjunction::Direction direction = conjunction::Direction::LightOffToElevator;
    Timestamp t_i = 0;  // room light event (dir a) or elevator arrival (dir b)
    Timestamp t_j = 0;
    Timestamp delta_t() const { return t_j - t_i; }
};

struct TraceBundle {
    std::vector<ingest::SensorSample> samples;  // time-sorted, ties in generation order
    std::vector<TruthTuple> truth;
    std::uint64_t seed = 0;

    std::string samples_jsonl() const;
    std::string truth_csv() const;
};

// Per occupant-day: a morning arrival trip (landing call at the entry
// floor, car call, arrival on the home floor, light on after the walk)
// and an evening leave trip (light off, walk, landing call, arrival on
// the home floor). Trips that skip the elevator (affinity roll, or a
// home on the entry floor) emit only light events and no truth. The
// car keeps its position between trips; latency from floor c to f is
// base_s + per_floor_s * |levels(c) - levels(f)|.
TraceBundle simulate(const topology::TopologyGraph& g, const SimConfig& config);

struct Score {
    double precision = 1.0;  // 1.0 on an empty verdict set
    double recall = 0.0;
    std::size_t truth_count = 0;
    std::size_t conjunctive_count = 0;
    std::size_t matched = 0;
};

// Matches Conjunctive verdicts to truth tuples by (space, direction,
// t_i within +-1 s); each truth tuple is consumed by at most one
// verdict.
Score score_detector(const std::vector<TruthTuple>& truth,
                     const std::vector<conjunction::PairVerdict>& verdicts);

}  // namespace sbk::simulator
