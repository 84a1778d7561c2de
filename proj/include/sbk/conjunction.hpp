#pragma once

// Cross-space event conjunction: pair room light events with elevator
// arrivals under a coarse time filter, calibrate expected intervals by
// an ordinary-least-squares fit on (hops, floor), build per-space
// acceptance windows, and judge pairs by window membership.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sbk/errors.hpp"
#include "sbk/ingest.hpp"

namespace sbk::conjunction {

enum class Direction { LightOffToElevator, ElevatorToLightOn };

std::string to_string(Direction d);
Direction direction_from_string(std::string_view s);

struct IntervalSample {
    topology::Ucode space;       // the room whose light event participates
    Direction direction = Direction::LightOffToElevator;
    double delta_t = 0;          // seconds, 0 < delta_t <= coarse_s
    int hops = 0;                // room to its floor's elevator hall
    int floor_value = 0;
    Timestamp time = 0;          // first event of the pair

    bool operator==(const IntervalSample&) const = default;

    // Timestamp of the room's light event: the first event for
    // LightOffToElevator, the second for ElevatorToLightOn.
    Timestamp room_event_time() const;
};

inline constexpr double kDefaultCoarseSeconds = 300.0;

// LightOffToElevator pairs each LightOff with the first unconsumed
// ElevatorArriving on the room's floor (one-to-one, earlier light
// events match first). ElevatorToLightOn pairs each arrival with the
// first subsequent LightOn per space on that floor; one arrival may
// serve several spaces and arrivals are not consumed. Both require
// 0 < delta_t <= coarse_s.
std::vector<IntervalSample> pair_events(const ingest::EventStream& stream,
                                        const topology::TopologyGraph& g,
                                        Direction direction,
                                        double coarse_s = kDefaultCoarseSeconds);

struct OlsModel {
    Direction direction = Direction::LightOffToElevator;
    double alpha = 0;  // seconds
    double beta1 = 0;  // seconds per hop
    double beta2 = 0;  // seconds per floor unit
    std::size_t n = 0;
    std::map<topology::Ucode, double> residual_std_per_space;  // uncentered RMS

    double predict(int hops, int floor_value) const {
        return alpha + beta1 * hops + beta2 * floor_value;
    }
};

// Solves the normal equations for Y = alpha + beta1*hops +
// beta2*floor. Throws RankDeficiencyError when n < 3 or the design
// matrix is rank-deficient (e.g. single hop count and single floor).
OlsModel fit_ols(const std::vector<IntervalSample>& samples);

std::string model_to_json(const OlsModel& model);
OlsModel model_from_json(const std::string& json_text);

struct SpaceFeatures {
    topology::Ucode space;
    int hops = 0;
    int floor_value = 0;
};

// Features of a space for prediction: hop distance to its floor's
// elevator hall plus the floor value. Throws TopologyResolutionError
// when the space has no floor, the floor has no elevator hall, or the
// hall is unreachable.
SpaceFeatures features_for(const topology::TopologyGraph& g, const topology::Ucode& space);

struct Window {
    topology::Ucode space;
    Direction direction = Direction::LightOffToElevator;
    bool available = true;  // false: no training samples for the space
    double mu = 0;
    double sigma = 0;
    double k1 = 1;
    double k2 = 2;
    double min = 0;  // max(0, mu - k1*sigma)
    double max = 0;  // mu + k2*sigma
};

// mu is the model prediction for each space's features; sigma is that
// space's residual std from the model. Spaces absent from the model's
// residual map get an unavailable window.
std::map<topology::Ucode, Window> build_windows(const OlsModel& model,
                                                const std::vector<SpaceFeatures>& spaces,
                                                double k1 = 1, double k2 = 2);

enum class PairStatus { Conjunctive, NotRelated };
enum class PairReason { InWindow, OutsideWindow, NoWindow };

struct PairVerdict {
    IntervalSample sample;
    PairStatus status = PairStatus::NotRelated;
    PairReason reason = PairReason::NoWindow;
};

// Re-pairs the stream under the coarse filter, then judges each pair
// by closed-interval window membership. Endpoints tolerate a 1e-9
// relative slack so noise-free point windows admit their own samples
// across floating-point jitter. Pairs in spaces without an available
// window are NotRelated with reason NoWindow.
std::vector<PairVerdict> detect(const ingest::EventStream& stream,
                                const topology::TopologyGraph& g,
                                const std::map<topology::Ucode, Window>& windows,
                                Direction direction,
                                double coarse_s = kDefaultCoarseSeconds);

struct ConjunctionReport {
    topology::Ucode space;  // "Count" for the totals row
    std::size_t count_room_events = 0;
    std::size_t count_conjunctions = 0;  // distinct room events in a conjunctive pair
    double probability = 0;              // 0 when count_room_events is 0
};

// Per-space counts and ratio, space-ordered, with a totals row labeled
// "Count" appended. Room events are the direction's trigger light
// events (LightOff for LightOffToElevator, LightOn for the reverse); a
// room event counts as conjunctive when it participates in at least
// one Conjunctive pair. All verdicts must carry the given direction.
std::vector<ConjunctionReport> report(const std::vector<PairVerdict>& verdicts,
                                      const ingest::EventStream& stream,
                                      Direction direction);

// CSV columns: space,count_room,count_conj,probability.
std::string report_to_csv(const std::vector<ConjunctionReport>& reports);

// CSV columns: space,direction,t_i,t_j,delta_t,hops,floor,status,reason.
std::string verdicts_to_csv(const std::vector<PairVerdict>& verdicts);

}  // namespace sbk::conjunction
