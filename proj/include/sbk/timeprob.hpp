#pragma once

// Hourly occurrence-probability tables per (element, event kind),
// density estimates over time-of-day, and the strict-threshold
// abnormality rule. Hours are wall-clock in a fixed UTC offset; the
// offset is stored in each table so classification stays consistent
// with construction.

#include <array>
#include <string>
#include <vector>

#include "sbk/errors.hpp"
#include "sbk/ingest.hpp"

namespace sbk::timeprob {

struct HourlyProbTable {
    topology::Ucode element;
    ingest::EventKind kind = ingest::EventKind::LightOn;
    std::array<double, 24> bins{};  // bin h covers hour [h, h+1)
    std::size_t count = 0;
    double median_hour = 0;  // fractional hours; lower-middle for even counts
    double std_hour = 0;     // population form
    int utc_offset_seconds = 0;

    bool operator==(const HourlyProbTable&) const = default;
};

// All records must share one (element, kind); empty input gives an
// all-zero table. Median and std are computed over fractional event
// hours, bins over whole-hour buckets.
HourlyProbTable build_table(const std::vector<ingest::EventRecord>& records,
                            int utc_offset_seconds = 0);

// Group a stream by (element, kind) and build one table per group,
// ordered by (element, kind name) for stable output.
std::vector<HourlyProbTable> build_tables(const ingest::EventStream& stream,
                                          int utc_offset_seconds = 0);

// CSV layout mirrors the table: element,kind,h0..h23,median,std,count.
std::string tables_to_csv(const std::vector<HourlyProbTable>& tables);

enum class DensityMethod { Histogram24, GaussianKde };

// Density over hour-of-day in events per hour. Histogram24 is the
// piecewise-constant table density; GaussianKde is the standard kernel
// sum wrapped circularly over 24 h. Integral over [0,24) is 1 when the
// estimate was built from at least one event.
class DensityEstimate {
public:
    DensityMethod method() const { return method_; }
    double bandwidth() const { return bandwidth_; }
    double evaluate(double hour) const;

private:
    friend DensityEstimate estimate_density(const std::vector<ingest::EventRecord>&,
                                            DensityMethod, double, int);
    DensityMethod method_ = DensityMethod::Histogram24;
    double bandwidth_ = 0;                // hours, kde only
    std::array<double, 24> bins{};        // histogram24
    std::vector<double> sample_hours_;    // kde
};

// bandwidth applies to GaussianKde only (default 1.0 h). Kde requires
// at least one record.
DensityEstimate estimate_density(const std::vector<ingest::EventRecord>& records,
                                 DensityMethod method,
                                 double bandwidth = 1.0,
                                 int utc_offset_seconds = 0);

enum class AnomalyStatus { Normal, Abnormal };

struct AnomalyVerdict {
    ingest::EventRecord event;
    double probability = 0;  // bin value at the event's hour
    double threshold = 0;
    AnomalyStatus status = AnomalyStatus::Normal;
};

// Abnormal iff probability < threshold, strictly. Kind mismatch
// between event and table is an error.
AnomalyVerdict classify(const ingest::EventRecord& event, const HourlyProbTable& table,
                        double threshold);

struct ThresholdPolicy {
    enum class Kind { Fixed, Mass };
    Kind kind = Kind::Fixed;
    double value = 0.1;

    static ThresholdPolicy fixed(double x) { return {Kind::Fixed, x}; }
    static ThresholdPolicy mass(double q) { return {Kind::Mass, q}; }
};

// fixed(x) returns x. mass(q) returns the largest candidate c, drawn
// from {0} and the bin values, whose at-most-c bins hold total mass
// <= q; with the strict classify rule this excludes at most q of the
// observed mass. Empty tables are an error.
double suggest_threshold(const HourlyProbTable& table, const ThresholdPolicy& policy);

}  // namespace sbk::timeprob
