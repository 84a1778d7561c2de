#include "sbk/timeprob.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

namespace sbk::timeprob {

using ingest::EventKind;
using ingest::EventRecord;

HourlyProbTable build_table(const std::vector<EventRecord>& records, int utc_offset_seconds) {
    HourlyProbTable t;
    t.utc_offset_seconds = utc_offset_seconds;
    if (records.empty()) return t;

    t.element = records.front().element;
    t.kind = records.front().kind;
    std::vector<double> hours;
    hours.reserve(records.size());
    std::array<std::size_t, 24> counts{};
    for (const EventRecord& r : records) {
        if (r.element != t.element || r.kind != t.kind)
            throw Error("build_table needs records of a single (element, kind)");
        double h = hour_of_day(r.time, utc_offset_seconds);
        hours.push_back(h);
        counts[static_cast<std::size_t>(h)]++;
    }
    t.count = records.size();
    for (std::size_t h = 0; h < 24; ++h)
        t.bins[h] = static_cast<double>(counts[h]) / static_cast<double>(t.count);

    std::sort(hours.begin(), hours.end());
    t.median_hour = hours[(hours.size() - 1) / 2];
    double mean = 0;
    for (double h : hours) mean += h;
    mean /= static_cast<double>(hours.size());
    double var = 0;
    for (double h : hours) var += (h - mean) * (h - mean);
    var /= static_cast<double>(hours.size());
    t.std_hour = std::sqrt(var);
    return t;
}

std::vector<HourlyProbTable> build_tables(const ingest::EventStream& stream,
                                          int utc_offset_seconds) {
    std::map<std::pair<topology::Ucode, std::string>, std::vector<EventRecord>> groups;
    for (const EventRecord& r : stream.records)
        groups[{r.element, ingest::to_string(r.kind)}].push_back(r);
    std::vector<HourlyProbTable> out;
    out.reserve(groups.size());
    for (const auto& [key, records] : groups) {
        (void)key;
        out.push_back(build_table(records, utc_offset_seconds));
    }
    return out;
}

std::string tables_to_csv(const std::vector<HourlyProbTable>& tables) {
    std::ostringstream out;
    out << "element,kind";
    for (int h = 0; h < 24; ++h) out << ",h" << h;
    out << ",median,std,count\n";
    out << std::setprecision(17);
    for (const HourlyProbTable& t : tables) {
        out << t.element << ',' << ingest::to_string(t.kind);
        for (double b : t.bins) out << ',' << b;
        out << ',' << t.median_hour << ',' << t.std_hour << ',' << t.count << "\n";
    }
    return out.str();
}

double DensityEstimate::evaluate(double hour) const {
    double h = std::fmod(hour, 24.0);
    if (h < 0) h += 24.0;
    if (method_ == DensityMethod::Histogram24) {
        return bins[static_cast<std::size_t>(h)];
    }
    // Circular Gaussian kernel sum: wrap each sample's images over
    // +-4 periods, far beyond any reasonable bandwidth's reach.
    const double inv = 1.0 / (bandwidth_ * std::sqrt(2.0 * std::numbers::pi));
    double sum = 0;
    for (double x : sample_hours_) {
        for (int k = -4; k <= 4; ++k) {
            double d = (h - x - 24.0 * k) / bandwidth_;
            sum += inv * std::exp(-0.5 * d * d);
        }
    }
    return sum / static_cast<double>(sample_hours_.size());
}

DensityEstimate estimate_density(const std::vector<EventRecord>& records, DensityMethod method,
                                 double bandwidth, int utc_offset_seconds) {
    DensityEstimate d;
    d.method_ = method;
    if (method == DensityMethod::Histogram24) {
        d.bins = build_table(records, utc_offset_seconds).bins;
        return d;
    }
    if (records.empty()) throw Error("kernel density estimation needs at least one event");
    if (!(bandwidth > 0)) throw Error("kde bandwidth must be positive");
    d.bandwidth_ = bandwidth;
    d.sample_hours_.reserve(records.size());
    for (const EventRecord& r : records)
        d.sample_hours_.push_back(hour_of_day(r.time, utc_offset_seconds));
    return d;
}

AnomalyVerdict classify(const EventRecord& event, const HourlyProbTable& table,
                        double threshold) {
    if (event.kind != table.kind)
        throw Error("classify: event kind " + ingest::to_string(event.kind) +
                    " does not match table kind " + ingest::to_string(table.kind));
    AnomalyVerdict v;
    v.event = event;
    v.threshold = threshold;
    double h = hour_of_day(event.time, table.utc_offset_seconds);
    v.probability = table.bins[static_cast<std::size_t>(h)];
    v.status = v.probability < threshold ? AnomalyStatus::Abnormal : AnomalyStatus::Normal;
    return v;
}

double suggest_threshold(const HourlyProbTable& table, const ThresholdPolicy& policy) {
    if (table.count == 0) throw Error("suggest_threshold: empty table");
    if (policy.kind == ThresholdPolicy::Kind::Fixed) return policy.value;

    const double q = policy.value;
    std::vector<double> candidates{0.0};
    candidates.insert(candidates.end(), table.bins.begin(), table.bins.end());
    std::sort(candidates.begin(), candidates.end());
    double best = 0.0;
    for (double c : candidates) {
        double mass = 0;
        for (double b : table.bins)
            if (b <= c) mass += b;
        if (mass <= q) best = std::max(best, c);
    }
    return best;
}

}  // namespace sbk::timeprob
