#include "sbk/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "sbk/conjunction.hpp"
#include "sbk/ingest.hpp"
#include "sbk/timeprob.hpp"
#include "sbk/topology.hpp"

namespace sbk::pipeline {

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out) throw Error("short write to " + path.string());
}

template <typename F>
auto stage(const std::string& name, F&& f) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

std::string anomalies_csv(const ingest::EventStream& stream,
                          const std::vector<timeprob::HourlyProbTable>& tables, double pbar) {
    std::map<std::pair<topology::Ucode, ingest::EventKind>, const timeprob::HourlyProbTable*>
        by_key;
    for (const timeprob::HourlyProbTable& t : tables) by_key[{t.element, t.kind}] = &t;

    std::ostringstream out;
    out << "element,space,kind,time,probability,threshold,status\n";
    out.precision(17);
    for (const ingest::EventRecord& r : stream.records) {
        if (r.kind != ingest::EventKind::LightOn && r.kind != ingest::EventKind::LightOff)
            continue;
        const timeprob::HourlyProbTable* table = by_key.at({r.element, r.kind});
        timeprob::AnomalyVerdict v = timeprob::classify(r, *table, pbar);
        out << r.element << ',' << r.space << ',' << ingest::to_string(r.kind) << ','
            << format_iso8601(r.time) << ',' << v.probability << ',' << v.threshold << ','
            << (v.status == timeprob::AnomalyStatus::Abnormal ? "Abnormal" : "Normal") << "\n";
    }
    return out.str();
}

}  // namespace

void run_pipeline(const PipelineOptions& options) {
    if (!(options.coarse_s > 0)) throw StageError("config", "coarse_s must be positive");
    if (options.k1 < 0 || options.k2 < 0) throw StageError("config", "k1, k2 must be >= 0");
    if (options.pbar < 0 || options.pbar > 1)
        throw StageError("config", "pbar must be within [0, 1]");

    const std::filesystem::path out_dir(options.out_dir);
    stage("output", [&] {
        std::filesystem::create_directories(out_dir);
        return 0;
    });

    topology::TopologyGraph g = stage("topology", [&] {
        return topology::load_topology_file(options.topology_path);
    });

    ingest::EventStream stream = stage("ingest", [&] {
        ingest::ParsedSamples parsed = ingest::parse_samples_file(options.events_path);
        if (!parsed.errors.empty()) {
            const ingest::LineError& first = parsed.errors.front();
            throw Error("line " + std::to_string(first.line) + ": " + first.message +
                        (parsed.errors.size() > 1
                             ? " (and " + std::to_string(parsed.errors.size() - 1) + " more)"
                             : ""));
        }
        return ingest::normalize(parsed.samples, g, options.events_path);
    });

    std::vector<timeprob::HourlyProbTable> tables = stage("stats", [&] {
        auto t = timeprob::build_tables(stream, options.utc_offset_seconds);
        write_file(out_dir / "stats.csv", timeprob::tables_to_csv(t));
        return t;
    });

    stage("anomalies", [&] {
        write_file(out_dir / "anomalies.csv", anomalies_csv(stream, tables, options.pbar));
        return 0;
    });

    conjunction::OlsModel model = stage("calibrate", [&] {
        auto samples = conjunction::pair_events(
            stream, g, conjunction::Direction::LightOffToElevator, options.coarse_s);
        auto m = conjunction::fit_ols(samples);
        write_file(out_dir / "model.json", conjunction::model_to_json(m));
        return m;
    });

    std::vector<conjunction::PairVerdict> verdicts = stage("detect", [&] {
        std::vector<conjunction::SpaceFeatures> features;
        for (const auto& [space, sigma] : model.residual_std_per_space) {
            (void)sigma;
            features.push_back(conjunction::features_for(g, space));
        }
        auto windows = conjunction::build_windows(model, features, options.k1, options.k2);
        auto v = conjunction::detect(stream, g, windows,
                                     conjunction::Direction::LightOffToElevator,
                                     options.coarse_s);
        write_file(out_dir / "verdicts.csv", conjunction::verdicts_to_csv(v));
        return v;
    });

    stage("report", [&] {
        auto rows = conjunction::report(verdicts, stream,
                                        conjunction::Direction::LightOffToElevator);
        write_file(out_dir / "report.csv", conjunction::report_to_csv(rows));
        return 0;
    });
}

}  // namespace sbk::pipeline
