#pragma once

// File-based pipeline: ingest -> hourly stats -> anomaly verdicts ->
// pairing -> regression -> windows -> detection -> report, each stage
// handing the next a plain CSV/JSON file under the output directory.
// Reruns over identical inputs write byte-identical files.

#include <string>

#include "sbk/errors.hpp"

namespace sbk::pipeline {

struct PipelineOptions {
    std::string topology_path;
    std::string events_path;  // sensor samples, JSON Lines
    std::string out_dir;
    double pbar = 0.1;
    double coarse_s = 300.0;
    double k1 = 1.0;
    double k2 = 2.0;
    int utc_offset_seconds = 0;
};

class StageError : public Error {
public:
    StageError(const std::string& stage, const std::string& cause)
        : Error("stage " + stage + ": " + cause), stage_(stage) {}

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

// Writes stats.csv, anomalies.csv, model.json, verdicts.csv and
// report.csv into out_dir (created if missing). The first failing
// stage aborts with a StageError naming it. The conjunction files
// cover the LightOffToElevator direction; the calibrate/detect
// subcommands expose the reverse one.
void run_pipeline(const PipelineOptions& options);

}  // namespace sbk::pipeline
