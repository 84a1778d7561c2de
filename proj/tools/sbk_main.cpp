// sbk: smart-building knowledge engine CLI. Subcommands expose the
// pipeline stages over plain files; exit codes are 0 success, 1
// runtime/data error, 2 usage or query-syntax error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "httplib.h"

#include "sbk/conjunction.hpp"
#include "sbk/ingest.hpp"
#include "sbk/pipeline.hpp"
#include "sbk/query.hpp"
#include "sbk/simulator.hpp"
#include "sbk/timeprob.hpp"
#include "sbk/topology.hpp"

namespace {

std::string read_file_or_stdin(const std::string& path) {
    if (path == "-") {
        std::ostringstream buf;
        buf << std::cin.rdbuf();
        return buf.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw sbk::Error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_output(const std::string& out_path, const std::string& content) {
    if (out_path.empty() || out_path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw sbk::Error("cannot write " + out_path);
    out << content;
}

sbk::ingest::EventStream load_events(const std::string& events_path,
                                     const sbk::topology::TopologyGraph& g) {
    sbk::ingest::ParsedSamples parsed = sbk::ingest::parse_samples_file(events_path);
    if (!parsed.errors.empty()) {
        const sbk::ingest::LineError& first = parsed.errors.front();
        throw sbk::Error(events_path + ": line " + std::to_string(first.line) + ": " +
                         first.message);
    }
    return sbk::ingest::normalize(parsed.samples, g, events_path);
}

sbk::conjunction::Direction parse_direction(const std::string& d) {
    if (d == "a" || d == "LightOffToElevator") return sbk::conjunction::Direction::LightOffToElevator;
    if (d == "b" || d == "ElevatorToLightOn") return sbk::conjunction::Direction::ElevatorToLightOn;
    throw sbk::ConfigError("direction must be a|b or a full direction name");
}

std::vector<sbk::conjunction::PairVerdict> detect_with_model(
    const sbk::topology::TopologyGraph& g, const sbk::ingest::EventStream& stream,
    const sbk::conjunction::OlsModel& model, double k1, double k2, double coarse_s) {
    std::vector<sbk::conjunction::SpaceFeatures> features;
    for (const auto& [space, sigma] : model.residual_std_per_space) {
        (void)sigma;
        features.push_back(sbk::conjunction::features_for(g, space));
    }
    auto windows = sbk::conjunction::build_windows(model, features, k1, k2);
    return sbk::conjunction::detect(stream, g, windows, model.direction, coarse_s);
}

int run_serve(const std::string& topology_path, const std::string& events_path,
              const std::string& bind) {
    auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw sbk::ConfigError("--bind must be host:port");
    const std::string host = bind.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(bind.substr(colon + 1));
    } catch (const std::exception&) {
        throw sbk::ConfigError("bad port in --bind");
    }

    auto g = sbk::topology::load_topology_file(topology_path);
    sbk::ingest::ParsedSamples parsed = sbk::ingest::parse_samples_file(events_path);
    if (!parsed.errors.empty())
        throw sbk::Error(events_path + ": line " + std::to_string(parsed.errors.front().line) +
                         ": " + parsed.errors.front().message);
    auto store = sbk::ingest::StatusStore::build(parsed.samples, g);

    httplib::Server server;
    server.Get("/v1/status", [&store](const httplib::Request& req, httplib::Response& res) {
        if (!req.has_param("ucode")) {
            res.status = 400;
            res.set_content("{\"error\":\"missing ucode parameter\"}", "application/json");
            return;
        }
        std::optional<sbk::Timestamp> from, to;
        try {
            if (req.has_param("from")) from = sbk::parse_iso8601(req.get_param_value("from"));
            if (req.has_param("to")) to = sbk::parse_iso8601(req.get_param_value("to"));
        } catch (const sbk::ParseError& e) {
            res.status = 400;
            res.set_content(std::string("{\"error\":\"") + e.what() + "\"}", "application/json");
            return;
        }
        try {
            res.set_content(store.payload(req.get_param_value("ucode"), from, to),
                            "application/json");
        } catch (const sbk::UnknownEntityError&) {
            res.status = 404;
            res.set_content("{\"error\":\"unknown ucode\"}", "application/json");
        }
    });

    if (port == 0) {
        port = server.bind_to_any_port(host);
        if (port < 0) throw sbk::Error("cannot bind to " + host);
        std::cerr << "listening on " << host << ":" << port << "\n";
        return server.listen_after_bind() ? 0 : 1;
    }
    std::cerr << "listening on " << host << ":" << port << "\n";
    return server.listen(host, port) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"smart-building knowledge engine"};
    app.require_subcommand(1);

    std::string topology_path, events_path, out_path, query_path = "-";
    std::string model_path, config_path, bind = "127.0.0.1:8080", direction = "a";
    std::string out_dir;
    double pbar = 0.1, coarse_s = sbk::conjunction::kDefaultCoarseSeconds, k1 = 1, k2 = 2;
    int utc_offset = 0;
    std::optional<std::uint64_t> seed_override;

    auto* query_cmd = app.add_subcommand("query", "run a query against the topology");
    query_cmd->add_option("--topology", topology_path, "topology JSON")->required();
    query_cmd->add_option("--query,query", query_path, "query file, - for stdin");

    auto* stats_cmd = app.add_subcommand("stats", "hourly probability tables as CSV");
    stats_cmd->add_option("--topology", topology_path)->required();
    stats_cmd->add_option("--events", events_path, "samples JSONL")->required();
    stats_cmd->add_option("--out", out_path, "output file, - for stdout");
    stats_cmd->add_option("--utc-offset", utc_offset, "seconds east of UTC");

    auto* calibrate_cmd = app.add_subcommand("calibrate", "fit the interval model");
    calibrate_cmd->add_option("--topology", topology_path)->required();
    calibrate_cmd->add_option("--events", events_path)->required();
    calibrate_cmd->add_option("--direction", direction, "a|b");
    calibrate_cmd->add_option("--coarse-s", coarse_s, "coarse pair filter, seconds");
    calibrate_cmd->add_option("--out", out_path, "model JSON output");

    auto* detect_cmd = app.add_subcommand("detect", "judge event pairs by window membership");
    detect_cmd->add_option("--topology", topology_path)->required();
    detect_cmd->add_option("--events", events_path)->required();
    detect_cmd->add_option("--model", model_path, "model JSON from calibrate")->required();
    detect_cmd->add_option("--coarse-s", coarse_s);
    detect_cmd->add_option("--k1", k1);
    detect_cmd->add_option("--k2", k2);
    detect_cmd->add_option("--out", out_path);

    auto* report_cmd = app.add_subcommand("report", "per-space conjunction counts");
    report_cmd->add_option("--topology", topology_path)->required();
    report_cmd->add_option("--events", events_path)->required();
    report_cmd->add_option("--model", model_path)->required();
    report_cmd->add_option("--coarse-s", coarse_s);
    report_cmd->add_option("--k1", k1);
    report_cmd->add_option("--k2", k2);
    report_cmd->add_option("--out", out_path);

    auto* pipeline_cmd = app.add_subcommand("pipeline", "run every stage into a directory");
    pipeline_cmd->add_option("--topology", topology_path)->required();
    pipeline_cmd->add_option("--events", events_path)->required();
    pipeline_cmd->add_option("--out", out_dir, "output directory")->required();
    pipeline_cmd->add_option("--pbar", pbar, "anomaly threshold");
    pipeline_cmd->add_option("--coarse-s", coarse_s);
    pipeline_cmd->add_option("--k1", k1);
    pipeline_cmd->add_option("--k2", k2);
    pipeline_cmd->add_option("--utc-offset", utc_offset);

    auto* simulate_cmd = app.add_subcommand("simulate", "generate a synthetic trace");
    simulate_cmd->add_option("--config", config_path, "simulator config JSON")->required();
    simulate_cmd->add_option("--out", out_dir, "output directory")->required();
    simulate_cmd->add_option("--seed", seed_override, "override the config seed");

    auto* serve_cmd = app.add_subcommand("serve", "GET endpoint over a loaded store");
    serve_cmd->add_option("--topology", topology_path)->required();
    serve_cmd->add_option("--events", events_path)->required();
    serve_cmd->add_option("--bind", bind, "host:port, port 0 picks a free one");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (query_cmd->parsed()) {
            auto g = sbk::topology::load_topology_file(topology_path);
            std::string text = read_file_or_stdin(query_path);
            try {
                auto ast = sbk::query::parse_query(text);
                auto table = sbk::query::execute(ast, g);
                std::cout << sbk::query::to_csv(table);
            } catch (const sbk::ParseError& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 2;
            }
        } else if (stats_cmd->parsed()) {
            auto g = sbk::topology::load_topology_file(topology_path);
            auto stream = load_events(events_path, g);
            write_output(out_path, sbk::timeprob::tables_to_csv(
                                       sbk::timeprob::build_tables(stream, utc_offset)));
        } else if (calibrate_cmd->parsed()) {
            auto g = sbk::topology::load_topology_file(topology_path);
            auto stream = load_events(events_path, g);
            auto samples =
                sbk::conjunction::pair_events(stream, g, parse_direction(direction), coarse_s);
            write_output(out_path, sbk::conjunction::model_to_json(
                                       sbk::conjunction::fit_ols(samples)));
        } else if (detect_cmd->parsed()) {
            auto g = sbk::topology::load_topology_file(topology_path);
            auto stream = load_events(events_path, g);
            auto model = sbk::conjunction::model_from_json(read_file_or_stdin(model_path));
            auto verdicts = detect_with_model(g, stream, model, k1, k2, coarse_s);
            write_output(out_path, sbk::conjunction::verdicts_to_csv(verdicts));
        } else if (report_cmd->parsed()) {
            auto g = sbk::topology::load_topology_file(topology_path);
            auto stream = load_events(events_path, g);
            auto model = sbk::conjunction::model_from_json(read_file_or_stdin(model_path));
            auto verdicts = detect_with_model(g, stream, model, k1, k2, coarse_s);
            auto rows = sbk::conjunction::report(verdicts, stream, model.direction);
            write_output(out_path, sbk::conjunction::report_to_csv(rows));
        } else if (pipeline_cmd->parsed()) {
            sbk::pipeline::PipelineOptions opt;
            opt.topology_path = topology_path;
            opt.events_path = events_path;
            opt.out_dir = out_dir;
            opt.pbar = pbar;
            opt.coarse_s = coarse_s;
            opt.k1 = k1;
            opt.k2 = k2;
            opt.utc_offset_seconds = utc_offset;
            sbk::pipeline::run_pipeline(opt);
        } else if (simulate_cmd->parsed()) {
            auto cfg = sbk::simulator::sim_config_from_file(config_path);
            if (seed_override) cfg.seed = *seed_override;
            if (cfg.topology_path.empty())
                throw sbk::ConfigError("simulator config has no 'topology' path");
            std::filesystem::path topo(cfg.topology_path);
            if (topo.is_relative())
                topo = std::filesystem::path(config_path).parent_path() / topo;
            auto g = sbk::topology::load_topology_file(topo.string());
            auto bundle = sbk::simulator::simulate(g, cfg);
            std::filesystem::create_directories(out_dir);
            write_output((std::filesystem::path(out_dir) / "samples.jsonl").string(),
                         bundle.samples_jsonl());
            write_output((std::filesystem::path(out_dir) / "truth.csv").string(),
                         bundle.truth_csv());
        } else if (serve_cmd->parsed()) {
            return run_serve(topology_path, events_path, bind);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
