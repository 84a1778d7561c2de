// Release gate: ten checks, one [PASS]/[FAIL] line each, exit code =
// number of failures. Tolerances are pinned here, not configurable.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "sbk/conjunction.hpp"
#include "sbk/errors.hpp"
#include "sbk/ingest.hpp"
#include "sbk/pipeline.hpp"
#include "sbk/query.hpp"
#include "sbk/simulator.hpp"
#include "sbk/timeprob.hpp"
#include "sbk/timeutil.hpp"
#include "sbk/topology.hpp"
#include "sbk/triples.hpp"

namespace fs = std::filesystem;
using namespace sbk;
using Clock = std::chrono::steady_clock;

namespace {

std::string data_path(const std::string& name) { return std::string(SBK_DATA_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// xorshift64*, independent of the library's generator
struct Rand {
    std::uint64_t s;
    explicit Rand(std::uint64_t seed) : s(seed) {}
    std::uint64_t next() {
        s ^= s >> 12;
        s ^= s << 25;
        s ^= s >> 27;
        return s * 0x2545f4914f6cdd1dull;
    }
    std::uint64_t below(std::uint64_t n) { return next() % n; }
    double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

struct Gate {
    int failures = 0;

    void run(int number, const std::string& label, const std::function<std::string()>& body) {
        std::string detail;
        try {
            detail = body();
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        if (detail.empty()) {
            std::printf("[PASS] %2d: %s\n", number, label.c_str());
        } else {
            std::printf("[FAIL] %2d: %s: %s\n", number, label.c_str(), detail.c_str());
            ++failures;
        }
        std::fflush(stdout);
    }
};

std::string check(bool ok, const std::string& msg) { return ok ? "" : msg; }

// ---- shared fixtures -------------------------------------------------

ingest::EventRecord light_event(double hour, ingest::EventKind kind = ingest::EventKind::LightOn,
                                const std::string& element = "light1",
                                const std::string& space = "R1") {
    Timestamp day0 = make_time(2023, 5, 1, 0, 0, 0);
    return {element, space, kind, std::nullopt,
            day0 + static_cast<Timestamp>(std::llround(hour * 3600.0))};
}

// 98 events on exact hours 4..14, peaked at hour 9: bin 9 holds 18/98
// and the lower-middle of the sorted hours is exactly 9.
std::vector<ingest::EventRecord> reference_column() {
    const int counts[] = {1, 3, 7, 12, 16, 18, 17, 12, 7, 4, 1};
    std::vector<ingest::EventRecord> out;
    for (int i = 0; i < 11; ++i)
        for (int k = 0; k < counts[i]; ++k) out.push_back(light_event(4.0 + i));
    return out;
}

// Brute-force join for the query check: depth-first candidate scan
// with left-to-right consistency, then filters, dedup and sort.
void brute_join(const query::QueryAst& ast, const std::vector<triples::Triple>& ts,
                std::size_t depth, std::map<std::string, triples::Term>& binding,
                std::set<std::vector<triples::Term>>& out) {
    using query::PatternTerm;
    auto match_bind = [&](const PatternTerm& p, const triples::Term& t) {
        if (p.kind == PatternTerm::Kind::Variable) {
            auto it = binding.find(p.text);
            if (it != binding.end()) return it->second == t;
            binding.emplace(p.text, t);
            return true;
        }
        auto want = p.kind == PatternTerm::Kind::Iri ? triples::Term::Kind::Iri
                                                     : triples::Term::Kind::Literal;
        return t.kind == want && t.text == p.text;
    };
    if (depth == ast.patterns.size()) {
        for (const auto& f : ast.filters) {
            auto it = binding.find(f.variable);
            triples::Term want{f.value.kind == query::PatternTerm::Kind::Iri
                                   ? triples::Term::Kind::Iri
                                   : triples::Term::Kind::Literal,
                               f.value.text};
            if (it == binding.end() || !(it->second == want)) return;
        }
        std::vector<triples::Term> row;
        for (const auto& v : ast.select_vars) row.push_back(binding.at(v));
        out.insert(std::move(row));
        return;
    }
    const auto& p = ast.patterns[depth];
    for (const auto& t : ts) {
        auto saved = binding;
        if (match_bind(p.subject, t.subject) && match_bind(p.predicate, t.predicate) &&
            match_bind(p.object, t.object))
            brute_join(ast, ts, depth + 1, binding, out);
        binding = saved;
    }
}

query::ResultTable brute_execute(const query::QueryAst& ast,
                                 const std::vector<triples::Triple>& ts) {
    std::map<std::string, triples::Term> binding;
    std::set<std::vector<triples::Term>> rows;
    brute_join(ast, ts, 0, binding, rows);
    query::ResultTable t;
    t.columns = ast.select_vars;
    t.rows.assign(rows.begin(), rows.end());
    return t;
}

// Full two-direction calibrate + detect + score over a simulated trace.
simulator::Score end_to_end_score(const topology::TopologyGraph& g,
                                  const simulator::SimConfig& cfg) {
    auto bundle = simulator::simulate(g, cfg);
    auto parsed = ingest::parse_samples(bundle.samples_jsonl());
    if (!parsed.errors.empty()) throw Error("simulated samples failed to parse");
    auto stream = ingest::normalize(parsed.samples, g);

    std::vector<conjunction::PairVerdict> all;
    for (auto dir : {conjunction::Direction::LightOffToElevator,
                     conjunction::Direction::ElevatorToLightOn}) {
        auto pairs = conjunction::pair_events(stream, g, dir);
        auto model = conjunction::fit_ols(pairs);
        std::vector<conjunction::SpaceFeatures> feats;
        for (const auto& [space, sigma] : model.residual_std_per_space) {
            (void)sigma;
            feats.push_back(conjunction::features_for(g, space));
        }
        auto windows = conjunction::build_windows(model, feats);
        auto verdicts = conjunction::detect(stream, g, windows, dir);
        all.insert(all.end(), verdicts.begin(), verdicts.end());
    }
    return simulator::score_detector(bundle.truth, all);
}

}  // namespace

int main() {
    Gate gate;

    gate.run(1, "bundled query golden result equals the brute-force join", [] {
        auto t0 = Clock::now();
        auto g = topology::load_topology_file(data_path("sample_building.json"));
        auto ast = query::parse_query(slurp(data_path("listing1.rq")));
        auto got = query::execute(ast, g);
        auto want = brute_execute(ast, triples::as_triples(g));
        if (!(got == want)) return std::string("engine result differs from the oracle");

        if (got.columns != std::vector<std::string>{"level", "space", "ele", "ucode"})
            return std::string("unexpected column set");
        std::vector<std::string> ucodes;
        for (const auto& row : got.rows) {
            if (row.back().kind != triples::Term::Kind::Literal)
                return std::string("ucode column is not a literal");
            ucodes.push_back(row.back().text);
        }
        if (ucodes != std::vector<std::string>{"A101_light", "A102_light"})
            return std::string("expected exactly the Level1 room lights, got ") +
                   std::to_string(ucodes.size()) + " rows";
        double dt = seconds_since(t0);
        return check(dt < 1.0, "took " + std::to_string(dt) + " s (budget 1 s)");
    });

    gate.run(2, "hourly table: peak bin 0.18 +- 0.005, median exactly 9, bins sum to 1", [] {
        auto t = timeprob::build_table(reference_column());
        if (t.count != 98) return std::string("expected 98 events");
        if (std::abs(t.bins[9] - 0.18) > 0.005)
            return "bin 9 = " + std::to_string(t.bins[9]);
        if (t.median_hour != 9.0) return "median = " + std::to_string(t.median_hour);

        Rand rng(661);
        for (int iter = 0; iter < 1000; ++iter) {
            int n = 1 + static_cast<int>(rng.below(200));
            std::vector<ingest::EventRecord> records;
            for (int i = 0; i < n; ++i)
                records.push_back(
                    light_event(std::floor(rng.u01() * 24.0 * 3600.0) / 3600.0));
            auto table = timeprob::build_table(records);
            double mass = 0;
            for (double b : table.bins) mass += b;
            if (std::abs(mass - 1.0) > 1e-9)
                return "case " + std::to_string(iter) + ": bins sum to " +
                       std::to_string(mass);
        }
        return std::string();
    });

    gate.run(3, "anomaly rule is strict at the 0.1 threshold", [] {
        auto t = timeprob::build_table(reference_column());
        auto dead = timeprob::classify(light_event(2.5), t, 0.1);
        if (dead.status != timeprob::AnomalyStatus::Abnormal)
            return std::string("empty-bin event not flagged");
        auto peak = timeprob::classify(light_event(9.5), t, 0.1);
        if (peak.status != timeprob::AnomalyStatus::Normal)
            return std::string("0.18-bin event flagged");
        // probability exactly equal to the threshold stays Normal
        auto edge = timeprob::classify(light_event(4.5), t, 1.0 / 98.0);
        if (edge.probability != 1.0 / 98.0) return std::string("edge probability drifted");
        if (edge.status != timeprob::AnomalyStatus::Normal)
            return std::string("boundary probability counted as abnormal");
        return std::string();
    });

    gate.run(4, "regression fit equals the normal-equations oracle to 1e-9", [] {
        auto t0 = Clock::now();
        auto oracle = [](const std::vector<conjunction::IntervalSample>& samples) {
            double a[3][4] = {};
            for (const auto& s : samples) {
                double x[3] = {1.0, static_cast<double>(s.hops),
                               static_cast<double>(s.floor_value)};
                for (int i = 0; i < 3; ++i) {
                    for (int j = 0; j < 3; ++j) a[i][j] += x[i] * x[j];
                    a[i][3] += x[i] * s.delta_t;
                }
            }
            for (int col = 0; col < 3; ++col) {
                int piv = col;
                for (int r = col + 1; r < 3; ++r)
                    if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
                for (int j = 0; j < 4; ++j) std::swap(a[col][j], a[piv][j]);
                for (int r = 0; r < 3; ++r) {
                    if (r == col) continue;
                    double f = a[r][col] / a[col][col];
                    for (int j = 0; j < 4; ++j) a[r][j] -= f * a[col][j];
                }
            }
            return std::array<double, 3>{a[0][3] / a[0][0], a[1][3] / a[1][1],
                                         a[2][3] / a[2][2]};
        };

        Rand rng(4091);
        int done = 0;
        while (done < 100) {
            std::vector<conjunction::IntervalSample> samples;
            int n = 3 + static_cast<int>(rng.below(50));
            bool vary_h = false, vary_f = false;
            for (int i = 0; i < n; ++i) {
                conjunction::IntervalSample s;
                s.space = "R" + std::to_string(rng.below(4));
                s.hops = static_cast<int>(rng.below(5));
                s.floor_value = static_cast<int>(rng.below(7)) - 3;
                if (s.floor_value == 0) s.floor_value = 4;
                s.delta_t = 1.0 + 299.0 * rng.u01();
                samples.push_back(s);
            }
            for (const auto& s : samples) {
                vary_h |= s.hops != samples[0].hops;
                vary_f |= s.floor_value != samples[0].floor_value;
            }
            if (!vary_h || !vary_f) continue;
            auto want = oracle(samples);
            auto got = conjunction::fit_ols(samples);
            if (std::abs(got.alpha - want[0]) > 1e-9 || std::abs(got.beta1 - want[1]) > 1e-9 ||
                std::abs(got.beta2 - want[2]) > 1e-9)
                return "fixture " + std::to_string(done) + " drifted from the oracle";
            ++done;
        }

        // exact recovery of a noise-free plane
        const double alpha = 49.36, beta1 = 12.86, beta2 = 2.94;
        std::vector<conjunction::IntervalSample> plane;
        for (int hops = 0; hops <= 4; ++hops)
            for (int floor : {-2, -1, 1, 2, 3}) {
                conjunction::IntervalSample s;
                s.hops = hops;
                s.floor_value = floor;
                s.delta_t = alpha + beta1 * hops + beta2 * floor;
                s.space = "R";
                plane.push_back(s);
            }
        auto m = conjunction::fit_ols(plane);
        if (std::abs(m.alpha - alpha) > 1e-9 || std::abs(m.beta1 - beta1) > 1e-9 ||
            std::abs(m.beta2 - beta2) > 1e-9)
            return std::string("noise-free coefficients not recovered");
        double dt = seconds_since(t0);
        return check(dt < 1.0, "took " + std::to_string(dt) + " s (budget 1 s)");
    });

    gate.run(5, "window rule: mu 100 sigma 30 gives [70, 160]; sigma 0 is a point", [] {
        conjunction::OlsModel m;
        m.alpha = 100.0;
        m.beta1 = 0.0;
        m.beta2 = 0.0;
        m.residual_std_per_space = {{"A", 30.0}, {"B", 0.0}};
        auto windows = conjunction::build_windows(m, {{"A", 0, 1}, {"B", 0, 1}}, 1.0, 2.0);
        const auto& w = windows.at("A");
        if (!(w.min == 70.0 && w.max == 160.0))
            return "window [" + std::to_string(w.min) + ", " + std::to_string(w.max) + "]";
        const auto& p = windows.at("B");
        if (!(p.min == 100.0 && p.max == 100.0)) return std::string("sigma 0 is not a point");
        return std::string();
    });

    gate.run(6, "conjunction ratios: (89,72) -> 0.809 and (110,38) -> 0.345", [] {
        // drive the ratio through report() itself on planted verdict sets
        auto probability_of = [](std::size_t room, std::size_t conj) {
            using conjunction::Direction;
            using ingest::EventKind;
            ingest::EventStream stream;
            std::vector<conjunction::PairVerdict> verdicts;
            Timestamp t = 0;
            for (std::size_t i = 0; i < room; ++i) {
                stream.records.push_back(
                    {"light1", "R1", EventKind::LightOff, std::nullopt, t});
                if (i < conj) {
                    conjunction::PairVerdict v;
                    v.sample.space = "R1";
                    v.sample.direction = Direction::LightOffToElevator;
                    v.sample.time = t;
                    v.sample.delta_t = 40.0;
                    v.status = conjunction::PairStatus::Conjunctive;
                    v.reason = conjunction::PairReason::InWindow;
                    verdicts.push_back(v);
                }
                t += 1000;
            }
            auto rows =
                conjunction::report(verdicts, stream, Direction::LightOffToElevator);
            return rows.front().probability;
        };
        double p1 = probability_of(89, 72);
        if (std::abs(p1 - 0.809) > 1e-3) return "(89,72) -> " + std::to_string(p1);
        double p2 = probability_of(110, 38);
        if (std::abs(p2 - 0.345) > 1e-3) return "(110,38) -> " + std::to_string(p2);
        return std::string();
    });

    gate.run(7, "planted truth: noise-free P=R=1; noisy recall >= 0.9 (frozen 0.9265)", [] {
        auto g = topology::load_topology_file(data_path("sample_building.json"));

        auto clean_cfg = simulator::sim_config_from_file(data_path("configs/noise_free.json"));
        auto clean = end_to_end_score(g, clean_cfg);
        if (clean.precision != 1.0 || clean.recall != 1.0)
            return "noise-free P=" + std::to_string(clean.precision) +
                   " R=" + std::to_string(clean.recall);

        auto noisy_cfg = simulator::sim_config_from_file(data_path("configs/desk.json"));
        auto noisy = end_to_end_score(g, noisy_cfg);
        if (noisy.recall < 0.9)
            return "noisy recall " + std::to_string(noisy.recall) + " below 0.9";
        // regression value measured once on this config at seed 7
        const double frozen = 0.9265, tolerance = 0.05;
        if (std::abs(noisy.recall - frozen) > tolerance)
            return "noisy recall " + std::to_string(noisy.recall) + " drifted from " +
                   std::to_string(frozen);
        return std::string();
    });

    gate.run(8, "78-day bundle at deployment scale: pipeline < 10 s, byte-deterministic", [] {
        auto t0 = Clock::now();
        auto cfg = simulator::sim_config_from_file(data_path("configs/paper_scale.json"));
        auto g = topology::load_topology_file(data_path("paper_building.json"));
        auto bundle = simulator::simulate(g, cfg);
        auto bundle2 = simulator::simulate(g, cfg);
        if (bundle.samples_jsonl() != bundle2.samples_jsonl())
            return std::string("simulation rerun changed bytes");

        std::size_t light = 0, elevator = 0;
        for (const auto& s : bundle.samples)
            (s.ucode.find("_light") != std::string::npos ? light : elevator) += 1;
        if (light < 2160 || light > 3240)
            return "light volume " + std::to_string(light) + " outside 2700 +- 20%";
        if (elevator < 11200 || elevator > 16800)
            return "elevator volume " + std::to_string(elevator) + " outside 14000 +- 20%";

        fs::path dir = fs::temp_directory_path() /
                       ("sbk_acceptance_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
        std::ofstream(dir / "samples.jsonl", std::ios::binary) << bundle.samples_jsonl();

        pipeline::PipelineOptions opt;
        opt.topology_path = data_path("paper_building.json");
        opt.events_path = (dir / "samples.jsonl").string();
        opt.out_dir = (dir / "run1").string();
        pipeline::run_pipeline(opt);
        double dt = seconds_since(t0);

        opt.out_dir = (dir / "run2").string();
        pipeline::run_pipeline(opt);
        for (const char* f :
             {"stats.csv", "anomalies.csv", "model.json", "verdicts.csv", "report.csv"}) {
            if (slurp((dir / "run1" / f).string()) != slurp((dir / "run2" / f).string()))
                return std::string(f) + " differs between reruns";
        }
        fs::remove_all(dir);
        return check(dt < 10.0, "took " + std::to_string(dt) + " s (budget 10 s)");
    });

    gate.run(9, "ingest invariants hold on 10k fuzzed streams", [] {
        using topology::EntityKind;
        using topology::Predicate;
        std::vector<topology::Entity> e;
        std::vector<topology::Relation> r;
        e.push_back({"Site", EntityKind::Site, "site", {}, {}});
        e.push_back({"Bldg", EntityKind::Building, "bldg", {}, {}});
        e.push_back({"L1", EntityKind::Storey, "l1", {}, 1});
        e.push_back({"R1", EntityKind::Space, "r1", {}, {}});
        e.push_back({"R2", EntityKind::Space, "r2", {}, {}});
        e.push_back({"lightA", EntityKind::Element, "a", "Light", {}});
        e.push_back({"lightB", EntityKind::Element, "b", "Light", {}});
        r.push_back({"Site", Predicate::HasBuilding, "Bldg"});
        r.push_back({"Bldg", Predicate::HasStorey, "L1"});
        r.push_back({"L1", Predicate::HasSpace, "R1"});
        r.push_back({"L1", Predicate::HasSpace, "R2"});
        r.push_back({"R1", Predicate::HasElement, "lightA"});
        r.push_back({"R2", Predicate::HasElement, "lightB"});
        auto g = topology::TopologyGraph::build(std::move(e), std::move(r));

        Rand rng(991);
        for (int iter = 0; iter < 10000; ++iter) {
            std::vector<ingest::SensorSample> in;
            int n = 1 + static_cast<int>(rng.below(20));
            for (int i = 0; i < n; ++i) {
                ingest::SensorSample s;
                s.ucode = rng.below(2) ? "lightA" : "lightB";
                s.instance = ingest::Instance::number(rng.below(2) ? 1 : 0);
                s.time = static_cast<Timestamp>(rng.below(500));
                in.push_back(s);
            }
            auto stream = ingest::normalize(in, g);
            std::map<std::string, long> on, off;
            for (std::size_t i = 0; i < stream.records.size(); ++i) {
                if (i && stream.records[i - 1].time > stream.records[i].time)
                    return "case " + std::to_string(iter) + ": output out of order";
                if (stream.records[i].kind == ingest::EventKind::LightOn)
                    ++on[stream.records[i].element];
                if (stream.records[i].kind == ingest::EventKind::LightOff)
                    ++off[stream.records[i].element];
            }
            for (const auto& [el, k] : on)
                if (std::labs(k - off[el]) > 1)
                    return "case " + std::to_string(iter) + ": unbalanced transitions on " +
                           el;
        }
        return std::string();
    });

    gate.run(10, "query parse is total; execution ignores pattern order", [] {
        Rand rng(1313);
        const std::string alphabet =
            "SELECT WHERE FILTER PREFIX ?xy{}().=<>\"#:ab_-\n\t\\ ";
        for (int iter = 0; iter < 30000; ++iter) {
            std::string s;
            int len = static_cast<int>(rng.below(100));
            for (int i = 0; i < len; ++i) s += alphabet[rng.below(alphabet.size())];
            try {
                query::parse_query(s);
            } catch (const ParseError&) {
                // the only accepted escape
            }
        }
        std::string base = slurp(data_path("listing1.rq"));
        for (int iter = 0; iter < 20000; ++iter) {
            std::string s = base;
            for (int e = 0; e < 3; ++e) {
                std::size_t pos = rng.below(s.size());
                if (rng.below(2))
                    s[pos] = static_cast<char>(rng.below(256));
                else
                    s.insert(pos, 1, static_cast<char>(rng.below(256)));
            }
            try {
                query::parse_query(s);
            } catch (const ParseError&) {
            }
        }

        // permutation invariance on random graphs and queries
        using query::PatternTerm;
        auto mk_term = [&](bool allow_literal) {
            std::string pool[] = {"n0", "n1", "n2", "n3", "n4", "n5"};
            std::string t = pool[rng.below(6)];
            if (allow_literal && rng.below(3) == 2) return triples::literal(t);
            return triples::iri("u:" + t);
        };
        int done = 0;
        while (done < 500) {
            std::vector<triples::Triple> ts;
            int nt = 3 + static_cast<int>(rng.below(15));
            for (int i = 0; i < nt; ++i)
                ts.push_back({mk_term(false), mk_term(false), mk_term(true)});
            query::QueryAst ast;
            std::set<std::string> used;
            std::string vars[] = {"a", "b", "c", "d"};
            int np = 2 + static_cast<int>(rng.below(3));
            for (int i = 0; i < np; ++i) {
                auto mk_pterm = [&](bool allow_literal) -> PatternTerm {
                    if (rng.below(2)) {
                        std::string v = vars[rng.below(4)];
                        used.insert(v);
                        return {PatternTerm::Kind::Variable, v};
                    }
                    auto t = mk_term(allow_literal);
                    return {t.kind == triples::Term::Kind::Iri ? PatternTerm::Kind::Iri
                                                               : PatternTerm::Kind::Literal,
                            t.text};
                };
                ast.patterns.push_back({mk_pterm(false), mk_pterm(false), mk_pterm(true)});
            }
            if (used.empty()) continue;
            ast.select_vars.assign(used.begin(), used.end());

            auto want = query::execute(ast, ts);
            query::QueryAst shuffled = ast;
            for (std::size_t i = shuffled.patterns.size(); i > 1; --i)
                std::swap(shuffled.patterns[i - 1], shuffled.patterns[rng.below(i)]);
            if (!(query::execute(shuffled, ts) == want))
                return "case " + std::to_string(done) + ": result depends on pattern order";
            ++done;
        }
        return std::string();
    });

    if (gate.failures == 0) std::printf("all criteria satisfied\n");
    return gate.failures;
}
