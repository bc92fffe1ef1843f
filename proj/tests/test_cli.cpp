#include "oracles.hpp"

#include "ntrack/cli.hpp"
#include "ntrack/config.hpp"
#include "ntrack/error.hpp"
#include "ntrack/io.hpp"
#include "ntrack/synth.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

using namespace ntrack;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("ntrack_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void put(const fs::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    f << s;
}

struct Run {
    int code;
    std::string log;
};

Run run(std::vector<std::string> args) {
    std::ostringstream log;
    const int code = run_cli(args, log);
    return {code, log.str()};
}

// Result files; provenance.json names the output directory so it is
// compared through its config hash instead.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> m;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), dir).string();
        if (rel == "provenance.json") {
            m[rel] = json::parse(io::read_file(e.path()))["config_hash"].get<std::string>();
        } else {
            m[rel] = io::read_file(e.path());
        }
    }
    return m;
}

std::string config_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigError);
        return e.what();
    }
    return "no error";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("config: defaults, locations of bad values, canonical form") {
    const auto d = parse_config("{}");
    CHECK(d.fit.t_min == 0.0);
    CHECK(d.windows == default_window_lengths());
    CHECK(d.stats.n_perm == 1000);

    CHECK(contains(config_error(R"({"fit": {"t_max": "0.5"}})"), "/fit/t_max: expected a number"));
    CHECK(contains(config_error(R"({"fit": {"tmax": 0.5}})"), "/fit/tmax: unknown key"));
    CHECK(contains(config_error(R"({"inputs": {"raw": [{"eeg": "a.ctts"}]}})"), "/inputs/raw/0/"));
    CHECK(contains(config_error(R"({"scan": {"directions": ["sideways"]}})"), "/scan/directions/0"));
    CHECK(contains(config_error(R"({"simulation": {"gain_attended": -0.1}})"), "/simulation/gain_attended"));
    CHECK(contains(config_error(R"({"stats": {"n_perm": 10}})"), "/stats/n_perm"));
    CHECK(contains(config_error(R"({"fit": {"t_min": 0.5, "t_max": 0.1}})"), "/fit"));
    CHECK(contains(config_error(R"({"condition": 1)"), "config"));
    CHECK(contains(config_error(R"({"feature": "pitch"})"), "/feature: unknown value"));

    auto c = parse_config(R"({"simulation": {"snr_db": "inf", "n_subjects": 3}, "windows": [1.1, 35], "seed": 9, "jobs": 2})");
    CHECK(std::isinf(c.sim.snr_db));
    CHECK(c.sim.seed == 9);
    const auto again = parse_config(c.canonical());
    CHECK(again.canonical() == c.canonical());
    CHECK(again.hash() == c.hash());
    c.jobs = 4;
    c.out = "elsewhere";
    CHECK(again.hash() == c.hash());
    c.seed = 10;
    CHECK(again.hash() != c.hash());
}

TEST_CASE("features: 180 s WAV gives two 9000-sample files, reruns are byte-identical") {
    const auto dir = scratch("features");
    const double rate = 16000.0;
    std::vector<double> x(static_cast<std::size_t>(180 * rate));
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(i) / rate;
        x[i] = 0.3 * (1.0 + std::sin(2.0 * std::numbers::pi * 3.0 * t)) * (0.5 * std::sin(2.0 * std::numbers::pi * 500.0 * t) + 0.1 * n(rng));
    }
    io::write_wav16(dir / "talker-a.wav", oracle::single(x, rate, "audio"));
    const auto out = (dir / "feat").string();
    const auto wav = (dir / "talker-a.wav").string();

    const auto r = run({"features", wav, "--out", out});
    REQUIRE(r.code == exit_ok);
    const auto env = io::read_feature(dir / "feat" / "talker-a.envelope.ctts");
    const auto ons = io::read_feature(dir / "feat" / "talker-a.onset.ctts");
    CHECK(env.samples() == 9000);
    CHECK(ons.samples() == 9000);
    CHECK(env.rate == 50.0);
    CHECK(env.kind == FeatureKind::envelope);
    CHECK(ons.kind == FeatureKind::onset);
    const auto m = json::parse(io::read_file(dir / "feat" / "features.json"));
    CHECK(m["features"]["talker-a"]["samples"] == 9000);
    CHECK(m["features"]["talker-a"]["f_hi"].get<double>() < 8000.0);

    const auto first = snapshot(out);
    REQUIRE(run({"features", wav, "--out", out}).code == exit_ok);
    CHECK(snapshot(out) == first);
}

TEST_CASE("features: input errors") {
    const auto dir = scratch("features_err");
    const auto e = run({"features", "--out", (dir / "o").string()});
    CHECK(e.code == exit_config);
    CHECK(contains(e.log, "NoInputs"));

    const auto missing = (dir / "absent.wav").string();
    const auto m = run({"features", missing, "--out", (dir / "o").string()});
    CHECK(m.code == exit_data);
    CHECK(contains(m.log, missing));

    Matrix st(2, 4410);
    st.setConstant(0.1);
    io::write_wav16(dir / "stereo.wav", TimeSeries(st, 44100.0, {"l", "r"}));
    const auto s = run({"features", (dir / "stereo.wav").string(), "--out", (dir / "o").string()});
    CHECK(s.code == exit_data);
    CHECK(contains(s.log, "MonoRequired"));
}

TEST_CASE("simulate: bundle size, reproducibility, gain validation") {
    const auto dir = scratch("simulate");
    put(dir / "sim.json", R"({"simulation": {"n_subjects": 2, "n_trials": 8, "duration": 20, "channels": 3}})");
    const auto cfg = (dir / "sim.json").string();
    REQUIRE(run({"--config", cfg, "simulate", "--seed", "4", "--out", (dir / "a").string()}).code == exit_ok);
    REQUIRE(run({"simulate", "--config", cfg, "--seed", "4", "--out", (dir / "b").string()}).code == exit_ok);
    REQUIRE(run({"simulate", "--config", cfg, "--seed", "5", "--out", (dir / "c").string()}).code == exit_ok);

    const auto bundle = io::read_bundle(dir / "a");
    CHECK(bundle.trials.size() == 16);
    const auto meta = json::parse(bundle.metadata_json);
    CHECK(meta["simulation"]["n_trials"] == 8);
    CHECK(meta["loudspeakers_deg"].size() == 4);
    CHECK(snapshot(dir / "a") == snapshot(dir / "b"));
    CHECK(io::read_file(dir / "a" / "s01-sustained-t01.eeg.ctts") != io::read_file(dir / "c" / "s01-sustained-t01.eeg.ctts"));
    const auto prov = json::parse(io::read_file(dir / "a" / "provenance.json"));
    CHECK(prov["seed"] == 4);
    CHECK(prov["config_hash"].get<std::string>().size() == 16);

    put(dir / "bad.json", R"({"simulation": {"gain_ignored": -0.5}})");
    const auto bad = run({"simulate", "--config", (dir / "bad.json").string(), "--out", (dir / "d").string()});
    CHECK(bad.code == exit_config);
    CHECK(contains(bad.log, "gain_ignored"));
    CHECK_FALSE(fs::exists(dir / "d" / "manifest.json"));
}

TEST_CASE("pipeline: every artifact family, deterministic reruns, missing pieces") {
    const auto dir = scratch("pipeline");
    put(dir / "cfg.json", R"({
      "simulation": {"n_subjects": 4, "n_trials": 5, "duration": 30, "channels": 2},
      "scan": {"lo": 0.0, "hi": 0.3},
      "windows": [5, 10],
      "stats": {"n_perm": 100},
      "seed": 11
    })");
    const auto cfg = (dir / "cfg.json").string();
    const auto bundle = (dir / "bundle").string();
    REQUIRE(run({"simulate", "--config", cfg, "--out", bundle}).code == exit_ok);
    const auto before = snapshot(bundle);

    const auto r = run({"pipeline", "--config", cfg, "--bundle", bundle, "--out", (dir / "r1").string()});
    REQUIRE(r.code == exit_ok);
    for (const auto* f : {"correlations.csv", "scan.csv", "classification.csv", "classification_summary.csv", "group_tests.csv", "provenance.json",
                          "stats/s01-sustained-scalp.json", "stats/s04-sustained-scalp.csv"}) {
        CHECK_MESSAGE(fs::exists(dir / "r1" / f), f);
    }
    const auto corr = io::read_file(dir / "r1" / "correlations.csv");
    CHECK(contains(corr, ",backward,"));
    CHECK(contains(corr, ",forward,"));
    const auto scan = io::read_file(dir / "r1" / "scan.csv");
    CHECK(contains(scan, "s04,sustained,forward"));
    // fewer than 5 subjects: the group test is skipped, with a reason
    CHECK(contains(r.log, "at least 5 subjects"));
    CHECK(snapshot(bundle) == before);

    REQUIRE(run({"pipeline", "--config", cfg, "--bundle", bundle, "--out", (dir / "r2").string(), "--jobs", "3"}).code == exit_ok);
    CHECK(snapshot(dir / "r1") == snapshot(dir / "r2"));

    fs::remove(dir / "bundle" / "s02-sustained-t03.eeg.ctts");
    fs::remove(dir / "bundle" / "s03-sustained-t01.ignored.ctts");
    const auto p = run({"pipeline", "--config", cfg, "--bundle", bundle, "--out", (dir / "r3").string()});
    CHECK(p.code == exit_data);
    CHECK(contains(p.log, "s02-sustained-t03.eeg.ctts"));
    CHECK(contains(p.log, "s03-sustained-t01.ignored.ctts"));
}

TEST_CASE("pipeline: a 178 s window on switching trials is skipped with a reason") {
    const auto dir = scratch("switching");
    put(dir / "cfg.json", R"({
      "simulation": {"n_subjects": 1, "n_trials": 3, "duration": 180, "channels": 2, "condition": "switching"},
      "scan": {"lo": 0.15, "hi": 0.21},
      "windows": [35, 178],
      "stats": {"n_perm": 100}
    })");
    const auto cfg = (dir / "cfg.json").string();
    REQUIRE(run({"simulate", "--config", cfg, "--out", (dir / "b").string()}).code == exit_ok);
    const auto r = run({"pipeline", "--config", cfg, "--bundle", (dir / "b").string(), "--out", (dir / "r").string()});
    REQUIRE(r.code == exit_ok);
    CHECK(contains(r.log, "178 s window"));
    const auto summary = io::read_file(dir / "r" / "classification_summary.csv");
    CHECK(contains(summary, "s01,switching,35,"));
    CHECK_FALSE(contains(summary, ",178,"));
    const auto prov = json::parse(io::read_file(dir / "r" / "provenance.json"));
    bool logged = false;
    for (const auto& s : prov["skipped"]) logged = logged || contains(s.get<std::string>(), "178 s window");
    CHECK(logged);
}

TEST_CASE("preprocess: raw recordings with scalp and grid channels") {
    const auto dir = scratch("preprocess");
    SimConfig sc;
    sc.duration = 30.0;
    sc.rate = 50.0;
    std::vector<std::string> labels{"Fz", "Cz", "Pz", "Oz", "L1", "L4", "R1", "R4"};
    const double raw_rate = 500.0;
    const std::size_t n = static_cast<std::size_t>(30 * raw_rate);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    json raw = json::array();
    for (int t = 0; t < 3; ++t) {
        Matrix m(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
        const std::string id = "t" + std::to_string(t);
        io::write_ctts(dir / (id + ".eeg.ctts"), TimeSeries(m, raw_rate, labels));
        io::write_feature(dir / (id + ".a.ctts"), surrogate_feature(1500, 50.0, 10 + t, "a"));
        io::write_feature(dir / (id + ".b.ctts"), surrogate_feature(1500, 50.0, 20 + t, "b"));
        raw.push_back({{"eeg", (dir / (id + ".eeg.ctts")).string()},
                       {"attended", (dir / (id + ".a.ctts")).string()},
                       {"ignored", (dir / (id + ".b.ctts")).string()},
                       {"subject", "p1"},
                       {"trial", "p1-" + id},
                       {"condition", t == 2 ? "switching" : "sustained"},
                       {"schedule", t == 2 ? json{{"t1", 10.0}, {"t2", 20.0}} : json(nullptr)}});
    }
    json cfg{{"inputs", {{"raw", raw}}}, {"montage", {{"grid", {"L1", "L4", "R1", "R4"}}}}};
    put(dir / "cfg.json", cfg.dump());
    const auto out = dir / "bundle";
    const auto r = run({"preprocess", "--config", (dir / "cfg.json").string(), "--out", out.string()});
    REQUIRE_MESSAGE(r.code == exit_ok, r.log);
    const auto b = io::read_bundle(out);
    REQUIRE(b.trials.size() == 6);
    const auto& scalp = b.trials[0].record;
    const auto& grid = b.trials[1].record;
    CHECK(scalp.electrodes == ElectrodeSet::scalp);
    CHECK(grid.electrodes == ElectrodeSet::grid);
    CHECK(scalp.eeg.labels == std::vector<std::string>{"Fz", "Cz", "Pz", "Oz"});
    CHECK(grid.eeg.channels() == 4);
    CHECK(scalp.eeg.rate == 50.0);
    CHECK(scalp.eeg.samples() == 1500);

    // attended follows the schedule: the b stream between 10 and 20 s
    const auto& sw = b.trials[4].record;
    const auto fb = io::read_feature(dir / "t2.b.ctts");
    const auto fa = io::read_feature(dir / "t2.a.ctts");
    CHECK(sw.attended.values[750] == doctest::Approx(fb.values[750]).epsilon(1e-6));
    CHECK(sw.attended.values[250] == doctest::Approx(fa.values[250]).epsilon(1e-6));

    cfg["inputs"]["raw"][2]["schedule"] = nullptr;
    put(dir / "bad.json", cfg.dump());
    const auto bad = run({"preprocess", "--config", (dir / "bad.json").string(), "--out", (dir / "b2").string()});
    CHECK(bad.code == exit_config);
    CHECK(contains(bad.log, "/inputs/raw/2/schedule"));
}

TEST_CASE("fit, stats, classify and cross-classify chain on files") {
    const auto dir = scratch("chain");
    put(dir / "sus.json", R"({"simulation": {"n_subjects": 1, "n_trials": 5, "duration": 40, "channels": 3}, "windows": [5], "stats": {"n_perm": 100}})");
    put(dir / "conv.json", R"({"simulation": {"n_subjects": 1, "n_trials": 3, "duration": 40, "channels": 3, "condition": "conversation"}, "windows": [5]})");
    REQUIRE(run({"simulate", "--config", (dir / "sus.json").string(), "--out", (dir / "sus").string()}).code == exit_ok);
    REQUIRE(run({"simulate", "--config", (dir / "conv.json").string(), "--out", (dir / "conv").string()}).code == exit_ok);

    const auto fit = run({"fit", "--bundle", (dir / "sus").string(), "--direction", "forward", "--out", (dir / "fit").string()});
    REQUIRE(fit.code == exit_ok);
    std::vector<std::string> a, b;
    for (const auto& k : json::parse(io::read_file(dir / "fit" / "kernels.json"))) {
        a.push_back((dir / "fit" / k["attended"].get<std::string>()).string());
        b.push_back((dir / "fit" / k["ignored"].get<std::string>()).string());
    }
    REQUIRE(a.size() == 5);
    const auto k0 = io::read_ctrf(a[0]);
    CHECK(k0.direction == Direction::forward);
    CHECK(k0.channels() == 3);

    std::vector<std::string> args{"stats", "--config", (dir / "sus.json").string(), "--out", (dir / "st").string(), "--a"};
    args.insert(args.end(), a.begin(), a.end());
    args.push_back("--b");
    args.insert(args.end(), b.begin(), b.end());
    REQUIRE(run(args).code == exit_ok);
    const auto st = json::parse(io::read_file(dir / "st" / "stats.json"));
    CHECK(st.contains("clusters"));

    CHECK(run({"stats", "--out", (dir / "st2").string(), "--a", a[0]}).code == exit_config);
    CHECK(run({"fit", "--bundle", (dir / "sus").string(), "--direction", "sideways"}).code == exit_config);

    REQUIRE(run({"classify", "--config", (dir / "sus.json").string(), "--bundle", (dir / "sus").string(), "--out", (dir / "cls").string()}).code ==
            exit_ok);
    CHECK(contains(io::read_file(dir / "cls" / "classification_summary.csv"), "s01,sustained,5,"));

    const auto x = run({"cross-classify", "--config", (dir / "sus.json").string(), "--train", (dir / "sus").string(), "--test",
                        (dir / "conv").string(), "--out", (dir / "x").string()});
    REQUIRE(x.code == exit_ok);
    CHECK(contains(io::read_file(dir / "x" / "classification_summary.csv"), "s01,conversation,5,"));

    REQUIRE(run({"scan-lags", "--bundle", (dir / "sus").string(), "--out", (dir / "scan").string()}).code == exit_ok);
    const auto scan = io::read_file(dir / "scan" / "scan.csv");
    CHECK(std::count(scan.begin(), scan.end(), '\n') == 1 + 2 * 78);
}

TEST_CASE("command line surface") {
    CHECK(run({"--help"}).code == exit_ok);
    CHECK(run({"frobnicate"}).code == exit_config);
    CHECK(run({}).code == exit_config);
    CHECK(run({"pipeline"}).code == exit_config);
    CHECK(run({"pipeline", "--config", "/nonexistent/cfg.json"}).code == exit_config);
}
