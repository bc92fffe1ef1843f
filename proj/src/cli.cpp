#include "ntrack/cli.hpp"

#include "ntrack/config.hpp"
#include "ntrack/error.hpp"
#include "ntrack/io.hpp"
#include "ntrack/parallel.hpp"
#include "ntrack/seeding.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace ntrack {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kAudioRate = 44100.0;

struct Context {
    RunConfig cfg;
    std::string command;
    std::ostream& log;
    std::vector<std::string> skipped;

    void note(const std::string& msg) const { log << "ntrack " << command << ": " << msg << "\n"; }
    void skip(const std::string& why) {
        skipped.push_back(why);
        note("skipped " + why);
    }
    fs::path out() const { return cfg.out; }
};

void require_paths(const std::vector<std::string>& paths) {
    std::vector<std::string> missing;
    for (const auto& p : paths) {
        if (!fs::exists(p)) missing.push_back(p);
    }
    if (missing.empty()) return;
    std::string msg = "missing inputs:";
    for (const auto& m : missing) msg += " " + m;
    fail(ErrorCode::MissingInputs, msg);
}

std::string sanitize(std::string s) {
    for (char& c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
    }
    return s;
}

void write_provenance(const Context& c, const json& extra = json::object()) {
    json p{{"command", c.command},
           {"config_hash", c.cfg.hash()},
           {"seed", c.cfg.seed},
           {"config", json::parse(c.cfg.canonical())},
           {"skipped", c.skipped}};
    for (auto it = extra.begin(); it != extra.end(); ++it) p[it.key()] = it.value();
    io::write_atomic(c.out() / "provenance.json", p.dump(2) + "\n");
}

std::vector<TrialRecord> load_records(const std::string& bundle, const char* what) {
    if (bundle.empty()) fail(ErrorCode::NoInputs, std::string("no ") + what + " given (inputs/" + what + " or --" + what + ")");
    require_paths({bundle});
    return io::read_bundle(bundle).records();
}

// Trials of one subject x condition x electrode set, the unit of work.
struct Group {
    ElectrodeSet electrodes;
    std::string subject;
    Condition condition;
    std::vector<TrialRecord> trials;

    std::string key() const { return subject + "-" + to_string(condition) + "-" + to_string(electrodes); }
};

std::vector<Group> make_groups(const std::vector<TrialRecord>& records) {
    std::map<std::tuple<ElectrodeSet, std::string, Condition>, std::vector<TrialRecord>> m;
    for (const auto& r : records) m[{r.electrodes, r.subject_id, r.condition}].push_back(r);
    std::vector<Group> out;
    for (auto& [k, v] : m) out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), std::move(v)});
    return out;
}

std::string window_label(double w) {
    std::ostringstream s;
    s << w;
    return s.str();
}

// Runs `fn` over groups on the worker pool; the per-group fit runs single
// threaded so the pool is the only source of parallelism.
template <class R, class F>
std::vector<R> over_groups(const Context& c, const std::vector<Group>& groups, F fn) {
    std::vector<R> res(groups.size());
    parallel_for(groups.size(), c.cfg.jobs, [&](std::size_t i) { res[i] = fn(groups[i]); });
    return res;
}

FitConfig group_fit(const Context& c) {
    auto f = c.cfg.fit;
    f.jobs = 1;
    return f;
}

template <class T>
void append(std::vector<T>& dst, const std::vector<T>& src) {
    dst.insert(dst.end(), src.begin(), src.end());
}

TRFKernel mean_kernel(const std::vector<TRFKernel>& ks) {
    TRFKernel m = ks.front();
    for (std::size_t i = 1; i < ks.size(); ++i) {
        m.h += ks[i].h;
        m.weights += ks[i].weights;
    }
    m.h /= static_cast<double>(ks.size());
    m.weights /= static_cast<double>(ks.size());
    return m;
}

TRFKernel smoothed(const Context& c, const TRFKernel& k) {
    return c.cfg.stats.smooth_width > 0.0 ? gaussian_smooth_trf(k, c.cfg.stats.smooth_width) : k;
}

void write_stats(const fs::path& dir, const std::string& stem, const StatResult& s) {
    io::write_atomic(dir / (stem + ".json"), io::stat_json(s));
    io::write_atomic(dir / (stem + ".csv"), io::stat_csv(s));
}

// Classification results plus skip reasons of one group.
struct ClassifyOut {
    std::vector<ClassificationResult> results;
    std::vector<std::string> skipped;
};

template <class F>
ClassifyOut classify_windows(const Context& c, const std::string& who, F classify) {
    ClassifyOut out;
    for (const double w : c.cfg.windows) {
        try {
            append(out.results, classify(w));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::WindowTooLong) throw;
            out.skipped.push_back(who + ": " + window_label(w) + " s window, no window fits between the trial edges and switches");
        }
    }
    return out;
}

// ---- features ----

int cmd_features(Context& c) {
    const auto& inputs = c.cfg.audio;
    if (inputs.empty()) fail(ErrorCode::NoInputs, "no audio files given");
    require_paths(inputs);
    fs::create_directories(c.out());
    const auto manifest_path = c.out() / "features.json";
    json manifest{{"features", json::object()}};
    if (fs::exists(manifest_path)) {
        try {
            manifest = json::parse(io::read_file(manifest_path));
        } catch (const json::exception& e) {
            fail(ErrorCode::FormatError, manifest_path.string() + ": " + e.what());
        }
    }
    for (const auto& path : inputs) {
        auto audio = io::read_wav(path);
        if (audio.channels() != 1) fail(ErrorCode::MonoRequired, path + ": " + std::to_string(audio.channels()) + " channels, mono audio required");
        GammatoneOptions opts;
        if (audio.rate > kAudioRate) {
            c.note(path + ": resampling " + window_label(audio.rate) + " Hz to 44100 Hz");
            audio = resample(audio, kAudioRate);
        }
        if (opts.f_hi >= 0.5 * audio.rate) {
            opts.f_hi = 0.45 * audio.rate;
            c.note(path + ": upper band edge lowered to " + window_label(opts.f_hi) + " Hz");
        }
        const auto spec = gammatone_spectrogram(audio, opts);
        const std::string stem = sanitize(fs::path(path).stem().string());
        const auto env = prepare_feature(envelope(spec, stem));
        const auto ons = prepare_feature(onsets(spec, 11, 2, stem));
        io::write_feature(c.out() / (stem + ".envelope.ctts"), env);
        io::write_feature(c.out() / (stem + ".onset.ctts"), ons);
        manifest["features"][stem] = {{"audio", path},
                                      {"audio_rate", audio.rate},
                                      {"f_hi", opts.f_hi},
                                      {"rate", env.rate},
                                      {"samples", env.samples()},
                                      {"edge_s", std::max(env.edge_s, ons.edge_s)},
                                      {"envelope", stem + ".envelope.ctts"},
                                      {"onset", stem + ".onset.ctts"}};
        c.note(path + " -> " + std::to_string(env.samples()) + " samples at " + window_label(env.rate) + " Hz");
    }
    io::write_atomic(manifest_path, manifest.dump(2) + "\n");
    write_provenance(c);
    return exit_ok;
}

// ---- preprocess ----

FeatureSeries load_feature(const RawTrial& r, const std::string& path, double rate) {
    auto f = io::read_feature(path);
    if (f.rate == rate) return f;
    if (f.rate >= 100.0) return prepare_feature(f);
    fail(ErrorCode::RateMismatch, path + ": feature rate " + window_label(f.rate) + " Hz does not match the EEG rate " + window_label(rate) +
                                      " Hz (trial " + r.trial + ")");
}

TrialRecord make_record(const TimeSeries& eeg, FeatureSeries att, FeatureSeries ign, const RawTrial& r, ElectrodeSet set) {
    TrialRecord rec;
    const std::size_t n = std::min({eeg.samples(), att.samples(), ign.samples()});
    rec.eeg = TimeSeries(eeg.data.leftCols(static_cast<Eigen::Index>(n)), eeg.rate, eeg.labels, eeg.edge_s);
    att.values.resize(n);
    ign.values.resize(n);
    // The raw attended file is the stream attended at trial start.
    if (r.schedule) {
        const auto a = static_cast<std::size_t>(std::clamp(std::lround(r.schedule->t1 * eeg.rate), 0L, static_cast<long>(n)));
        const auto b = static_cast<std::size_t>(std::clamp(std::lround(r.schedule->t2 * eeg.rate), 0L, static_cast<long>(n)));
        for (std::size_t i = a; i < b; ++i) std::swap(att.values[i], ign.values[i]);
    }
    rec.attended = std::move(att);
    rec.ignored = std::move(ign);
    rec.condition = r.condition;
    rec.schedule = r.schedule;
    rec.subject_id = r.subject;
    rec.trial_id = r.trial;
    rec.electrodes = set;
    rec.validate();
    return rec;
}

int cmd_preprocess(Context& c) {
    const auto& raw = c.cfg.raw;
    if (raw.empty()) fail(ErrorCode::NoInputs, "no raw trials given (inputs/raw)");
    std::vector<std::string> paths;
    for (const auto& r : raw) paths.insert(paths.end(), {r.eeg, r.attended, r.ignored});
    require_paths(paths);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i].condition == Condition::switching && !raw[i].schedule) {
            fail(ErrorCode::ConfigError, "/inputs/raw/" + std::to_string(i) + "/schedule: switching trials need a schedule");
        }
    }
    const auto& prep = c.cfg.prep;
    std::vector<std::vector<TrialRecord>> per(raw.size());
    parallel_for(raw.size(), c.cfg.jobs, [&](std::size_t i) {
        const auto& r = raw[i];
        const auto eeg = fs::path(r.eeg).extension() == ".csv" ? io::read_csv(r.eeg, c.cfg.csv_rate) : io::read_ctts(r.eeg);
        const auto att = load_feature(r, r.attended, prep.target_rate);
        const auto ign = load_feature(r, r.ignored, prep.target_rate);
        std::vector<std::string> grid, scalp = c.cfg.scalp_labels;
        const std::set<std::string> grid_all(c.cfg.grid_labels.begin(), c.cfg.grid_labels.end());
        for (const auto& l : eeg.labels) {
            if (grid_all.count(l)) grid.push_back(l);
            else if (c.cfg.scalp_labels.empty()) scalp.push_back(l);
        }
        if (grid.empty()) {
            const auto s = filter_chain(rereference_average(select_channels(eeg, scalp)), prep, prep.scalp_artifacts);
            per[i].push_back(make_record(s, att, ign, r, ElectrodeSet::scalp));
        } else {
            const auto p = preprocess_eeg(eeg, MontageSplit{scalp, grid}, prep);
            per[i].push_back(make_record(p.scalp, att, ign, r, ElectrodeSet::scalp));
            per[i].push_back(make_record(p.grid, att, ign, r, ElectrodeSet::grid));
        }
    });
    io::Bundle b;
    for (auto& v : per) {
        for (auto& r : v) b.trials.push_back({std::move(r), 0});
    }
    b.metadata_json = json{{"producer", "preprocess"},
                           {"prep",
                            {{"line_freq", prep.line_freq},
                             {"wide", {prep.wide_low, prep.wide_high}},
                             {"narrow", {prep.narrow_low, prep.narrow_high}},
                             {"order", prep.order},
                             {"target_rate", prep.target_rate},
                             {"grid_refs", prep.grid_refs}}}}
                          .dump();
    io::write_bundle(c.out(), b);
    c.note(std::to_string(b.trials.size()) + " records written");
    write_provenance(c);
    return exit_ok;
}

// ---- fit ----

int cmd_fit(Context& c) {
    const auto records = load_records(c.cfg.bundle, "bundle");
    const auto groups = make_groups(records);
    const auto fit = group_fit(c);
    const auto dir = c.cfg.direction;
    struct Out {
        std::vector<FoldModel> models;
        std::vector<CorrelationResult> corr;
    };
    const auto outs = over_groups<Out>(c, groups, [&](const Group& g) {
        auto models = fit_folds(g.trials, fit, dir);
        auto corr = evaluate_folds(models, g.trials);
        return Out{std::move(models), std::move(corr)};
    });
    fs::create_directories(c.out() / "kernels");
    std::vector<CorrelationResult> corr;
    json kernels = json::array();
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        append(corr, outs[gi].corr);
        for (const auto& m : outs[gi].models) {
            const auto& t = groups[gi].trials[m.fold.test];
            std::string stem = sanitize(t.trial_id);
            if (t.electrodes == ElectrodeSet::grid) stem += ".grid";
            stem += "." + to_string(dir);
            io::write_ctrf(c.out() / "kernels" / (stem + ".attended.ctrf"), m.attended);
            json entry{{"subject", t.subject_id}, {"condition", to_string(t.condition)}, {"electrodes", to_string(t.electrodes)},
                       {"test_trial", t.trial_id}, {"attended", "kernels/" + stem + ".attended.ctrf"}};
            if (m.ignored) {
                io::write_ctrf(c.out() / "kernels" / (stem + ".ignored.ctrf"), *m.ignored);
                entry["ignored"] = "kernels/" + stem + ".ignored.ctrf";
            }
            kernels.push_back(entry);
        }
    }
    io::write_atomic(c.out() / "correlations.csv", io::correlations_csv(corr));
    io::write_atomic(c.out() / "kernels.json", kernels.dump(2) + "\n");
    c.note(std::to_string(kernels.size()) + " fold models fitted");
    write_provenance(c);
    return exit_ok;
}

// ---- scan-lags ----

std::vector<ScanCurve> scan_group(const Context& c, const Group& g, const FitConfig& fit) {
    const auto& s = c.cfg.scan;
    const auto windows = scan_windows(s.lo, s.hi, s.length, s.step);
    std::vector<ScanCurve> out;
    for (const auto d : s.directions) append(out, optimal_lag_scan(g.trials, d, g.electrodes, fit, windows));
    return out;
}

int cmd_scan(Context& c) {
    const auto groups = make_groups(load_records(c.cfg.bundle, "bundle"));
    const auto fit = group_fit(c);
    const auto outs = over_groups<std::vector<ScanCurve>>(c, groups, [&](const Group& g) { return scan_group(c, g, fit); });
    std::vector<ScanCurve> curves;
    for (const auto& o : outs) append(curves, o);
    fs::create_directories(c.out());
    io::write_atomic(c.out() / "scan.csv", io::scan_csv(curves));
    write_provenance(c);
    return exit_ok;
}

// ---- classify / cross-classify ----

void write_classification(Context& c, const std::vector<ClassifyOut>& outs) {
    std::vector<ClassificationResult> res;
    for (const auto& o : outs) {
        append(res, o.results);
        for (const auto& s : o.skipped) c.skip(s);
    }
    fs::create_directories(c.out());
    io::write_atomic(c.out() / "classification.csv", io::classification_csv(res));
    io::write_atomic(c.out() / "classification_summary.csv", io::classification_summary_csv(res));
}

int cmd_classify(Context& c) {
    const auto groups = make_groups(load_records(c.cfg.bundle, "bundle"));
    const auto fit = group_fit(c);
    const auto outs = over_groups<ClassifyOut>(c, groups, [&](const Group& g) {
        const auto models = fit_folds(g.trials, fit, Direction::backward);
        return classify_windows(c, g.key(), [&](double w) { return classify_with(models, g.trials, w, c.cfg.seed); });
    });
    write_classification(c, outs);
    write_provenance(c);
    return exit_ok;
}

int cmd_cross(Context& c) {
    const auto train = make_groups(load_records(c.cfg.train_bundle, "train_bundle"));
    const auto test = load_records(c.cfg.test_bundle, "test_bundle");
    const auto fit = group_fit(c);
    const auto outs = over_groups<ClassifyOut>(c, train, [&](const Group& g) {
        std::vector<TrialRecord> targets;
        for (const auto& t : test) {
            if (t.subject_id == g.subject && t.electrodes == g.electrodes) targets.push_back(t);
        }
        ClassifyOut out;
        if (targets.empty()) {
            out.skipped.push_back(g.key() + ": no test trials for this subject and electrode set");
            return out;
        }
        const auto models = fit_folds(g.trials, fit, Direction::backward);
        return classify_windows(c, g.key(), [&](double w) { return cross_condition_with(models, g.trials, targets, w, c.cfg.seed); });
    });
    write_classification(c, outs);
    write_provenance(c);
    return exit_ok;
}

// ---- stats ----

int cmd_stats(Context& c) {
    if (c.cfg.group_a.empty() || c.cfg.group_b.empty()) fail(ErrorCode::NoInputs, "both kernel groups (inputs/group_a, inputs/group_b) are required");
    std::vector<std::string> all = c.cfg.group_a;
    all.insert(all.end(), c.cfg.group_b.begin(), c.cfg.group_b.end());
    require_paths(all);
    auto load = [&](const std::vector<std::string>& paths) {
        std::vector<TRFKernel> ks;
        for (const auto& p : paths) ks.push_back(smoothed(c, io::read_ctrf(p)));
        return ks;
    };
    const auto s = tfce_ttest(load(c.cfg.group_a), load(c.cfg.group_b), c.cfg.stats.n_perm, derive_seed(c.cfg.seed, {0x57a7}), c.cfg.stats.mode,
                              c.cfg.jobs, c.cfg.stats.alpha);
    fs::create_directories(c.out());
    write_stats(c.out(), "stats", s);
    c.note(std::to_string(s.clusters.size()) + " significant clusters");
    write_provenance(c);
    return exit_ok;
}

// ---- simulate ----

int cmd_simulate(Context& c) {
    const auto& sim = c.cfg.sim;
    const auto subjects = simulate_dataset(sim, c.cfg.jobs);
    io::Bundle b;
    fs::create_directories(c.out() / "ground_truth");
    for (const auto& s : subjects) {
        for (std::size_t i = 0; i < s.trials.size(); ++i) b.trials.push_back({s.trials[i], s.info[i].seed});
        io::write_ctrf(c.out() / "ground_truth" / (s.subject_id + ".ctrf"), s.kernel);
    }
    const auto canon = json::parse(c.cfg.canonical());
    b.metadata_json = json{{"producer", "simulate"}, {"simulation", canon.at("simulation")}, {"seed", c.cfg.seed},
                           {"loudspeakers_deg", {-90, -30, 30, 90}}}
                          .dump();
    io::write_bundle(c.out(), b);
    c.note(std::to_string(b.trials.size()) + " trials from " + std::to_string(subjects.size()) + " subjects");
    write_provenance(c);
    return exit_ok;
}

// ---- pipeline ----

struct PipelineOut {
    std::vector<CorrelationResult> corr;
    std::vector<ScanCurve> scan;
    ClassifyOut cls;
    std::optional<StatResult> stat;
    std::string stat_skip;
    std::optional<TRFKernel> mean_att, mean_ign;  // forward, for the group test
};

int cmd_pipeline(Context& c) {
    const auto groups = make_groups(load_records(c.cfg.bundle, "bundle"));
    const auto fit = group_fit(c);
    const auto& st = c.cfg.stats;
    const auto outs = over_groups<PipelineOut>(c, groups, [&](const Group& g) {
        PipelineOut o;
        const auto backward = fit_folds(g.trials, fit, Direction::backward);
        append(o.corr, evaluate_folds(backward, g.trials));
        o.cls = classify_windows(c, g.key(), [&](double w) { return classify_with(backward, g.trials, w, c.cfg.seed); });

        const auto forward = fit_folds(g.trials, fit, Direction::forward);
        append(o.corr, evaluate_folds(forward, g.trials));
        std::vector<TRFKernel> att, ign;
        for (const auto& m : forward) {
            att.push_back(smoothed(c, m.attended));
            ign.push_back(smoothed(c, *m.ignored));
        }
        o.mean_att = mean_kernel(att);
        o.mean_ign = mean_kernel(ign);
        if (forward.size() >= 5) {
            o.stat = tfce_ttest(att, ign, st.n_perm, derive_seed(c.cfg.seed, {fnv1a(g.key())}), st.mode, 1, st.alpha);
        } else {
            o.stat_skip = g.key() + ": fold-level statistics need at least 5 folds, got " + std::to_string(forward.size());
        }
        o.scan = scan_group(c, g, fit);
        return o;
    });

    fs::create_directories(c.out() / "stats");
    std::vector<CorrelationResult> corr;
    std::vector<ScanCurve> scan;
    std::vector<ClassifyOut> cls;
    json stat_files = json::array();
    for (std::size_t i = 0; i < groups.size(); ++i) {
        append(corr, outs[i].corr);
        append(scan, outs[i].scan);
        cls.push_back(outs[i].cls);
        if (outs[i].stat) {
            write_stats(c.out() / "stats", groups[i].key(), *outs[i].stat);
            stat_files.push_back("stats/" + groups[i].key() + ".json");
        } else {
            c.skip(outs[i].stat_skip);
        }
    }
    io::write_atomic(c.out() / "correlations.csv", io::correlations_csv(corr));
    io::write_atomic(c.out() / "scan.csv", io::scan_csv(scan));
    write_classification(c, cls);

    // Across subjects, per condition x electrode set.
    std::map<std::pair<ElectrodeSet, Condition>, std::vector<std::size_t>> across;
    for (std::size_t i = 0; i < groups.size(); ++i) across[{groups[i].electrodes, groups[i].condition}].push_back(i);
    std::vector<PairedComparison> comparisons;
    std::vector<std::string> comparison_names;
    for (const auto& [key, idx] : across) {
        const std::string name = to_string(key.second) + "-" + to_string(key.first);
        if (idx.size() >= 5) {
            std::vector<TRFKernel> a, b;
            for (const auto i : idx) {
                a.push_back(*outs[i].mean_att);
                b.push_back(*outs[i].mean_ign);
            }
            const auto s = tfce_ttest(a, b, st.n_perm, derive_seed(c.cfg.seed, {fnv1a("group-" + name)}), st.mode, c.cfg.jobs, st.alpha);
            write_stats(c.out() / "stats", "group-" + name, s);
            stat_files.push_back("stats/group-" + name + ".json");
        } else {
            c.skip("group " + name + ": subject-level statistics need at least 5 subjects, got " + std::to_string(idx.size()));
        }
        if (idx.size() >= 3) {
            PairedComparison pc;
            for (const auto i : idx) {
                // entry 0 of every group is the backward result
                pc.a.push_back(outs[i].corr.front().mean_attended());
                pc.b.push_back(outs[i].corr.front().mean_ignored());
            }
            comparisons.push_back(std::move(pc));
            comparison_names.push_back(name);
        }
    }
    std::ostringstream tests;
    tests << "comparison,n_subjects,t,p_raw,p_adjusted,rejected\n";
    if (!comparisons.empty()) {
        try {
            const auto res = paired_ttest_bh(comparisons, st.alpha);
            char buf[256];
            for (std::size_t k = 0; k < res.size(); ++k) {
                std::snprintf(buf, sizeof buf, "%s,%zu,%.17g,%.17g,%.17g,%d\n", comparison_names[k].c_str(), comparisons[k].a.size(), res[k].t,
                              res[k].p_raw, res[k].p_adjusted, res[k].rejected ? 1 : 0);
                tests << buf;
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DegenerateTest) throw;
            c.skip(std::string("paired attended/ignored tests: ") + e.what());
        }
    }
    io::write_atomic(c.out() / "group_tests.csv", tests.str());
    write_provenance(c, {{"stats_files", stat_files}, {"groups", groups.size()}});
    c.note(std::to_string(groups.size()) + " subject x condition x electrode groups analysed");
    return exit_ok;
}

int dispatch(Context& c) {
    if (c.command == "features") return cmd_features(c);
    if (c.command == "preprocess") return cmd_preprocess(c);
    if (c.command == "fit") return cmd_fit(c);
    if (c.command == "scan-lags") return cmd_scan(c);
    if (c.command == "classify") return cmd_classify(c);
    if (c.command == "cross-classify") return cmd_cross(c);
    if (c.command == "stats") return cmd_stats(c);
    if (c.command == "simulate") return cmd_simulate(c);
    return cmd_pipeline(c);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& log) {
    CLI::App app{"Speech tracking analyses: TRF fitting, attention decoding, statistics", "ntrack"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_path, out, direction, bundle, train, test;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    std::vector<std::string> audio, group_a, group_b;
    auto* o_seed = app.add_option("--seed", seed, "Base seed for every random draw");
    auto* o_jobs = app.add_option("--jobs", jobs, "Worker threads (0 = all cores)");
    auto* o_out = app.add_option("--out", out, "Output directory");
    app.add_option("--config", config_path, "JSON run configuration");

    auto* features = app.add_subcommand("features", "Envelope and onset features from WAV files");
    auto* o_audio = features->add_option("audio", audio, "WAV files");
    app.add_subcommand("preprocess", "Filter raw EEG trials into a trial bundle");
    auto* fit = app.add_subcommand("fit", "Leave-one-trial-out TRF fits and correlations");
    auto* o_dir = fit->add_option("--direction", direction, "forward or backward");
    auto* scan = app.add_subcommand("scan-lags", "Correlation over sliding lag windows");
    auto* classify = app.add_subcommand("classify", "Attention classification over decision windows");
    auto* cross = app.add_subcommand("cross-classify", "Train on one bundle, classify another");
    auto* o_train = cross->add_option("--train", train, "Training bundle");
    auto* o_test = cross->add_option("--test", test, "Test bundle");
    auto* stats = app.add_subcommand("stats", "TFCE permutation test between two kernel groups");
    auto* o_a = stats->add_option("--a", group_a, "Kernel files of group A");
    auto* o_b = stats->add_option("--b", group_b, "Kernel files of group B");
    app.add_subcommand("simulate", "Simulated trial bundle with known kernels");
    auto* pipeline = app.add_subcommand("pipeline", "Every analysis on one bundle");
    std::vector<CLI::Option*> o_bundle;
    for (auto* sub : {fit, scan, classify, pipeline}) o_bundle.push_back(sub->add_option("--bundle", bundle, "Trial bundle directory"));

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        std::ostringstream help;
        const int code = app.exit(e, help, help);
        log << help.str();
        return code == 0 ? exit_ok : exit_config;
    }

    Context c{{}, app.get_subcommands().front()->get_name(), log, {}};
    try {
        if (!config_path.empty()) c.cfg = load_config(config_path);
        if (o_seed->count()) c.cfg.seed = c.cfg.sim.seed = seed;
        if (o_jobs->count()) c.cfg.jobs = c.cfg.fit.jobs = jobs;
        if (o_out->count()) c.cfg.out = out;
        if (o_audio->count()) c.cfg.audio = audio;
        if (o_dir->count()) {
            try {
                c.cfg.direction = direction_from_string(direction);
            } catch (const Error&) {
                fail(ErrorCode::ConfigError, "--direction: expected forward or backward, got '" + direction + "'");
            }
        }
        for (auto* o : o_bundle) {
            if (o->count()) c.cfg.bundle = bundle;
        }
        if (o_train->count()) c.cfg.train_bundle = train;
        if (o_test->count()) c.cfg.test_bundle = test;
        if (o_a->count()) c.cfg.group_a = group_a;
        if (o_b->count()) c.cfg.group_b = group_b;
        c.cfg.sim.validate();
        return dispatch(c);
    } catch (const Error& e) {
        log << "ntrack " << c.command << ": error: " << e.what() << "\n";
        return e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::NoInputs ? exit_config : exit_data;
    } catch (const std::exception& e) {
        log << "ntrack " << c.command << ": error: " << e.what() << "\n";
        return exit_data;
    }
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, std::cerr);
}

}  // namespace ntrack
