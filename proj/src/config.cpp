#include "ntrack/config.hpp"

#include "ntrack/error.hpp"
#include "ntrack/io.hpp"
#include "ntrack/seeding.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

namespace ntrack {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& where, const std::string& what) { fail(ErrorCode::ConfigError, where + ": " + what); }

std::string type_name(const json& j) { return j.type_name(); }

// Walks one object, remembering which keys were read so leftovers can be
// reported as unknown.
class Obj {
public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) bad(where(), "expected an object, got " + type_name(j_));
    }

    std::string at(const std::string& key) const { return path_ + "/" + key; }

    const json* find(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void num(const std::string& key, double& out) {
        if (const auto* v = find(key)) {
            if (!v->is_number()) bad(at(key), "expected a number, got " + type_name(*v));
            out = v->get<double>();
            if (!std::isfinite(out)) bad(at(key), "must be finite");
        }
    }
    template <class T>
    void count(const std::string& key, T& out) {
        if (const auto* v = find(key)) {
            if (!v->is_number_integer() || v->get<long long>() < 0) bad(at(key), "expected a non-negative integer");
            out = static_cast<T>(v->get<unsigned long long>());
        }
    }
    void integer(const std::string& key, int& out) {
        if (const auto* v = find(key)) {
            if (!v->is_number_integer()) bad(at(key), "expected an integer, got " + type_name(*v));
            out = v->get<int>();
        }
    }
    void boolean(const std::string& key, bool& out) {
        if (const auto* v = find(key)) {
            if (!v->is_boolean()) bad(at(key), "expected true or false, got " + type_name(*v));
            out = v->get<bool>();
        }
    }
    void str(const std::string& key, std::string& out) {
        if (const auto* v = find(key)) {
            if (!v->is_string()) bad(at(key), "expected a string, got " + type_name(*v));
            out = v->get<std::string>();
        }
    }
    void strings(const std::string& key, std::vector<std::string>& out) {
        if (const auto* v = find(key)) {
            if (!v->is_array()) bad(at(key), "expected an array of strings");
            out.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                if (!(*v)[i].is_string()) bad(at(key) + "/" + std::to_string(i), "expected a string");
                out.push_back((*v)[i].get<std::string>());
            }
        }
    }
    void numbers(const std::string& key, std::vector<double>& out) {
        if (const auto* v = find(key)) {
            if (!v->is_array()) bad(at(key), "expected an array of numbers");
            out.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                if (!(*v)[i].is_number()) bad(at(key) + "/" + std::to_string(i), "expected a number");
                out.push_back((*v)[i].get<double>());
            }
        }
    }
    template <class E, class F>
    void choice(const std::string& key, E& out, F parse) {
        std::string s;
        str(key, s);
        if (s.empty()) return;
        try {
            out = parse(s);
        } catch (const Error&) {
            bad(at(key), "unknown value '" + s + "'");
        }
    }
    std::optional<Obj> child(const std::string& key) {
        if (const auto* v = find(key)) return Obj(*v, at(key));
        return std::nullopt;
    }
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) bad(at(it.key()), "unknown key");
        }
    }

private:
    std::string where() const { return path_.empty() ? "/" : path_; }
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

// Re-raises library validation failures at a config location.
template <class F>
void checked(const std::string& where, F f) {
    try {
        f();
    } catch (const Error& e) {
        bad(where, e.what());
    }
}

json schedule_json(const std::optional<SwitchSchedule>& s) {
    if (!s) return nullptr;
    return json{{"t1", s->t1}, {"t2", s->t2}};
}

std::string stat_mode_name(StatMode m) { return m == StatMode::per_channel ? "per_channel" : "channel_mean"; }

StatMode stat_mode_from(const std::string& s) {
    if (s == "channel_mean") return StatMode::channel_mean;
    if (s == "per_channel") return StatMode::per_channel;
    fail(ErrorCode::ConfigError, "unknown statistics mode '" + s + "'");
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ConfigError, origin + ": " + e.what());
    }
    RunConfig c;
    Obj root(j, "");

    if (auto in = root.child("inputs")) {
        in->strings("audio", c.audio);
        in->str("bundle", c.bundle);
        in->str("train_bundle", c.train_bundle);
        in->str("test_bundle", c.test_bundle);
        in->strings("group_a", c.group_a);
        in->strings("group_b", c.group_b);
        in->num("csv_rate", c.csv_rate);
        if (const auto* raw = in->find("raw")) {
            if (!raw->is_array()) bad(in->at("raw"), "expected an array of trials");
            for (std::size_t i = 0; i < raw->size(); ++i) {
                Obj t((*raw)[i], in->at("raw") + "/" + std::to_string(i));
                RawTrial r;
                t.str("eeg", r.eeg);
                t.str("attended", r.attended);
                t.str("ignored", r.ignored);
                t.str("subject", r.subject);
                t.str("trial", r.trial);
                t.choice("condition", r.condition, condition_from_string);
                if (const auto* s = t.find("schedule"); s && !s->is_null()) {
                    Obj so(*s, t.at("schedule"));
                    SwitchSchedule sch{};
                    sch.t1 = sch.t2 = std::numeric_limits<double>::quiet_NaN();
                    so.num("t1", sch.t1);
                    so.num("t2", sch.t2);
                    so.finish();
                    if (!(sch.t1 < sch.t2)) bad(t.at("schedule"), "needs t1 < t2");
                    r.schedule = sch;
                }
                for (const auto* key : {"eeg", "attended", "ignored", "subject", "trial"}) {
                    if (!(*raw)[i].contains(key)) bad(t.at(key), "required");
                }
                t.finish();
                c.raw.push_back(std::move(r));
            }
        }
        in->finish();
    }
    root.str("out", c.out);
    if (auto m = root.child("montage")) {
        m->strings("scalp", c.scalp_labels);
        m->strings("grid", c.grid_labels);
        m->strings("grid_refs", c.prep.grid_refs);
        m->finish();
    }
    if (auto p = root.child("prep")) {
        p->num("line_freq", c.prep.line_freq);
        p->num("notch_q", c.prep.notch_q);
        p->num("wide_low", c.prep.wide_low);
        p->num("wide_high", c.prep.wide_high);
        p->num("narrow_low", c.prep.narrow_low);
        p->num("narrow_high", c.prep.narrow_high);
        p->integer("order", c.prep.order);
        p->num("target_rate", c.prep.target_rate);
        p->finish();
        if (!(0.0 < c.prep.wide_low && c.prep.wide_low < c.prep.wide_high)) bad("/prep/wide_low", "needs 0 < wide_low < wide_high");
        if (!(0.0 < c.prep.narrow_low && c.prep.narrow_low < c.prep.narrow_high)) bad("/prep/narrow_low", "needs 0 < narrow_low < narrow_high");
        if (c.prep.order < 1) bad("/prep/order", "must be at least 1");
        if (!(c.prep.target_rate > 0.0)) bad("/prep/target_rate", "must be positive");
    }
    root.choice("feature", c.feature, feature_kind_from_string);
    root.choice("direction", c.direction, direction_from_string);
    if (auto f = root.child("fit")) {
        f->num("t_min", c.fit.t_min);
        f->num("t_max", c.fit.t_max);
        f->num("basis_width", c.fit.basis_width);
        f->num("step_fraction", c.fit.boost.step_fraction);
        f->integer("patience", c.fit.boost.patience);
        f->count("max_iters", c.fit.boost.max_iters);
        f->finish();
    }
    checked("/fit", [&] {
        c.fit.grid(50.0).validate();
        c.fit.boost.validate();
        if (!(c.fit.basis_width >= 0.0)) fail(ErrorCode::InvalidSpec, "basis_width must be >= 0");
    });
    if (auto s = root.child("scan")) {
        s->num("lo", c.scan.lo);
        s->num("hi", c.scan.hi);
        s->num("length", c.scan.length);
        s->num("step", c.scan.step);
        if (const auto* d = s->find("directions")) {
            if (!d->is_array() || d->empty()) bad(s->at("directions"), "expected a non-empty array");
            c.scan.directions.clear();
            for (std::size_t i = 0; i < d->size(); ++i) {
                try {
                    c.scan.directions.push_back(direction_from_string((*d)[i].get<std::string>()));
                } catch (const std::exception&) {
                    bad(s->at("directions") + "/" + std::to_string(i), "expected \"forward\" or \"backward\"");
                }
            }
        }
        s->finish();
        if (!(c.scan.lo < c.scan.hi && c.scan.length > 0.0 && c.scan.step > 0.0)) bad("/scan", "needs lo < hi and positive length and step");
    }
    root.numbers("windows", c.windows);
    for (std::size_t i = 0; i < c.windows.size(); ++i) {
        if (!(c.windows[i] > 0.0)) bad("/windows/" + std::to_string(i), "window lengths must be positive");
    }
    if (auto s = root.child("stats")) {
        s->count("n_perm", c.stats.n_perm);
        s->num("smooth_width", c.stats.smooth_width);
        s->choice("mode", c.stats.mode, stat_mode_from);
        s->num("alpha", c.stats.alpha);
        s->finish();
        if (c.stats.n_perm < 100) bad("/stats/n_perm", "at least 100 permutations required");
        if (!(c.stats.alpha > 0.0 && c.stats.alpha < 1.0)) bad("/stats/alpha", "must lie in (0, 1)");
        if (!(c.stats.smooth_width >= 0.0)) bad("/stats/smooth_width", "must be >= 0 (0 disables smoothing)");
    }
    if (auto s = root.child("simulation")) {
        auto& m = c.sim;
        s->count("n_subjects", m.n_subjects);
        s->count("n_trials", m.n_trials);
        s->num("duration", m.duration);
        s->num("rate", m.rate);
        s->count("channels", m.channels);
        if (const auto* v = s->find("snr_db")) {
            if (v->is_string() && v->get<std::string>() == "inf") m.snr_db = std::numeric_limits<double>::infinity();
            else if (v->is_number()) m.snr_db = v->get<double>();
            else bad(s->at("snr_db"), "expected a number or \"inf\"");
        }
        s->num("gain_attended", m.gain_attended);
        s->num("gain_ignored", m.gain_ignored);
        s->choice("noise", m.noise, noise_kind_from_string);
        s->choice("condition", m.condition, condition_from_string);
        s->num("kernel_t_min", m.kernel_t_min);
        s->num("kernel_t_max", m.kernel_t_max);
        s->boolean("random_channel_gains", m.random_channel_gains);
        s->num("turn_min", m.turn_min);
        s->num("turn_max", m.turn_max);
        s->finish();
    }
    if (const auto* v = root.find("seed")) {
        if (!v->is_number_integer() || v->get<long long>() < 0) bad("/seed", "expected a non-negative integer");
        c.seed = v->get<std::uint64_t>();
    }
    root.count("jobs", c.jobs);
    c.fit.jobs = c.jobs;
    root.finish();
    c.sim.seed = c.seed;
    try {
        c.sim.validate();
    } catch (const Error& e) {
        const std::string msg = e.what();
        const auto colon = msg.find(": ");
        fail(ErrorCode::ConfigError, "/simulation/" + (colon == std::string::npos ? msg : msg.substr(colon + 2)));
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const Error& e) {
        fail(ErrorCode::ConfigError, std::string("cannot read config: ") + e.what());
    }
    return parse_config(text, path);
}

std::string RunConfig::canonical() const {
    json raw_trials = json::array();
    for (const auto& r : raw) {
        raw_trials.push_back({{"eeg", r.eeg},
                              {"attended", r.attended},
                              {"ignored", r.ignored},
                              {"subject", r.subject},
                              {"trial", r.trial},
                              {"condition", to_string(r.condition)},
                              {"schedule", schedule_json(r.schedule)}});
    }
    std::vector<std::string> dirs;
    for (auto d : scan.directions) dirs.push_back(to_string(d));
    json snr = std::isfinite(sim.snr_db) ? json(sim.snr_db) : json("inf");
    json j{{"inputs",
            {{"audio", audio},
             {"raw", raw_trials},
             {"bundle", bundle},
             {"train_bundle", train_bundle},
             {"test_bundle", test_bundle},
             {"group_a", group_a},
             {"group_b", group_b},
             {"csv_rate", csv_rate}}},
           {"out", out},
           {"montage", {{"scalp", scalp_labels}, {"grid", grid_labels}, {"grid_refs", prep.grid_refs}}},
           {"prep",
            {{"line_freq", prep.line_freq},
             {"notch_q", prep.notch_q},
             {"wide_low", prep.wide_low},
             {"wide_high", prep.wide_high},
             {"narrow_low", prep.narrow_low},
             {"narrow_high", prep.narrow_high},
             {"order", prep.order},
             {"target_rate", prep.target_rate}}},
           {"feature", to_string(feature)},
           {"direction", to_string(direction)},
           {"fit",
            {{"t_min", fit.t_min},
             {"t_max", fit.t_max},
             {"basis_width", fit.basis_width},
             {"step_fraction", fit.boost.step_fraction},
             {"patience", fit.boost.patience},
             {"max_iters", fit.boost.max_iters}}},
           {"scan", {{"lo", scan.lo}, {"hi", scan.hi}, {"length", scan.length}, {"step", scan.step}, {"directions", dirs}}},
           {"windows", windows},
           {"stats", {{"n_perm", stats.n_perm}, {"smooth_width", stats.smooth_width}, {"mode", stat_mode_name(stats.mode)}, {"alpha", stats.alpha}}},
           {"simulation",
            {{"n_subjects", sim.n_subjects},
             {"n_trials", sim.n_trials},
             {"duration", sim.duration},
             {"rate", sim.rate},
             {"channels", sim.channels},
             {"snr_db", snr},
             {"gain_attended", sim.gain_attended},
             {"gain_ignored", sim.gain_ignored},
             {"noise", to_string(sim.noise)},
             {"condition", to_string(sim.condition)},
             {"kernel_t_min", sim.kernel_t_min},
             {"kernel_t_max", sim.kernel_t_max},
             {"random_channel_gains", sim.random_channel_gains},
             {"turn_min", sim.turn_min},
             {"turn_max", sim.turn_max}}},
           {"seed", seed},
           {"jobs", jobs}};
    return j.dump(2);
}

std::string RunConfig::hash() const {
    // Neither the worker count nor the output location changes any result.
    auto j = json::parse(canonical());
    j.erase("jobs");
    j.erase("out");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
    return buf;
}

}  // namespace ntrack
