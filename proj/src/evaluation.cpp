#include "ntrack/evaluation.hpp"

#include "ntrack/error.hpp"
#include "ntrack/parallel.hpp"
#include "ntrack/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace ntrack {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::span<const double> trimmed(std::span<const double> x, std::size_t edge) { return x.subspan(edge, x.size() - 2 * edge); }

Matrix trimmed_row(const std::vector<double>& v, std::size_t edge) {
    const auto n = static_cast<Eigen::Index>(v.size() - 2 * edge);
    Matrix m(1, n);
    std::copy(v.begin() + static_cast<long>(edge), v.begin() + static_cast<long>(edge) + n, m.data());
    return m;
}

// Correlation that maps an undefined value (constant prediction) to 0.
double safe_pearson(std::span<const double> x, std::span<const double> y) {
    try {
        return pearson(x, y);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::UndefinedCorrelation) return 0.0;
        throw;
    }
}

double nan_pearson(std::span<const double> x, std::span<const double> y) {
    try {
        return pearson(x, y);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::UndefinedCorrelation) return kNaN;
        throw;
    }
}

Segment make_segment(const TrialRecord& t, Direction direction, bool ignored_stream) {
    const std::size_t e = t.edge_samples();
    const auto n = static_cast<Eigen::Index>(t.eeg.samples() - 2 * e);
    const auto& feat = ignored_stream ? t.ignored : t.attended;
    Matrix eeg = t.eeg.data.middleCols(static_cast<Eigen::Index>(e), n);
    Matrix f = trimmed_row(feat.values, e);
    if (direction == Direction::forward) return {std::move(f), std::move(eeg)};
    return {std::move(eeg), std::move(f)};
}

void check_compatible(const std::vector<TrialRecord>& trials) {
    if (trials.empty()) fail(ErrorCode::InsufficientTrials, "no trials given");
    const auto& ref = trials.front();
    for (const auto& t : trials) {
        t.validate();
        if (t.eeg.labels != ref.eeg.labels) fail(ErrorCode::DimensionMismatch, "trial " + t.trial_id + " has a different montage");
        if (t.eeg.rate != ref.eeg.rate) fail(ErrorCode::RateMismatch, "trial " + t.trial_id + " has a different rate");
        if (t.attended.kind != ref.attended.kind) fail(ErrorCode::DimensionMismatch, "trials mix feature kinds");
        if (t.electrodes != ref.electrodes) fail(ErrorCode::DimensionMismatch, "trials mix electrode sets");
    }
}

std::vector<double> forward_prediction_r(const TRFKernel& k, const FeatureSeries& f, const TimeSeries& eeg, std::size_t edge) {
    const auto pred = predict_forward(k, f);
    std::vector<double> r;
    for (std::size_t c = 0; c < eeg.channels(); ++c) r.push_back(safe_pearson(trimmed(pred.channel(c), edge), trimmed(eeg.channel(c), edge)));
    return r;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double ci95(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return 1.96 * std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

std::uint64_t window_seed(std::uint64_t seed, const TrialRecord& t, std::size_t model, std::size_t start) {
    return derive_seed(seed, {fnv1a(t.subject_id), fnv1a(t.trial_id), static_cast<std::uint64_t>(model), static_cast<std::uint64_t>(start)});
}

// Classifies the windows of `trial` with the backward model `k`.
void classify_trial(const TRFKernel& k, std::size_t model, const TrialRecord& trial, double window_length, std::uint64_t seed,
                    ClassificationResult& out) {
    const auto xhat = reconstruct_backward(k, trial.eeg);
    const std::span<const double> xh(xhat.values), att(trial.attended.values), ign(trial.ignored.values);
    for (const auto& w : decision_windows(trial, window_length)) {
        WindowOutcome o;
        o.trial_id = trial.trial_id;
        o.model = model;
        o.start_s = static_cast<double>(w.start) / trial.eeg.rate;
        o.r_attended = nan_pearson(xh.subspan(w.start, w.length), att.subspan(w.start, w.length));
        o.r_ignored = nan_pearson(xh.subspan(w.start, w.length), ign.subspan(w.start, w.length));
        o.correct = decide_attended(o.r_attended, o.r_ignored, trial.attended.source_id, trial.ignored.source_id,
                                    window_seed(seed, trial, model, w.start), &o.tie);
        ++out.n_windows;
        out.n_correct += o.correct ? 1 : 0;
        out.windows.push_back(std::move(o));
    }
}

using GroupKey = std::pair<std::string, Condition>;

}  // namespace

std::string to_string(Condition c) {
    switch (c) {
        case Condition::sustained: return "sustained";
        case Condition::switching: return "switching";
        case Condition::conversation: return "conversation";
    }
    return "?";
}

Condition condition_from_string(const std::string& s) {
    if (s == "sustained") return Condition::sustained;
    if (s == "switching") return Condition::switching;
    if (s == "conversation") return Condition::conversation;
    fail(ErrorCode::ConfigError, "unknown condition '" + s + "'");
}

std::string to_string(ElectrodeSet e) { return e == ElectrodeSet::scalp ? "scalp" : "grid"; }

ElectrodeSet electrode_set_from_string(const std::string& s) {
    if (s == "scalp") return ElectrodeSet::scalp;
    if (s == "grid") return ElectrodeSet::grid;
    fail(ErrorCode::ConfigError, "unknown electrode set '" + s + "'");
}

void TrialRecord::validate() const {
    eeg.validate();
    if (attended.rate != eeg.rate || ignored.rate != eeg.rate) fail(ErrorCode::RateMismatch, "trial " + trial_id + ": feature and EEG rates differ");
    if (attended.samples() != eeg.samples() || ignored.samples() != eeg.samples()) {
        fail(ErrorCode::DimensionMismatch, "trial " + trial_id + ": feature and EEG lengths differ");
    }
    if (condition == Condition::switching && !schedule) fail(ErrorCode::InvalidSpec, "switching trial " + trial_id + " has no schedule");
    if (schedule && !(schedule->t1 > 0.0 && schedule->t1 < schedule->t2 && schedule->t2 < eeg.duration())) {
        fail(ErrorCode::InvalidSpec, "trial " + trial_id + ": switch times outside the trial");
    }
    if (2 * edge_samples() + 3 > eeg.samples()) fail(ErrorCode::DimensionMismatch, "trial " + trial_id + " is too short");
}

std::size_t TrialRecord::edge_samples() const {
    const double e = std::max({eeg.edge_s, attended.edge_s, ignored.edge_s, 0.0});
    return static_cast<std::size_t>(std::lround(e * eeg.rate));
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) fail(ErrorCode::DimensionMismatch, "pearson needs equal lengths");
    if (x.size() < 3) fail(ErrorCode::DimensionMismatch, "pearson needs at least 3 samples");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0, ax = 0.0, ay = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
        ax = std::max(ax, std::abs(x[i]));
        ay = std::max(ay, std::abs(y[i]));
    }
    // Rounding leaves tiny deviations around the mean of a constant vector.
    const double eps = 1e-13;
    if (!(sxx > n * (eps * ax) * (eps * ax)) || !(syy > n * (eps * ay) * (eps * ay))) {
        fail(ErrorCode::UndefinedCorrelation, "correlation is undefined for a constant input");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<Fold> make_folds(const std::vector<TrialRecord>& trials) {
    std::vector<GroupKey> order;
    std::map<GroupKey, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        GroupKey key{trials[i].subject_id, trials[i].condition};
        if (!groups.count(key)) order.push_back(key);
        groups[key].push_back(i);
    }
    std::vector<Fold> folds;
    for (const auto& key : order) {
        const auto& idx = groups[key];
        if (idx.size() < 3) {
            fail(ErrorCode::InsufficientTrials, "subject " + key.first + " (" + to_string(key.second) + ") has " + std::to_string(idx.size()) +
                                                    " trials; at least 3 are needed");
        }
        for (std::size_t k = 0; k < idx.size(); ++k) {
            Fold f;
            f.subject_id = key.first;
            f.condition = key.second;
            f.test = idx[k];
            f.validation = idx[(k + 1) % idx.size()];
            for (const auto i : idx) {
                if (i != f.test && i != f.validation) f.train.push_back(i);
            }
            folds.push_back(std::move(f));
        }
    }
    return folds;
}

std::vector<FoldModel> fit_folds(const std::vector<TrialRecord>& trials, const FitConfig& cfg, Direction direction) {
    check_compatible(trials);
    const auto folds = make_folds(trials);
    const auto grid = cfg.grid(trials.front().eeg.rate);
    const auto basis = make_basis(grid, cfg.basis_width);
    std::vector<FoldModel> models(folds.size());
    parallel_for(folds.size(), cfg.jobs, [&](std::size_t f) {
        const auto& fold = folds[f];
        auto fit = [&](bool ignored) {
            std::vector<Segment> train;
            for (const auto i : fold.train) train.push_back(make_segment(trials[i], direction, ignored));
            const std::vector<Segment> val{make_segment(trials[fold.validation], direction, ignored)};
            return fit_boosting(train, val, grid, basis, direction, cfg.boost, trials.front().eeg.labels).kernel;
        };
        models[f].fold = fold;
        models[f].attended = fit(false);
        if (direction == Direction::forward) models[f].ignored = fit(true);
    });
    return models;
}

double CorrelationResult::mean_attended() const { return mean(r_attended); }
double CorrelationResult::mean_ignored() const { return mean(r_ignored); }

std::vector<CorrelationResult> evaluate_folds(const std::vector<FoldModel>& models, const std::vector<TrialRecord>& trials) {
    std::vector<CorrelationResult> out;
    std::map<GroupKey, std::size_t> where;
    for (const auto& m : models) {
        const auto& t = trials.at(m.fold.test);
        const GroupKey key{m.fold.subject_id, m.fold.condition};
        if (!where.count(key)) {
            where[key] = out.size();
            CorrelationResult r;
            r.subject_id = key.first;
            r.condition = key.second;
            r.direction = m.attended.direction;
            r.electrode_set = t.electrodes;
            r.feature_kind = t.attended.kind;
            out.push_back(std::move(r));
        }
        auto& res = out[where[key]];
        const std::size_t e = t.edge_samples();
        res.test_trials.push_back(t.trial_id);
        if (m.attended.direction == Direction::backward) {
            const auto xhat = reconstruct_backward(m.attended, t.eeg);
            res.r_attended.push_back(safe_pearson(trimmed(xhat.values, e), trimmed(t.attended.values, e)));
            res.r_ignored.push_back(safe_pearson(trimmed(xhat.values, e), trimmed(t.ignored.values, e)));
        } else {
            if (!m.ignored) fail(ErrorCode::InvalidSpec, "forward fold model lacks the ignored-stream kernel");
            res.r_attended.push_back(mean(forward_prediction_r(m.attended, t.attended, t.eeg, e)));
            res.r_ignored.push_back(mean(forward_prediction_r(*m.ignored, t.ignored, t.eeg, e)));
        }
    }
    return out;
}

std::vector<CorrelationResult> cv_fit_eval(const std::vector<TrialRecord>& trials, const FitConfig& cfg, Direction direction) {
    return evaluate_folds(fit_folds(trials, cfg, direction), trials);
}

std::vector<LagWindow> scan_windows(double lo, double hi, double length, double step) {
    if (!(length > 0.0 && step > 0.0 && hi - lo >= length)) fail(ErrorCode::InvalidWindow, "lag window does not fit the scan range");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo - length) / step + 1e-9)) + 1;
    std::vector<LagWindow> w(count);
    for (std::size_t i = 0; i < count; ++i) {
        w[i].start = lo + static_cast<double>(i) * step;
        w[i].stop = w[i].start + length;
    }
    return w;
}

std::size_t ScanCurve::argmax_attended() const {
    return static_cast<std::size_t>(std::max_element(r_attended.begin(), r_attended.end()) - r_attended.begin());
}

std::vector<ScanCurve> optimal_lag_scan(const std::vector<TrialRecord>& trials, Direction direction, ElectrodeSet electrode_set,
                                        const FitConfig& cfg, const std::vector<LagWindow>& windows) {
    std::vector<TrialRecord> selected;
    for (const auto& t : trials) {
        if (t.electrodes == electrode_set) selected.push_back(t);
    }
    if (selected.empty()) fail(ErrorCode::InsufficientTrials, "no trials recorded with the " + to_string(electrode_set) + " electrodes");

    std::vector<std::vector<CorrelationResult>> per_window(windows.size());
    FitConfig inner = cfg;
    inner.jobs = 1;
    parallel_for(windows.size(), cfg.jobs, [&](std::size_t w) {
        FitConfig c = inner;
        c.t_min = windows[w].start;
        c.t_max = windows[w].stop;
        per_window[w] = cv_fit_eval(selected, c, direction);
    });

    std::vector<ScanCurve> curves;
    for (std::size_t g = 0; g < per_window.front().size(); ++g) {
        ScanCurve s;
        s.subject_id = per_window.front()[g].subject_id;
        s.condition = per_window.front()[g].condition;
        s.direction = direction;
        s.electrode_set = electrode_set;
        s.windows = windows;
        for (std::size_t w = 0; w < windows.size(); ++w) {
            const auto& r = per_window[w][g];
            s.r_attended.push_back(r.mean_attended());
            s.r_ignored.push_back(r.mean_ignored());
            s.ci_attended.push_back(ci95(r.r_attended));
            s.ci_ignored.push_back(ci95(r.r_ignored));
        }
        curves.push_back(std::move(s));
    }
    return curves;
}

std::vector<DecisionWindow> decision_windows(const TrialRecord& trial, double window_length) {
    const double rate = trial.eeg.rate;
    const auto len = static_cast<std::size_t>(std::lround(window_length * rate));
    if (len < 3) fail(ErrorCode::InvalidWindow, "decision window must span at least 3 samples");
    const std::size_t e = trial.edge_samples();
    const std::size_t lo = e, hi = trial.eeg.samples() - e;
    std::vector<std::size_t> cuts{lo};
    if (trial.schedule) {
        for (const double ts : {trial.schedule->t1, trial.schedule->t2}) {
            const auto s = static_cast<std::size_t>(std::lround(ts * rate));
            if (s > lo && s < hi) cuts.push_back(s);
        }
    }
    cuts.push_back(hi);
    std::vector<DecisionWindow> out;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        for (std::size_t s = cuts[k]; s + len <= cuts[k + 1]; s += len) out.push_back({s, len});
    }
    return out;
}

bool decide_attended(double r_attended, double r_ignored, const std::string& attended_id, const std::string& ignored_id,
                     std::uint64_t tie_seed, bool* tie) {
    const bool is_tie = !std::isfinite(r_attended) || !std::isfinite(r_ignored) || r_attended == r_ignored;
    if (tie) *tie = is_tie;
    if (!is_tie) return r_attended > r_ignored;
    const bool coin = (splitmix64(tie_seed) >> 63) != 0;
    if (attended_id == ignored_id) return coin;
    // The coin picks a stream by identity so that swapping labels flips the outcome.
    return coin == (attended_id < ignored_id);
}

std::vector<ClassificationResult> classify_with(const std::vector<FoldModel>& models, const std::vector<TrialRecord>& trials,
                                                double window_length, std::uint64_t seed) {
    std::vector<ClassificationResult> out;
    std::map<GroupKey, std::size_t> where;
    for (std::size_t m = 0; m < models.size(); ++m) {
        const auto& fm = models[m];
        if (fm.attended.direction != Direction::backward) fail(ErrorCode::InvalidSpec, "classification needs backward models");
        const auto& f = fm.fold;
        if (f.test == f.validation || std::find(f.train.begin(), f.train.end(), f.test) != f.train.end()) {
            fail(ErrorCode::InvalidSpec, "test trial overlaps the fold's training data");
        }
        const auto& t = trials.at(f.test);
        const GroupKey key{t.subject_id, t.condition};
        if (!where.count(key)) {
            where[key] = out.size();
            out.push_back({t.subject_id, t.condition, window_length, 0, 0, {}});
        }
        classify_trial(fm.attended, m, t, window_length, seed, out[where[key]]);
    }
    std::size_t total = 0;
    for (const auto& r : out) total += r.n_windows;
    if (total == 0) fail(ErrorCode::WindowTooLong, "no " + std::to_string(window_length) + " s window fits into any usable segment");
    return out;
}

std::vector<ClassificationResult> classify_attention(const std::vector<TrialRecord>& trials, double window_length, const FitConfig& cfg,
                                                     std::uint64_t seed) {
    // Reject impossible windows before fitting anything.
    bool any = false;
    for (const auto& t : trials) any = any || !decision_windows(t, window_length).empty();
    if (!any) fail(ErrorCode::WindowTooLong, "no " + std::to_string(window_length) + " s window fits into any usable segment");
    return classify_with(fit_folds(trials, cfg, Direction::backward), trials, window_length, seed);
}

std::vector<ClassificationResult> cross_condition_with(const std::vector<FoldModel>& models, const std::vector<TrialRecord>& train_trials,
                                                       const std::vector<TrialRecord>& test_trials, double window_length,
                                                       std::uint64_t seed) {
    if (train_trials.empty() || test_trials.empty()) fail(ErrorCode::InsufficientTrials, "cross-condition needs train and test trials");
    const auto& ref = train_trials.front();
    for (const auto& t : test_trials) {
        t.validate();
        if (t.eeg.labels != ref.eeg.labels || t.electrodes != ref.electrodes) {
            fail(ErrorCode::DimensionMismatch, "test trial " + t.trial_id + " uses a different montage than the training set");
        }
        if (t.attended.kind != ref.attended.kind) fail(ErrorCode::DimensionMismatch, "train and test sets use different feature kinds");
    }
    std::vector<ClassificationResult> out;
    std::map<GroupKey, std::size_t> where;
    for (std::size_t m = 0; m < models.size(); ++m) {
        const auto& fm = models[m];
        if (fm.attended.direction != Direction::backward) fail(ErrorCode::InvalidSpec, "classification needs backward models");
        for (const auto& t : test_trials) {
            if (t.subject_id != fm.fold.subject_id) continue;
            const GroupKey key{t.subject_id, t.condition};
            if (!where.count(key)) {
                where[key] = out.size();
                out.push_back({t.subject_id, t.condition, window_length, 0, 0, {}});
            }
            classify_trial(fm.attended, m, t, window_length, seed, out[where[key]]);
        }
    }
    std::size_t total = 0;
    for (const auto& r : out) total += r.n_windows;
    if (total == 0) fail(ErrorCode::WindowTooLong, "no " + std::to_string(window_length) + " s window fits into any test segment");
    return out;
}

std::vector<ClassificationResult> cross_condition(const std::vector<TrialRecord>& train_trials, const std::vector<TrialRecord>& test_trials,
                                                  double window_length, const FitConfig& cfg, std::uint64_t seed) {
    return cross_condition_with(fit_folds(train_trials, cfg, Direction::backward), train_trials, test_trials, window_length, seed);
}

double mean_accuracy(const std::vector<ClassificationResult>& results) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& r : results) {
        if (r.n_windows == 0) continue;
        s += r.accuracy();
        ++n;
    }
    return n ? s / static_cast<double>(n) : 0.0;
}

std::vector<double> default_window_lengths() { return {1.1, 2.2, 4.4, 8.8, 17.5, 35.0, 178.0}; }

}  // namespace ntrack
