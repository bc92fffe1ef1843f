#pragma once

#include "ntrack/features.hpp"
#include "ntrack/trf.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ntrack {

enum class Condition { sustained, switching, conversation };
std::string to_string(Condition c);
Condition condition_from_string(const std::string& s);

enum class ElectrodeSet { scalp, grid };
std::string to_string(ElectrodeSet e);
ElectrodeSet electrode_set_from_string(const std::string& s);

/// Attention switch times in seconds from trial start.
struct SwitchSchedule {
    double t1 = 45.0;
    double t2 = 135.0;
};

/// One trial after preprocessing. `attended` and `ignored` follow the
/// attention schedule sample by sample.
struct TrialRecord {
    TimeSeries eeg;
    FeatureSeries attended;
    FeatureSeries ignored;
    Condition condition = Condition::sustained;
    std::optional<SwitchSchedule> schedule;
    std::string subject_id;
    std::string trial_id;
    ElectrodeSet electrodes = ElectrodeSet::scalp;

    void validate() const;
    /// Samples excluded at each end (filter transients).
    std::size_t edge_samples() const;
};

/// Pearson correlation. Throws UndefinedCorrelation for a constant input.
double pearson(std::span<const double> x, std::span<const double> y);

struct FitConfig {
    double t_min = 0.0;
    double t_max = 0.5;
    double basis_width = 0.05;
    BoostConfig boost;
    std::size_t jobs = 1;

    LagGrid grid(double rate) const { return LagGrid(t_min, t_max, rate); }
};

/// Leave-one-trial-out split within one subject x condition group. Indices
/// refer to the trial list passed in.
struct Fold {
    std::string subject_id;
    Condition condition = Condition::sustained;
    std::size_t test = 0;
    std::size_t validation = 0;
    std::vector<std::size_t> train;
};

/// Groups of >= 3 trials; the validation trial of the fold testing the k-th
/// trial of a group is the (k+1)-th (cyclically).
std::vector<Fold> make_folds(const std::vector<TrialRecord>& trials);

struct FoldModel {
    Fold fold;
    TRFKernel attended;
    std::optional<TRFKernel> ignored;  // forward only
};

/// Backward models are trained on the attended feature. Forward models are
/// trained separately on each stream.
std::vector<FoldModel> fit_folds(const std::vector<TrialRecord>& trials, const FitConfig& cfg, Direction direction);

struct CorrelationResult {
    std::string subject_id;
    Condition condition = Condition::sustained;
    Direction direction = Direction::backward;
    ElectrodeSet electrode_set = ElectrodeSet::scalp;
    FeatureKind feature_kind = FeatureKind::envelope;
    std::vector<std::string> test_trials;
    std::vector<double> r_attended;  // per fold
    std::vector<double> r_ignored;

    double mean_attended() const;
    double mean_ignored() const;
};

/// Per-group fold correlations for already fitted models. Forward
/// correlations are averaged over channels.
std::vector<CorrelationResult> evaluate_folds(const std::vector<FoldModel>& models, const std::vector<TrialRecord>& trials);

std::vector<CorrelationResult> cv_fit_eval(const std::vector<TrialRecord>& trials, const FitConfig& cfg, Direction direction);

struct LagWindow {
    double start = 0.0;
    double stop = 0.0;
    double center() const { return 0.5 * (start + stop); }
    bool contains(double t) const { return t >= start - 1e-12 && t <= stop + 1e-12; }
};

/// Windows of `length` every `step` seconds covering [lo, hi].
std::vector<LagWindow> scan_windows(double lo = -0.6, double hi = 0.6, double length = 0.045, double step = 0.015);

struct ScanCurve {
    std::string subject_id;
    Condition condition = Condition::sustained;
    Direction direction = Direction::backward;
    ElectrodeSet electrode_set = ElectrodeSet::scalp;
    std::vector<LagWindow> windows;
    std::vector<double> r_attended, r_ignored;    // fold means
    std::vector<double> ci_attended, ci_ignored;  // 95% half-widths over folds

    std::size_t argmax_attended() const;
};

/// One model per window and fold; trials of other electrode sets are ignored.
std::vector<ScanCurve> optimal_lag_scan(const std::vector<TrialRecord>& trials, Direction direction, ElectrodeSet electrode_set,
                                        const FitConfig& cfg, const std::vector<LagWindow>& windows = scan_windows());

/// Non-overlapping decision windows (sample ranges) inside the usable part of
/// a trial, cut at attention switches.
struct DecisionWindow {
    std::size_t start = 0;
    std::size_t length = 0;
};
std::vector<DecisionWindow> decision_windows(const TrialRecord& trial, double window_length);

struct WindowOutcome {
    std::string trial_id;
    std::size_t model = 0;  // fold index
    double start_s = 0.0;
    double r_attended = 0.0;
    double r_ignored = 0.0;
    bool tie = false;
    bool correct = false;
};

struct ClassificationResult {
    std::string subject_id;
    Condition condition = Condition::sustained;
    double window_length = 0.0;
    std::size_t n_windows = 0;
    std::size_t n_correct = 0;
    std::vector<WindowOutcome> windows;

    double accuracy() const { return n_windows ? static_cast<double>(n_correct) / static_cast<double>(n_windows) : 0.0; }
};

/// Attended-vs-ignored decision for one window. Equal correlations (or
/// undefined ones) are resolved by a pseudo-random choice from `tie_seed`.
bool decide_attended(double r_attended, double r_ignored, const std::string& attended_id, const std::string& ignored_id,
                     std::uint64_t tie_seed, bool* tie = nullptr);

/// Each fold's backward model classifies the windows of its test trial.
std::vector<ClassificationResult> classify_with(const std::vector<FoldModel>& models, const std::vector<TrialRecord>& trials,
                                                double window_length, std::uint64_t seed = 0);

std::vector<ClassificationResult> classify_attention(const std::vector<TrialRecord>& trials, double window_length, const FitConfig& cfg,
                                                     std::uint64_t seed = 0);

/// Every model fitted on `train_trials` classifies all windows of the same
/// subject's `test_trials`; one result per subject x test condition.
std::vector<ClassificationResult> cross_condition_with(const std::vector<FoldModel>& models, const std::vector<TrialRecord>& train_trials,
                                                       const std::vector<TrialRecord>& test_trials, double window_length,
                                                       std::uint64_t seed = 0);

std::vector<ClassificationResult> cross_condition(const std::vector<TrialRecord>& train_trials, const std::vector<TrialRecord>& test_trials,
                                                  double window_length, const FitConfig& cfg, std::uint64_t seed = 0);

/// Mean of per-result accuracies.
double mean_accuracy(const std::vector<ClassificationResult>& results);

/// Default decision-window grid in seconds.
std::vector<double> default_window_lengths();

}  // namespace ntrack
