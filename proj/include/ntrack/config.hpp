#pragma once

#include "ntrack/eeg_prep.hpp"
#include "ntrack/evaluation.hpp"
#include "ntrack/stats.hpp"
#include "ntrack/synth.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ntrack {

/// One raw recording for `preprocess`.
struct RawTrial {
    std::string eeg;  // .ctts or .csv
    std::string attended, ignored;  // feature files
    std::string subject, trial;
    Condition condition = Condition::sustained;
    std::optional<SwitchSchedule> schedule;
};

struct ScanConfig {
    double lo = -0.6, hi = 0.6, length = 0.045, step = 0.015;
    std::vector<Direction> directions{Direction::backward, Direction::forward};
};

struct StatsConfig {
    std::size_t n_perm = 1000;
    double smooth_width = 0.05;
    StatMode mode = StatMode::channel_mean;
    double alpha = 0.05;
};

/// Everything a command needs; every field has a default except the inputs.
struct RunConfig {
    // inputs
    std::vector<std::string> audio;
    std::vector<RawTrial> raw;
    std::string bundle, train_bundle, test_bundle;
    std::vector<std::string> group_a, group_b;
    double csv_rate = 500.0;

    std::string out = "out";
    std::vector<std::string> scalp_labels;  // empty: every non-grid channel
    std::vector<std::string> grid_labels = MontageSplit::default_grid_labels();
    EegPrepConfig prep;
    FeatureKind feature = FeatureKind::envelope;
    Direction direction = Direction::backward;
    FitConfig fit;
    ScanConfig scan;
    std::vector<double> windows = default_window_lengths();
    StatsConfig stats;
    SimConfig sim;
    std::uint64_t seed = 1;
    std::size_t jobs = 1;

    /// Canonical JSON (sorted keys, every field present).
    std::string canonical() const;
    /// FNV-1a of the canonical form without jobs and out, hex.
    std::string hash() const;
};

/// Parses and validates; errors are ConfigError with a JSON-pointer location.
RunConfig parse_config(const std::string& text, const std::string& origin = "config");
RunConfig load_config(const std::string& path);

}  // namespace ntrack
