#pragma once

#include "ntrack/signal.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace ntrack {

/// Splits a recording into scalp cap channels and around-the-ear grid channels.
struct MontageSplit {
    std::vector<std::string> scalp_labels;
    std::vector<std::string> grid_labels;

    /// Throws DimensionMismatch on overlap, UnknownChannel on absent labels.
    void validate_against(const TimeSeries& recording) const;

    /// Grid channels L1..L10, R1..R10.
    static std::vector<std::string> default_grid_labels();
};

/// Receives the 0.1-40 Hz filtered channels and returns a cleaned series of the
/// same shape. Empty function = no-op.
using ArtifactHook = std::function<TimeSeries(const TimeSeries&)>;

/// Hook that zeroes samples flagged by an external channels x samples mask
/// (non-zero entries are rejected).
ArtifactHook mask_hook(Matrix rejection_mask);

struct EegPrepConfig {
    double line_freq = 50.0;
    double notch_q = 30.0;
    double wide_low = 0.1;
    double wide_high = 40.0;
    double narrow_low = 1.0;
    double narrow_high = 20.0;
    int order = 4;
    double target_rate = 50.0;
    std::vector<std::string> grid_refs{"L4", "R4"};
    ArtifactHook scalp_artifacts;
    ArtifactHook grid_artifacts;
};

TimeSeries rereference_average(const TimeSeries& eeg);
TimeSeries rereference_channels(const TimeSeries& eeg, const std::vector<std::string>& refs);

/// Filter chain applied after re-referencing: notch, wideband, artifact hook,
/// narrowband, downsampling, normalization.
TimeSeries filter_chain(const TimeSeries& eeg, const EegPrepConfig& cfg, const ArtifactHook& hook);

struct PreprocessedEeg {
    TimeSeries scalp;
    TimeSeries grid;
};

/// Scalp channels are average-referenced, grid channels referenced to the mean
/// of cfg.grid_refs, then both run through filter_chain.
PreprocessedEeg preprocess_eeg(const TimeSeries& eeg, const MontageSplit& montage, const EegPrepConfig& cfg = {});

}  // namespace ntrack
