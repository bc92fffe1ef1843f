#include "ntrack/eeg_prep.hpp"

#include "ntrack/error.hpp"

#include <set>

namespace ntrack {

void MontageSplit::validate_against(const TimeSeries& recording) const {
    const std::set<std::string> scalp(scalp_labels.begin(), scalp_labels.end());
    for (const auto& g : grid_labels) {
        if (scalp.count(g)) fail(ErrorCode::DimensionMismatch, "channel '" + g + "' is in both scalp and grid sets");
    }
    for (const auto& l : scalp_labels) (void)recording.index_of(l);
    for (const auto& l : grid_labels) (void)recording.index_of(l);
}

std::vector<std::string> MontageSplit::default_grid_labels() {
    std::vector<std::string> labels;
    for (const char side : {'L', 'R'}) {
        for (int i = 1; i <= 10; ++i) labels.push_back(std::string(1, side) + std::to_string(i));
    }
    return labels;
}

ArtifactHook mask_hook(Matrix rejection_mask) {
    return [mask = std::move(rejection_mask)](const TimeSeries& ts) {
        if (mask.rows() != ts.data.rows() || mask.cols() != ts.data.cols()) {
            fail(ErrorCode::DimensionMismatch, "artifact mask shape does not match the data");
        }
        TimeSeries out = ts;
        out.data = (mask.array() != 0.0).select(0.0, ts.data);
        return out;
    };
}

TimeSeries rereference_average(const TimeSeries& eeg) {
    if (eeg.channels() < 2) fail(ErrorCode::InsufficientChannels, "average reference needs at least two channels");
    TimeSeries out = eeg;
    const Eigen::RowVectorXd mean = eeg.data.colwise().mean();
    out.data.rowwise() -= mean;
    return out;
}

TimeSeries rereference_channels(const TimeSeries& eeg, const std::vector<std::string>& refs) {
    if (refs.empty()) fail(ErrorCode::UnknownChannel, "no reference channels given");
    Eigen::RowVectorXd ref = Eigen::RowVectorXd::Zero(eeg.data.cols());
    for (const auto& r : refs) ref += eeg.data.row(static_cast<Eigen::Index>(eeg.index_of(r)));
    ref /= static_cast<double>(refs.size());
    TimeSeries out = eeg;
    out.data.rowwise() -= ref;
    return out;
}

TimeSeries filter_chain(const TimeSeries& eeg, const EegPrepConfig& cfg, const ArtifactHook& hook) {
    auto ts = notch_filter(eeg, FilterSpec::notch(cfg.line_freq, cfg.notch_q));
    ts = bandpass_filter(ts, FilterSpec::bandpass(cfg.wide_low, cfg.wide_high, cfg.order));
    if (hook) {
        auto cleaned = hook(ts);
        if (cleaned.data.rows() != ts.data.rows() || cleaned.data.cols() != ts.data.cols()) {
            fail(ErrorCode::DimensionMismatch, "artifact hook changed the data shape");
        }
        ts = std::move(cleaned);
    }
    ts = bandpass_filter(ts, FilterSpec::bandpass(cfg.narrow_low, cfg.narrow_high, cfg.order));
    ts = resample(ts, cfg.target_rate);
    return normalize(ts);
}

PreprocessedEeg preprocess_eeg(const TimeSeries& eeg, const MontageSplit& montage, const EegPrepConfig& cfg) {
    montage.validate_against(eeg);
    auto scalp = rereference_average(select_channels(eeg, montage.scalp_labels));
    auto grid = select_channels(eeg, montage.grid_labels);
    grid = rereference_channels(grid, cfg.grid_refs);
    return {filter_chain(scalp, cfg, cfg.scalp_artifacts), filter_chain(grid, cfg, cfg.grid_artifacts)};
}

}  // namespace ntrack
