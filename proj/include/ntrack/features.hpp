#pragma once

#include "ntrack/signal.hpp"

#include <string>
#include <vector>

namespace ntrack {

/// Band energies of a gammatone filterbank (bands x frames).
struct Spectrogram {
    Matrix energy;
    std::vector<double> center_freqs;
    double frame_rate = 0.0;

    std::size_t bands() const { return static_cast<std::size_t>(energy.rows()); }
    std::size_t frames() const { return static_cast<std::size_t>(energy.cols()); }
};

enum class FeatureKind { envelope, onset };

std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& name);

/// Single-channel stimulus representation.
struct FeatureSeries {
    std::vector<double> values;
    double rate = 0.0;
    FeatureKind kind = FeatureKind::envelope;
    std::string source_id;
    double edge_s = 0.0;

    std::size_t samples() const { return values.size(); }
    double duration() const { return static_cast<double>(values.size()) / rate; }

    TimeSeries as_series() const;
    static FeatureSeries from_series(const TimeSeries& ts, FeatureKind kind, std::string source_id);
};

/// Glasberg & Moore equivalent rectangular bandwidth in Hz.
double erb_bandwidth(double freq);
/// ERB-rate (Cams) of a frequency and its inverse.
double erb_rate(double freq);
double erb_rate_to_freq(double cams);

/// `bands` centre frequencies spaced uniformly on the ERB-rate scale,
/// including both end points.
std::vector<double> erb_space(double f_lo, double f_hi, std::size_t bands);

struct GammatoneOptions {
    std::size_t bands = 128;
    double f_lo = 80.0;
    double f_hi = 15000.0;
    double frame_step = 0.001;
    double smoothing_cutoff = 150.0;  // lowpass on the half-wave rectified band output
};

/// 4th-order all-pole gammatone filterbank; each band is normalized to unit
/// gain at its centre frequency, half-wave rectified, lowpassed, then
/// averaged over frames of `frame_step` seconds.
Spectrogram gammatone_spectrogram(const TimeSeries& audio, const GammatoneOptions& opts = {});

/// Band sum of |energy|.
FeatureSeries envelope(const Spectrogram& spec, std::string source_id = {});

/// Savitzky-Golay smoothing-derivative coefficients (per-sample units) for an
/// odd window and polynomial order below the window length.
std::vector<double> savgol_derivative(int window, int poly_order);

/// Half-wave rectified Savitzky-Golay derivative per band, summed over bands.
FeatureSeries onsets(const Spectrogram& spec, int smooth_window = 11, int poly_order = 2, std::string source_id = {});

/// 1-20 Hz bandpass and downsampling to 50 Hz (no normalization).
FeatureSeries condition_feature(const FeatureSeries& f);

/// condition_feature followed by z-scoring.
FeatureSeries prepare_feature(const FeatureSeries& f);

}  // namespace ntrack
