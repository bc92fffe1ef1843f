#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ntrack {

/// Seconds at each end of a filtered series that are treated as transient.
inline constexpr double kTransientSeconds = 1.0;

/// Row-major so that each channel is a contiguous run of samples.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Multichannel sampled signal (channels x samples).
///
/// `edge_s` marks how many seconds at each end are filter transients; the
/// evaluation code never scores samples inside that margin.
struct TimeSeries {
    Matrix data;
    double rate = 0.0;
    std::vector<std::string> labels;
    double edge_s = 0.0;

    TimeSeries() = default;
    TimeSeries(Matrix d, double r, std::vector<std::string> l, double edge = 0.0);

    std::size_t channels() const { return static_cast<std::size_t>(data.rows()); }
    std::size_t samples() const { return static_cast<std::size_t>(data.cols()); }
    double duration() const { return static_cast<double>(samples()) / rate; }

    std::span<const double> channel(std::size_t i) const {
        return {data.data() + i * samples(), samples()};
    }
    std::span<double> channel(std::size_t i) { return {data.data() + i * samples(), samples()}; }

    /// Index of `label`; throws UnknownChannel.
    std::size_t index_of(const std::string& label) const;

    /// Checks rate, label count and finiteness; throws on violation.
    void validate() const;
};

/// Copies the listed channels (in the given order) into a new series.
TimeSeries select_channels(const TimeSeries& ts, const std::vector<std::string>& labels);

enum class FilterKind { bandpass, lowpass, notch };

struct FilterSpec {
    FilterKind kind = FilterKind::bandpass;
    double low = 0.0;    // bandpass lower edge, Hz
    double high = 0.0;   // bandpass upper edge / lowpass cutoff, Hz
    double center = 0.0; // notch center, Hz
    double q = 30.0;     // notch quality factor
    int order = 4;       // Butterworth prototype order

    static FilterSpec bandpass(double low, double high, int order = 4);
    static FilterSpec lowpass(double cutoff, int order = 4);
    static FilterSpec notch(double center, double q = 30.0);
};

/// One biquad in direct form II transposed; a0 is normalized to 1.
struct Biquad {
    double b0, b1, b2, a1, a2;
};

using Sos = std::vector<Biquad>;

/// Digital Butterworth / notch design (bilinear transform with prewarping).
Sos design_filter(const FilterSpec& spec, double rate);

/// Complex frequency response magnitude of a cascade at `freq` Hz.
double sos_gain(const Sos& sos, double freq, double rate);

/// Causal cascade filtering in place from a zero initial state.
void sos_filter(const Sos& sos, std::span<double> x);

/// Zero-phase forward-backward filtering of one channel (odd-extension
/// padding, steady-state initial conditions).
std::vector<double> sos_filtfilt(const Sos& sos, std::span<const double> x);

/// The TimeSeries filters below widen `edge_s` to at least kTransientSeconds.
TimeSeries bandpass_filter(const TimeSeries& ts, const FilterSpec& spec);
TimeSeries lowpass_filter(const TimeSeries& ts, const FilterSpec& spec);
TimeSeries notch_filter(const TimeSeries& ts, const FilterSpec& spec);

/// Downsampling only. Integer ratios use a zero-phase lowpass at
/// 0.45 x target_rate followed by decimation; other ratios go through a
/// Kaiser-windowed polyphase FIR.
TimeSeries resample(const TimeSeries& ts, double target_rate);

/// Per-channel z-score with population standard deviation.
TimeSeries normalize(const TimeSeries& ts);

}  // namespace ntrack
