#include "ntrack/features.hpp"

#include "ntrack/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace ntrack {

namespace {

constexpr double kFeatureRate = 50.0;
constexpr double kBandLow = 1.0;
constexpr double kBandHigh = 20.0;
// Bandwidth scale that makes a 4th-order gammatone match the ERB.
constexpr double kErbScale = 1.019;

// Filters one band and returns the rectified, smoothed band output.
std::vector<double> gammatone_band(std::span<const double> x, double rate, double fc, const Sos& smoother) {
    using Complex = std::complex<double>;
    const double a = std::exp(-2.0 * std::numbers::pi * kErbScale * erb_bandwidth(fc) / rate);
    const double b = 1.0 - a;
    const double cycles_per_sample = fc / rate;
    const Complex step = std::polar(1.0, -2.0 * std::numbers::pi * cycles_per_sample);

    std::vector<double> y(x.size());
    Complex s0{}, s1{}, s2{}, s3{};
    Complex phasor(1.0, 0.0);
    for (std::size_t t = 0; t < x.size(); ++t) {
        if ((t & 1023) == 0) {
            // Resynchronize the demodulating phasor to avoid drift.
            const double frac = std::fmod(cycles_per_sample * static_cast<double>(t), 1.0);
            phasor = std::polar(1.0, -2.0 * std::numbers::pi * frac);
        }
        const Complex in = x[t] * phasor;
        s0 = b * in + a * s0;
        s1 = b * s0 + a * s1;
        s2 = b * s1 + a * s2;
        s3 = b * s2 + a * s3;
        const double out = 2.0 * (s3 * std::conj(phasor)).real();
        y[t] = out > 0.0 ? out : 0.0;
        phasor *= step;
    }
    auto smooth = sos_filtfilt(smoother, y);
    for (double& v : smooth) v = std::max(v, 0.0);
    return smooth;
}

void check_spectrogram(const Spectrogram& spec) {
    if (!(spec.frame_rate > 0.0)) fail(ErrorCode::InvalidRate, "spectrogram frame rate must be positive");
    if (spec.center_freqs.size() != spec.bands()) fail(ErrorCode::DimensionMismatch, "one centre frequency per band required");
}

}  // namespace

std::string to_string(FeatureKind kind) { return kind == FeatureKind::envelope ? "envelope" : "onset"; }

FeatureKind feature_kind_from_string(const std::string& name) {
    if (name == "envelope") return FeatureKind::envelope;
    if (name == "onset" || name == "onsets") return FeatureKind::onset;
    fail(ErrorCode::ConfigError, "unknown feature kind '" + name + "'");
}

TimeSeries FeatureSeries::as_series() const {
    Matrix m(1, static_cast<Eigen::Index>(values.size()));
    std::copy(values.begin(), values.end(), m.data());
    return TimeSeries(std::move(m), rate, {to_string(kind) + ":" + source_id}, edge_s);
}

FeatureSeries FeatureSeries::from_series(const TimeSeries& ts, FeatureKind kind, std::string source_id) {
    if (ts.channels() != 1) fail(ErrorCode::DimensionMismatch, "a feature series has exactly one channel");
    const auto ch = ts.channel(0);
    return FeatureSeries{{ch.begin(), ch.end()}, ts.rate, kind, std::move(source_id), ts.edge_s};
}

double erb_bandwidth(double freq) { return 24.7 * (4.37e-3 * freq + 1.0); }

double erb_rate(double freq) { return 21.4 * std::log10(4.37e-3 * freq + 1.0); }

double erb_rate_to_freq(double cams) { return (std::pow(10.0, cams / 21.4) - 1.0) / 4.37e-3; }

std::vector<double> erb_space(double f_lo, double f_hi, std::size_t bands) {
    if (bands < 2) fail(ErrorCode::InvalidBand, "at least two bands are required");
    if (!(f_lo > 0.0 && f_lo < f_hi)) fail(ErrorCode::InvalidBand, "band edges must satisfy 0 < f_lo < f_hi");
    const double lo = erb_rate(f_lo);
    const double hi = erb_rate(f_hi);
    std::vector<double> fc(bands);
    for (std::size_t b = 0; b < bands; ++b) {
        fc[b] = erb_rate_to_freq(lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bands - 1));
    }
    fc.front() = f_lo;
    fc.back() = f_hi;
    return fc;
}

Spectrogram gammatone_spectrogram(const TimeSeries& audio, const GammatoneOptions& opts) {
    if (audio.channels() != 1) fail(ErrorCode::MonoRequired, "gammatone analysis needs single-channel audio");
    if (!(opts.f_hi < audio.rate / 2.0)) {
        fail(ErrorCode::InvalidBand, "upper band edge " + std::to_string(opts.f_hi) + " Hz is not below Nyquist");
    }
    if (!(opts.frame_step > 0.0)) fail(ErrorCode::InvalidBand, "frame step must be positive");
    if (!audio.data.allFinite()) fail(ErrorCode::NonFiniteInput, "audio contains NaN or Inf");

    Spectrogram spec;
    spec.center_freqs = erb_space(opts.f_lo, opts.f_hi, opts.bands);
    spec.frame_rate = 1.0 / opts.frame_step;

    const double per_frame = audio.rate * opts.frame_step;
    const auto n = audio.samples();
    const auto frames = static_cast<std::size_t>(std::floor(static_cast<double>(n) / per_frame + 1e-9));
    spec.energy = Matrix::Zero(static_cast<Eigen::Index>(opts.bands), static_cast<Eigen::Index>(frames));

    const auto smoother = design_filter(FilterSpec::lowpass(std::min(opts.smoothing_cutoff, 0.45 * audio.rate), 2), audio.rate);
    const auto x = audio.channel(0);
    for (std::size_t b = 0; b < opts.bands; ++b) {
        const auto band = gammatone_band(x, audio.rate, spec.center_freqs[b], smoother);
        for (std::size_t k = 0; k < frames; ++k) {
            const auto start = static_cast<std::size_t>(std::floor(static_cast<double>(k) * per_frame + 1e-9));
            const auto stop = std::min(n, static_cast<std::size_t>(std::floor(static_cast<double>(k + 1) * per_frame + 1e-9)));
            double acc = 0.0;
            for (std::size_t t = start; t < stop; ++t) acc += band[t];
            spec.energy(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k)) = stop > start ? acc / static_cast<double>(stop - start) : 0.0;
        }
    }
    return spec;
}

FeatureSeries envelope(const Spectrogram& spec, std::string source_id) {
    check_spectrogram(spec);
    FeatureSeries f;
    f.rate = spec.frame_rate;
    f.kind = FeatureKind::envelope;
    f.source_id = std::move(source_id);
    f.values.resize(spec.frames());
    for (std::size_t t = 0; t < spec.frames(); ++t) f.values[t] = spec.energy.col(static_cast<Eigen::Index>(t)).cwiseAbs().sum();
    return f;
}

std::vector<double> savgol_derivative(int window, int poly_order) {
    if (window < 1 || window % 2 == 0) fail(ErrorCode::InvalidWindow, "Savitzky-Golay window must be odd");
    if (poly_order < 1 || poly_order >= window) fail(ErrorCode::InvalidWindow, "polynomial order must be in [1, window)");
    const int half = window / 2;
    Eigen::MatrixXd design(window, poly_order + 1);
    for (int j = -half; j <= half; ++j) {
        for (int k = 0; k <= poly_order; ++k) design(j + half, k) = std::pow(static_cast<double>(j), k);
    }
    // Row 1 of the pseudo-inverse gives the first-derivative estimate at the centre.
    const Eigen::MatrixXd pinv = (design.transpose() * design).ldlt().solve(design.transpose());
    // The centre derivative is an odd filter; enforce exact antisymmetry.
    std::vector<double> coeffs(static_cast<std::size_t>(window));
    for (int j = 0; j < window; ++j) coeffs[static_cast<std::size_t>(j)] = 0.5 * (pinv(1, j) - pinv(1, window - 1 - j));
    return coeffs;
}

FeatureSeries onsets(const Spectrogram& spec, int smooth_window, int poly_order, std::string source_id) {
    check_spectrogram(spec);
    const auto coeffs = savgol_derivative(smooth_window, poly_order);
    const int half = smooth_window / 2;
    const auto frames = static_cast<long>(spec.frames());

    FeatureSeries f;
    f.rate = spec.frame_rate;
    f.kind = FeatureKind::onset;
    f.source_id = std::move(source_id);
    f.values.assign(spec.frames(), 0.0);
    for (std::size_t b = 0; b < spec.bands(); ++b) {
        const double* row = spec.energy.data() + b * spec.frames();
        for (long t = 0; t < frames; ++t) {
            // Paired differences make constants (and edge replication) cancel exactly.
            double d = 0.0;
            for (int j = 1; j <= half; ++j) {
                const long ahead = std::min(t + j, frames - 1);
                const long behind = std::max(t - j, 0L);
                d += coeffs[static_cast<std::size_t>(half + j)] * (row[ahead] - row[behind]);
            }
            d *= spec.frame_rate;
            if (d > 0.0) f.values[static_cast<std::size_t>(t)] += d;
        }
    }
    return f;
}

FeatureSeries condition_feature(const FeatureSeries& f) {
    if (!(f.rate >= 100.0)) fail(ErrorCode::InvalidRate, "feature rate must be at least 100 Hz");
    const auto filtered = bandpass_filter(f.as_series(), FilterSpec::bandpass(kBandLow, kBandHigh));
    const auto down = resample(filtered, kFeatureRate);
    return FeatureSeries::from_series(down, f.kind, f.source_id);
}

FeatureSeries prepare_feature(const FeatureSeries& f) {
    const auto conditioned = condition_feature(f);
    return FeatureSeries::from_series(normalize(conditioned.as_series()), f.kind, f.source_id);
}

}  // namespace ntrack
