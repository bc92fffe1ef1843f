#include "ntrack/signal.hpp"

#include "ntrack/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

namespace ntrack {

namespace {

using Complex = std::complex<double>;

struct Zpk {
    std::vector<Complex> zeros;
    std::vector<Complex> poles;
    double gain = 1.0;
};

Zpk butter_prototype(int order) {
    Zpk proto;
    for (int m = -order + 1; m < order; m += 2) {
        proto.poles.push_back(-std::exp(Complex(0.0, std::numbers::pi * m / (2.0 * order))));
    }
    return proto;
}

Zpk lowpass_transform(Zpk zpk, double wo) {
    const int degree = static_cast<int>(zpk.poles.size() - zpk.zeros.size());
    for (auto& z : zpk.zeros) z *= wo;
    for (auto& p : zpk.poles) p *= wo;
    zpk.gain *= std::pow(wo, degree);
    return zpk;
}

Zpk bandpass_transform(const Zpk& lp, double wo, double bw) {
    const int degree = static_cast<int>(lp.poles.size() - lp.zeros.size());
    Zpk bp;
    auto split = [&](const std::vector<Complex>& roots, std::vector<Complex>& out) {
        for (const auto& r : roots) {
            const Complex scaled = r * (bw / 2.0);
            const Complex root = std::sqrt(scaled * scaled - wo * wo);
            out.push_back(scaled + root);
            out.push_back(scaled - root);
        }
    };
    split(lp.zeros, bp.zeros);
    split(lp.poles, bp.poles);
    for (int i = 0; i < degree; ++i) bp.zeros.emplace_back(0.0, 0.0);
    bp.gain = lp.gain * std::pow(bw, degree);
    return bp;
}

Zpk bilinear(const Zpk& analog, double rate) {
    const double fs2 = 2.0 * rate;
    const int degree = static_cast<int>(analog.poles.size() - analog.zeros.size());
    Zpk digital;
    Complex num(1.0, 0.0);
    Complex den(1.0, 0.0);
    for (const auto& z : analog.zeros) {
        digital.zeros.push_back((fs2 + z) / (fs2 - z));
        num *= fs2 - z;
    }
    for (const auto& p : analog.poles) {
        digital.poles.push_back((fs2 + p) / (fs2 - p));
        den *= fs2 - p;
    }
    for (int i = 0; i < degree; ++i) digital.zeros.emplace_back(-1.0, 0.0);
    digital.gain = analog.gain * (num / den).real();
    return digital;
}

// Groups roots into conjugate pairs (complex) or adjacent pairs (real).
std::vector<std::pair<Complex, Complex>> pair_roots(std::vector<Complex> roots, bool interleave) {
    constexpr double tol = 1e-10;
    std::vector<std::pair<Complex, Complex>> pairs;
    std::vector<Complex> reals;
    std::vector<bool> used(roots.size(), false);
    for (std::size_t i = 0; i < roots.size(); ++i) {
        if (used[i]) continue;
        if (std::abs(roots[i].imag()) <= tol * std::max(1.0, std::abs(roots[i]))) {
            reals.push_back(roots[i].real());
            used[i] = true;
            continue;
        }
        std::size_t best = roots.size();
        double best_dist = 0.0;
        for (std::size_t j = i + 1; j < roots.size(); ++j) {
            if (used[j]) continue;
            const double d = std::abs(roots[j] - std::conj(roots[i]));
            if (best == roots.size() || d < best_dist) {
                best = j;
                best_dist = d;
            }
        }
        used[i] = true;
        used[best] = true;
        pairs.emplace_back(roots[i], std::conj(roots[i]));
    }
    std::sort(reals.begin(), reals.end(), [](Complex a, Complex b) { return a.real() < b.real(); });
    if (interleave) {
        // Pair the smallest real root with the largest so bandpass sections
        // each get one zero at +1 and one at -1.
        std::size_t lo = 0, hi = reals.size();
        while (hi - lo >= 2) {
            pairs.emplace_back(reals[lo], reals[hi - 1]);
            ++lo;
            --hi;
        }
        if (hi - lo == 1) pairs.emplace_back(reals[lo], Complex(std::nan(""), 0.0));
    } else {
        std::size_t k = 0;
        for (; k + 1 < reals.size(); k += 2) pairs.emplace_back(reals[k], reals[k + 1]);
        if (k < reals.size()) pairs.emplace_back(reals[k], Complex(std::nan(""), 0.0));
    }
    return pairs;
}

// (1 - r1 z^-1)(1 - r2 z^-1); a NaN second root marks a first-order factor.
std::array<double, 3> quadratic(const std::pair<Complex, Complex>& roots) {
    if (std::isnan(roots.second.real())) return {1.0, -roots.first.real(), 0.0};
    return {1.0, -(roots.first + roots.second).real(), (roots.first * roots.second).real()};
}

Sos zpk_to_sos(const Zpk& zpk) {
    auto pole_pairs = pair_roots(zpk.poles, false);
    auto zero_pairs = pair_roots(zpk.zeros, true);
    Sos sos;
    for (std::size_t i = 0; i < pole_pairs.size(); ++i) {
        const auto a = quadratic(pole_pairs[i]);
        std::array<double, 3> b{1.0, 0.0, 0.0};
        if (i < zero_pairs.size()) b = quadratic(zero_pairs[i]);
        sos.push_back({b[0], b[1], b[2], a[1], a[2]});
    }
    if (!sos.empty()) {
        sos.front().b0 *= zpk.gain;
        sos.front().b1 *= zpk.gain;
        sos.front().b2 *= zpk.gain;
    }
    return sos;
}

double prewarp(double freq, double rate) { return 2.0 * rate * std::tan(std::numbers::pi * freq / rate); }

void check_finite(const TimeSeries& ts) {
    if (!ts.data.allFinite()) fail(ErrorCode::NonFiniteInput, "time series contains NaN or Inf");
}

// Steady-state DF2T states of every section for a unit step input.
std::vector<std::array<double, 2>> steady_state(const Sos& sos) {
    std::vector<std::array<double, 2>> zi(sos.size());
    double scale = 1.0;
    for (std::size_t s = 0; s < sos.size(); ++s) {
        const auto& q = sos[s];
        const double dc = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
        zi[s] = {scale * (dc - q.b0), scale * (q.b2 - q.a2 * dc)};
        scale *= dc;
    }
    return zi;
}

void run_cascade(const Sos& sos, std::span<double> x, std::vector<std::array<double, 2>> state) {
    for (std::size_t s = 0; s < sos.size(); ++s) {
        const auto& q = sos[s];
        double z1 = state[s][0];
        double z2 = state[s][1];
        for (double& v : x) {
            const double in = v;
            const double out = q.b0 * in + z1;
            z1 = q.b1 * in - q.a1 * out + z2;
            z2 = q.b2 * in - q.a2 * out;
            v = out;
        }
    }
}

TimeSeries filter_channels(const TimeSeries& ts, const Sos& sos) {
    check_finite(ts);
    TimeSeries out = ts;
    out.edge_s = std::max(ts.edge_s, kTransientSeconds);
    for (std::size_t c = 0; c < ts.channels(); ++c) {
        const auto y = sos_filtfilt(sos, ts.channel(c));
        std::copy(y.begin(), y.end(), out.channel(c).begin());
    }
    return out;
}

// Largest denominators we accept when approximating a non-integer ratio.
constexpr long kMaxRatioTerm = 10000;

std::pair<long, long> rational_ratio(double target, double rate) {
    const bool integral = std::abs(target - std::round(target)) < 1e-9 && std::abs(rate - std::round(rate)) < 1e-9;
    if (integral) {
        const long up = std::lround(target);
        const long down = std::lround(rate);
        const long g = std::gcd(up, down);
        if (up / g <= kMaxRatioTerm && down / g <= kMaxRatioTerm) return {up / g, down / g};
    }
    // Continued-fraction approximation of target / rate.
    const double x = target / rate;
    long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    double frac = x;
    for (int i = 0; i < 64; ++i) {
        const long a = static_cast<long>(std::floor(frac));
        const long h2 = a * h1 + h0;
        const long k2 = a * k1 + k0;
        if (k2 > kMaxRatioTerm || h2 > kMaxRatioTerm) break;
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        const double rem = frac - static_cast<double>(a);
        if (std::abs(static_cast<double>(h1) / static_cast<double>(k1) - x) < 1e-12 || rem < 1e-12) break;
        frac = 1.0 / rem;
    }
    return {h1, k1};
}

double bessel_i0(double x) {
    double sum = 1.0;
    double term = 1.0;
    for (int k = 1; k < 200; ++k) {
        term *= (x / (2.0 * k)) * (x / (2.0 * k));
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return sum;
}

std::vector<double> polyphase_channel(std::span<const double> x, long up, long down,
                                      const std::vector<double>& taps, long half) {
    const long n = static_cast<long>(x.size());
    const long n_out = (n * up + down - 1) / down;
    const long len = static_cast<long>(taps.size());
    std::vector<double> y(static_cast<std::size_t>(n_out), 0.0);
    for (long m = 0; m < n_out; ++m) {
        const long pos = m * down + half;  // index into the upsampled, filtered stream
        long k_hi = pos / up;
        long k_lo = pos - (len - 1) <= 0 ? 0 : (pos - (len - 1) + up - 1) / up;
        k_hi = std::min(k_hi, n - 1);
        double acc = 0.0;
        for (long k = k_lo; k <= k_hi; ++k) acc += taps[static_cast<std::size_t>(pos - k * up)] * x[static_cast<std::size_t>(k)];
        y[static_cast<std::size_t>(m)] = acc * static_cast<double>(up);
    }
    return y;
}

}  // namespace

TimeSeries::TimeSeries(Matrix d, double r, std::vector<std::string> l, double edge)
    : data(std::move(d)), rate(r), labels(std::move(l)), edge_s(edge) {
    validate();
}

std::size_t TimeSeries::index_of(const std::string& label) const {
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) fail(ErrorCode::UnknownChannel, "no channel labelled '" + label + "'");
    return static_cast<std::size_t>(it - labels.begin());
}

void TimeSeries::validate() const {
    if (!(rate > 0.0) || !std::isfinite(rate)) fail(ErrorCode::InvalidRate, "sampling rate must be positive");
    if (labels.size() != channels()) {
        fail(ErrorCode::InvalidSeries, "label count " + std::to_string(labels.size()) + " != channel count " +
                                           std::to_string(channels()));
    }
    check_finite(*this);
}

TimeSeries select_channels(const TimeSeries& ts, const std::vector<std::string>& labels) {
    Matrix data(static_cast<Eigen::Index>(labels.size()), ts.data.cols());
    for (std::size_t i = 0; i < labels.size(); ++i) data.row(static_cast<Eigen::Index>(i)) = ts.data.row(static_cast<Eigen::Index>(ts.index_of(labels[i])));
    return TimeSeries(std::move(data), ts.rate, labels, ts.edge_s);
}

FilterSpec FilterSpec::bandpass(double low, double high, int order) {
    FilterSpec s;
    s.kind = FilterKind::bandpass;
    s.low = low;
    s.high = high;
    s.order = order;
    return s;
}

FilterSpec FilterSpec::lowpass(double cutoff, int order) {
    FilterSpec s;
    s.kind = FilterKind::lowpass;
    s.high = cutoff;
    s.order = order;
    return s;
}

FilterSpec FilterSpec::notch(double center, double q) {
    FilterSpec s;
    s.kind = FilterKind::notch;
    s.center = center;
    s.q = q;
    s.order = 2;
    return s;
}

Sos design_filter(const FilterSpec& spec, double rate) {
    if (!(rate > 0.0)) fail(ErrorCode::InvalidRate, "sampling rate must be positive");
    const double nyquist = rate / 2.0;
    switch (spec.kind) {
    case FilterKind::bandpass: {
        if (!(spec.low > 0.0 && spec.low < spec.high && spec.high < nyquist) || spec.order < 1) {
            fail(ErrorCode::InvalidFilterSpec, "bandpass edges must satisfy 0 < low < high < Nyquist (" +
                                                   std::to_string(nyquist) + " Hz)");
        }
        const double lo = prewarp(spec.low, rate);
        const double hi = prewarp(spec.high, rate);
        const auto analog = bandpass_transform(butter_prototype(spec.order), std::sqrt(lo * hi), hi - lo);
        return zpk_to_sos(bilinear(analog, rate));
    }
    case FilterKind::lowpass: {
        if (!(spec.high > 0.0 && spec.high < nyquist) || spec.order < 1) {
            fail(ErrorCode::InvalidFilterSpec, "lowpass cutoff must lie in (0, Nyquist)");
        }
        const auto analog = lowpass_transform(butter_prototype(spec.order), prewarp(spec.high, rate));
        return zpk_to_sos(bilinear(analog, rate));
    }
    case FilterKind::notch: {
        if (!(spec.center > 0.0 && spec.center < nyquist) || !(spec.q > 0.0)) {
            fail(ErrorCode::InvalidFilterSpec, "notch center must lie in (0, Nyquist) with q > 0");
        }
        const double w0 = 2.0 * std::numbers::pi * spec.center / rate;
        const double bw = w0 / spec.q;
        const double g = 1.0 / (1.0 + std::tan(bw / 2.0));
        const double c = std::cos(w0);
        return {Biquad{g, -2.0 * g * c, g, -2.0 * g * c, 2.0 * g - 1.0}};
    }
    }
    fail(ErrorCode::InvalidFilterSpec, "unknown filter kind");
}

double sos_gain(const Sos& sos, double freq, double rate) {
    const Complex zinv = std::exp(Complex(0.0, -2.0 * std::numbers::pi * freq / rate));
    Complex h(1.0, 0.0);
    for (const auto& q : sos) {
        h *= (q.b0 + q.b1 * zinv + q.b2 * zinv * zinv) / (1.0 + q.a1 * zinv + q.a2 * zinv * zinv);
    }
    return std::abs(h);
}

void sos_filter(const Sos& sos, std::span<double> x) {
    run_cascade(sos, x, std::vector<std::array<double, 2>>(sos.size(), {0.0, 0.0}));
}

std::vector<double> sos_filtfilt(const Sos& sos, std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    const std::size_t ntaps = 2 * sos.size() + 1;
    const std::size_t pad = std::min(3 * ntaps, n - 1);

    std::vector<double> ext(n + 2 * pad);
    for (std::size_t i = 0; i < pad; ++i) ext[i] = 2.0 * x[0] - x[pad - i];
    std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));
    for (std::size_t i = 0; i < pad; ++i) ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];

    const auto zi = steady_state(sos);
    auto scaled = [&](double v) {
        auto s = zi;
        for (auto& st : s) {
            st[0] *= v;
            st[1] *= v;
        }
        return s;
    };
    run_cascade(sos, ext, scaled(ext.front()));
    std::reverse(ext.begin(), ext.end());
    run_cascade(sos, ext, scaled(ext.front()));
    std::reverse(ext.begin(), ext.end());
    return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

TimeSeries bandpass_filter(const TimeSeries& ts, const FilterSpec& spec) {
    if (spec.kind != FilterKind::bandpass) fail(ErrorCode::InvalidFilterSpec, "bandpass_filter needs a bandpass spec");
    return filter_channels(ts, design_filter(spec, ts.rate));
}

TimeSeries lowpass_filter(const TimeSeries& ts, const FilterSpec& spec) {
    if (spec.kind != FilterKind::lowpass) fail(ErrorCode::InvalidFilterSpec, "lowpass_filter needs a lowpass spec");
    return filter_channels(ts, design_filter(spec, ts.rate));
}

TimeSeries notch_filter(const TimeSeries& ts, const FilterSpec& spec) {
    if (spec.kind != FilterKind::notch) fail(ErrorCode::InvalidFilterSpec, "notch_filter needs a notch spec");
    return filter_channels(ts, design_filter(spec, ts.rate));
}

TimeSeries resample(const TimeSeries& ts, double target_rate) {
    if (!(target_rate > 0.0) || !std::isfinite(target_rate)) fail(ErrorCode::InvalidRate, "target rate must be positive");
    if (target_rate == ts.rate) return ts;
    if (target_rate > ts.rate) fail(ErrorCode::UpsamplingUnsupported, "only downsampling is supported");
    check_finite(ts);

    const double ratio = ts.rate / target_rate;
    const long factor = std::lround(ratio);
    const std::size_t n = ts.samples();
    if (factor >= 1 && std::abs(ratio - static_cast<double>(factor)) < 1e-9 * ratio) {
        const auto filtered = lowpass_filter(ts, FilterSpec::lowpass(0.45 * target_rate, 8));
        const std::size_t n_out = (n + static_cast<std::size_t>(factor) - 1) / static_cast<std::size_t>(factor);
        Matrix out(ts.data.rows(), static_cast<Eigen::Index>(n_out));
        for (std::size_t c = 0; c < ts.channels(); ++c) {
            const auto ch = filtered.channel(c);
            for (std::size_t k = 0; k < n_out; ++k) out(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) = ch[k * static_cast<std::size_t>(factor)];
        }
        return TimeSeries(std::move(out), target_rate, ts.labels, ts.edge_s);
    }

    const auto [up, down] = rational_ratio(target_rate, ts.rate);
    const long max_term = std::max(up, down);
    const long half = 10 * max_term;
    const double cutoff = 1.0 / static_cast<double>(max_term);
    constexpr double beta = 5.0;
    std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
    const double norm = bessel_i0(beta);
    for (long j = 0; j <= 2 * half; ++j) {
        const double m = static_cast<double>(j - half);
        const double arg = std::numbers::pi * cutoff * m;
        const double sinc = m == 0.0 ? 1.0 : std::sin(arg) / arg;
        const double r = m / static_cast<double>(half);
        const double window = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / norm;
        taps[static_cast<std::size_t>(j)] = cutoff * sinc * window;
    }
    std::vector<std::vector<double>> rows;
    for (std::size_t c = 0; c < ts.channels(); ++c) rows.push_back(polyphase_channel(ts.channel(c), up, down, taps, half));
    Matrix out(ts.data.rows(), rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t c = 0; c < rows.size(); ++c) {
        out.row(static_cast<Eigen::Index>(c)) = Eigen::Map<const Eigen::RowVectorXd>(rows[c].data(), static_cast<Eigen::Index>(rows[c].size()));
    }
    return TimeSeries(std::move(out), target_rate, ts.labels, ts.edge_s);
}

TimeSeries normalize(const TimeSeries& ts) {
    check_finite(ts);
    TimeSeries out = ts;
    const double n = static_cast<double>(ts.samples());
    for (std::size_t c = 0; c < ts.channels(); ++c) {
        auto ch = out.channel(c);
        const double mean = std::accumulate(ch.begin(), ch.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : ch) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / n);
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
            fail(ErrorCode::ConstantChannel, "channel '" + ts.labels[c] + "' has zero variance");
        }
        for (double& v : ch) v = (v - mean) / sd;
    }
    return out;
}

}  // namespace ntrack
