#include "ntrack/synth.hpp"

#include "ntrack/error.hpp"
#include "ntrack/parallel.hpp"
#include "ntrack/seeding.hpp"
#include "ntrack/signal.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ntrack {

namespace {

// Purposes mixed into derived seeds.
enum : std::uint64_t { kFeatA = 1, kFeatB, kNoise, kSchedule, kGains, kTurnsA, kTurnsB, kFeatA2, kFeatB2, kControl };

double uniform(std::uint64_t& state) {
    state = splitmix64(state);
    return static_cast<double>(state >> 11) * 0x1.0p-53;
}

std::vector<double> gaussian_noise(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<double> x(n);
    for (auto& v : x) v = nd(rng);
    return x;
}

std::vector<double> band_limit(const std::vector<double>& x, double rate, double lo, double hi, int order) {
    return sos_filtfilt(design_filter(FilterSpec::bandpass(lo, hi, order), rate), x);
}

void zscore(std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    const double sd = std::sqrt(ss / static_cast<double>(x.size()));
    for (double& v : x) v = (v - m) / sd;
}

std::string numbered(char prefix, std::size_t i) {
    const std::string n = std::to_string(i + 1);
    return std::string(1, prefix) + (n.size() < 2 ? "0" + n : n);
}

// Alternating turns: stretches taken in turn from `a` and `b`.
std::vector<double> alternate(const std::vector<double>& a, const std::vector<double>& b, double rate, double lo, double hi,
                              std::uint64_t seed) {
    std::vector<double> out(a.size());
    std::size_t t = 0;
    bool first = true;
    while (t < out.size()) {
        const auto len = static_cast<std::size_t>(std::lround((lo + (hi - lo) * uniform(seed)) * rate));
        for (std::size_t i = 0; i < len && t < out.size(); ++i, ++t) out[t] = first ? a[t] : b[t];
        first = !first;
    }
    return out;
}

}  // namespace

KernelSpec KernelSpec::standard(std::size_t channels) {
    KernelSpec s;
    s.peaks = {{0.040, 0.4, 0.020}, {0.100, -0.6, 0.030}, {0.180, 1.0, 0.040}};
    s.channel_gains.assign(channels, 1.0);
    return s;
}

void KernelSpec::validate(const LagGrid& grid) const {
    grid.validate();
    if (channel_gains.empty()) fail(ErrorCode::InvalidSpec, "kernel spec needs at least one channel gain");
    for (const auto& p : peaks) {
        if (p.latency < grid.time(0) - 1e-12 || p.latency > grid.time(grid.size() - 1) + 1e-12) {
            fail(ErrorCode::InvalidSpec, "peak latency " + std::to_string(p.latency) + " s lies outside the lag grid");
        }
        if (!(p.width > 0.0)) fail(ErrorCode::InvalidSpec, "peak widths must be positive");
        if (!std::isfinite(p.amplitude)) fail(ErrorCode::InvalidSpec, "peak amplitude must be finite");
    }
    for (double g : channel_gains) {
        if (!std::isfinite(g)) fail(ErrorCode::InvalidSpec, "channel gains must be finite");
    }
}

TRFKernel make_ground_truth_kernel(const KernelSpec& spec, const LagGrid& grid) {
    spec.validate(grid);
    std::vector<double> course(grid.size(), 0.0);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        for (const auto& p : spec.peaks) {
            const double z = (grid.time(j) - p.latency) / p.width;
            course[j] += p.amplitude * std::exp(-0.5 * z * z);
        }
    }
    Matrix h(static_cast<Eigen::Index>(spec.channel_gains.size()), static_cast<Eigen::Index>(grid.size()));
    for (Eigen::Index c = 0; c < h.rows(); ++c) {
        for (Eigen::Index j = 0; j < h.cols(); ++j) h(c, j) = spec.channel_gains[static_cast<std::size_t>(c)] * course[static_cast<std::size_t>(j)];
    }
    return expand(h, identity_basis(grid), grid, Direction::forward);
}

SwitchSchedule gen_switch_schedule(std::uint64_t seed) {
    std::uint64_t s = derive_seed(seed, {kSchedule});
    SwitchSchedule out;
    out.t1 = 35.0 + 20.0 * uniform(s);
    out.t2 = 125.0 + 20.0 * uniform(s);
    return out;
}

std::string to_string(NoiseKind k) { return k == NoiseKind::white ? "white" : "one_over_f"; }

NoiseKind noise_kind_from_string(const std::string& s) {
    if (s == "white") return NoiseKind::white;
    if (s == "one_over_f") return NoiseKind::one_over_f;
    fail(ErrorCode::ConfigError, "unknown noise kind '" + s + "'");
}

FeatureSeries surrogate_feature(std::size_t samples, double rate, std::uint64_t seed, std::string source_id) {
    if (!(rate > 40.0)) fail(ErrorCode::InvalidRate, "surrogate features need a rate above 40 Hz");
    auto x = gaussian_noise(samples, seed);
    x = band_limit(x, rate, 2.0, 8.0, 2);
    x = band_limit(x, rate, 1.0, 20.0, 4);
    zscore(x);
    return FeatureSeries{std::move(x), rate, FeatureKind::envelope, std::move(source_id), 1.0};
}

std::vector<double> eeg_noise(std::size_t samples, double rate, NoiseKind kind, std::uint64_t seed) {
    auto x = gaussian_noise(samples, seed);
    if (kind == NoiseKind::one_over_f) {
        // Paul Kellet's pink filter.
        double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
        for (double& v : x) {
            const double w = v;
            b0 = 0.99886 * b0 + w * 0.0555179;
            b1 = 0.99332 * b1 + w * 0.0750759;
            b2 = 0.96900 * b2 + w * 0.1538520;
            b3 = 0.86650 * b3 + w * 0.3104856;
            b4 = 0.55000 * b4 + w * 0.5329522;
            b5 = -0.7616 * b5 - w * 0.0168980;
            v = b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362;
            b6 = w * 0.115926;
        }
    }
    x = band_limit(x, rate, 1.0, 20.0, 4);
    zscore(x);
    return x;
}

std::size_t SimConfig::samples() const { return static_cast<std::size_t>(std::llround(duration * rate)); }

void SimConfig::validate() const {
    auto bad = [](const std::string& field, const std::string& why) { fail(ErrorCode::ConfigError, field + ": " + why); };
    if (n_subjects == 0) bad("n_subjects", "must be at least 1");
    if (n_trials == 0) bad("n_trials", "must be at least 1");
    if (!(rate > 40.0) || !std::isfinite(rate)) bad("rate", "must exceed 40 Hz");
    if (!(duration > 0.0) || !std::isfinite(duration)) bad("duration", "must be positive");
    if (std::abs(duration * rate - std::round(duration * rate)) > 1e-9) bad("duration", "duration * rate must be an integer");
    if (channels == 0) bad("channels", "must be at least 1");
    if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) bad("snr_db", "must be a number or +inf");
    if (!(gain_attended >= 0.0) || !std::isfinite(gain_attended)) bad("gain_attended", "must be >= 0");
    if (!(gain_ignored >= 0.0) || !std::isfinite(gain_ignored)) bad("gain_ignored", "must be >= 0");
    if (!(kernel_t_min < kernel_t_max)) bad("kernel_t_max", "must exceed kernel_t_min");
    if (!(turn_min > 0.0 && turn_min <= turn_max)) bad("turn_min", "turn lengths need 0 < turn_min <= turn_max");
    if (condition == Condition::switching && duration <= 145.0) bad("duration", "switching trials need more than 145 s");
}

TrialRecord simulate_trial(const TRFKernel& k_att, const TRFKernel& k_ign, const FeatureSeries& feat_a, const FeatureSeries& feat_b,
                           const SimConfig& cfg, const std::optional<SwitchSchedule>& schedule, std::uint64_t noise_seed) {
    if (feat_a.rate != cfg.rate || feat_b.rate != cfg.rate || k_att.grid.rate != cfg.rate || k_ign.grid.rate != cfg.rate) {
        fail(ErrorCode::RateMismatch, "features and kernels must share the simulation rate");
    }
    if (feat_a.samples() != feat_b.samples()) fail(ErrorCode::DimensionMismatch, "the two streams differ in length");
    if (k_att.channels() != k_ign.channels()) fail(ErrorCode::DimensionMismatch, "kernels differ in channel count");
    const std::size_t n = feat_a.samples();

    // Role of feat_a per sample.
    std::vector<bool> a_att(n, true);
    if (schedule) {
        const auto s1 = static_cast<std::size_t>(std::lround(schedule->t1 * cfg.rate));
        const auto s2 = static_cast<std::size_t>(std::lround(schedule->t2 * cfg.rate));
        for (std::size_t t = s1; t < std::min(s2, n); ++t) a_att[t] = false;
    }
    const auto aa = predict_forward(k_att, feat_a), ba = predict_forward(k_att, feat_b);
    const auto ai = predict_forward(k_ign, feat_a), bi = predict_forward(k_ign, feat_b);

    Matrix eeg(static_cast<Eigen::Index>(k_att.channels()), static_cast<Eigen::Index>(n));
    for (Eigen::Index c = 0; c < eeg.rows(); ++c) {
        for (std::size_t t = 0; t < n; ++t) {
            const auto i = static_cast<Eigen::Index>(t);
            eeg(c, i) = a_att[t] ? cfg.gain_attended * aa.data(c, i) + cfg.gain_ignored * bi.data(c, i)
                                 : cfg.gain_attended * ba.data(c, i) + cfg.gain_ignored * ai.data(c, i);
        }
    }
    if (std::isfinite(cfg.snr_db)) {
        const double ratio = std::pow(10.0, -cfg.snr_db / 10.0);
        for (Eigen::Index c = 0; c < eeg.rows(); ++c) {
            const auto noise = eeg_noise(n, cfg.rate, cfg.noise, derive_seed(noise_seed, {static_cast<std::uint64_t>(c)}));
            const double power = eeg.row(c).squaredNorm() / static_cast<double>(n);
            const double scale = power > 0.0 ? std::sqrt(power * ratio) : 1.0;
            for (std::size_t t = 0; t < n; ++t) eeg(c, static_cast<Eigen::Index>(t)) += scale * noise[t];
        }
    }

    TrialRecord r;
    r.eeg = TimeSeries(std::move(eeg), cfg.rate, k_att.labels, std::max(feat_a.edge_s, feat_b.edge_s));
    r.attended = FeatureSeries{std::vector<double>(n), cfg.rate, feat_a.kind, feat_a.source_id, std::max(feat_a.edge_s, feat_b.edge_s)};
    r.ignored = r.attended;
    r.ignored.source_id = feat_b.source_id;
    if (schedule) {
        r.attended.source_id = feat_a.source_id + "|" + feat_b.source_id;
        r.ignored.source_id = feat_b.source_id + "|" + feat_a.source_id;
    }
    for (std::size_t t = 0; t < n; ++t) {
        r.attended.values[t] = a_att[t] ? feat_a.values[t] : feat_b.values[t];
        r.ignored.values[t] = a_att[t] ? feat_b.values[t] : feat_a.values[t];
    }
    r.condition = schedule ? Condition::switching : cfg.condition;
    r.schedule = schedule;
    return r;
}

SimSubject simulate_subject(const SimConfig& cfg, std::size_t subject) {
    cfg.validate();
    SimSubject out;
    out.subject_id = numbered('s', subject);
    const auto sid = static_cast<std::uint64_t>(subject);

    auto spec = KernelSpec::standard(cfg.channels);
    if (cfg.random_channel_gains) {
        std::uint64_t g = derive_seed(cfg.seed, {sid, kGains});
        for (double& v : spec.channel_gains) v = 0.5 + 0.5 * uniform(g);
    }
    out.kernel = make_ground_truth_kernel(spec, cfg.kernel_grid());
    for (std::size_t c = 0; c < cfg.channels; ++c) out.kernel.labels[c] = "E" + std::to_string(c + 1);

    const std::size_t n = cfg.samples();
    for (std::size_t tr = 0; tr < cfg.n_trials; ++tr) {
        const auto tid = static_cast<std::uint64_t>(tr);
        const std::uint64_t base = derive_seed(cfg.seed, {sid, tid});
        SimTrialInfo info;
        info.subject_id = out.subject_id;
        info.trial_id = out.subject_id + "-" + to_string(cfg.condition) + "-" + numbered('t', tr);
        info.condition = cfg.condition;
        info.seed = base;

        auto fa = surrogate_feature(n, cfg.rate, derive_seed(base, {kFeatA}), info.trial_id + "-a");
        auto fb = surrogate_feature(n, cfg.rate, derive_seed(base, {kFeatB}), info.trial_id + "-b");
        if (cfg.condition == Condition::conversation) {
            // Each stream is a two-talker conversation with alternating turns.
            const auto fa2 = surrogate_feature(n, cfg.rate, derive_seed(base, {kFeatA2}), "");
            const auto fb2 = surrogate_feature(n, cfg.rate, derive_seed(base, {kFeatB2}), "");
            fa.values = alternate(fa.values, fa2.values, cfg.rate, cfg.turn_min, cfg.turn_max, derive_seed(base, {kTurnsA}));
            fb.values = alternate(fb.values, fb2.values, cfg.rate, cfg.turn_min, cfg.turn_max, derive_seed(base, {kTurnsB}));
        }
        if (cfg.condition == Condition::switching) info.schedule = gen_switch_schedule(base);

        auto rec = simulate_trial(out.kernel, out.kernel, fa, fb, cfg, info.schedule, derive_seed(base, {kNoise}));
        rec.condition = cfg.condition;
        rec.subject_id = info.subject_id;
        rec.trial_id = info.trial_id;
        out.trials.push_back(std::move(rec));
        out.info.push_back(std::move(info));
    }
    return out;
}

std::vector<SimSubject> simulate_dataset(const SimConfig& cfg, std::size_t jobs) {
    cfg.validate();
    std::vector<SimSubject> out(cfg.n_subjects);
    parallel_for(cfg.n_subjects, jobs, [&](std::size_t s) { out[s] = simulate_subject(cfg, s); });
    return out;
}

std::vector<TrialRecord> all_trials(const std::vector<SimSubject>& subjects) {
    std::vector<TrialRecord> out;
    for (const auto& s : subjects) out.insert(out.end(), s.trials.begin(), s.trials.end());
    return out;
}

FeatureSeries control_feature(const TrialRecord& trial, std::uint64_t seed) {
    auto f = surrogate_feature(trial.attended.samples(), trial.attended.rate, derive_seed(seed, {fnv1a(trial.trial_id), kControl}), "control");
    f.kind = trial.attended.kind;
    return f;
}

}  // namespace ntrack
