#pragma once

#include "ntrack/evaluation.hpp"
#include "ntrack/trf.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace ntrack {

/// Gaussian bump: `width` is its standard deviation in seconds.
struct Peak {
    double latency = 0.0;
    double amplitude = 0.0;
    double width = 0.02;
};

struct KernelSpec {
    std::vector<Peak> peaks;
    std::vector<double> channel_gains;  // one per channel

    /// P1 +0.4 @ 40 ms, N1 -0.6 @ 100 ms, P2 +1.0 @ 180 ms, unit gains.
    static KernelSpec standard(std::size_t channels);
    void validate(const LagGrid& grid) const;
};

TRFKernel make_ground_truth_kernel(const KernelSpec& spec, const LagGrid& grid);

/// t1 ~ U(35, 55), t2 ~ U(125, 145).
SwitchSchedule gen_switch_schedule(std::uint64_t seed);

enum class NoiseKind { white, one_over_f };
std::string to_string(NoiseKind k);
NoiseKind noise_kind_from_string(const std::string& s);

/// Speech-envelope stand-in: white noise shaped by a 2-8 Hz resonance, then
/// band-limited to 1-20 Hz and z-scored. One second of edge is flagged.
FeatureSeries surrogate_feature(std::size_t samples, double rate, std::uint64_t seed, std::string source_id);

/// Unit-variance noise, white or 1/f, limited to 1-20 Hz.
std::vector<double> eeg_noise(std::size_t samples, double rate, NoiseKind kind, std::uint64_t seed);

struct SimConfig {
    std::size_t n_subjects = 1;
    std::size_t n_trials = 8;
    double duration = 180.0;
    double rate = 50.0;
    std::size_t channels = 16;
    // +inf disables the noise.
    double snr_db = 0.0;
    double gain_attended = 1.0;
    double gain_ignored = 0.5;
    NoiseKind noise = NoiseKind::one_over_f;
    std::uint64_t seed = 1;
    Condition condition = Condition::sustained;
    // Kernel lag range in seconds.
    double kernel_t_min = -0.2;
    double kernel_t_max = 0.5;
    // Draw per-subject channel gains from U(0.5, 1); otherwise all 1.
    bool random_channel_gains = true;
    // Conversation turns alternate with lengths drawn from U(turn_min, turn_max).
    double turn_min = 2.0;
    double turn_max = 6.0;

    std::size_t samples() const;
    LagGrid kernel_grid() const { return LagGrid(kernel_t_min, kernel_t_max, rate); }
    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// EEG = g_att conv(attended, k_att) + g_ign conv(ignored, k_ign) + noise at
/// cfg.snr_db per channel. A schedule swaps which of feat_a / feat_b drives
/// k_att at t1 and t2; the record's attended/ignored follow the schedule.
TrialRecord simulate_trial(const TRFKernel& k_att, const TRFKernel& k_ign, const FeatureSeries& feat_a, const FeatureSeries& feat_b,
                           const SimConfig& cfg, const std::optional<SwitchSchedule>& schedule, std::uint64_t noise_seed);

struct SimTrialInfo {
    std::string subject_id;
    std::string trial_id;
    Condition condition = Condition::sustained;
    std::optional<SwitchSchedule> schedule;
    std::uint64_t seed = 0;
};

struct SimSubject {
    std::string subject_id;
    TRFKernel kernel;  // shared by both streams
    std::vector<TrialRecord> trials;
    std::vector<SimTrialInfo> info;
};

/// Subjects s01.., trials t01..; every random draw uses a seed derived from
/// (cfg.seed, subject, trial, purpose), so subjects can be built in parallel.
SimSubject simulate_subject(const SimConfig& cfg, std::size_t subject);
std::vector<SimSubject> simulate_dataset(const SimConfig& cfg, std::size_t jobs = 1);

std::vector<TrialRecord> all_trials(const std::vector<SimSubject>& subjects);

/// Independent surrogate labelled "control" matching a trial's length.
FeatureSeries control_feature(const TrialRecord& trial, std::uint64_t seed);

}  // namespace ntrack
