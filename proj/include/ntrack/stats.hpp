#pragma once

#include "ntrack/trf.hpp"

#include <cstdint>
#include <vector>

namespace ntrack {

/// Gaussian smoothing along lags. `width` is the full width at half maximum
/// in seconds; taps beyond 4 sigma are dropped and the truncated kernel is
/// renormalized at every output lag. The result carries an identity basis.
TRFKernel gaussian_smooth_trf(const TRFKernel& k, double width);

/// Threshold-free cluster enhancement along each row of `t`, signed like t.
/// Thresholds are dh, 2dh, ... up to max|t|; dh <= 0 means max|t|/steps.
Matrix tfce_enhance(const Matrix& t, double dh = 0.0, double E = 0.5, double H = 2.0, int steps = 100);

enum class StatMode { channel_mean, per_channel };

struct LagCluster {
    std::size_t row = 0;  // channel index in per-channel mode
    std::size_t first = 0, last = 0;  // lag indices, inclusive
    double start = 0.0, stop = 0.0;   // seconds
    double min_p = 1.0;
};

struct StatResult {
    LagGrid grid;
    StatMode mode = StatMode::channel_mean;
    std::vector<std::string> labels;  // one per row
    Matrix t_map, tfce_map, p_map;    // rows x lags
    std::vector<LagCluster> clusters;
    std::size_t n_perm = 0;
    double alpha = 0.05;
};

/// Pooled-variance two-sample t per lag (0 where the pooled spread is 0).
Matrix independent_t(const std::vector<Matrix>& a, const std::vector<Matrix>& b);

/// Maximal runs of p < alpha along each row.
std::vector<LagCluster> find_clusters(const Matrix& p, const LagGrid& grid, double alpha = 0.05);

/// Group comparison of kernels with a max-TFCE label-permutation null. Each
/// permutation draws its own seeded stream.
StatResult tfce_ttest(const std::vector<TRFKernel>& group_a, const std::vector<TRFKernel>& group_b, std::size_t n_perm,
                      std::uint64_t seed, StatMode mode = StatMode::channel_mean, std::size_t jobs = 1, double alpha = 0.05);

struct PairedComparison {
    std::vector<double> a, b;  // one value per subject
};

struct PairedTestResult {
    double t = 0.0;
    double p_raw = 1.0;
    double p_adjusted = 1.0;
    bool rejected = false;
};

/// Benjamini-Hochberg step-up; true where rejected.
std::vector<bool> benjamini_hochberg(const std::vector<double>& p, double alpha);
std::vector<double> bh_adjust(const std::vector<double>& p);

/// Two-sided paired t-tests followed by BH across the comparisons. All-zero
/// differences count as not rejected.
std::vector<PairedTestResult> paired_ttest_bh(const std::vector<PairedComparison>& comparisons, double alpha = 0.05);

}  // namespace ntrack
