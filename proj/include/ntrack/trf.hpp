#pragma once

#include "ntrack/features.hpp"
#include "ntrack/signal.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ntrack {

/// Integer lags round(t_min*rate) .. round(t_max*rate).
struct LagGrid {
    double t_min = -1.0;
    double t_max = 1.0;
    double rate = 50.0;

    LagGrid() = default;
    LagGrid(double t_min, double t_max, double rate);

    int first() const;
    int last() const;
    std::size_t size() const { return static_cast<std::size_t>(last() - first() + 1); }
    int lag(std::size_t j) const { return first() + static_cast<int>(j); }
    double time(std::size_t j) const { return lag(j) / rate; }
    std::vector<double> times() const;
    void validate() const;
    bool operator==(const LagGrid&) const = default;
};

/// Rows are basis functions over the lag axis (P x lags).
struct BasisSet {
    Matrix functions;
    double width = 0.0;  // seconds; 0 for the identity basis
    int support = 1;     // samples of the untruncated window

    std::size_t size() const { return static_cast<std::size_t>(functions.rows()); }
};

/// Hamming windows of `width` seconds centred on every lag, truncated at the
/// grid edges. Support is max(3, nearest odd of width*rate) samples.
BasisSet make_basis(const LagGrid& grid, double width);
BasisSet identity_basis(const LagGrid& grid);

/// Hamming window of n points (symmetric).
std::vector<double> hamming(int n);

enum class Direction { forward, backward };
std::string to_string(Direction d);
Direction direction_from_string(const std::string& s);

/// h = weights * basis; one row per EEG channel.
struct TRFKernel {
    Matrix h;        // channels x lags
    Matrix weights;  // channels x P
    BasisSet basis;
    LagGrid grid;
    Direction direction = Direction::forward;
    std::vector<std::string> labels;

    std::size_t channels() const { return static_cast<std::size_t>(h.rows()); }
    /// Checks finiteness and that h matches the basis expansion to 1e-10.
    void validate() const;
};

TRFKernel expand(const Matrix& weights, const BasisSet& basis, const LagGrid& grid, Direction direction,
                 std::vector<std::string> labels = {});

/// y_i(t) = sum_l h(i,l) x(t-l), zero outside the input.
TimeSeries predict_forward(const TRFKernel& k, const FeatureSeries& x);

/// xhat(t) = sum_i sum_l h(i,l) y_i(t+l), zero outside the recording.
FeatureSeries reconstruct_backward(const TRFKernel& k, const TimeSeries& eeg);

struct BoostConfig {
    double step_fraction = 0.005;
    int patience = 10;
    std::size_t max_iters = 20000;
    // Used only when no explicit validation segments are given: the tail of
    // every training segment is held out.
    double validation_fraction = 0.0;

    void validate() const;
};

/// One contiguous stretch of aligned data (rows are channels).
/// Forward: input is the feature (1 row), target the EEG.
/// Backward: input is the EEG, target the feature (1 row).
struct Segment {
    Matrix input;
    Matrix target;
};

enum class StopReason { patience, max_iters, converged };

struct BoostResult {
    TRFKernel kernel;
    std::vector<double> train_mae;  // entry 0 is the zero kernel
    std::vector<double> val_mae;
    std::size_t best_step = 0;
    StopReason stop = StopReason::converged;
};

/// Splits the last `fraction` of every segment into a validation set.
void split_validation(const std::vector<Segment>& all, double fraction, std::vector<Segment>& train, std::vector<Segment>& val);

/// Coordinate-wise boosting with mean absolute error loss. Each step adds
/// +-delta to the single basis weight that most reduces the training loss,
/// delta = step_fraction * sd(target) / sd(input). Returns the weights with
/// the lowest validation loss.
BoostResult fit_boosting(const std::vector<Segment>& train, const std::vector<Segment>& val, const LagGrid& grid,
                         const BasisSet& basis, Direction direction, const BoostConfig& cfg,
                         std::vector<std::string> labels = {});

}  // namespace ntrack
