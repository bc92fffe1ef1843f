#include "ntrack/trf.hpp"

#include "ntrack/error.hpp"

#include <cmath>
#include <numbers>

namespace ntrack {

LagGrid::LagGrid(double t_min_, double t_max_, double rate_) : t_min(t_min_), t_max(t_max_), rate(rate_) { validate(); }

int LagGrid::first() const { return static_cast<int>(std::lround(t_min * rate)); }
int LagGrid::last() const { return static_cast<int>(std::lround(t_max * rate)); }

std::vector<double> LagGrid::times() const {
    std::vector<double> t(size());
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = time(j);
    return t;
}

void LagGrid::validate() const {
    if (!(rate > 0.0) || !std::isfinite(rate)) fail(ErrorCode::InvalidRate, "lag grid rate must be positive");
    if (!(t_min < t_max)) fail(ErrorCode::InvalidSpec, "lag grid needs t_min < t_max");
    if (last() - first() + 1 < 2) fail(ErrorCode::InvalidSpec, "lag grid must contain at least two lags");
}

std::vector<double> hamming(int n) {
    if (n == 1) return {1.0};
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
    return w;
}

BasisSet make_basis(const LagGrid& grid, double width) {
    grid.validate();
    if (!(width > 0.0) || width * grid.rate < 1.0) {
        fail(ErrorCode::DegenerateBasis, "basis width must span at least one sample");
    }
    const double samples = width * grid.rate;
    const int support = std::max(3, 2 * static_cast<int>(std::floor(samples / 2.0)) + 1);
    const auto win = hamming(support);
    const int half = support / 2;
    const auto n = static_cast<Eigen::Index>(grid.size());
    BasisSet b;
    b.width = width;
    b.support = support;
    b.functions = Matrix::Zero(n, n);
    for (Eigen::Index p = 0; p < n; ++p) {
        for (int k = -half; k <= half; ++k) {
            const Eigen::Index j = p + k;
            if (j >= 0 && j < n) b.functions(p, j) = win[static_cast<std::size_t>(k + half)];
        }
    }
    return b;
}

BasisSet identity_basis(const LagGrid& grid) {
    grid.validate();
    const auto n = static_cast<Eigen::Index>(grid.size());
    BasisSet b;
    b.functions = Matrix::Identity(n, n);
    return b;
}

std::string to_string(Direction d) { return d == Direction::forward ? "forward" : "backward"; }

Direction direction_from_string(const std::string& s) {
    if (s == "forward") return Direction::forward;
    if (s == "backward") return Direction::backward;
    fail(ErrorCode::ConfigError, "unknown direction '" + s + "'");
}

void TRFKernel::validate() const {
    if (static_cast<std::size_t>(h.cols()) != grid.size()) fail(ErrorCode::DimensionMismatch, "kernel width differs from the lag grid");
    if (weights.rows() != h.rows() || weights.cols() != basis.functions.rows() || basis.functions.cols() != h.cols()) {
        fail(ErrorCode::DimensionMismatch, "kernel weights do not match the basis");
    }
    if (!labels.empty() && labels.size() != channels()) fail(ErrorCode::DimensionMismatch, "one label per kernel channel required");
    if (!h.allFinite() || !weights.allFinite()) fail(ErrorCode::NonFiniteInput, "kernel contains NaN or Inf");
    const Matrix rebuilt = weights * basis.functions;
    if ((rebuilt - h).cwiseAbs().maxCoeff() > 1e-10) fail(ErrorCode::InvalidSpec, "kernel does not match its basis expansion");
}

TRFKernel expand(const Matrix& weights, const BasisSet& basis, const LagGrid& grid, Direction direction, std::vector<std::string> labels) {
    if (weights.cols() != basis.functions.rows()) {
        fail(ErrorCode::DimensionMismatch, "weight length " + std::to_string(weights.cols()) + " differs from basis size " +
                                               std::to_string(basis.functions.rows()));
    }
    if (static_cast<std::size_t>(basis.functions.cols()) != grid.size()) fail(ErrorCode::DimensionMismatch, "basis does not match the lag grid");
    if (!labels.empty() && labels.size() != static_cast<std::size_t>(weights.rows())) {
        fail(ErrorCode::DimensionMismatch, "one label per kernel channel required");
    }
    if (labels.empty()) {
        for (Eigen::Index c = 0; c < weights.rows(); ++c) labels.push_back("ch" + std::to_string(c + 1));
    }
    TRFKernel k;
    k.weights = weights;
    k.basis = basis;
    k.grid = grid;
    k.direction = direction;
    k.labels = std::move(labels);
    k.h = weights * basis.functions;
    return k;
}

TimeSeries predict_forward(const TRFKernel& k, const FeatureSeries& x) {
    if (k.direction != Direction::forward) fail(ErrorCode::InvalidSpec, "predict_forward needs a forward kernel");
    if (std::abs(x.rate - k.grid.rate) > 1e-9 * k.grid.rate) fail(ErrorCode::RateMismatch, "feature rate differs from the kernel rate");
    const auto n = static_cast<long>(x.samples());
    Matrix y = Matrix::Zero(k.h.rows(), n);
    for (Eigen::Index c = 0; c < k.h.rows(); ++c) {
        double* out = y.data() + c * n;
        for (std::size_t j = 0; j < k.grid.size(); ++j) {
            const double w = k.h(c, static_cast<Eigen::Index>(j));
            if (w == 0.0) continue;
            const long lag = k.grid.lag(j);
            const long lo = std::max(0L, lag), hi = std::min(n, n + lag);
            for (long t = lo; t < hi; ++t) out[t] += w * x.values[static_cast<std::size_t>(t - lag)];
        }
    }
    return TimeSeries(std::move(y), x.rate, k.labels, x.edge_s);
}

FeatureSeries reconstruct_backward(const TRFKernel& k, const TimeSeries& eeg) {
    if (k.direction != Direction::backward) fail(ErrorCode::InvalidSpec, "reconstruct_backward needs a backward kernel");
    if (eeg.channels() != k.channels()) {
        fail(ErrorCode::DimensionMismatch, "decoder has " + std::to_string(k.channels()) + " channels, recording has " +
                                               std::to_string(eeg.channels()));
    }
    if (std::abs(eeg.rate - k.grid.rate) > 1e-9 * k.grid.rate) fail(ErrorCode::RateMismatch, "recording rate differs from the kernel rate");
    const auto n = static_cast<long>(eeg.samples());
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (std::size_t c = 0; c < eeg.channels(); ++c) {
        const auto y = eeg.channel(c);
        for (std::size_t j = 0; j < k.grid.size(); ++j) {
            const double w = k.h(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j));
            if (w == 0.0) continue;
            const long lag = k.grid.lag(j);
            const long lo = std::max(0L, -lag), hi = std::min(n, n - lag);
            for (long t = lo; t < hi; ++t) out[static_cast<std::size_t>(t)] += w * y[static_cast<std::size_t>(t + lag)];
        }
    }
    return FeatureSeries{std::move(out), eeg.rate, FeatureKind::envelope, "reconstruction", eeg.edge_s};
}

void BoostConfig::validate() const {
    if (!(step_fraction > 0.0 && step_fraction < 1.0)) fail(ErrorCode::InvalidSpec, "step_fraction must lie in (0, 1)");
    if (patience < 1) fail(ErrorCode::InvalidSpec, "patience must be at least 1");
    if (max_iters < 1) fail(ErrorCode::InvalidSpec, "max_iters must be at least 1");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) fail(ErrorCode::InvalidSpec, "validation_fraction must lie in [0, 1)");
}

void split_validation(const std::vector<Segment>& all, double fraction, std::vector<Segment>& train, std::vector<Segment>& val) {
    train.clear();
    val.clear();
    for (const auto& s : all) {
        const auto n = s.input.cols();
        const auto nv = static_cast<Eigen::Index>(std::floor(fraction * static_cast<double>(n)));
        if (nv <= 0 || nv >= n) {
            train.push_back(s);
            continue;
        }
        train.push_back({s.input.leftCols(n - nv), s.target.leftCols(n - nv)});
        val.push_back({s.input.rightCols(nv), s.target.rightCols(nv)});
    }
}

}  // namespace ntrack
