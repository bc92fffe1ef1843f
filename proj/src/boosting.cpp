#include "ntrack/error.hpp"
#include "ntrack/trf.hpp"

#include <cmath>
#include <map>
#include <utility>

namespace ntrack {

namespace {

// Non-zero taps of one basis row, as offsets from the row's centre lag.
using Shape = std::vector<std::pair<int, double>>;

int sgn(double v) { return (v > 0.0) - (v < 0.0); }

// Concatenated samples of a segment list. g_{i,p}(t), the response of input i
// filtered by basis function p at sample t, is read from per-shape filtered
// copies of the input: g = buffer[i][shape(p)][pos[t] + offset[p]].
struct Samples {
    std::size_t n = 0;
    std::vector<std::size_t> pos;
    std::vector<std::vector<std::vector<double>>> buffer;  // [input][shape][padded sample]
    std::vector<std::vector<double>> target;               // [target][sample]
};

struct Layout {
    std::vector<Shape> shapes;
    std::vector<std::size_t> shape_of;  // per basis row
    std::vector<long> offset;           // per basis row
    long pad = 0;
    int dir = -1;
};

Layout make_layout(const LagGrid& grid, const BasisSet& basis, Direction direction) {
    Layout lay;
    lay.dir = direction == Direction::forward ? -1 : 1;
    lay.pad = std::max(std::abs(grid.first()), std::abs(grid.last()));
    std::map<Shape, std::size_t> seen;
    const auto P = basis.functions.rows();
    for (Eigen::Index p = 0; p < P; ++p) {
        Shape s;
        for (Eigen::Index j = 0; j < basis.functions.cols(); ++j) {
            const double v = basis.functions(p, j);
            if (v != 0.0) s.emplace_back(static_cast<int>(j - p), v);
        }
        if (s.empty()) fail(ErrorCode::DegenerateBasis, "basis function " + std::to_string(p) + " is all zero");
        auto [it, fresh] = seen.emplace(s, lay.shapes.size());
        if (fresh) lay.shapes.push_back(s);
        lay.shape_of.push_back(it->second);
        lay.offset.push_back(lay.dir * (grid.first() + static_cast<long>(p)));
    }
    return lay;
}

Samples gather(const std::vector<Segment>& segs, const Layout& lay) {
    Samples s;
    const auto n_in = static_cast<std::size_t>(segs.front().input.rows());
    const auto n_tgt = static_cast<std::size_t>(segs.front().target.rows());
    std::size_t padded = 0;
    for (const auto& seg : segs) {
        s.n += static_cast<std::size_t>(seg.input.cols());
        padded += static_cast<std::size_t>(seg.input.cols()) + 2 * static_cast<std::size_t>(lay.pad);
    }
    s.pos.reserve(s.n);
    s.buffer.assign(n_in, std::vector<std::vector<double>>(lay.shapes.size(), std::vector<double>(padded, 0.0)));
    s.target.assign(n_tgt, {});
    for (auto& t : s.target) t.reserve(s.n);

    std::size_t base = 0;
    for (const auto& seg : segs) {
        const long T = seg.input.cols();
        const std::size_t origin = base + static_cast<std::size_t>(lay.pad);
        for (long t = 0; t < T; ++t) s.pos.push_back(origin + static_cast<std::size_t>(t));
        for (std::size_t i = 0; i < n_in; ++i) {
            const double* u = seg.input.data() + static_cast<long>(i) * T;
            for (std::size_t sh = 0; sh < lay.shapes.size(); ++sh) {
                auto& buf = s.buffer[i][sh];
                for (long tau = -lay.pad; tau < T + lay.pad; ++tau) {
                    double acc = 0.0;
                    for (const auto& [k, v] : lay.shapes[sh]) {
                        const long src = tau + lay.dir * k;
                        if (src >= 0 && src < T) acc += v * u[src];
                    }
                    buf[static_cast<std::size_t>(static_cast<long>(origin) + tau)] = acc;
                }
            }
        }
        for (std::size_t c = 0; c < n_tgt; ++c) {
            const double* y = seg.target.data() + static_cast<long>(c) * T;
            s.target[c].insert(s.target[c].end(), y, y + T);
        }
        base += static_cast<std::size_t>(T) + 2 * static_cast<std::size_t>(lay.pad);
    }
    return s;
}

double stddev(const std::vector<Segment>& segs, bool input, Eigen::Index row) {
    double sum = 0.0, sq = 0.0;
    double n = 0.0;
    for (const auto& seg : segs) {
        const auto& m = input ? seg.input : seg.target;
        sum += m.row(row).sum();
        n += static_cast<double>(m.cols());
    }
    const double mean = sum / n;
    for (const auto& seg : segs) {
        const auto& m = input ? seg.input : seg.target;
        sq += (m.row(row).array() - mean).square().sum();
    }
    return std::sqrt(sq / n);
}

struct Candidate {
    double delta = 0.0;  // change of sum |r|
    std::size_t i = 0, p = 0;
    double step = 0.0;
};

class Booster {
public:
    Booster(const std::vector<Segment>& train, const std::vector<Segment>& val, const Layout& lay, std::size_t P, double step_fraction)
        : lay_(lay), P_(P), tr_(gather(train, lay)), va_(gather(val, lay)), step_fraction_(step_fraction) {
        n_in_ = tr_.buffer.size();
        n_tgt_ = tr_.target.size();
        for (std::size_t i = 0; i < n_in_; ++i) {
            const double sd = stddev(train, true, static_cast<Eigen::Index>(i));
            if (!(sd > 0.0)) fail(ErrorCode::DegenerateInput, "input row " + std::to_string(i) + " is constant over the training data");
            sd_in_.push_back(sd);
        }
        for (std::size_t c = 0; c < n_tgt_; ++c) {
            const double sd = stddev(train, false, static_cast<Eigen::Index>(c));
            if (!(sd > 0.0)) fail(ErrorCode::DegenerateInput, "target row " + std::to_string(c) + " is constant over the training data");
            sd_tgt_.push_back(sd);
        }
        step_.assign(n_tgt_, std::vector<double>(n_in_));
        for (std::size_t c = 0; c < n_tgt_; ++c) {
            for (std::size_t i = 0; i < n_in_; ++i) step_[c][i] = step_fraction * sd_tgt_[c] / sd_in_[i];
        }
        reach_.assign(tr_.n, 0.0);
        for (std::size_t i = 0; i < n_in_; ++i) {
            for (std::size_t t = 0; t < tr_.n; ++t) {
                double m = 0.0;
                for (std::size_t p = 0; p < P_; ++p) m = std::max(m, std::abs(g(tr_, i, p, t)));
                reach_[t] = std::max(reach_[t], m / sd_in_[i]);
            }
        }
        weights_.assign(n_tgt_, std::vector<double>(n_in_ * P_, 0.0));
        corr_.assign(n_tgt_, std::vector<double>(n_in_ * P_, 0.0));
        near_.assign(n_tgt_, {});
        best_.assign(n_tgt_, {});
        abs_train_.assign(n_tgt_, 0.0);
        abs_val_.assign(n_tgt_, 0.0);
        steps_on_.assign(n_tgt_, 0);
        for (std::size_t c = 0; c < n_tgt_; ++c) {
            abs_train_[c] = abs_sum(tr_.target[c]);
            abs_val_[c] = abs_sum(va_.target[c]);
            refresh_correlation(c);
            refresh_near(c);
            best_[c] = evaluate(c);
        }
    }

    double train_mae() const { return total(abs_train_) / static_cast<double>(tr_.n * n_tgt_); }
    double val_mae() const { return total(abs_val_) / static_cast<double>(va_.n * n_tgt_); }

    // Applies the best step; false when no step lowers the training loss.
    bool step() {
        std::size_t c_best = 0;
        for (std::size_t c = 1; c < n_tgt_; ++c) {
            if (best_[c].delta < best_[c_best].delta) c_best = c;
        }
        const auto& b = best_[c_best];
        const double tol = 1e-13 * std::max(abs_train_[c_best], 1e-300);
        if (!(b.delta < -tol)) return false;
        apply(c_best, b);
        return true;
    }

    const std::vector<std::vector<double>>& weights() const { return weights_; }
    std::size_t inputs() const { return n_in_; }
    std::size_t targets() const { return n_tgt_; }

private:
    double g(const Samples& s, std::size_t i, std::size_t p, std::size_t t) const {
        return s.buffer[i][lay_.shape_of[p]][static_cast<std::size_t>(static_cast<long>(s.pos[t]) + lay_.offset[p])];
    }

    static double abs_sum(const std::vector<double>& r) {
        double a = 0.0;
        for (double v : r) a += std::abs(v);
        return a;
    }
    static double total(const std::vector<double>& v) {
        double a = 0.0;
        for (double x : v) a += x;
        return a;
    }

    // corr[i,p] = sum_t sign(r_t) g_{i,p}(t): the slope of sum|r| away from sign changes.
    void refresh_correlation(std::size_t c) {
        auto& G = corr_[c];
        std::fill(G.begin(), G.end(), 0.0);
        const auto& r = tr_.target[c];
        for (std::size_t t = 0; t < tr_.n; ++t) {
            const int s = sgn(r[t]);
            if (s == 0) continue;
            for (std::size_t i = 0; i < n_in_; ++i) {
                for (std::size_t p = 0; p < P_; ++p) G[i * P_ + p] += s * g(tr_, i, p, t);
            }
        }
    }

    // Samples whose residual sign any single step could flip.
    void refresh_near(std::size_t c) {
        auto& near = near_[c];
        near.clear();
        const double scale = step_fraction_ * sd_tgt_[c];
        const auto& r = tr_.target[c];
        for (std::size_t t = 0; t < tr_.n; ++t) {
            if (std::abs(r[t]) < scale * reach_[t]) near.push_back(t);
        }
    }

    Candidate evaluate(std::size_t c) const {
        const auto& r = tr_.target[c];
        std::vector<double> up(n_in_ * P_, 0.0), down(n_in_ * P_, 0.0);
        for (const std::size_t t : near_[c]) {
            const double rt = r[t];
            const double ar = std::abs(rt);
            const int s = sgn(rt);
            for (std::size_t i = 0; i < n_in_; ++i) {
                const double d = step_[c][i];
                for (std::size_t p = 0; p < P_; ++p) {
                    const double ag = d * g(tr_, i, p, t);
                    if (!(ar < std::abs(ag))) continue;
                    up[i * P_ + p] += std::abs(rt - ag) - ar + ag * s;
                    down[i * P_ + p] += std::abs(rt + ag) - ar - ag * s;
                }
            }
        }
        Candidate best;
        bool have = false;
        const auto& G = corr_[c];
        for (std::size_t i = 0; i < n_in_; ++i) {
            const double d = step_[c][i];
            for (std::size_t p = 0; p < P_; ++p) {
                const std::size_t k = i * P_ + p;
                const double plus = -d * G[k] + up[k];
                const double minus = d * G[k] + down[k];
                if (!have || plus < best.delta) {
                    best = {plus, i, p, d};
                    have = true;
                }
                if (minus < best.delta) best = {minus, i, p, -d};
            }
        }
        return best;
    }

    void apply(std::size_t c, Candidate b) {
        weights_[c][b.i * P_ + b.p] += b.step;
        auto& r = tr_.target[c];
        auto& G = corr_[c];
        for (std::size_t t = 0; t < tr_.n; ++t) {
            const double gv = g(tr_, b.i, b.p, t);
            if (gv == 0.0) continue;
            const int before = sgn(r[t]);
            r[t] -= b.step * gv;
            const int change = sgn(r[t]) - before;
            if (change == 0) continue;
            for (std::size_t i = 0; i < n_in_; ++i) {
                for (std::size_t p = 0; p < P_; ++p) G[i * P_ + p] += change * g(tr_, i, p, t);
            }
        }
        abs_train_[c] = abs_sum(r);
        auto& rv = va_.target[c];
        for (std::size_t t = 0; t < va_.n; ++t) rv[t] -= b.step * g(va_, b.i, b.p, t);
        abs_val_[c] = abs_sum(rv);
        // Incremental slope updates accumulate rounding; rebuild now and then.
        if (++steps_on_[c] % 512 == 0) refresh_correlation(c);
        refresh_near(c);
        best_[c] = evaluate(c);
    }

    const Layout& lay_;
    std::size_t P_;
    Samples tr_, va_;
    double step_fraction_;
    std::size_t n_in_ = 0, n_tgt_ = 0;
    std::vector<double> sd_in_, sd_tgt_;
    std::vector<std::vector<double>> step_;
    std::vector<double> reach_;
    std::vector<std::vector<double>> weights_, corr_;
    std::vector<std::vector<std::size_t>> near_;
    std::vector<Candidate> best_;
    std::vector<double> abs_train_, abs_val_;
    std::vector<std::size_t> steps_on_;
};

void check_segments(const std::vector<Segment>& segs, Direction direction, Eigen::Index n_in, Eigen::Index n_tgt) {
    for (const auto& s : segs) {
        if (s.input.cols() != s.target.cols()) fail(ErrorCode::DimensionMismatch, "input and target segments differ in length");
        if (s.input.rows() != n_in || s.target.rows() != n_tgt) fail(ErrorCode::DimensionMismatch, "segments differ in channel count");
        if (s.input.cols() == 0) fail(ErrorCode::DimensionMismatch, "empty segment");
        if (!s.input.allFinite() || !s.target.allFinite()) fail(ErrorCode::NonFiniteInput, "segment contains NaN or Inf");
    }
    if (direction == Direction::forward && n_in != 1) fail(ErrorCode::DimensionMismatch, "forward models take a single feature input");
    if (direction == Direction::backward && n_tgt != 1) fail(ErrorCode::DimensionMismatch, "backward models reconstruct a single feature");
}

}  // namespace

BoostResult fit_boosting(const std::vector<Segment>& train_in, const std::vector<Segment>& val_in, const LagGrid& grid,
                         const BasisSet& basis, Direction direction, const BoostConfig& cfg, std::vector<std::string> labels) {
    cfg.validate();
    grid.validate();
    if (train_in.empty()) fail(ErrorCode::InsufficientTrials, "no training data");
    if (static_cast<std::size_t>(basis.functions.cols()) != grid.size()) fail(ErrorCode::DimensionMismatch, "basis does not match the lag grid");

    std::vector<Segment> train = train_in, val = val_in;
    if (val.empty() && cfg.validation_fraction > 0.0) split_validation(train_in, cfg.validation_fraction, train, val);
    if (val.empty()) fail(ErrorCode::MissingValidation, "boosting needs held-out validation data");

    const auto n_in = train.front().input.rows();
    const auto n_tgt = train.front().target.rows();
    check_segments(train, direction, n_in, n_tgt);
    check_segments(val, direction, n_in, n_tgt);

    const auto lay = make_layout(grid, basis, direction);
    const auto P = static_cast<std::size_t>(basis.functions.rows());
    Booster booster(train, val, lay, P, cfg.step_fraction);

    BoostResult res;
    res.train_mae.push_back(booster.train_mae());
    res.val_mae.push_back(booster.val_mae());
    auto best_w = booster.weights();
    double best_val = res.val_mae.back();
    int since_best = 0;
    res.stop = StopReason::max_iters;
    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        if (!booster.step()) {
            res.stop = StopReason::converged;
            break;
        }
        res.train_mae.push_back(booster.train_mae());
        res.val_mae.push_back(booster.val_mae());
        if (res.val_mae.back() < best_val) {
            best_val = res.val_mae.back();
            best_w = booster.weights();
            res.best_step = res.val_mae.size() - 1;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            res.stop = StopReason::patience;
            break;
        }
    }

    // Kernel rows are EEG channels: targets for forward, inputs for backward.
    const bool fwd = direction == Direction::forward;
    const auto rows = static_cast<Eigen::Index>(fwd ? booster.targets() : booster.inputs());
    Matrix W = Matrix::Zero(rows, static_cast<Eigen::Index>(P));
    for (std::size_t c = 0; c < booster.targets(); ++c) {
        for (std::size_t i = 0; i < booster.inputs(); ++i) {
            const auto row = static_cast<Eigen::Index>(fwd ? c : i);
            for (std::size_t p = 0; p < P; ++p) W(row, static_cast<Eigen::Index>(p)) = best_w[c][i * P + p];
        }
    }
    res.kernel = expand(W, basis, grid, direction, std::move(labels));
    return res;
}

}  // namespace ntrack
