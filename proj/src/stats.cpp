#include "ntrack/stats.hpp"

#include "ntrack/error.hpp"
#include "ntrack/parallel.hpp"
#include "ntrack/seeding.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ntrack {

namespace {

constexpr double kFwhmToSigma = 2.0 * 1.1774100225154747;  // 2*sqrt(2 ln 2)

Matrix lag_course(const TRFKernel& k, StatMode mode) {
    if (mode == StatMode::per_channel) return k.h;
    return k.h.colwise().mean();
}

// Uniform integer in [0, n) from a splitmix stream.
std::size_t draw(std::uint64_t& state, std::size_t n) {
    state = splitmix64(state);
    return static_cast<std::size_t>((static_cast<unsigned __int128>(state) * n) >> 64);
}

}  // namespace

TRFKernel gaussian_smooth_trf(const TRFKernel& k, double width) {
    if (!(width > 0.0) || !std::isfinite(width)) fail(ErrorCode::InvalidSpec, "smoothing width must be positive");
    const double sigma = width / kFwhmToSigma * k.grid.rate;
    const int half = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> g(static_cast<std::size_t>(2 * half + 1));
    for (int j = -half; j <= half; ++j) g[static_cast<std::size_t>(j + half)] = std::exp(-0.5 * (j / sigma) * (j / sigma));

    const Eigen::Index n = k.h.cols();
    Matrix out(k.h.rows(), n);
    for (Eigen::Index p = 0; p < n; ++p) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, p - half), hi = std::min<Eigen::Index>(n - 1, p + half);
        double z = 0.0;
        for (Eigen::Index q = lo; q <= hi; ++q) z += g[static_cast<std::size_t>(q - p + half)];
        for (Eigen::Index c = 0; c < k.h.rows(); ++c) {
            double s = 0.0;
            for (Eigen::Index q = lo; q <= hi; ++q) s += g[static_cast<std::size_t>(q - p + half)] * k.h(c, q);
            out(c, p) = s / z;
        }
    }
    return expand(out, identity_basis(k.grid), k.grid, k.direction, k.labels);
}

Matrix tfce_enhance(const Matrix& t, double dh, double E, double H, int steps) {
    Matrix out = Matrix::Zero(t.rows(), t.cols());
    const double peak = t.cwiseAbs().maxCoeff();
    if (!(peak > 0.0)) return out;
    if (dh <= 0.0) dh = peak / steps;
    const Eigen::Index n = t.cols();
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
        for (const double sign : {1.0, -1.0}) {
            // Thresholds k*dh, k = 1..; 1e-12 guards the top step against rounding.
            for (int kth = 1;; ++kth) {
                const double h = kth * dh;
                bool any = false;
                Eigen::Index p = 0;
                while (p < n) {
                    if (sign * t(r, p) < h - 1e-12 * peak) {
                        ++p;
                        continue;
                    }
                    Eigen::Index q = p;
                    while (q < n && sign * t(r, q) >= h - 1e-12 * peak) ++q;
                    const double add = std::pow(static_cast<double>(q - p), E) * std::pow(h, H) * dh;
                    for (Eigen::Index i = p; i < q; ++i) out(r, i) += sign * add;
                    any = true;
                    p = q;
                }
                if (!any) break;
            }
        }
    }
    return out;
}

Matrix independent_t(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
    if (a.size() < 2 || b.size() < 2) fail(ErrorCode::InvalidSpec, "each group needs at least 2 members");
    const auto rows = a[0].rows(), cols = a[0].cols();
    auto moments = [&](const std::vector<Matrix>& g, Matrix& mean, Matrix& ss) {
        mean = Matrix::Zero(rows, cols);
        for (const auto& m : g) {
            if (m.rows() != rows || m.cols() != cols) fail(ErrorCode::DimensionMismatch, "lag courses differ in shape");
            mean += m;
        }
        mean /= static_cast<double>(g.size());
        ss = Matrix::Zero(rows, cols);
        for (const auto& m : g) ss += (m - mean).cwiseAbs2();
    };
    Matrix ma, sa, mb, sb;
    moments(a, ma, sa);
    moments(b, mb, sb);
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    Matrix t(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            const double pooled = (sa(r, c) + sb(r, c)) / (na + nb - 2.0);
            const double se = std::sqrt(pooled * (1.0 / na + 1.0 / nb));
            const double diff = ma(r, c) - mb(r, c);
            t(r, c) = se > 0.0 ? diff / se : 0.0;
        }
    }
    return t;
}

std::vector<LagCluster> find_clusters(const Matrix& p, const LagGrid& grid, double alpha) {
    std::vector<LagCluster> out;
    const Eigen::Index n = p.cols();
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        Eigen::Index i = 0;
        while (i < n) {
            if (!(p(r, i) < alpha)) {
                ++i;
                continue;
            }
            LagCluster c;
            c.row = static_cast<std::size_t>(r);
            c.first = static_cast<std::size_t>(i);
            while (i < n && p(r, i) < alpha) {
                c.min_p = std::min(c.min_p, p(r, i));
                ++i;
            }
            c.last = static_cast<std::size_t>(i - 1);
            c.start = grid.time(c.first);
            c.stop = grid.time(c.last);
            out.push_back(c);
        }
    }
    return out;
}

StatResult tfce_ttest(const std::vector<TRFKernel>& group_a, const std::vector<TRFKernel>& group_b, std::size_t n_perm,
                      std::uint64_t seed, StatMode mode, std::size_t jobs, double alpha) {
    if (n_perm < 100) fail(ErrorCode::InsufficientPermutations, "at least 100 permutations required, got " + std::to_string(n_perm));
    if (group_a.size() < 5 || group_b.size() < 5) fail(ErrorCode::InsufficientTrials, "at least 5 subjects per group required");
    const auto& ref = group_a.front();
    std::vector<Matrix> all;
    for (const auto* g : {&group_a, &group_b}) {
        for (const auto& k : *g) {
            if (!(k.grid == ref.grid) || k.h.rows() != ref.h.rows() || k.h.cols() != ref.h.cols()) {
                fail(ErrorCode::DimensionMismatch, "kernels must share the lag grid and channel count");
            }
            all.push_back(lag_course(k, mode));
        }
    }
    const std::size_t na = group_a.size();

    StatResult res;
    res.grid = ref.grid;
    res.mode = mode;
    res.n_perm = n_perm;
    res.alpha = alpha;
    if (mode == StatMode::per_channel) res.labels = ref.labels;
    else res.labels = {"mean"};

    auto split_t = [&](const std::vector<std::size_t>& order) {
        std::vector<Matrix> a, b;
        for (std::size_t i = 0; i < order.size(); ++i) (i < na ? a : b).push_back(all[order[i]]);
        return independent_t(a, b);
    };
    std::vector<std::size_t> identity(all.size());
    std::iota(identity.begin(), identity.end(), 0);
    res.t_map = split_t(identity);
    const double peak = res.t_map.cwiseAbs().maxCoeff();
    // The step is fixed by the observed map and reused for every permutation.
    const double dh = peak > 0.0 ? peak / 100.0 : 1.0;
    res.tfce_map = tfce_enhance(res.t_map, dh);

    std::vector<double> null_max(n_perm, 0.0);
    parallel_for(n_perm, jobs, [&](std::size_t k) {
        std::uint64_t state = derive_seed(seed, {0x7fceULL, k});
        auto order = identity;
        for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[draw(state, i + 1)]);
        null_max[k] = tfce_enhance(split_t(order), dh).cwiseAbs().maxCoeff();
    });

    res.p_map.resize(res.t_map.rows(), res.t_map.cols());
    for (Eigen::Index r = 0; r < res.p_map.rows(); ++r) {
        for (Eigen::Index c = 0; c < res.p_map.cols(); ++c) {
            const double obs = std::abs(res.tfce_map(r, c));
            std::size_t count = 0;
            for (const double m : null_max) count += m >= obs - 1e-12 * (obs + 1.0) ? 1 : 0;
            res.p_map(r, c) = (1.0 + static_cast<double>(count)) / (1.0 + static_cast<double>(n_perm));
        }
    }
    // A flat observed map yields no evidence anywhere.
    if (peak == 0.0) res.p_map.setOnes();
    res.clusters = find_clusters(res.p_map, res.grid, alpha);
    return res;
}

std::vector<double> bh_adjust(const std::vector<double>& p) {
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
    std::vector<double> adj(m);
    double running = 1.0;
    for (std::size_t k = m; k-- > 0;) {
        const double v = p[order[k]] * static_cast<double>(m) / static_cast<double>(k + 1);
        running = std::min(running, v);
        adj[order[k]] = running;
    }
    return adj;
}

std::vector<bool> benjamini_hochberg(const std::vector<double>& p, double alpha) {
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
    std::size_t kmax = 0;
    for (std::size_t k = 1; k <= m; ++k) {
        if (p[order[k - 1]] <= static_cast<double>(k) * alpha / static_cast<double>(m)) kmax = k;
    }
    std::vector<bool> out(m, false);
    for (std::size_t k = 0; k < kmax; ++k) out[order[k]] = true;
    return out;
}

std::vector<PairedTestResult> paired_ttest_bh(const std::vector<PairedComparison>& comparisons, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::InvalidSpec, "alpha must lie in (0, 1)");
    std::vector<PairedTestResult> out(comparisons.size());
    std::vector<double> p(comparisons.size());
    for (std::size_t c = 0; c < comparisons.size(); ++c) {
        const auto& cmp = comparisons[c];
        if (cmp.a.size() != cmp.b.size()) fail(ErrorCode::DimensionMismatch, "comparison " + std::to_string(c) + " has unpaired samples");
        const std::size_t n = cmp.a.size();
        if (n < 3) fail(ErrorCode::InsufficientTrials, "comparison " + std::to_string(c) + " needs at least 3 pairs");
        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i) d[i] = cmp.a[i] - cmp.b[i];
        const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
        double ss = 0.0, scale = 0.0;
        for (const double v : d) {
            ss += (v - mean) * (v - mean);
            scale = std::max(scale, std::abs(v));
        }
        if (scale == 0.0) {
            out[c].t = 0.0;
            p[c] = 1.0;
            continue;
        }
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        if (sd <= 1e-12 * scale) fail(ErrorCode::DegenerateTest, "comparison " + std::to_string(c) + " has constant nonzero differences");
        const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
        const boost::math::students_t dist(static_cast<double>(n - 1));
        out[c].t = t;
        p[c] = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
    }
    const auto rejected = benjamini_hochberg(p, alpha);
    const auto adj = bh_adjust(p);
    for (std::size_t c = 0; c < out.size(); ++c) {
        out[c].p_raw = p[c];
        out[c].p_adjusted = adj[c];
        out[c].rejected = rejected[c] && out[c].t != 0.0;
    }
    return out;
}

}  // namespace ntrack
