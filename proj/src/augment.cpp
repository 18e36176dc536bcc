#include "ivprop/augment.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <stdexcept>

#include "ivprop/rng.hpp"

namespace ivp::aug {

namespace {

struct EnvelopeRows {
    std::vector<double> in_lo, in_hi, out_lo, out_hi;
};

// Component-wise [min, max] over one group of rows.
void append_group_envelope(const data::PointDataset& d, const std::vector<std::size_t>& rows,
                           EnvelopeRows& acc) {
    const std::size_t dd = d.inputs.shape[1], m = d.outputs.shape[1];
    std::vector<double> ilo(dd, std::numeric_limits<double>::infinity()), ihi(dd, -ilo[0]);
    std::vector<double> olo(m, std::numeric_limits<double>::infinity()), ohi(m, -olo[0]);
    for (std::size_t r : rows) {
        for (std::size_t c = 0; c < dd; ++c) {
            ilo[c] = std::min(ilo[c], d.inputs.at(r, c));
            ihi[c] = std::max(ihi[c], d.inputs.at(r, c));
        }
        for (std::size_t c = 0; c < m; ++c) {
            olo[c] = std::min(olo[c], d.outputs.at(r, c));
            ohi[c] = std::max(ohi[c], d.outputs.at(r, c));
        }
    }
    acc.in_lo.insert(acc.in_lo.end(), ilo.begin(), ilo.end());
    acc.in_hi.insert(acc.in_hi.end(), ihi.begin(), ihi.end());
    acc.out_lo.insert(acc.out_lo.end(), olo.begin(), olo.end());
    acc.out_hi.insert(acc.out_hi.end(), ohi.begin(), ohi.end());
}

data::IntervalDataset envelope_to_dataset(EnvelopeRows&& acc, std::size_t d, std::size_t m) {
    const std::size_t n = acc.in_lo.size() / d;
    data::IntervalDataset out;
    out.inputs.lo = Tensor::matrix(n, d, std::move(acc.in_lo));
    out.inputs.hi = Tensor::matrix(n, d, std::move(acc.in_hi));
    out.outputs.lo = Tensor::matrix(n, m, std::move(acc.out_lo));
    out.outputs.hi = Tensor::matrix(n, m, std::move(acc.out_hi));
    data::validate(out);
    return out;
}

double sq_dist(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double v = a[i] - b[i];
        s += v * v;
    }
    return s;
}

}  // namespace

data::IntervalDataset grid_intervals(const data::PointDataset& d, const GridAugConfig& cfg) {
    if (cfg.resolutions.empty()) throw std::invalid_argument("grid_intervals: no resolutions");
    for (double r : cfg.resolutions)
        if (!(r > 0.0)) throw std::invalid_argument("grid_intervals: non-positive resolution");
    const std::size_t dd = d.inputs.shape[1];
    if (dd > 3)
        std::cerr << "grid_intervals: warning, " << dd
                  << "-dimensional inputs; grid grouping degrades above ~3 dims\n";
    EnvelopeRows acc;
    for (double r : cfg.resolutions) {
        // bucket rows by their per-dimension cell index
        std::map<std::vector<long long>, std::vector<std::size_t>> cells;
        for (std::size_t i = 0; i < d.size(); ++i) {
            std::vector<long long> key(dd);
            for (std::size_t c = 0; c < dd; ++c)
                key[c] = static_cast<long long>(std::floor(d.inputs.at(i, c) / r));
            cells[std::move(key)].push_back(i);
        }
        for (const auto& [key, rows] : cells) {
            (void)key;
            if (rows.size() < cfg.min_group_size) continue;
            append_group_envelope(d, rows, acc);
        }
    }
    return envelope_to_dataset(std::move(acc), dd, d.outputs.shape[1]);
}

KmeansResult kmeans(const Tensor& points, std::size_t k, const ClusterAugConfig& cfg) {
    const std::size_t n = points.shape[0], d = points.shape[1];
    if (k == 0 || k > n)
        throw std::invalid_argument("kmeans: k = " + std::to_string(k) + " with n = " +
                                    std::to_string(n));
    Rng rng = make_rng(derive_seed(cfg.seed, k));

    // k-means++ seeding
    Tensor centroids = Tensor::zeros({k, d});
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    {
        const std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        std::copy(points.row_ptr(first), points.row_ptr(first) + d, centroids.row_ptr(0));
        for (std::size_t c = 1; c < k; ++c) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                d2[i] = std::min(d2[i], sq_dist(points.row_ptr(i), centroids.row_ptr(c - 1), d));
                total += d2[i];
            }
            std::size_t pick = 0;
            if (total > 0.0) {
                double target = runif(rng, 0.0, total);
                for (std::size_t i = 0; i < n; ++i) {
                    target -= d2[i];
                    if (target <= 0.0) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
            }
            std::copy(points.row_ptr(pick), points.row_ptr(pick) + d, centroids.row_ptr(c));
        }
    }

    KmeansResult res;
    res.labels.assign(n, 0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
        res.iterations = iter + 1;
        // assignment
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t c = 0; c < k; ++c) {
                const double v = sq_dist(points.row_ptr(i), centroids.row_ptr(c), d);
                if (v < best) {
                    best = v;
                    arg = c;
                }
            }
            res.labels[i] = arg;
        }
        // update
        Tensor next = Tensor::zeros({k, d});
        counts.assign(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[res.labels[i]];
            for (std::size_t c = 0; c < d; ++c) next.at(res.labels[i], c) += points.at(i, c);
        }
        // refill empty clusters with the farthest point of the largest cluster
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            std::size_t big = 0;
            for (std::size_t b = 1; b < k; ++b)
                if (counts[b] > counts[big]) big = b;
            double far_d = -1.0;
            std::size_t far_i = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (res.labels[i] != big) continue;
                const double v = sq_dist(points.row_ptr(i), centroids.row_ptr(big), d);
                if (v > far_d) {
                    far_d = v;
                    far_i = i;
                }
            }
            for (std::size_t cc = 0; cc < d; ++cc) {
                next.at(big, cc) -= points.at(far_i, cc);
                next.at(c, cc) = points.at(far_i, cc);
            }
            --counts[big];
            counts[c] = 1;
            res.labels[far_i] = c;
        }
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t cc = 0; cc < d; ++cc) next.at(c, cc) /= static_cast<double>(counts[c]);
        double shift = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i)
            shift = std::max(shift, std::fabs(next[i] - centroids[i]));
        centroids = std::move(next);
        if (shift < cfg.tol) break;
    }
    res.centroids = std::move(centroids);
    return res;
}

data::IntervalDataset cluster_intervals(const data::PointDataset& d, const ClusterAugConfig& cfg) {
    if (cfg.cluster_counts.empty())
        throw std::invalid_argument("cluster_intervals: no cluster counts");
    EnvelopeRows acc;
    for (std::size_t k : cfg.cluster_counts) {
        const KmeansResult km = kmeans(d.inputs, k, cfg);
        std::vector<std::vector<std::size_t>> groups(k);
        for (std::size_t i = 0; i < d.size(); ++i) groups[km.labels[i]].push_back(i);
        for (const auto& rows : groups) {
            if (rows.empty() || rows.size() < cfg.min_group_size) continue;
            append_group_envelope(d, rows, acc);
        }
    }
    return envelope_to_dataset(std::move(acc), d.inputs.shape[1], d.outputs.shape[1]);
}

std::vector<std::size_t> cluster_counts_from_sizes(std::size_t n,
                                                   const std::vector<std::size_t>& sizes) {
    std::vector<std::size_t> ks;
    for (std::size_t s : sizes) {
        if (s == 0) throw std::invalid_argument("cluster_counts_from_sizes: zero size");
        const double k = std::round(static_cast<double>(n) / static_cast<double>(s));
        ks.push_back(std::min<std::size_t>(n, std::max<std::size_t>(1, static_cast<std::size_t>(k))));
    }
    return ks;
}

}  // namespace ivp::aug
