#include "gstpro/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gstpro/rng.hpp"

namespace gstpro {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;  // ln(2*pi)/2
constexpr long long kRefreshInterval = 4096;
}  // namespace

double channel_likelihood(double yhat, double mu, double sigma, double sigma_floor) {
    const double s = std::max(sigma, sigma_floor);
    const double z = (yhat - mu) / s;
    return std::log(s) + kHalfLog2Pi + 0.5 * z * z;
}

RollingParams rolling_params(std::span<const double> buffer, int window) {
    if (buffer.empty()) throw std::invalid_argument("rolling_params: empty buffer");
    const size_t n = std::min<size_t>(buffer.size(), static_cast<size_t>(window));
    const double* p = buffer.data() + (buffer.size() - n);
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) sum += p[i];
    const double mu = sum / static_cast<double>(n);
    double var = 0.0;
    for (size_t i = 0; i < n; ++i) var += (p[i] - mu) * (p[i] - mu);
    var /= static_cast<double>(n);
    return {mu, std::sqrt(var)};
}

GaussianScorer::GaussianScorer(int n_channels, int window, double sigma_floor)
    : n_(n_channels), cap_(window), floor_(sigma_floor) {
    if (n_ < 1 || cap_ < 1) throw std::invalid_argument("GaussianScorer: bad dimensions");
    ring_.assign(n_, {});
    for (auto& r : ring_) r.reserve(std::min(cap_, 1 << 20));
    sum_.assign(n_, 0.0);
    sum_sq_.assign(n_, 0.0);
}

void GaussianScorer::push_value(int channel, double v) {
    auto& r = ring_[channel];
    if (count_ < cap_ && static_cast<int>(r.size()) < cap_) {
        r.push_back(v);
        sum_[channel] += v;
        sum_sq_[channel] += v * v;
    } else {
        double& slot = r[head_];
        sum_[channel] += v - slot;
        sum_sq_[channel] += v * v - slot * slot;
        slot = v;
    }
}

void GaussianScorer::refresh_sums() {
    for (int c = 0; c < n_; ++c) {
        double s = 0.0, sq = 0.0;
        for (double v : ring_[c]) {
            s += v;
            sq += v * v;
        }
        sum_[c] = s;
        sum_sq_[c] = sq;
    }
}

void GaussianScorer::seed_history(const Matrix& train_forecasts) {
    if (train_forecasts.cols != n_) throw std::invalid_argument("seed_history: channel count mismatch");
    const int keep = std::min(train_forecasts.rows, cap_ - 1);
    const int first = train_forecasts.rows - keep;
    for (int t = 0; t < keep; ++t) {
        for (int c = 0; c < n_; ++c) push_value(c, train_forecasts(first + t, c));
        if (count_ < cap_)
            ++count_;
        else
            head_ = (head_ + 1) % cap_;
    }
}

double GaussianScorer::push_and_score(std::span<const double> forecast, double* alphas_out) {
    if (static_cast<int>(forecast.size()) != n_) throw std::invalid_argument("push_and_score: length mismatch");
    for (int c = 0; c < n_; ++c) push_value(c, forecast[c]);
    if (count_ < cap_)
        ++count_;
    else
        head_ = (head_ + 1) % cap_;
    if (++pushes_since_refresh_ >= kRefreshInterval) {
        refresh_sums();
        pushes_since_refresh_ = 0;
    }

    double aggregate = 0.0;
    const double inv_n = 1.0 / static_cast<double>(count_);
    for (int c = 0; c < n_; ++c) {
        const double mu = sum_[c] * inv_n;
        const double var = std::max(0.0, sum_sq_[c] * inv_n - mu * mu);
        const double alpha = channel_likelihood(forecast[c], mu, std::sqrt(var), floor_);
        if (alphas_out) alphas_out[c] = alpha;
        aggregate += alpha;
    }
    return aggregate;
}

ScorerReport score_stream(const Matrix& forecasts, GaussianScorer& state) {
    if (forecasts.cols != state.n_channels()) throw std::invalid_argument("score_stream: channel count mismatch");
    ScorerReport report;
    report.scores.reserve(forecasts.rows);
    report.alphas = Matrix(forecasts.rows, forecasts.cols);
    for (int t = 0; t < forecasts.rows; ++t) {
        std::span<const double> row(forecasts.row(t), static_cast<size_t>(forecasts.cols));
        report.scores.push_back(state.push_and_score(row, report.alphas.row(t)));
    }
    return report;
}

double quantile_linear(std::vector<double> sample, double p) {
    if (sample.empty()) throw std::invalid_argument("quantile_linear: empty sample");
    std::sort(sample.begin(), sample.end());
    if (sample.size() == 1) return sample[0];
    const double pos = p * static_cast<double>(sample.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    if (lo + 1 >= sample.size()) return sample.back();
    const double frac = pos - static_cast<double>(lo);
    return sample[lo] + frac * (sample[lo + 1] - sample[lo]);
}

MedianIqr fit_median_iqr(const Matrix& values, const Matrix* mask) {
    if (mask && !mask->same_shape(values)) throw std::invalid_argument("fit_median_iqr: mask shape mismatch");
    MedianIqr out;
    out.median.assign(values.cols, 0.0);
    out.iqr.assign(values.cols, 1.0);
    std::vector<double> col;
    for (int c = 0; c < values.cols; ++c) {
        col.clear();
        for (int t = 0; t < values.rows; ++t)
            if (!mask || (*mask)(t, c) != 0.0) col.push_back(values(t, c));
        if (col.empty()) continue;
        out.median[c] = quantile_linear(col, 0.5);
        out.iqr[c] = quantile_linear(col, 0.75) - quantile_linear(col, 0.25);
    }
    return out;
}

double median_iqr_apply(const MedianIqr& stats, int channel, double v) {
    return (v - stats.median[channel]) / std::max(stats.iqr[channel], 1e-4);
}

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Small N only.
void jacobi_eigensymm(Matrix s, std::vector<double>& eigenvalues, Matrix& eigenvectors) {
    const int n = s.rows;
    eigenvectors = identity(n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += s(i, j) * s(i, j);
        if (off < 1e-24) break;
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (std::fabs(s(p, q)) < 1e-300) continue;
                const double theta = (s(q, q) - s(p, p)) / (2.0 * s(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (int k = 0; k < n; ++k) {
                    const double skp = s(k, p), skq = s(k, q);
                    s(k, p) = c * skp - sn * skq;
                    s(k, q) = sn * skp + c * skq;
                }
                for (int k = 0; k < n; ++k) {
                    const double spk = s(p, k), sqk = s(q, k);
                    s(p, k) = c * spk - sn * sqk;
                    s(q, k) = sn * spk + c * sqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = eigenvectors(k, p), vkq = eigenvectors(k, q);
                    eigenvectors(k, p) = c * vkp - sn * vkq;
                    eigenvectors(k, q) = sn * vkp + c * vkq;
                }
            }
    }
    eigenvalues.resize(n);
    for (int i = 0; i < n; ++i) eigenvalues[i] = s(i, i);
}

}  // namespace

PpcaModel recon_pca_fit(const Matrix& rows, int q) {
    const int n = rows.cols;
    if (q < 1 || q > n) throw std::invalid_argument("recon_pca_fit: bad component count");
    if (rows.rows < q + 1) throw std::invalid_argument("recon_pca_fit: need more rows than components");

    PpcaModel model;
    model.q = q;
    model.mean.assign(n, 0.0);
    for (int t = 0; t < rows.rows; ++t)
        for (int c = 0; c < n; ++c) model.mean[c] += rows(t, c);
    for (int c = 0; c < n; ++c) model.mean[c] /= static_cast<double>(rows.rows);

    Matrix cov(n, n);
    for (int t = 0; t < rows.rows; ++t)
        for (int i = 0; i < n; ++i) {
            const double di = rows(t, i) - model.mean[i];
            for (int j = i; j < n; ++j) cov(i, j) += di * (rows(t, j) - model.mean[j]);
        }
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            cov(i, j) /= static_cast<double>(rows.rows);
            cov(j, i) = cov(i, j);
        }

    std::vector<double> eigenvalues;
    Matrix vectors;
    jacobi_eigensymm(cov, eigenvalues, vectors);

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return eigenvalues[a] > eigenvalues[b]; });

    model.eigenvalues.resize(n);
    for (int i = 0; i < n; ++i) model.eigenvalues[i] = eigenvalues[order[i]];
    model.basis = Matrix(q, n);
    for (int k = 0; k < q; ++k)
        for (int c = 0; c < n; ++c) model.basis(k, c) = vectors(c, order[k]);

    double tail = 0.0;
    for (int i = q; i < n; ++i) tail += model.eigenvalues[i];
    model.noise_variance = (n > q) ? tail / static_cast<double>(n - q) : 0.0;
    return model;
}

double recon_pca_score(const PpcaModel& model, std::span<const double> x, std::span<const double> mask) {
    const int n = static_cast<int>(model.mean.size());
    if (static_cast<int>(x.size()) != n || static_cast<int>(mask.size()) != n)
        throw std::invalid_argument("recon_pca_score: length mismatch");
    // Missing channels enter the projection as the mean (centered 0) and are
    // excluded from the error average.
    std::vector<double> centered(n);
    for (int c = 0; c < n; ++c) centered[c] = mask[c] != 0.0 ? x[c] - model.mean[c] : 0.0;
    std::vector<double> coeff(model.q, 0.0);
    for (int k = 0; k < model.q; ++k)
        for (int c = 0; c < n; ++c) coeff[k] += model.basis(k, c) * centered[c];
    double err = 0.0;
    int observed = 0;
    for (int c = 0; c < n; ++c) {
        if (mask[c] == 0.0) continue;
        double recon = 0.0;
        for (int k = 0; k < model.q; ++k) recon += model.basis(k, c) * coeff[k];
        err += (centered[c] - recon) * (centered[c] - recon);
        ++observed;
    }
    return observed > 0 ? err / static_cast<double>(observed) : 0.0;
}

namespace {

double sq_dist(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

struct Clustering {
    Matrix centroids;
    std::vector<int> assignment;
    double inertia = std::numeric_limits<double>::infinity();
};

Clustering lloyd_kmeans(const Matrix& points, int k, SplitMix64& rng) {
    const int n = points.rows, d = points.cols;
    Clustering cl;
    cl.centroids = Matrix(k, d);
    cl.assignment.assign(n, 0);

    // k-means++ seeding
    std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
    int first = static_cast<int>(rng.below(n));
    std::copy(points.row(first), points.row(first) + d, cl.centroids.row(0));
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            min_d[i] = std::min(min_d[i], sq_dist(points.row(i), cl.centroids.row(c - 1), d));
            total += min_d[i];
        }
        int pick = n - 1;
        if (total > 0.0) {
            double target = rng.uniform01() * total;
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                acc += min_d[i];
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        }
        std::copy(points.row(pick), points.row(pick) + d, cl.centroids.row(c));
    }

    std::vector<int> counts(k);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double bd = sq_dist(points.row(i), cl.centroids.row(0), d);
            for (int c = 1; c < k; ++c) {
                double dist = sq_dist(points.row(i), cl.centroids.row(c), d);
                if (dist < bd) {
                    bd = dist;
                    best = c;
                }
            }
            if (cl.assignment[i] != best) {
                cl.assignment[i] = best;
                changed = true;
            }
        }
        cl.centroids.fill(0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < n; ++i) {
            ++counts[cl.assignment[i]];
            for (int j = 0; j < d; ++j) cl.centroids(cl.assignment[i], j) += points(i, j);
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // Re-seat an empty cluster on the point farthest from its centroid.
                int far = 0;
                double fd = -1.0;
                for (int i = 0; i < n; ++i) {
                    double dist = sq_dist(points.row(i), cl.centroids.row(cl.assignment[i]), d);
                    if (dist > fd) {
                        fd = dist;
                        far = i;
                    }
                }
                std::copy(points.row(far), points.row(far) + d, cl.centroids.row(c));
                changed = true;
            } else {
                for (int j = 0; j < d; ++j) cl.centroids(c, j) /= counts[c];
            }
        }
        if (!changed && iter > 0) break;
    }

    cl.inertia = 0.0;
    for (int i = 0; i < n; ++i) cl.inertia += sq_dist(points.row(i), cl.centroids.row(cl.assignment[i]), d);
    return cl;
}

double mean_silhouette(const Matrix& points, const std::vector<int>& assignment, int k) {
    const int n = points.rows, d = points.cols;
    std::vector<int> counts(k, 0);
    for (int a : assignment) ++counts[a];

    double total = 0.0;
    std::vector<double> mean_dist(k);
    for (int i = 0; i < n; ++i) {
        std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            mean_dist[assignment[j]] += std::sqrt(sq_dist(points.row(i), points.row(j), d));
        }
        const int own = assignment[i];
        if (counts[own] <= 1) continue;  // silhouette of a singleton is 0
        const double a = mean_dist[own] / (counts[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c == own || counts[c] == 0) continue;
            b = std::min(b, mean_dist[c] / counts[c]);
        }
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

}  // namespace

KmeansModel dist_kmeans_fit(const Matrix& points, uint64_t seed, int k_min, int k_max, int restarts) {
    if (points.rows < 1) throw std::invalid_argument("dist_kmeans_fit: no points");
    KmeansModel best;
    for (int k = std::max(2, k_min); k <= k_max; ++k) {
        if (points.rows < k) continue;  // not enough points for this K
        Clustering best_restart;
        for (int r = 0; r < restarts; ++r) {
            SplitMix64 rng(splitmix64_at(seed, static_cast<uint64_t>(k) * 1000 + r));
            Clustering cl = lloyd_kmeans(points, k, rng);
            if (cl.inertia < best_restart.inertia) best_restart = std::move(cl);
        }
        const double sil = mean_silhouette(points, best_restart.assignment, k);
        if (sil > best.silhouette) {
            best.silhouette = sil;
            best.k = k;
            best.centroids = best_restart.centroids;
        }
    }
    if (best.k == 0) {
        // Fewer than two points: degenerate single centroid at the mean.
        best.k = 1;
        best.centroids = Matrix(1, points.cols);
        for (int t = 0; t < points.rows; ++t)
            for (int c = 0; c < points.cols; ++c) best.centroids(0, c) += points(t, c);
        for (int c = 0; c < points.cols; ++c) best.centroids(0, c) /= std::max(1, points.rows);
        best.silhouette = 0.0;
    }
    return best;
}

double dist_kmeans_score(const KmeansModel& model, std::span<const double> point) {
    if (static_cast<int>(point.size()) != model.centroids.cols)
        throw std::invalid_argument("dist_kmeans_score: dimension mismatch");
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < model.k; ++c) best = std::min(best, sq_dist(point.data(), model.centroids.row(c), point.size()));
    return std::sqrt(best);
}

}  // namespace gstpro
