#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gstpro/matrix.hpp"

namespace gstpro {

/// Negative log-likelihood of a forecast under N(mu, sigma^2), with sigma
/// floored to keep constant histories finite.
double channel_likelihood(double yhat, double mu, double sigma, double sigma_floor = 1e-4);

/// Mean and population standard deviation of the last min(W, len) values.
struct RollingParams {
    double mu = 0.0;
    double sigma = 0.0;
};
RollingParams rolling_params(std::span<const double> buffer, int window);

/// Rolling per-channel Gaussian over forecast history. Strictly sequential:
/// one state per stream. The current forecast joins the window before its
/// own likelihood is computed, and the score never looks ahead.
class GaussianScorer {
public:
    GaussianScorer(int n_channels, int window, double sigma_floor = 1e-4);

    /// Prepend training-period forecasts (rows chronological); keeps the
    /// last window-1 of them.
    void seed_history(const Matrix& train_forecasts);

    /// Push one forecast and return the aggregate score; optionally writes
    /// the per-channel likelihoods to alphas_out (length N).
    double push_and_score(std::span<const double> forecast, double* alphas_out = nullptr);

    int n_channels() const { return n_; }
    int window() const { return cap_; }
    int count() const { return count_; }

private:
    void push_value(int channel, double v);
    void refresh_sums();

    int n_ = 0;
    int cap_ = 0;
    double floor_ = 1e-4;
    int count_ = 0;
    int head_ = 0;  // next slot to overwrite once full
    std::vector<std::vector<double>> ring_;  // per channel, capacity cap_
    std::vector<double> sum_, sum_sq_;
    long long pushes_since_refresh_ = 0;
};

struct ScorerReport {
    std::vector<double> scores;  // aggregate A(t), one per forecast row
    Matrix alphas;               // per-channel likelihoods, T x N
};

/// Score a forecast stream in order. `state` must already be seeded with the
/// training-period forecasts. Takes forecasts only; ground truth never enters.
ScorerReport score_stream(const Matrix& forecasts, GaussianScorer& state);

/// Per-channel median and inter-quartile range (linear-interpolation
/// quantiles), fitted on rows where mask is 1 when a mask is given.
struct MedianIqr {
    std::vector<double> median;
    std::vector<double> iqr;
};
MedianIqr fit_median_iqr(const Matrix& values, const Matrix* mask = nullptr);
double median_iqr_apply(const MedianIqr& stats, int channel, double v);

/// Linear-interpolation quantile of an unsorted sample.
double quantile_linear(std::vector<double> sample, double p);

/// Probabilistic PCA over validation forecast deviations: maximum-likelihood
/// principal subspace plus isotropic noise variance from the discarded
/// eigenvalues. Scores are mean squared reconstruction errors over observed
/// channels.
struct PpcaModel {
    std::vector<double> mean;
    Matrix basis;                    // q x N, orthonormal rows
    std::vector<double> eigenvalues; // all N, descending
    double noise_variance = 0.0;
    int q = 0;
};
PpcaModel recon_pca_fit(const Matrix& rows, int q);
double recon_pca_score(const PpcaModel& model, std::span<const double> x, std::span<const double> mask);

/// K-means over validation forecasts with the cluster count picked by mean
/// silhouette over K in [k_min, k_max]; the anomaly score of a forecast is
/// its distance to the nearest centroid.
struct KmeansModel {
    Matrix centroids;
    int k = 0;
    double silhouette = -1.0;
};
KmeansModel dist_kmeans_fit(const Matrix& points, uint64_t seed, int k_min = 2, int k_max = 20, int restarts = 10);
double dist_kmeans_score(const KmeansModel& model, std::span<const double> point);

}  // namespace gstpro
