#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gstpro/matrix.hpp"

namespace gstpro {

/// A multivariate series: T timestamps x N channels, with a per-entry
/// observation mask (1 = observed) and optional per-timestamp anomaly labels.
/// Entries with mask 0 are missing no matter what value they store.
struct SeriesDataset {
    Matrix values;                           // T x N
    Matrix mask;                             // T x N, entries 0/1
    std::vector<int> labels;                 // empty, or length T with entries 0/1
    std::vector<std::string> channel_names;  // length N
    long long start_index = 0;               // timestamp of row 0; rows are consecutive

    int length() const { return values.rows; }
    int channels() const { return values.cols; }
    bool has_labels() const { return !labels.empty(); }
};

/// Per-channel min/max fitted on observed training entries.
struct Normalizer {
    std::vector<double> min_v;
    std::vector<double> max_v;
};

/// One forecasting instance: w_s input rows followed by the target row.
struct Window {
    Matrix values;                    // w_s x N
    Matrix mask;                      // w_s x N
    std::vector<double> target;       // N
    std::vector<double> target_mask;  // N, entries 0/1
    long long target_index = 0;
};

SeriesDataset load_series_csv(const std::string& path);
void write_series_csv(const SeriesDataset& d, const std::string& path);

void write_labels_csv(const SeriesDataset& d, const std::string& path);

/// Labels keyed by timestamp, as read back from a labels CSV.
struct LabelSeries {
    long long start_index = 0;
    std::vector<int> labels;
};
LabelSeries load_labels_csv(const std::string& path);

void write_mask_csv(const Matrix& mask, long long start_index, const std::vector<std::string>& channel_names,
                    const std::string& path);

/// Independent Bernoulli mask: entry is 0 with probability `rate`. Pure
/// function of (T, N, rate, seed); identical across platforms.
Matrix generate_mask(int t_len, int n_channels, double rate, uint64_t seed);

/// AND the dataset's mask with `mask`; values are untouched.
SeriesDataset apply_mask(const SeriesDataset& d, const Matrix& mask);

/// Fit on observed entries only. A channel with no observations gets (0, 1);
/// a constant channel maps to 0.
Normalizer fit_normalizer(const SeriesDataset& d);

/// (v - min) / (max - min), clipped to [-1, 2]. Masks unchanged.
SeriesDataset normalize(const SeriesDataset& d, const Normalizer& n);

/// Inverse of normalize for entries that were not clipped.
SeriesDataset denormalize(const SeriesDataset& d, const Normalizer& n);

/// One window per target index from w_s to T-1, stride 1. Empty when T <= w_s.
std::vector<Window> make_windows(const SeriesDataset& d, int window_size);

struct SynthResult {
    SeriesDataset train;
    SeriesDataset test;
};

/// Synthetic benchmark: channels are mixtures of shared latent sinusoids plus
/// noise, so cross-channel correlation carries signal. The test split gets
/// `anomaly_segments` contiguous anomalous intervals (~10% of it in total),
/// alternating between single-channel level shifts and correlation-breaking
/// sign flips of one channel's latent loadings.
SynthResult synth_generate(int n_channels, int t_train, int t_test, int anomaly_segments, uint64_t seed);

}  // namespace gstpro
