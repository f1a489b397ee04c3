#include "gstpro/pipeline.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include "gstpro/trainer.hpp"

namespace gstpro {

namespace {

SeriesDataset concat_series(const SeriesDataset& a, const SeriesDataset& b) {
    if (a.channels() != b.channels()) throw std::invalid_argument("score: train/test channel counts differ");
    if (b.start_index != a.start_index + a.length())
        throw std::invalid_argument("score: test timestamps must continue the training timestamps");
    SeriesDataset out;
    out.start_index = a.start_index;
    out.channel_names = a.channel_names;
    out.values = Matrix(a.length() + b.length(), a.channels());
    out.mask = Matrix(a.length() + b.length(), a.channels());
    for (int t = 0; t < a.length(); ++t)
        for (int c = 0; c < a.channels(); ++c) {
            out.values(t, c) = a.values(t, c);
            out.mask(t, c) = a.mask(t, c);
        }
    for (int t = 0; t < b.length(); ++t)
        for (int c = 0; c < b.channels(); ++c) {
            out.values(a.length() + t, c) = b.values(t, c);
            out.mask(a.length() + t, c) = b.mask(t, c);
        }
    return out;
}

}  // namespace

ScoreOutput run_scoring(const Checkpoint& ckpt, const SeriesDataset& train_raw, const SeriesDataset& test_raw,
                        const ScoreOptions& opts) {
    const ModelConfig& mc = ckpt.model.config();
    if (train_raw.channels() != mc.n_channels) throw std::invalid_argument("score: channel count mismatch with model");
    if (train_raw.length() < mc.window)
        throw std::invalid_argument("score: training series shorter than the model window");

    SeriesDataset concat = concat_series(train_raw, test_raw);
    SeriesDataset norm = normalize(concat, ckpt.normalizer);
    std::vector<Window> windows = make_windows(norm, mc.window);

    Matrix forecasts = forecast_windows(ckpt.model, windows, opts.parallel);

    // Window w targets timestamp start + window + w.
    const long long test_start = test_raw.start_index;
    const int n_train_rows = static_cast<int>(test_start - (concat.start_index + mc.window));
    const int n_test_rows = test_raw.length();
    if (n_train_rows < 1) throw std::invalid_argument("score: no training-period forecasts to seed the scorer");

    Matrix train_fc(n_train_rows, mc.n_channels);
    for (int t = 0; t < n_train_rows; ++t)
        for (int c = 0; c < mc.n_channels; ++c) train_fc(t, c) = forecasts(t, c);
    Matrix test_fc(n_test_rows, mc.n_channels);
    for (int t = 0; t < n_test_rows; ++t)
        for (int c = 0; c < mc.n_channels; ++c) test_fc(t, c) = forecasts(n_train_rows + t, c);

    ScoreOutput out;
    out.timestamps.reserve(n_test_rows);
    for (int t = 0; t < n_test_rows; ++t) out.timestamps.push_back(test_start + t);

    if (opts.scorer == ScorerKind::kGaussian) {
        const int cap = std::max(1, std::min(ckpt.scorer_window, concat.length()));
        GaussianScorer state(mc.n_channels, cap, ckpt.sigma_floor);
        state.seed_history(train_fc);
        ScorerReport report = score_stream(test_fc, state);
        out.scores = std::move(report.scores);
        out.alphas = std::move(report.alphas);
        return out;
    }

    // Ablation scorers are fitted on the validation slice of the training
    // split (the same slice early stopping watched).
    const int train_len = train_raw.length();
    const int val_len = std::max(1, static_cast<int>(train_len * ckpt.val_ratio));
    const long long val_start = train_raw.start_index + (train_len - val_len);
    const int first_val_row = static_cast<int>(val_start - (concat.start_index + mc.window));
    if (first_val_row < 0 || first_val_row >= n_train_rows)
        throw std::invalid_argument("score: validation slice has no forecasts");

    if (opts.scorer == ScorerKind::kDistKmeans) {
        Matrix val_fc(n_train_rows - first_val_row, mc.n_channels);
        for (int t = 0; t < val_fc.rows; ++t)
            for (int c = 0; c < mc.n_channels; ++c) val_fc(t, c) = train_fc(first_val_row + t, c);
        MedianIqr stats = fit_median_iqr(val_fc);
        Matrix val_norm(val_fc.rows, val_fc.cols);
        for (int t = 0; t < val_fc.rows; ++t)
            for (int c = 0; c < val_fc.cols; ++c) val_norm(t, c) = median_iqr_apply(stats, c, val_fc(t, c));
        KmeansModel km = dist_kmeans_fit(val_norm, opts.kmeans_seed);
        std::vector<double> point(mc.n_channels);
        for (int t = 0; t < n_test_rows; ++t) {
            for (int c = 0; c < mc.n_channels; ++c) point[c] = median_iqr_apply(stats, c, test_fc(t, c));
            out.scores.push_back(dist_kmeans_score(km, point));
        }
        return out;
    }

    // ReconPCA: forecast deviations on observed entries.
    auto deviation_rows = [&](int first_row, int count, Matrix& dev, Matrix& dev_mask) {
        dev = Matrix(count, mc.n_channels);
        dev_mask = Matrix(count, mc.n_channels);
        for (int t = 0; t < count; ++t) {
            const int row = first_row + t;                  // forecast row
            const int data_row = mc.window + row;           // row in concat
            for (int c = 0; c < mc.n_channels; ++c) {
                dev_mask(t, c) = norm.mask(data_row, c);
                dev(t, c) = forecasts(row, c) - norm.values(data_row, c);
            }
        }
    };
    Matrix val_dev, val_dev_mask;
    deviation_rows(first_val_row, n_train_rows - first_val_row, val_dev, val_dev_mask);
    MedianIqr stats = fit_median_iqr(val_dev, &val_dev_mask);

    Matrix val_norm(val_dev.rows, val_dev.cols);
    for (int t = 0; t < val_dev.rows; ++t)
        for (int c = 0; c < val_dev.cols; ++c)
            val_norm(t, c) = val_dev_mask(t, c) != 0.0 ? median_iqr_apply(stats, c, val_dev(t, c)) : 0.0;

    int q = opts.ppca_components > 0 ? opts.ppca_components : std::min(mc.n_channels - 1, 8);
    q = std::max(1, q);
    PpcaModel ppca = recon_pca_fit(val_norm, q);

    Matrix test_dev, test_dev_mask;
    deviation_rows(n_train_rows, n_test_rows, test_dev, test_dev_mask);
    std::vector<double> row(mc.n_channels), mrow(mc.n_channels);
    for (int t = 0; t < n_test_rows; ++t) {
        for (int c = 0; c < mc.n_channels; ++c) {
            mrow[c] = test_dev_mask(t, c);
            row[c] = mrow[c] != 0.0 ? median_iqr_apply(stats, c, test_dev(t, c)) : 0.0;
        }
        out.scores.push_back(recon_pca_score(ppca, row, mrow));
    }
    return out;
}

void write_scores_csv(const ScoreOutput& out, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "timestamp,score\n";
    char buf[64];
    for (size_t i = 0; i < out.scores.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%lld,%.9g\n", out.timestamps[i], out.scores[i]);
        f << buf;
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

void write_alphas_csv(const ScoreOutput& out, const std::vector<std::string>& channel_names, const std::string& path) {
    if (out.alphas.rows != static_cast<int>(out.scores.size()))
        throw std::invalid_argument("write_alphas_csv: no per-channel likelihoods recorded");
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "timestamp";
    for (const auto& name : channel_names) f << ',' << name;
    f << '\n';
    char buf[40];
    for (int t = 0; t < out.alphas.rows; ++t) {
        f << out.timestamps[t];
        for (int c = 0; c < out.alphas.cols; ++c) {
            std::snprintf(buf, sizeof(buf), ",%.9g", out.alphas(t, c));
            f << buf;
        }
        f << '\n';
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

ScoresSeries load_scores_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    ScoresSeries out;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": expected timestamp,score");
        errno = 0;
        char* end = nullptr;
        long long ts = std::strtoll(line.c_str(), &end, 10);
        if (end != line.c_str() + comma || errno == ERANGE)
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": bad timestamp");
        double score = std::strtod(line.c_str() + comma + 1, &end);
        if (end != line.c_str() + line.size() || errno == ERANGE)
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": bad score");
        out.timestamps.push_back(ts);
        out.scores.push_back(score);
    }
    if (out.scores.empty()) throw std::runtime_error(path + ": no data rows");
    return out;
}

}  // namespace gstpro
