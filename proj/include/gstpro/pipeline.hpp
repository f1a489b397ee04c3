#pragma once

#include <string>
#include <vector>

#include "gstpro/checkpoint.hpp"
#include "gstpro/scoring.hpp"
#include "gstpro/series.hpp"

namespace gstpro {

enum class ScorerKind { kGaussian, kReconPca, kDistKmeans };

struct ScoreOptions {
    ScorerKind scorer = ScorerKind::kGaussian;
    bool parallel = true;
    int ppca_components = 0;  // 0 picks min(N-1, 8)
    uint64_t kmeans_seed = 1;
};

struct ScoreOutput {
    std::vector<long long> timestamps;  // one per scored test row
    std::vector<double> scores;
    Matrix alphas;  // per-channel likelihoods; empty unless Gaussian
};

/// Forecast the training tail to seed the scorer, then stream the test
/// split in order. The test split must continue the training timestamps.
/// Labels never enter; the Gaussian scorer reads forecasts only, while the
/// ablation scorers additionally read observations by construction.
ScoreOutput run_scoring(const Checkpoint& ckpt, const SeriesDataset& train_raw, const SeriesDataset& test_raw,
                        const ScoreOptions& opts);

void write_scores_csv(const ScoreOutput& out, const std::string& path);
void write_alphas_csv(const ScoreOutput& out, const std::vector<std::string>& channel_names, const std::string& path);

struct ScoresSeries {
    std::vector<long long> timestamps;
    std::vector<double> scores;
};
ScoresSeries load_scores_csv(const std::string& path);

}  // namespace gstpro
