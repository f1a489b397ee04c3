#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gstpro/model.hpp"
#include "gstpro/series.hpp"

namespace gstpro {

struct TrainConfig {
    int epochs = 100;
    int patience = 15;
    int batch_size = 64;
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double weight_decay = 0.001;
    double clip_norm = 5.0;
    double val_ratio = 0.1;
    uint64_t seed = 1;
    bool parallel = true;  // OpenMP over window chunks; results are bitwise equal either way

    void validate() const;
};

/// Sum_i m_i |y_i - yhat_i| / N. The division is by the channel count, not by
/// the observed count.
double masked_l1(std::span<const double> y, std::span<const double> yhat, std::span<const double> mask);

/// Scale all grads by min(1, max_norm / global_norm); returns the factor.
double clip_global_norm(std::vector<Matrix>& grads, double max_norm);

struct AdamState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    long long step = 0;

    static AdamState init(const ParamSet& params);
};

/// Adam with L2 weight decay folded into the gradient and bias correction.
void adam_step(AdamState& state, ParamSet& params, const std::vector<Matrix>& grads, const TrainConfig& cfg);

/// Improvement tracking for early stopping: stop once the number of epochs
/// since the last improvement exceeds `patience`.
struct EarlyStopper {
    int patience = 0;
    double best = 0.0;
    int epochs_since_best = 0;
    bool seen_any = false;

    explicit EarlyStopper(int patience_epochs) : patience(patience_epochs) {}

    /// Returns true when this value improves on the best so far.
    bool observe(double val_loss) {
        if (!seen_any || val_loss < best) {
            best = val_loss;
            seen_any = true;
            epochs_since_best = 0;
            return true;
        }
        ++epochs_since_best;
        return false;
    }
    bool should_stop() const { return epochs_since_best > patience; }
};

// Batch kernels. Windows are processed in fixed-size chunks whose partial
// gradients are reduced in chunk order, so the parallel result is bitwise
// identical to the serial reference for any thread count. Both return the
// summed (not averaged) batch loss and add gradient sums into `grad_out`.
double accumulate_batch_gradients_serial(const DgNcdeModel& model, std::span<const Window* const> batch,
                                         std::vector<Matrix>& grad_out);
double accumulate_batch_gradients_parallel(const DgNcdeModel& model, std::span<const Window* const> batch,
                                           std::vector<Matrix>& grad_out);

/// Forecast every window; row w of the result is the forecast for batch[w].
Matrix forecast_windows_serial(const DgNcdeModel& model, std::span<const Window> windows);
Matrix forecast_windows_parallel(const DgNcdeModel& model, std::span<const Window> windows);
Matrix forecast_windows(const DgNcdeModel& model, std::span<const Window> windows, bool parallel);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    bool stopped = false;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    double best_val_loss = 0.0;
};

/// Unsupervised training on an already-normalized dataset. The last
/// val_ratio fraction of timestamps is held out for validation (temporal
/// split); the best-validation parameters are restored before returning.
TrainResult train(DgNcdeModel& model, const SeriesDataset& normalized_train, const TrainConfig& cfg);

void write_history_csv(const TrainResult& result, const std::string& path);

}  // namespace gstpro
