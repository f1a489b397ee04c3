#include "gstpro/trainer.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "gstpro/autodiff.hpp"
#include "gstpro/rng.hpp"

namespace gstpro {

void TrainConfig::validate() const {
    if (epochs < 1 || patience < 0 || batch_size < 1) throw std::invalid_argument("TrainConfig: bad loop sizes");
    if (lr <= 0 || beta1 <= 0 || beta1 >= 1 || beta2 <= 0 || beta2 >= 1)
        throw std::invalid_argument("TrainConfig: bad optimizer constants");
    if (weight_decay < 0 || clip_norm <= 0) throw std::invalid_argument("TrainConfig: bad regularization");
    if (val_ratio <= 0 || val_ratio > 0.5) throw std::invalid_argument("TrainConfig: val_ratio must be in (0, 0.5]");
}

double masked_l1(std::span<const double> y, std::span<const double> yhat, std::span<const double> mask) {
    if (y.size() != yhat.size() || y.size() != mask.size()) throw std::invalid_argument("masked_l1: length mismatch");
    double s = 0.0;
    for (size_t i = 0; i < y.size(); ++i) s += mask[i] * std::fabs(y[i] - yhat[i]);
    return s / static_cast<double>(y.size());
}

double clip_global_norm(std::vector<Matrix>& grads, double max_norm) {
    if (max_norm <= 0) throw std::invalid_argument("clip_global_norm: max_norm must be positive");
    double sq = 0.0;
    for (const auto& g : grads) sq += squared_sum(g);
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return 1.0;
    const double factor = max_norm / norm;
    for (auto& g : grads) scale_inplace(g, factor);
    return factor;
}

AdamState AdamState::init(const ParamSet& params) {
    AdamState s;
    s.m.reserve(params.count());
    s.v.reserve(params.count());
    for (const auto& p : params.mats) {
        s.m.emplace_back(p.rows, p.cols);
        s.v.emplace_back(p.rows, p.cols);
    }
    return s;
}

void adam_step(AdamState& state, ParamSet& params, const std::vector<Matrix>& grads, const TrainConfig& cfg) {
    if (grads.size() != params.count()) throw std::invalid_argument("adam_step: grad count mismatch");
    ++state.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (size_t p = 0; p < params.count(); ++p) {
        Matrix& w = params.mats[p];
        Matrix& m = state.m[p];
        Matrix& v = state.v[p];
        const Matrix& g = grads[p];
        for (size_t i = 0; i < w.a.size(); ++i) {
            const double gi = g.a[i] + cfg.weight_decay * w.a[i];
            m.a[i] = cfg.beta1 * m.a[i] + (1.0 - cfg.beta1) * gi;
            v.a[i] = cfg.beta2 * v.a[i] + (1.0 - cfg.beta2) * gi * gi;
            const double mhat = m.a[i] / bc1;
            const double vhat = v.a[i] / bc2;
            w.a[i] -= cfg.lr * mhat / (std::sqrt(vhat) + 1e-8);
        }
    }
}

namespace {

constexpr int kChunkWindows = 8;

// Forward+backward over one chunk, accumulating window gradients in order.
double chunk_gradients(const DgNcdeModel& model, const Window* const* windows, int count,
                       std::vector<Matrix>& grad_out) {
    double loss_sum = 0.0;
    for (int w = 0; w < count; ++w) {
        Tape tape;
        DgNcdeModel::TapeBindings b = model.bind(tape, true);
        ValueId loss = model.loss_on_tape(tape, b, *windows[w]);
        tape.backward(loss);
        loss_sum += tape.val(loss)(0, 0);
        for (size_t p = 0; p < grad_out.size(); ++p) axpy(grad_out[p], 1.0, tape.grad(b.params[p]));
    }
    return loss_sum;
}

std::vector<Matrix> zero_like(const ParamSet& params) {
    std::vector<Matrix> out;
    out.reserve(params.count());
    for (const auto& p : params.mats) out.emplace_back(p.rows, p.cols);
    return out;
}

}  // namespace

double accumulate_batch_gradients_serial(const DgNcdeModel& model, std::span<const Window* const> batch,
                                         std::vector<Matrix>& grad_out) {
    const int n = static_cast<int>(batch.size());
    const int chunks = (n + kChunkWindows - 1) / kChunkWindows;
    double loss_sum = 0.0;
    std::vector<Matrix> partial = zero_like(model.params());
    for (int c = 0; c < chunks; ++c) {
        for (auto& m : partial) m.fill(0.0);
        const int begin = c * kChunkWindows;
        const int count = std::min(kChunkWindows, n - begin);
        loss_sum += chunk_gradients(model, batch.data() + begin, count, partial);
        for (size_t p = 0; p < grad_out.size(); ++p) axpy(grad_out[p], 1.0, partial[p]);
    }
    return loss_sum;
}

double accumulate_batch_gradients_parallel(const DgNcdeModel& model, std::span<const Window* const> batch,
                                           std::vector<Matrix>& grad_out) {
    const int n = static_cast<int>(batch.size());
    const int chunks = (n + kChunkWindows - 1) / kChunkWindows;
    std::vector<std::vector<Matrix>> partials(chunks);
    std::vector<double> losses(chunks, 0.0);

#pragma omp parallel for schedule(dynamic)
    for (int c = 0; c < chunks; ++c) {
        partials[c] = zero_like(model.params());
        const int begin = c * kChunkWindows;
        const int count = std::min(kChunkWindows, n - begin);
        losses[c] = chunk_gradients(model, batch.data() + begin, count, partials[c]);
    }

    double loss_sum = 0.0;
    for (int c = 0; c < chunks; ++c) {
        loss_sum += losses[c];
        for (size_t p = 0; p < grad_out.size(); ++p) axpy(grad_out[p], 1.0, partials[c][p]);
    }
    return loss_sum;
}

Matrix forecast_windows_serial(const DgNcdeModel& model, std::span<const Window> windows) {
    Matrix out(static_cast<int>(windows.size()), model.config().n_channels);
    for (size_t w = 0; w < windows.size(); ++w) {
        std::vector<double> f = model.forecast(windows[w]);
        std::copy(f.begin(), f.end(), out.row(static_cast<int>(w)));
    }
    return out;
}

Matrix forecast_windows_parallel(const DgNcdeModel& model, std::span<const Window> windows) {
    Matrix out(static_cast<int>(windows.size()), model.config().n_channels);
    const int n = static_cast<int>(windows.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (int w = 0; w < n; ++w) {
        std::vector<double> f = model.forecast(windows[w]);
        std::copy(f.begin(), f.end(), out.row(w));
    }
    return out;
}

Matrix forecast_windows(const DgNcdeModel& model, std::span<const Window> windows, bool parallel) {
    return parallel ? forecast_windows_parallel(model, windows) : forecast_windows_serial(model, windows);
}

TrainResult train(DgNcdeModel& model, const SeriesDataset& normalized_train, const TrainConfig& cfg) {
    cfg.validate();
    const ModelConfig& mc = model.config();
    if (normalized_train.channels() != mc.n_channels) throw std::invalid_argument("train: channel count mismatch");

    std::vector<Window> windows = make_windows(normalized_train, mc.window);
    const int t_len = normalized_train.length();
    const int val_len = std::max(1, static_cast<int>(t_len * cfg.val_ratio));
    const long long val_start = normalized_train.start_index + (t_len - val_len);

    std::vector<const Window*> train_windows;
    std::vector<Window> val_windows;
    for (const Window& w : windows) {
        if (w.target_index >= val_start) {
            val_windows.push_back(w);
            continue;
        }
        double observed = 0.0;
        for (double m : w.target_mask) observed += m;
        if (observed > 0.0) train_windows.push_back(&w);  // fully-missing targets carry no loss
    }
    if (train_windows.empty()) throw std::invalid_argument("train: no usable training windows");

    AdamState adam = AdamState::init(model.params());
    std::vector<Matrix> grads = zero_like(model.params());

    SplitMix64 shuffle_rng(cfg.seed);
    EarlyStopper stopper(cfg.patience);
    TrainResult result;
    std::vector<Matrix> best_params = model.params().mats;
    result.best_epoch = 0;

    auto validation_loss = [&]() {
        if (val_windows.empty()) return 0.0;
        Matrix f = forecast_windows(model, val_windows, cfg.parallel);
        double s = 0.0;
        for (size_t w = 0; w < val_windows.size(); ++w) {
            std::span<const double> row(f.row(static_cast<int>(w)), static_cast<size_t>(f.cols));
            s += masked_l1(val_windows[w].target, row, val_windows[w].target_mask);
        }
        return s / static_cast<double>(val_windows.size());
    };

    std::vector<size_t> order(train_windows.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss_sum = 0.0;
        for (size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const size_t count = std::min<size_t>(cfg.batch_size, order.size() - begin);
            std::vector<const Window*> batch(count);
            for (size_t i = 0; i < count; ++i) batch[i] = train_windows[order[begin + i]];

            for (auto& g : grads) g.fill(0.0);
            double loss_sum = cfg.parallel ? accumulate_batch_gradients_parallel(model, batch, grads)
                                           : accumulate_batch_gradients_serial(model, batch, grads);
            epoch_loss_sum += loss_sum;
            for (auto& g : grads) scale_inplace(g, 1.0 / static_cast<double>(count));
            clip_global_norm(grads, cfg.clip_norm);
            adam_step(adam, model.params(), grads, cfg);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = epoch_loss_sum / static_cast<double>(order.size());
        rec.val_loss = validation_loss();
        if (stopper.observe(rec.val_loss)) {
            best_params = model.params().mats;
            result.best_epoch = epoch;
        }
        rec.stopped = stopper.should_stop();
        result.history.push_back(rec);
        if (rec.stopped) break;
    }

    model.params().mats = best_params;
    result.best_val_loss = stopper.best;
    return result;
}

void write_history_csv(const TrainResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "epoch,train_loss,val_loss,stopped\n";
    char buf[64];
    for (const auto& r : result.history) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%d\n", r.epoch, r.train_loss, r.val_loss, r.stopped ? 1 : 0);
        out << buf;
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace gstpro
