// Benchmark of the OpenMP batch kernels against the serial reference, plus a
// bitwise equality check between the two paths.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "gstpro/model.hpp"
#include "gstpro/series.hpp"
#include "gstpro/trainer.hpp"

using namespace gstpro;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<Matrix> zero_grads(const ParamSet& p) {
    std::vector<Matrix> out;
    for (const auto& m : p.mats) out.emplace_back(m.rows, m.cols);
    return out;
}

bool bitwise_equal(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
    for (size_t i = 0; i < a.size(); ++i)
        if (std::memcmp(a[i].a.data(), b[i].a.data(), a[i].size() * sizeof(double)) != 0) return false;
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    int batch = 64;
    int reps = 3;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--batch") == 0 && i + 1 < argc) batch = std::atoi(argv[++i]);
        if (std::strcmp(argv[i], "--reps") == 0 && i + 1 < argc) reps = std::atoi(argv[++i]);
    }

    SynthResult synth = synth_generate(5, 600, 100, 0, 7);
    Normalizer norm = fit_normalizer(synth.train);
    SeriesDataset data = normalize(synth.train, norm);
    std::vector<Window> windows = make_windows(data, 5);

    ModelConfig cfg;
    cfg.n_channels = data.channels();
    cfg.hidden_dim_h = 16;
    cfg.hidden_dim_z = 16;
    cfg.fc_hidden = 64;
    cfg.solver = SolverKind::kEuler;
    cfg.steps_per_unit = 1;
    DgNcdeModel model = DgNcdeModel::init(cfg, 1);

    std::vector<const Window*> batch_ptrs;
    for (int i = 0; i < batch && i < static_cast<int>(windows.size()); ++i) batch_ptrs.push_back(&windows[i]);

#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP not enabled; both paths run serially\n");
#endif
    std::printf("batch of %zu windows, %d repetitions\n\n", batch_ptrs.size(), reps);

    std::vector<Matrix> g_serial = zero_grads(model.params());
    std::vector<Matrix> g_parallel = zero_grads(model.params());

    double serial_s = 0.0, parallel_s = 0.0;
    for (int r = 0; r < reps; ++r) {
        for (auto& g : g_serial) g.fill(0.0);
        auto t0 = Clock::now();
        accumulate_batch_gradients_serial(model, batch_ptrs, g_serial);
        serial_s += seconds_since(t0);

        for (auto& g : g_parallel) g.fill(0.0);
        t0 = Clock::now();
        accumulate_batch_gradients_parallel(model, batch_ptrs, g_parallel);
        parallel_s += seconds_since(t0);
    }
    std::printf("batch gradients   serial: %8.1f ms   parallel: %8.1f ms   speedup: %.2fx   bitwise: %s\n",
                1e3 * serial_s / reps, 1e3 * parallel_s / reps, serial_s / parallel_s,
                bitwise_equal(g_serial, g_parallel) ? "equal" : "DIFFERENT");

    auto t0 = Clock::now();
    Matrix f_serial = forecast_windows_serial(model, windows);
    const double fs = seconds_since(t0);
    t0 = Clock::now();
    Matrix f_parallel = forecast_windows_parallel(model, windows);
    const double fp = seconds_since(t0);
    const bool f_eq = std::memcmp(f_serial.a.data(), f_parallel.a.data(), f_serial.size() * sizeof(double)) == 0;
    std::printf("forecast %4zu win  serial: %8.1f ms   parallel: %8.1f ms   speedup: %.2fx   bitwise: %s\n",
                windows.size(), 1e3 * fs, 1e3 * fp, fs / fp, f_eq ? "equal" : "DIFFERENT");
    return 0;
}
