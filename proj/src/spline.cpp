#include "gstpro/spline.hpp"

#include <algorithm>
#include <stdexcept>

namespace gstpro {

namespace {

// Interval index for a clamped t: largest k with knot_times[k] <= t,
// capped at the last interval.
int interval_of(const std::vector<double>& times, double t) {
    int k = static_cast<int>(std::upper_bound(times.begin(), times.end(), t) - times.begin()) - 1;
    return std::min(std::max(k, 0), static_cast<int>(times.size()) - 2);
}

}  // namespace

double ChannelSpline::eval(double t) const {
    if (degenerate()) return fallback_value;
    t = std::min(std::max(t, knot_times.front()), knot_times.back());
    int k = interval_of(knot_times, t);
    double dt = t - knot_times[k];
    return coef_a[k] + dt * (coef_b[k] + dt * (coef_c[k] + dt * coef_d[k]));
}

double ChannelSpline::derivative(double t) const {
    if (degenerate()) return 0.0;
    if (t < knot_times.front() || t > knot_times.back()) return 0.0;
    int k = interval_of(knot_times, t);
    double dt = t - knot_times[k];
    return coef_b[k] + dt * (2.0 * coef_c[k] + dt * 3.0 * coef_d[k]);
}

double ChannelSpline::second_derivative(double t) const {
    if (degenerate()) return 0.0;
    if (t < knot_times.front() || t > knot_times.back()) return 0.0;
    int k = interval_of(knot_times, t);
    double dt = t - knot_times[k];
    return 2.0 * coef_c[k] + 6.0 * coef_d[k] * dt;
}

ChannelSpline fit_natural_cubic(const std::vector<double>& times, const std::vector<double>& values) {
    if (times.size() != values.size()) throw std::invalid_argument("fit_natural_cubic: length mismatch");
    const int k_count = static_cast<int>(times.size());
    for (int i = 1; i < k_count; ++i)
        if (times[i] <= times[i - 1]) throw std::invalid_argument("fit_natural_cubic: times not strictly increasing");

    ChannelSpline s;
    s.knot_times = times;
    s.knot_values = values;
    if (k_count == 0) return s;
    if (k_count == 1) {
        s.fallback_value = values[0];
        return s;
    }

    const int n = k_count - 1;  // intervals
    std::vector<double> h(n);
    for (int i = 0; i < n; ++i) h[i] = times[i + 1] - times[i];

    // Second derivatives m[0..K-1]: natural boundary pins m0 = m_{K-1} = 0;
    // the interior ones solve the standard tridiagonal system
    //   h[i-1] m[i-1] + 2(h[i-1]+h[i]) m[i] + h[i] m[i+1] = 6 (d[i] - d[i-1])
    // with d[i] the interval slopes. Thomas elimination.
    std::vector<double> m(k_count, 0.0);
    if (k_count > 2) {
        const int interior = k_count - 2;
        std::vector<double> diag(interior), rhs(interior);
        for (int i = 1; i <= interior; ++i) {
            diag[i - 1] = 2.0 * (h[i - 1] + h[i]);
            rhs[i - 1] = 6.0 * ((values[i + 1] - values[i]) / h[i] - (values[i] - values[i - 1]) / h[i - 1]);
        }
        for (int i = 1; i < interior; ++i) {
            double w = h[i] / diag[i - 1];  // sub-diagonal of row i is h[i], super of row i-1 is h[i]
            diag[i] -= w * h[i];
            rhs[i] -= w * rhs[i - 1];
        }
        m[interior] = rhs[interior - 1] / diag[interior - 1];
        for (int i = interior - 1; i >= 1; --i) m[i] = (rhs[i - 1] - h[i] * m[i + 1]) / diag[i - 1];
    }

    s.coef_a.resize(n);
    s.coef_b.resize(n);
    s.coef_c.resize(n);
    s.coef_d.resize(n);
    for (int k = 0; k < n; ++k) {
        s.coef_a[k] = values[k];
        s.coef_b[k] = (values[k + 1] - values[k]) / h[k] - h[k] * (2.0 * m[k] + m[k + 1]) / 6.0;
        s.coef_c[k] = m[k] / 2.0;
        s.coef_d[k] = (m[k + 1] - m[k]) / (6.0 * h[k]);
    }
    return s;
}

std::vector<double> WindowPath::eval(double t) const {
    std::vector<double> out;
    out.reserve(dims());
    for (const auto& s : splines) out.push_back(s.eval(t));
    if (include_time_channel) {
        double denom = std::max(span_end, 1.0);
        out.push_back(std::min(std::max(t, 0.0), span_end) / denom);
    }
    return out;
}

std::vector<double> WindowPath::eval_derivative(double t) const {
    std::vector<double> out;
    out.reserve(dims());
    for (const auto& s : splines) out.push_back(s.derivative(t));
    if (include_time_channel) {
        double denom = std::max(span_end, 1.0);
        out.push_back((t >= 0.0 && t <= span_end) ? 1.0 / denom : 0.0);
    }
    return out;
}

WindowPath build_window_path(const Window& window, bool include_time_channel) {
    WindowPath path;
    path.span_end = static_cast<double>(window.values.rows - 1);
    path.include_time_channel = include_time_channel;
    path.splines.reserve(window.values.cols);
    std::vector<double> times, vals;
    for (int c = 0; c < window.values.cols; ++c) {
        times.clear();
        vals.clear();
        for (int r = 0; r < window.values.rows; ++r)
            if (window.mask(r, c) != 0.0) {
                times.push_back(static_cast<double>(r));
                vals.push_back(window.values(r, c));
            }
        path.splines.push_back(fit_natural_cubic(times, vals));
    }
    return path;
}

}  // namespace gstpro
