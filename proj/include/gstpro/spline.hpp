#pragma once

#include <vector>

#include "gstpro/series.hpp"

namespace gstpro {

/// Natural cubic spline through one channel's observed knots. Piecewise
/// s(t) = a + b*dt + c*dt^2 + d*dt^3 with dt = t - knot_times[k]. With fewer
/// than two knots the spline degenerates to a constant at fallback_value.
struct ChannelSpline {
    std::vector<double> knot_times;
    std::vector<double> knot_values;
    std::vector<double> coef_a, coef_b, coef_c, coef_d;  // one entry per interval
    double fallback_value = 0.0;

    bool degenerate() const { return knot_times.size() < 2; }

    double eval(double t) const;              // clamped to the knot span
    double derivative(double t) const;        // 0 outside the knot span
    double second_derivative(double t) const; // 0 outside the knot span
};

/// Twice continuously differentiable interpolant of the knots; natural
/// boundary conditions (zero curvature at both end knots).
ChannelSpline fit_natural_cubic(const std::vector<double>& times, const std::vector<double>& values);

/// Per-channel control path over one window, on relative time [0, w_s - 1].
/// Optionally exposes normalized elapsed time as one extra coordinate.
struct WindowPath {
    std::vector<ChannelSpline> splines;
    double span_end = 0.0;  // w_s - 1
    bool include_time_channel = true;

    int dims() const { return static_cast<int>(splines.size()) + (include_time_channel ? 1 : 0); }

    std::vector<double> eval(double t) const;
    std::vector<double> eval_derivative(double t) const;
};

/// Knots are the observed (relative time, value) pairs of each channel.
/// One observation gives a constant path at that value; none gives a constant
/// path at 0 with zero derivative, injecting no control signal.
WindowPath build_window_path(const Window& window, bool include_time_channel = true);

}  // namespace gstpro
