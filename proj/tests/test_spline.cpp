#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "gstpro/rng.hpp"
#include "gstpro/spline.hpp"

using namespace gstpro;

namespace {

// Independent natural-spline oracle: assemble the full dense linear system on
// the per-interval coefficients (interpolation, C1, C2, natural ends) and
// solve it by Gaussian elimination with partial pivoting.
struct DenseSpline {
    std::vector<double> a, b, c, d;
};

DenseSpline dense_natural_spline(const std::vector<double>& t, const std::vector<double>& y) {
    const int k = static_cast<int>(t.size());
    const int n = k - 1;
    const int dim = 4 * n;
    std::vector<std::vector<double>> m(dim, std::vector<double>(dim + 1, 0.0));
    int row = 0;
    auto coef = [&](int interval, int power) { return 4 * interval + power; };
    for (int i = 0; i < n; ++i) {
        const double h = t[i + 1] - t[i];
        m[row][coef(i, 0)] = 1.0;
        m[row][dim] = y[i];
        ++row;
        for (int p = 0; p < 4; ++p) m[row][coef(i, p)] = std::pow(h, p);
        m[row][dim] = y[i + 1];
        ++row;
    }
    for (int i = 0; i + 1 < n; ++i) {
        const double h = t[i + 1] - t[i];
        m[row][coef(i, 1)] = 1.0;
        m[row][coef(i, 2)] = 2.0 * h;
        m[row][coef(i, 3)] = 3.0 * h * h;
        m[row][coef(i + 1, 1)] = -1.0;
        ++row;
        m[row][coef(i, 2)] = 2.0;
        m[row][coef(i, 3)] = 6.0 * h;
        m[row][coef(i + 1, 2)] = -2.0;
        ++row;
    }
    m[row][coef(0, 2)] = 2.0;
    ++row;
    m[row][coef(n - 1, 2)] = 2.0;
    m[row][coef(n - 1, 3)] = 6.0 * (t[n] - t[n - 1]);
    ++row;
    REQUIRE(row == dim);

    for (int col = 0; col < dim; ++col) {
        int pivot = col;
        for (int r = col + 1; r < dim; ++r)
            if (std::fabs(m[r][col]) > std::fabs(m[pivot][col])) pivot = r;
        std::swap(m[col], m[pivot]);
        REQUIRE(std::fabs(m[col][col]) > 1e-12);
        for (int r = 0; r < dim; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (int cc = col; cc <= dim; ++cc) m[r][cc] -= f * m[col][cc];
        }
    }
    DenseSpline out;
    for (int i = 0; i < n; ++i) {
        out.a.push_back(m[coef(i, 0)][dim] / m[coef(i, 0)][coef(i, 0)]);
        out.b.push_back(m[coef(i, 1)][dim] / m[coef(i, 1)][coef(i, 1)]);
        out.c.push_back(m[coef(i, 2)][dim] / m[coef(i, 2)][coef(i, 2)]);
        out.d.push_back(m[coef(i, 3)][dim] / m[coef(i, 3)][coef(i, 3)]);
    }
    return out;
}

ChannelSpline random_spline(SplitMix64& rng, int min_knots = 2, int max_knots = 12) {
    const int k = min_knots + static_cast<int>(rng.below(max_knots - min_knots + 1));
    std::vector<double> t, y;
    double cur = rng.uniform(-2.0, 2.0);
    for (int i = 0; i < k; ++i) {
        t.push_back(cur);
        y.push_back(rng.uniform(-3.0, 3.0));
        cur += rng.uniform(0.2, 2.0);
    }
    return fit_natural_cubic(t, y);
}

}  // namespace

TEST_CASE("spline interpolates its knots") {
    ChannelSpline s = fit_natural_cubic({0, 1, 2}, {1, 3, 2});
    CHECK(s.eval(1.0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(s.eval(0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.eval(2.0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("collinear knots give back the line") {
    std::vector<double> t{0, 1, 2, 3, 4}, y;
    for (double x : t) y.push_back(2.0 * x);
    ChannelSpline s = fit_natural_cubic(t, y);
    for (double x = 0.0; x <= 4.0; x += 0.13) {
        CHECK(s.eval(x) == doctest::Approx(2.0 * x).epsilon(1e-10));
        CHECK(s.derivative(x) == doctest::Approx(2.0).epsilon(1e-10));
    }
}

TEST_CASE("coefficients match the dense-solver oracle") {
    SplitMix64 rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> t, y;
        double cur = rng.uniform(-1.0, 1.0);
        for (int i = 0; i < 4; ++i) {
            t.push_back(cur);
            y.push_back(rng.uniform(-3.0, 3.0));
            cur += rng.uniform(0.3, 1.5);
        }
        ChannelSpline s = fit_natural_cubic(t, y);
        DenseSpline oracle = dense_natural_spline(t, y);
        for (int i = 0; i < 3; ++i) {
            CHECK(std::fabs(s.coef_a[i] - oracle.a[i]) < 1e-10);
            CHECK(std::fabs(s.coef_b[i] - oracle.b[i]) < 1e-10);
            CHECK(std::fabs(s.coef_c[i] - oracle.c[i]) < 1e-10);
            CHECK(std::fabs(s.coef_d[i] - oracle.d[i]) < 1e-10);
        }
        // value between knots agrees with the oracle polynomial
        const double mid = 0.5 * (t[1] + t[2]);
        const double dt = mid - t[1];
        const double expect = oracle.a[1] + dt * (oracle.b[1] + dt * (oracle.c[1] + dt * oracle.d[1]));
        CHECK(s.eval(mid) == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("spline invariants over random instances") {
    SplitMix64 rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        ChannelSpline s = random_spline(rng, 3, 10);
        const int k = static_cast<int>(s.knot_times.size());
        for (int i = 0; i < k; ++i) CHECK(std::fabs(s.eval(s.knot_times[i]) - s.knot_values[i]) < 1e-10);
        // C2 continuity at interior knots, via both interval polynomials
        for (int i = 1; i + 1 < k; ++i) {
            const double h = s.knot_times[i] - s.knot_times[i - 1];
            const double left_v = s.coef_a[i - 1] + h * (s.coef_b[i - 1] + h * (s.coef_c[i - 1] + h * s.coef_d[i - 1]));
            const double left_d = s.coef_b[i - 1] + h * (2 * s.coef_c[i - 1] + 3 * h * s.coef_d[i - 1]);
            const double left_dd = 2 * s.coef_c[i - 1] + 6 * h * s.coef_d[i - 1];
            CHECK(std::fabs(left_v - s.coef_a[i]) < 1e-9);
            CHECK(std::fabs(left_d - s.coef_b[i]) < 1e-9);
            CHECK(std::fabs(left_dd - 2 * s.coef_c[i]) < 1e-9);
        }
        CHECK(std::fabs(s.second_derivative(s.knot_times.front())) < 1e-9);
        CHECK(std::fabs(s.second_derivative(s.knot_times.back())) < 1e-9);
    }
}

TEST_CASE("derivative matches central finite differences") {
    SplitMix64 rng(99);
    const double h = 1e-6;
    for (int trial = 0; trial < 50; ++trial) {
        ChannelSpline s = random_spline(rng, 3, 9);
        const double lo = s.knot_times.front() + 2 * h;
        const double hi = s.knot_times.back() - 2 * h;
        for (int i = 0; i < 25; ++i) {
            const double t = lo + (hi - lo) * rng.uniform01();
            const double fd = (s.eval(t + h) - s.eval(t - h)) / (2 * h);
            const double an = s.derivative(t);
            CHECK(std::fabs(fd - an) / std::max({std::fabs(fd), std::fabs(an), 1.0}) < 1e-5);
        }
    }
}

TEST_CASE("clamped extension outside the span") {
    ChannelSpline s = fit_natural_cubic({0, 1, 2}, {1, 3, 2});
    CHECK(s.eval(-5.0) == doctest::Approx(1.0));
    CHECK(s.eval(9.0) == doctest::Approx(2.0));
    CHECK(s.derivative(-0.001) == 0.0);
    CHECK(s.derivative(2.001) == 0.0);
}

TEST_CASE("fit rejects non-increasing times") {
    CHECK_THROWS_AS(fit_natural_cubic({0, 1, 1}, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(fit_natural_cubic({0, 2, 1}, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(fit_natural_cubic({0, 1}, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("window path fallbacks and time channel") {
    Window w;
    w.values = Matrix(5, 3);
    w.mask = Matrix(5, 3, 0.0);
    // channel 0: observed everywhere; channel 1: only two endpoints;
    // channel 2: never observed
    for (int r = 0; r < 5; ++r) {
        w.values(r, 0) = r * r;
        w.mask(r, 0) = 1.0;
    }
    w.values(0, 1) = 2.0;
    w.mask(0, 1) = 1.0;
    w.values(4, 1) = 6.0;
    w.mask(4, 1) = 1.0;

    WindowPath path = build_window_path(w, true);
    CHECK(path.dims() == 4);
    CHECK(path.splines[0].knot_times.size() == 5);

    // two knots make a straight line
    CHECK(path.splines[1].eval(2.0) == doctest::Approx(4.0));
    CHECK(path.splines[1].derivative(1.0) == doctest::Approx(1.0));

    // unobserved channel: constant zero with zero derivative
    CHECK(path.splines[2].eval(1.7) == 0.0);
    CHECK(path.splines[2].derivative(1.7) == 0.0);

    auto v = path.eval(2.0);
    REQUIRE(v.size() == 4);
    CHECK(v[3] == doctest::Approx(0.5));  // normalized time
    auto dv = path.eval_derivative(2.0);
    CHECK(dv[3] == doctest::Approx(0.25));

    // single observation: constant path at that value
    Window w1;
    w1.values = Matrix(5, 1);
    w1.mask = Matrix(5, 1, 0.0);
    w1.values(2, 0) = 7.0;
    w1.mask(2, 0) = 1.0;
    WindowPath p1 = build_window_path(w1, false);
    CHECK(p1.eval(0.0)[0] == 7.0);
    CHECK(p1.eval(4.0)[0] == 7.0);
    CHECK(p1.eval_derivative(3.0)[0] == 0.0);
}
