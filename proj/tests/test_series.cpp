#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gstpro/series.hpp"

using namespace gstpro;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
    return (fs::temp_directory_path() / ("gstpro_series_" + name)).string();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

}  // namespace

TEST_CASE("load_csv reads fully observed rows") {
    auto p = temp_path("full.csv");
    write_file(p, "timestamp,a,b\n5,1.5,2\n6,3,4\n7,5,6\n");
    SeriesDataset d = load_series_csv(p);
    CHECK(d.length() == 3);
    CHECK(d.channels() == 2);
    CHECK(d.start_index == 5);
    CHECK(d.values(0, 0) == doctest::Approx(1.5));
    for (double m : d.mask.a) CHECK(m == 1.0);
}

TEST_CASE("load_csv marks empty cells missing") {
    auto p = temp_path("gap.csv");
    write_file(p, "timestamp,s1,s2\n0,1,2\n1,,3\n2,4,5\n");
    SeriesDataset d = load_series_csv(p);
    CHECK(d.mask(1, 0) == 0.0);
    CHECK(d.mask(1, 1) == 1.0);
    CHECK(d.values(1, 0) == 0.0);
}

TEST_CASE("load_csv structural and parse errors") {
    auto p = temp_path("bad.csv");
    write_file(p, "timestamp,a\n0,1\n0,2\n");
    CHECK_THROWS_WITH_AS(load_series_csv(p), doctest::Contains("non-consecutive"), std::runtime_error);

    write_file(p, "timestamp,a\n0,1\n1,1,9\n");
    CHECK_THROWS_WITH_AS(load_series_csv(p), doctest::Contains("line 3"), std::runtime_error);

    write_file(p, "timestamp,a\n0,zzz\n");
    CHECK_THROWS_AS(load_series_csv(p), std::runtime_error);

    write_file(p, "timestamp\n0\n");
    CHECK_THROWS_WITH_AS(load_series_csv(p), doctest::Contains("zero channels"), std::runtime_error);
}

TEST_CASE("csv round trip reproduces observed values and mask") {
    SynthResult s = synth_generate(4, 10, 50, 0, 42);
    SeriesDataset d = apply_mask(s.train, generate_mask(10, 4, 0.3, 9));
    auto p = temp_path("roundtrip.csv");
    write_series_csv(d, p);
    SeriesDataset back = load_series_csv(p);
    REQUIRE(back.length() == d.length());
    REQUIRE(back.channels() == d.channels());
    CHECK(back.start_index == d.start_index);
    CHECK(back.channel_names == d.channel_names);
    for (int t = 0; t < d.length(); ++t)
        for (int c = 0; c < d.channels(); ++c) {
            CHECK(back.mask(t, c) == d.mask(t, c));
            if (d.mask(t, c) != 0.0) {
                // printed with 9 significant digits
                CHECK(back.values(t, c) ==
                      doctest::Approx(d.values(t, c)).epsilon(1e-8).scale(std::fabs(d.values(t, c)) + 1e-12));
            }
        }
}

TEST_CASE("generate_mask edge rates") {
    Matrix all_kept = generate_mask(7, 3, 0.0, 1);
    for (double v : all_kept.a) CHECK(v == 1.0);
    Matrix all_dropped = generate_mask(7, 3, 1.0, 1);
    for (double v : all_dropped.a) CHECK(v == 0.0);
    CHECK_THROWS_AS(generate_mask(7, 3, 1.5, 1), std::invalid_argument);
}

TEST_CASE("generate_mask drop fraction concentrates around the rate") {
    Matrix m = generate_mask(100, 100, 0.5, 1234);
    double zeros = 0;
    for (double v : m.a) zeros += (v == 0.0) ? 1.0 : 0.0;
    const double frac = zeros / 10000.0;
    CHECK(frac > 0.48);
    CHECK(frac < 0.52);
}

TEST_CASE("generate_mask is a pure function of its arguments") {
    Matrix a = generate_mask(31, 7, 0.25, 99);
    Matrix b = generate_mask(31, 7, 0.25, 99);
    CHECK(a.a == b.a);
    Matrix c = generate_mask(31, 7, 0.25, 100);
    CHECK(a.a != c.a);
}

TEST_CASE("apply_mask ANDs the masks and keeps values") {
    SynthResult s = synth_generate(3, 3, 10, 0, 5);
    SeriesDataset d = s.train;
    d.mask(0, 2) = 0.0;  // pre-existing hole

    Matrix keep(3, 3, 1.0);
    SeriesDataset same = apply_mask(d, keep);
    CHECK(same.mask.a == d.mask.a);
    CHECK(same.values.a == d.values.a);

    Matrix drop(3, 3, 0.0);
    SeriesDataset gone = apply_mask(d, drop);
    for (double v : gone.mask.a) CHECK(v == 0.0);

    // row-wise AND example: [1,1,0] AND [1,0,1] -> [1,0,0]
    Matrix applied(3, 3, 1.0);
    applied(0, 1) = 0.0;
    SeriesDataset mixed = apply_mask(d, applied);
    CHECK(mixed.mask(0, 0) == 1.0);
    CHECK(mixed.mask(0, 1) == 0.0);
    CHECK(mixed.mask(0, 2) == 0.0);

    Matrix wrong(2, 3, 1.0);
    CHECK_THROWS_AS(apply_mask(d, wrong), std::invalid_argument);
}

TEST_CASE("normalizer endpoints, constants and clipping") {
    SeriesDataset d;
    d.values = Matrix(2, 2);
    d.mask = Matrix(2, 2, 1.0);
    d.channel_names = {"a", "b"};
    d.values(0, 0) = 2;
    d.values(1, 0) = 4;
    d.values(0, 1) = 5;
    d.values(1, 1) = 5;
    Normalizer n = fit_normalizer(d);
    SeriesDataset nd = normalize(d, n);
    CHECK(nd.values(0, 0) == 0.0);
    CHECK(nd.values(1, 0) == 1.0);
    CHECK(nd.values(0, 1) == 0.0);  // constant channel maps to 0
    CHECK(nd.values(1, 1) == 0.0);

    // test-time extrapolation is clipped: channel fit to {0, 4}, value 10 -> 2
    SeriesDataset fit;
    fit.values = Matrix(2, 1);
    fit.mask = Matrix(2, 1, 1.0);
    fit.channel_names = {"a"};
    fit.values(1, 0) = 4;
    Normalizer n2 = fit_normalizer(fit);
    SeriesDataset test;
    test.values = Matrix(1, 1, 10.0);
    test.mask = Matrix(1, 1, 1.0);
    test.channel_names = {"a"};
    CHECK(normalize(test, n2).values(0, 0) == 2.0);
}

TEST_CASE("fit_normalizer ignores masked entries and defaults empty channels") {
    SeriesDataset d;
    d.values = Matrix(3, 2);
    d.mask = Matrix(3, 2, 1.0);
    d.channel_names = {"a", "b"};
    d.values(0, 0) = 1;
    d.values(1, 0) = 100;  // masked out below
    d.values(2, 0) = 3;
    d.mask(1, 0) = 0.0;
    for (int t = 0; t < 3; ++t) d.mask(t, 1) = 0.0;  // channel with no observations
    Normalizer n = fit_normalizer(d);
    CHECK(n.max_v[0] == 3.0);
    CHECK(n.min_v[1] == 0.0);
    CHECK(n.max_v[1] == 1.0);
}

TEST_CASE("normalize then denormalize recovers unclipped values") {
    SynthResult s = synth_generate(4, 60, 10, 0, 3);
    Normalizer n = fit_normalizer(s.train);
    SeriesDataset round = denormalize(normalize(s.train, n), n);
    for (int t = 0; t < s.train.length(); ++t)
        for (int c = 0; c < s.train.channels(); ++c)
            CHECK(std::fabs(round.values(t, c) - s.train.values(t, c)) < 1e-9);
}

TEST_CASE("make_windows counting and coverage") {
    SynthResult s = synth_generate(3, 10, 10, 0, 7);
    auto w5 = make_windows(s.train, 5);
    CHECK(w5.size() == 5);

    SeriesDataset six = s.train;
    six.values = Matrix(6, 3);
    six.mask = Matrix(6, 3, 1.0);
    for (int t = 0; t < 6; ++t)
        for (int c = 0; c < 3; ++c) six.values(t, c) = s.train.values(t, c);
    auto w1 = make_windows(six, 5);
    REQUIRE(w1.size() == 1);
    CHECK(w1[0].target_index == 5);

    // window for target 7 with w_s = 3 covers rows 4..6
    auto w3 = make_windows(s.train, 3);
    const Window& w = w3[4];  // targets start at 3
    CHECK(w.target_index == 7);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) CHECK(w.values(r, c) == s.train.values(4 + r, c));
    for (int c = 0; c < 3; ++c) CHECK(w.target[c] == s.train.values(7, c));

    CHECK(make_windows(six, 6).empty());
    CHECK(make_windows(six, 9).empty());
}

TEST_CASE("windows never leak the target row") {
    SynthResult s = synth_generate(3, 40, 10, 0, 11);
    for (const Window& w : make_windows(s.train, 5)) {
        const int target_row = static_cast<int>(w.target_index - s.train.start_index);
        for (int r = 0; r < w.values.rows; ++r)
            for (int c = 0; c < w.values.cols; ++c)
                CHECK(w.values(r, c) == s.train.values(target_row - w.values.rows + r, c));
    }
}

TEST_CASE("synth_generate labels, determinism and correlation") {
    SynthResult a = synth_generate(5, 200, 2000, 4, 1);
    SynthResult b = synth_generate(5, 200, 2000, 4, 1);
    CHECK(a.train.values.a == b.train.values.a);
    CHECK(a.test.values.a == b.test.values.a);
    CHECK(a.test.labels == b.test.labels);

    for (int l : a.train.labels) CHECK(l == 0);
    double rate = 0;
    for (int l : a.test.labels) rate += l;
    rate /= a.test.length();
    CHECK(rate >= 0.05);
    CHECK(rate <= 0.15);

    SynthResult none = synth_generate(4, 100, 300, 0, 2);
    for (int l : none.test.labels) CHECK(l == 0);

    // channels share latent drivers, so some pair must be strongly correlated
    const SeriesDataset& d = a.train;
    double best = 0;
    for (int i = 0; i < d.channels(); ++i)
        for (int j = i + 1; j < d.channels(); ++j) {
            double mi = 0, mj = 0;
            for (int t = 0; t < d.length(); ++t) {
                mi += d.values(t, i);
                mj += d.values(t, j);
            }
            mi /= d.length();
            mj /= d.length();
            double num = 0, di = 0, dj = 0;
            for (int t = 0; t < d.length(); ++t) {
                num += (d.values(t, i) - mi) * (d.values(t, j) - mj);
                di += (d.values(t, i) - mi) * (d.values(t, i) - mi);
                dj += (d.values(t, j) - mj) * (d.values(t, j) - mj);
            }
            best = std::max(best, std::fabs(num / std::sqrt(di * dj)));
        }
    CHECK(best > 0.5);

    CHECK_THROWS_AS(synth_generate(2, 100, 100, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(synth_generate(5, 0, 100, 0, 1), std::invalid_argument);
}

TEST_CASE("labels and mask csv io") {
    SynthResult s = synth_generate(3, 50, 400, 2, 21);
    auto lp = temp_path("labels.csv");
    write_labels_csv(s.test, lp);
    LabelSeries back = load_labels_csv(lp);
    CHECK(back.start_index == s.test.start_index);
    CHECK(back.labels == s.test.labels);

    auto mp = temp_path("mask.csv");
    Matrix m = generate_mask(s.test.length(), 3, 0.4, 5);
    write_mask_csv(m, s.test.start_index, s.test.channel_names, mp);
    SeriesDataset mread = load_series_csv(mp);
    CHECK(mread.values.a == m.a);
}
