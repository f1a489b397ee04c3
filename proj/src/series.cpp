#include "gstpro/series.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gstpro/rng.hpp"

namespace gstpro {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& path, size_t line_no) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || s.empty() || errno == ERANGE)
        throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": bad number '" + s + "'");
    return v;
}

long long parse_timestamp(const std::string& s, const std::string& path, size_t line_no) {
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size() || s.empty() || errno == ERANGE)
        throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": bad timestamp '" + s + "'");
    return v;
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

SeriesDataset load_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    auto header = split_fields(line);
    if (header.size() < 2) throw std::runtime_error(path + ": header names zero channels");
    if (header[0] != "timestamp")
        throw std::runtime_error(path + ": header must start with 'timestamp', got '" + header[0] + "'");

    SeriesDataset d;
    d.channel_names.assign(header.begin() + 1, header.end());
    const int n = static_cast<int>(d.channel_names.size());

    std::vector<double> values;
    std::vector<double> mask;
    long long expected_ts = 0;
    bool first = true;
    size_t line_no = 1;
    int t_len = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_fields(line);
        if (static_cast<int>(fields.size()) != n + 1)
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(n + 1) + " fields, got " + std::to_string(fields.size()));
        long long ts = parse_timestamp(fields[0], path, line_no);
        if (first) {
            d.start_index = ts;
            expected_ts = ts;
            first = false;
        }
        if (ts != expected_ts)
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": non-consecutive timestamp " +
                                     std::to_string(ts) + " (expected " + std::to_string(expected_ts) + ")");
        ++expected_ts;
        for (int c = 0; c < n; ++c) {
            const std::string& f = fields[c + 1];
            if (f.empty()) {
                values.push_back(0.0);
                mask.push_back(0.0);
            } else {
                values.push_back(parse_double(f, path, line_no));
                mask.push_back(1.0);
            }
        }
        ++t_len;
    }
    if (t_len == 0) throw std::runtime_error(path + ": no data rows");

    d.values = Matrix(t_len, n);
    d.mask = Matrix(t_len, n);
    d.values.a = std::move(values);
    d.mask.a = std::move(mask);
    return d;
}

void write_series_csv(const SeriesDataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "timestamp";
    for (const auto& name : d.channel_names) out << ',' << name;
    out << '\n';
    for (int t = 0; t < d.length(); ++t) {
        out << (d.start_index + t);
        for (int c = 0; c < d.channels(); ++c) {
            out << ',';
            if (d.mask(t, c) != 0.0) out << format_value(d.values(t, c));
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_labels_csv(const SeriesDataset& d, const std::string& path) {
    if (!d.has_labels()) throw std::invalid_argument("write_labels_csv: dataset has no labels");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "timestamp,label\n";
    for (int t = 0; t < d.length(); ++t) out << (d.start_index + t) << ',' << d.labels[t] << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

LabelSeries load_labels_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    auto header = split_fields(line);
    if (header.size() != 2 || header[0] != "timestamp" || header[1] != "label")
        throw std::runtime_error(path + ": expected header 'timestamp,label'");

    LabelSeries out;
    long long expected_ts = 0;
    bool first = true;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() != 2)
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": expected 2 fields");
        long long ts = parse_timestamp(fields[0], path, line_no);
        if (first) {
            out.start_index = ts;
            expected_ts = ts;
            first = false;
        }
        if (ts != expected_ts)
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": non-consecutive timestamp");
        ++expected_ts;
        long long v = parse_timestamp(fields[1], path, line_no);
        if (v != 0 && v != 1)
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": label must be 0 or 1");
        out.labels.push_back(static_cast<int>(v));
    }
    if (out.labels.empty()) throw std::runtime_error(path + ": no data rows");
    return out;
}

void write_mask_csv(const Matrix& mask, long long start_index, const std::vector<std::string>& channel_names,
                    const std::string& path) {
    if (static_cast<int>(channel_names.size()) != mask.cols)
        throw std::invalid_argument("write_mask_csv: channel name count mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "timestamp";
    for (const auto& name : channel_names) out << ',' << name;
    out << '\n';
    for (int t = 0; t < mask.rows; ++t) {
        out << (start_index + t);
        for (int c = 0; c < mask.cols; ++c) out << ',' << (mask(t, c) != 0.0 ? 1 : 0);
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

Matrix generate_mask(int t_len, int n_channels, double rate, uint64_t seed) {
    if (rate < 0.0 || rate > 1.0) throw std::invalid_argument("generate_mask: rate must be in [0,1]");
    if (t_len < 1 || n_channels < 1) throw std::invalid_argument("generate_mask: T and N must be >= 1");
    Matrix m(t_len, n_channels);
    for (size_t k = 0; k < m.size(); ++k) {
        double u = to_unit_double(splitmix64_at(seed, k));
        m.a[k] = (u < rate) ? 0.0 : 1.0;
    }
    return m;
}

SeriesDataset apply_mask(const SeriesDataset& d, const Matrix& mask) {
    if (!d.mask.same_shape(mask)) throw std::invalid_argument("apply_mask: shape mismatch");
    SeriesDataset out = d;
    for (size_t k = 0; k < mask.size(); ++k)
        out.mask.a[k] = (d.mask.a[k] != 0.0 && mask.a[k] != 0.0) ? 1.0 : 0.0;
    return out;
}

Normalizer fit_normalizer(const SeriesDataset& d) {
    Normalizer n;
    n.min_v.assign(d.channels(), 0.0);
    n.max_v.assign(d.channels(), 1.0);
    for (int c = 0; c < d.channels(); ++c) {
        bool seen = false;
        double lo = 0.0, hi = 0.0;
        for (int t = 0; t < d.length(); ++t) {
            if (d.mask(t, c) == 0.0) continue;
            double v = d.values(t, c);
            if (!seen) {
                lo = hi = v;
                seen = true;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        if (seen) {
            n.min_v[c] = lo;
            n.max_v[c] = hi;
        }
    }
    return n;
}

SeriesDataset normalize(const SeriesDataset& d, const Normalizer& n) {
    if (static_cast<int>(n.min_v.size()) != d.channels())
        throw std::invalid_argument("normalize: channel count mismatch");
    SeriesDataset out = d;
    for (int c = 0; c < d.channels(); ++c) {
        double span = n.max_v[c] - n.min_v[c];
        for (int t = 0; t < d.length(); ++t) {
            double v = span == 0.0 ? 0.0 : (d.values(t, c) - n.min_v[c]) / span;
            out.values(t, c) = std::min(2.0, std::max(-1.0, v));
        }
    }
    return out;
}

SeriesDataset denormalize(const SeriesDataset& d, const Normalizer& n) {
    if (static_cast<int>(n.min_v.size()) != d.channels())
        throw std::invalid_argument("denormalize: channel count mismatch");
    SeriesDataset out = d;
    for (int c = 0; c < d.channels(); ++c) {
        double span = n.max_v[c] - n.min_v[c];
        for (int t = 0; t < d.length(); ++t) out.values(t, c) = d.values(t, c) * span + n.min_v[c];
    }
    return out;
}

std::vector<Window> make_windows(const SeriesDataset& d, int window_size) {
    if (window_size < 1) throw std::invalid_argument("make_windows: window size must be >= 1");
    std::vector<Window> out;
    if (d.length() <= window_size) return out;
    out.reserve(d.length() - window_size);
    for (int ti = window_size; ti < d.length(); ++ti) {
        Window w;
        w.values = Matrix(window_size, d.channels());
        w.mask = Matrix(window_size, d.channels());
        for (int r = 0; r < window_size; ++r)
            for (int c = 0; c < d.channels(); ++c) {
                w.values(r, c) = d.values(ti - window_size + r, c);
                w.mask(r, c) = d.mask(ti - window_size + r, c);
            }
        w.target.resize(d.channels());
        w.target_mask.resize(d.channels());
        for (int c = 0; c < d.channels(); ++c) {
            w.target[c] = d.values(ti, c);
            w.target_mask[c] = d.mask(ti, c);
        }
        w.target_index = d.start_index + ti;
        out.push_back(std::move(w));
    }
    return out;
}

namespace {

struct LatentMix {
    std::vector<double> periods, phases;      // per latent
    std::vector<std::vector<double>> loads;   // per latent, per channel
    std::vector<double> offset;               // per channel

    // A flipped channel negates its whole deterministic part: every pairwise
    // correlation changes sign, and the nonzero offset leaves the marginal
    // trace a forecast-distribution scorer can pick up.
    double clean(int channel, long long t, bool flipped) const {
        double s = offset[channel];
        for (size_t l = 0; l < periods.size(); ++l)
            s += loads[l][channel] * std::sin(6.283185307179586 * t / periods[l] + phases[l]);
        return flipped ? -s : s;
    }

    double amplitude(int channel) const {
        double a = 0.0;
        for (const auto& l : loads) a += std::fabs(l[channel]);
        return a;
    }
};

}  // namespace

SynthResult synth_generate(int n_channels, int t_train, int t_test, int anomaly_segments, uint64_t seed) {
    if (n_channels < 3) throw std::invalid_argument("synth_generate: need at least 3 channels");
    if (t_train < 1 || t_test < 1) throw std::invalid_argument("synth_generate: lengths must be positive");
    if (anomaly_segments < 0) throw std::invalid_argument("synth_generate: negative segment count");
    if (anomaly_segments > 0 && t_test < anomaly_segments * 40)
        throw std::invalid_argument("synth_generate: test split too short for requested segments");

    SplitMix64 rng(seed);
    LatentMix mix;
    // Three fast latents with incommensurate period ranges plus one slow
    // regime-drift latent. The drift makes any short slice of the series
    // (such as a validation split) cover only part of the normal joint
    // states, the way long-running sensor systems behave.
    const double period_lo[4] = {30.0, 70.0, 130.0, 1800.0};
    const double period_hi[4] = {60.0, 110.0, 190.0, 2600.0};
    for (int l = 0; l < 4; ++l) {
        mix.periods.push_back(rng.uniform(period_lo[l], period_hi[l]));
        mix.phases.push_back(rng.uniform(0.0, 6.283185307179586));
        mix.loads.emplace_back();
    }
    for (int c = 0; c < n_channels; ++c) {
        for (int l = 0; l < 4; ++l) {
            double sign = rng.below(2) ? 1.0 : -1.0;
            double lo = l == 3 ? 0.3 : 0.35;
            double hi = l == 3 ? 0.55 : 0.8;
            mix.loads[l].push_back(sign * rng.uniform(lo, hi));
        }
        double sign = rng.below(2) ? 1.0 : -1.0;
        mix.offset.push_back(sign * rng.uniform(0.8, 1.4));
    }
    const double noise_sd = 0.05;

    // Anomalous intervals: ~10% of the test split in total, one interval per
    // equal block so segments never touch. Even segments shift one channel's
    // level beyond its historical range; odd segments flip the sign of a
    // channel pair, turning every correlation that involves the pair around
    // while the two flipped channels keep confirming each other.
    struct Segment {
        int begin, end;  // test-local, half-open
        int channel;
        int channel2;    // second member of a flipped pair
        bool flip;
        double delta;
    };
    std::vector<Segment> segments;
    if (anomaly_segments > 0) {
        int total = static_cast<int>(std::llround(0.10 * t_test));
        for (int k = 0; k < anomaly_segments; ++k) {
            int seg_len = total / anomaly_segments + (k < total % anomaly_segments ? 1 : 0);
            int block_begin = static_cast<int>(static_cast<long long>(t_test) * k / anomaly_segments);
            int block_end = static_cast<int>(static_cast<long long>(t_test) * (k + 1) / anomaly_segments);
            int margin = std::max(2, (block_end - block_begin) / 10);
            int lo = block_begin + margin;
            int hi = block_end - margin - seg_len;
            int begin = hi > lo ? lo + static_cast<int>(rng.below(static_cast<uint64_t>(hi - lo))) : lo;
            Segment s;
            s.begin = begin;
            s.end = std::min(begin + seg_len, t_test);
            s.channel = static_cast<int>(rng.below(static_cast<uint64_t>(n_channels)));
            s.channel2 = (s.channel + 1 + static_cast<int>(rng.below(static_cast<uint64_t>(n_channels - 1)))) %
                         n_channels;
            s.flip = (k % 2 == 1);
            double sign = rng.below(2) ? 1.0 : -1.0;
            s.delta = sign * (1.8 + 1.0 * rng.uniform01()) * mix.amplitude(s.channel);
            segments.push_back(s);
        }
    }

    SynthResult out;
    auto build = [&](int len, long long t0, bool test_split) {
        SeriesDataset d;
        d.values = Matrix(len, n_channels);
        d.mask = Matrix(len, n_channels, 1.0);
        d.labels.assign(len, 0);
        d.start_index = t0;
        for (int c = 0; c < n_channels; ++c) d.channel_names.push_back("s" + std::to_string(c + 1));
        for (int t = 0; t < len; ++t) {
            const Segment* active = nullptr;
            if (test_split)
                for (const auto& s : segments)
                    if (t >= s.begin && t < s.end) active = &s;
            if (active) d.labels[t] = 1;
            for (int c = 0; c < n_channels; ++c) {
                bool flipped = active && active->flip && (c == active->channel || c == active->channel2);
                double v = mix.clean(c, t0 + t, flipped) + noise_sd * rng.normal();
                if (active && !active->flip && c == active->channel) v += active->delta;
                d.values(t, c) = v;
            }
        }
        return d;
    };

    out.train = build(t_train, 0, false);
    out.test = build(t_test, t_train, true);
    return out;
}

}  // namespace gstpro
