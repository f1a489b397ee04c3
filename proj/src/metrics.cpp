#include "gstpro/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace gstpro {

namespace {

void check_lengths(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("metrics: scores/labels length mismatch");
    if (scores.empty()) throw std::invalid_argument("metrics: empty input");
}

}  // namespace

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    check_lengths(scores, labels);
    long long pos = 0, neg = 0;
    for (int l : labels) (l ? pos : neg)++;
    if (pos == 0 || neg == 0) throw std::invalid_argument("roc_auc: labels are single-class");

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    // Rank sum of positives with average ranks across ties.
    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (size_t k = i; k < j; ++k)
            if (labels[order[k]]) rank_sum_pos += avg_rank;
        i = j;
    }
    const double u = rank_sum_pos - static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) / 2.0;
    return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

double prc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    check_lengths(scores, labels);
    long long pos = 0;
    for (int l : labels) pos += l ? 1 : 0;
    if (pos == 0) throw std::invalid_argument("prc_auc: no positive labels");

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0;
    long long tp = 0, fp = 0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        long long block_tp = 0, block_fp = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            if (labels[order[j]])
                ++block_tp;
            else
                ++block_fp;
            ++j;
        }
        tp += block_tp;
        fp += block_fp;
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        const double delta_recall = static_cast<double>(block_tp) / static_cast<double>(pos);
        ap += delta_recall * precision;
        i = j;
    }
    return ap;
}

EvalReport evaluate(const std::vector<double>& scores, const std::vector<int>& labels) {
    EvalReport r;
    for (int l : labels) (l ? r.positives : r.negatives)++;
    r.roc_auc = roc_auc(scores, labels);
    r.prc_auc = prc_auc(scores, labels);
    return r;
}

void write_report(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "roc_auc=%.9g\nprc_auc=%.9g\npositives=%lld\nnegatives=%lld\n", report.roc_auc,
                  report.prc_auc, report.positives, report.negatives);
    out << buf;
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace gstpro
