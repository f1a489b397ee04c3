#pragma once

#include <string>
#include <vector>

namespace gstpro {

/// Probability that a random positive outranks a random negative, ties
/// counted half (Mann-Whitney). Throws when labels are single-class.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Average precision with tied scores grouped into one block, so permuting
/// equal-score timestamps cannot change the result. Throws without positives.
double prc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct EvalReport {
    double roc_auc = 0.0;
    double prc_auc = 0.0;
    long long positives = 0;
    long long negatives = 0;
};

EvalReport evaluate(const std::vector<double>& scores, const std::vector<int>& labels);
void write_report(const EvalReport& report, const std::string& path);

}  // namespace gstpro
