#pragma once

#include <cstddef>
#include <vector>

namespace cfa {

struct ScoredLabel {
    double score;
    bool positive;
};

struct ApAuc {
    double ap;
    double auc;
};

// AUC is the Mann-Whitney rank statistic (ties averaged); AP is the area
// under the precision-recall curve with step interpolation, thresholds at
// distinct scores. Throws MetricUndefinedError unless both classes appear.
ApAuc ap_auc(const std::vector<ScoredLabel>& scored);

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    Confusion& operator+=(const Confusion& o) {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }
};

double precision(const Confusion& c);
double recall(const Confusion& c);
double f1_score(const Confusion& c);
double false_positive_rate(const Confusion& c);

}  // namespace cfa
