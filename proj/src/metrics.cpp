#include "cfa/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "cfa/errors.hpp"

namespace cfa {

ApAuc ap_auc(const std::vector<ScoredLabel>& scored) {
    std::size_t n_pos = 0;
    for (const auto& s : scored) n_pos += s.positive;
    const std::size_t n_neg = scored.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw MetricUndefinedError(
            "ap/auc need at least one positive and one negative");

    std::vector<std::size_t> order(scored.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scored[a].score < scored[b].score;
    });

    // AUC: Mann-Whitney U from average ranks of the positives.
    double rank_sum_pos = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() &&
               scored[order[j]].score == scored[order[i]].score)
            ++j;
        double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
        for (std::size_t k = i; k < j; ++k)
            if (scored[order[k]].positive) rank_sum_pos += avg_rank;
        i = j;
    }
    double u = rank_sum_pos -
               0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
    double auc = u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));

    // AP: precision-recall steps at distinct score thresholds, descending.
    double ap = 0.0;
    double recall_prev = 0.0;
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = order.size(); i > 0;) {
        std::size_t j = i;  // (j, i] is one tie group scanned from the top
        while (j > 0 &&
               scored[order[j - 1]].score == scored[order[i - 1]].score)
            --j;
        for (std::size_t k = j; k < i; ++k) {
            if (scored[order[k]].positive)
                ++tp;
            else
                ++fp;
        }
        double recall_now = static_cast<double>(tp) / static_cast<double>(n_pos);
        double precision_now =
            static_cast<double>(tp) / static_cast<double>(tp + fp);
        ap += (recall_now - recall_prev) * precision_now;
        recall_prev = recall_now;
        i = j;
    }
    return {ap, auc};
}

double precision(const Confusion& c) {
    return c.tp + c.fp == 0
               ? 0.0
               : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

double recall(const Confusion& c) {
    return c.tp + c.fn == 0
               ? 0.0
               : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double f1_score(const Confusion& c) {
    double pr = precision(c);
    double re = recall(c);
    return pr + re == 0.0 ? 0.0 : 2.0 * pr * re / (pr + re);
}

double false_positive_rate(const Confusion& c) {
    return c.fp + c.tn == 0
               ? 0.0
               : static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
}

}  // namespace cfa
