#include "mpo/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "mpo/error.hpp"

namespace mpo {

TopKMetrics top_k_metrics(std::span<const NodeId> ranking, std::span<const std::int8_t> labels, std::size_t k) {
    TopKMetrics m;
    m.k = k;
    m.evaluated = ranking.size();
    if (k < 1 || k > ranking.size())
        throw MetricError("k must lie in [1, " + std::to_string(ranking.size()) + "], got " + std::to_string(k));
    std::size_t i = 0;
    for (NodeId v : ranking) {
        if (v >= labels.size() || labels[v] == TransactionGraph::kUnlabeled)
            throw MetricError("ranked node " + std::to_string(v) + " has no label");
        if (labels[v] == 1) {
            ++m.positives;
            if (i < k) ++m.true_positives;
        }
        ++i;
    }
    if (m.positives == 0) throw MetricError("no positive labels among the ranked nodes; recall is undefined");
    const auto n = static_cast<double>(m.evaluated);
    const auto tp = static_cast<double>(m.true_positives);
    const auto fp = static_cast<double>(k) - tp;
    const auto fn = static_cast<double>(m.positives) - tp;
    const auto tn = n - tp - fp - fn;
    m.precision = tp / static_cast<double>(k);
    m.recall = tp / static_cast<double>(m.positives);
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    m.accuracy = (tp + tn) / n;
    return m;
}

double precision_at_k(std::span<const NodeId> ranking, std::span<const std::int8_t> labels, std::size_t k) {
    return top_k_metrics(ranking, labels, k).precision;
}

double recall_at_k(std::span<const NodeId> ranking, std::span<const std::int8_t> labels, std::size_t k) {
    return top_k_metrics(ranking, labels, k).recall;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw MetricError("scores and labels differ in length");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        // Ranks i+1..j share the mid-rank.
        const double mid = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t) {
            const int l = labels[order[t]];
            if (l != 0 && l != 1) throw MetricError("labels must be 0 or 1");
            if (l == 1) {
                pos_rank_sum += mid;
                ++pos;
            }
        }
        i = j;
    }
    const std::size_t neg = scores.size() - pos;
    if (pos == 0 || neg == 0) throw MetricError("AUC needs both classes present");
    const double p = static_cast<double>(pos);
    const double u = pos_rank_sum - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(neg));
}

}  // namespace mpo
