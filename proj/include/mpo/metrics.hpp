#pragma once

#include <cstdint>
#include <span>

#include "mpo/graph.hpp"

namespace mpo {

/// Confusion counts when the first k entries of a ranking are called positive.
struct TopKMetrics {
    std::size_t k = 0;
    std::size_t evaluated = 0;  ///< ranking length
    std::size_t positives = 0;
    std::size_t true_positives = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
};

/// `labels` is indexed by node id (TransactionGraph::labels()). Every ranked node must be labelled,
/// 1 <= k <= ranking size, and at least one ranked node must be positive; MetricError otherwise.
TopKMetrics top_k_metrics(std::span<const NodeId> ranking, std::span<const std::int8_t> labels, std::size_t k);

double precision_at_k(std::span<const NodeId> ranking, std::span<const std::int8_t> labels, std::size_t k);
double recall_at_k(std::span<const NodeId> ranking, std::span<const std::int8_t> labels, std::size_t k);

/// Mann-Whitney AUC from mid-ranks: P(score_pos > score_neg) + P(equal)/2.
/// Throws MetricError when either class is empty or the sizes differ.
double auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace mpo
