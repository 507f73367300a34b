#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "mpo/graph.hpp"

namespace mpo {

/// One behavioural score over a node set: raw value and its min-max normalisation.
struct ScoreColumn {
    std::vector<NodeId> nodes;  ///< ascending, no duplicates
    std::vector<double> raw;
    std::vector<double> norm;   ///< in [0,1]; all 0 when raw is constant

    std::size_t size() const noexcept { return nodes.size(); }
};

struct BehaviorScores {
    ScoreColumn theta;  ///< timestamp-spread asymmetry
    ScoreColumn omega;  ///< in/out volume asymmetry
};

/// Min-max scaling onto [0,1]. A constant (or empty) input maps to all zeros.
std::vector<double> min_max(std::span<const double> values);

/// max - min of the timestamps on one side of v; 0 with fewer than two edges.
double in_time_spread(const TransactionGraph& g, NodeId v);
double out_time_spread(const TransactionGraph& g, NodeId v);

/// |out spread - in spread|.
double theta(const TransactionGraph& g, NodeId v);
/// |sum of in weights - sum of out weights|.
double omega(const TransactionGraph& g, NodeId v);

/// Scores every node in `nodes` (sorted and deduplicated first); normalisation runs over that set only.
ScoreColumn timestamp_scores(const TransactionGraph& g, std::span<const NodeId> nodes);
ScoreColumn weight_scores(const TransactionGraph& g, std::span<const NodeId> nodes);
BehaviorScores behavior_scores(const TransactionGraph& g, std::span<const NodeId> nodes);

/// `node_id,theta_raw,theta_norm,omega_raw,omega_norm`. Both columns must cover the same nodes.
void write_behavior_scores(const BehaviorScores& bs, const std::filesystem::path& path);
BehaviorScores read_behavior_scores(const std::filesystem::path& path);

}  // namespace mpo
