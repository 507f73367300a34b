#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "mpo/behavior.hpp"
#include "mpo/classifier.hpp"
#include "mpo/graph.hpp"
#include "mpo/ppr.hpp"

namespace mpo {

struct AnomalyScoreSet {
    std::vector<double> sigma;     ///< dense over V; 0 for nodes outside SVN
    std::vector<NodeId> ranking;   ///< every node of V: scored nodes by sigma descending (ties by id), then the rest by id
    std::size_t scored_count = 0;  ///< leading entries of ranking that lie in SVN
};

/// Orders `scored` by value descending (ties by ascending id) and appends every other node in id order.
/// `values` is dense over V.
AnomalyScoreSet rank_scores(std::span<const double> values, std::span<const NodeId> scored);

/// sigma(v) = pi_scaled(v) / F(v) over SVN. Throws ConsistencyError naming the nodes with nonzero
/// pi that pfs does not cover.
AnomalyScoreSet anomaly_scores(const PPRScoreSet& pps, const PatternFeatureSet& pfs);

/// First k entries of the ranking; throws ValidationError unless 1 <= k <= ranking size.
std::vector<NodeId> top_k(const AnomalyScoreSet& sas, std::size_t k);

/// `rank,node_id,address,sigma,pi,f_value,theta_norm,omega_norm` for the top k nodes. Nodes without a
/// feature row get empty f_value and behaviour fields.
void write_suspect_report(const TransactionGraph& g, const AnomalyScoreSet& sas, const PPRScoreSet& pps,
                          const PatternFeatureSet& pfs, const BehaviorScores& bs, std::size_t k,
                          const std::filesystem::path& path);

}  // namespace mpo
