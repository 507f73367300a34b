#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mpo/graph.hpp"

namespace mpo {

/// What a random walk does when it reaches a node without out-edges.
enum class DanglingRule {
    Absorb,    ///< the walk stops and deposits its mass at the sink
    Teleport,  ///< the walk jumps back to its source and continues
};

struct PPRConfig {
    double alpha = 0.5;    ///< per-step termination probability
    double epsilon = 0.5;  ///< relative accuracy target
    double p_f = 1.0;      ///< failure probability; 0.01 gives a meaningful guarantee
    std::optional<unsigned> hop_cap;  ///< restrict scores to the m-hop out-neighbourhood of each source
    std::uint64_t seed = 0;
    DanglingRule dangling = DanglingRule::Absorb;

    /// Throws ValidationError unless 0 < alpha < 1, epsilon > 0, 0 < p_f <= 1 and hop_cap >= 1.
    void validate() const;
};

/// (node, value) pairs sorted by node id.
using SparseScores = std::vector<std::pair<NodeId, double>>;

double lookup(const SparseScores& scores, NodeId v);

struct SourceScores {
    NodeId source = 0;
    std::uint64_t walk_budget = 0;
    SparseScores scores;  ///< approximate PPR pi-hat(source, .), nonzero entries only
};

/// Output of the multi-source stage.
struct PPRScoreSet {
    std::vector<SourceScores> per_source;  ///< one entry per source, ascending source id
    std::vector<NodeId> visited;           ///< SVN: union of the sources' hop-capped out-neighbourhoods
    std::vector<double> aggregated;        ///< sum over sources of pi-hat(s, v), dense over V
    std::vector<double> scaled;            ///< aggregated / max over SVN, in (0, 1] for reached nodes
    bool empty_sources = false;            ///< set when called without any source

    double score(NodeId source, NodeId v) const;
    bool is_visited(NodeId v) const;
};

/// Pre-ceiling walk count: ((2/3)eps + 2) * max(d,1) * ln(2/p_f) / (eps^2 * alpha * (1-alpha)).
/// With p_f = 1 the log term is ln 2.
double walk_budget_raw(std::size_t out_degree, const PPRConfig& cfg);

/// ceil(walk_budget_raw), at least 1.
std::uint64_t walk_budget(std::size_t out_degree, const PPRConfig& cfg);

struct PushResult {
    std::uint64_t walk_budget = 0;
    SparseScores residuals;  ///< r(s, .) left after the push loop
    SparseScores reserves;   ///< pi-zero(s, .) settled by the push loop
};

/// Forward push from s until no node u with d(u) > 0 holds r(s,u) > d(u) / (alpha K(s)).
/// Each push settles alpha*r(s,u) at u and spreads (1-alpha)*r(s,u)/d(u) along every out-edge.
PushResult forward_push(const TransactionGraph& g, NodeId s, const PPRConfig& cfg);

/// Runs round(r(s,v) K(s)) alpha-terminating walks from every node holding residual and adds
/// 1/K(s) at each walk's end node. Returns pi-hat(s, .) = pi-zero + walk increments.
/// The walk stream is seeded from cfg.seed xor s, so results are reproducible.
SparseScores monte_carlo_refine(const TransactionGraph& g, NodeId s, const PushResult& push, const PPRConfig& cfg);

/// Push plus Monte Carlo for every source. Sources are processed by up to `threads` workers;
/// the result does not depend on the worker count.
PPRScoreSet multi_source_ppr(const TransactionGraph& g, std::span<const NodeId> sources, const PPRConfig& cfg,
                             unsigned threads = 1);

/// Reference PPR by power iteration on pi = alpha e_s + (1 - alpha) pi P, iterated until the
/// L1 change bounds the error below 1e-12. Dangling nodes follow `rule`; under Teleport the
/// walk restarts at teleport_target (defaults to s). Throws OracleError after 1e5 iterations.
std::vector<double> exact_ppr_oracle(const TransactionGraph& g, NodeId s, double alpha,
                                     DanglingRule rule = DanglingRule::Absorb,
                                     std::optional<NodeId> teleport_target = std::nullopt);

void write_ppr_dump(const TransactionGraph& g, const PPRScoreSet& pps, const std::filesystem::path& scores,
                    const std::filesystem::path& svn);

/// Rebuilds a PPRScoreSet from the dump files written by write_ppr_dump.
PPRScoreSet read_ppr_dump(const TransactionGraph& g, const std::filesystem::path& scores,
                          const std::filesystem::path& svn);

/// Fills aggregated and scaled from per_source and visited.
void aggregate(PPRScoreSet& pps, std::size_t node_count);

}  // namespace mpo
