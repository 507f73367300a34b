#include "mpo/anomaly.hpp"

#include <algorithm>

#include "mpo/csv.hpp"
#include "mpo/error.hpp"

namespace mpo {

AnomalyScoreSet rank_scores(std::span<const double> values, std::span<const NodeId> scored) {
    const std::size_t n = values.size();
    AnomalyScoreSet sas;
    sas.sigma.assign(n, 0.0);
    std::vector<char> in_scored(n, 0);
    std::vector<NodeId> front;
    front.reserve(scored.size());
    for (NodeId v : scored) {
        if (v >= n) throw LookupError("unknown node id " + std::to_string(v));
        if (in_scored[v]) continue;
        in_scored[v] = 1;
        sas.sigma[v] = values[v];
        front.push_back(v);
    }
    std::sort(front.begin(), front.end(), [&](NodeId a, NodeId b) {
        if (sas.sigma[a] != sas.sigma[b]) return sas.sigma[a] > sas.sigma[b];
        return a < b;
    });
    sas.scored_count = front.size();
    sas.ranking = std::move(front);
    sas.ranking.reserve(n);
    for (NodeId v = 0; v < n; ++v) {
        if (!in_scored[v]) sas.ranking.push_back(v);
    }
    return sas;
}

AnomalyScoreSet anomaly_scores(const PPRScoreSet& pps, const PatternFeatureSet& pfs) {
    const std::size_t n = pps.scaled.size();
    std::vector<double> sigma(n, 0.0);
    std::vector<NodeId> missing;
    for (NodeId v : pps.visited) {
        const auto f = pfs.find(v);
        if (!f) {
            if (pps.scaled[v] != 0.0) missing.push_back(v);
            continue;
        }
        sigma[v] = pps.scaled[v] / *f;
    }
    if (!missing.empty()) {
        std::string msg = std::to_string(missing.size()) + " visited node(s) lack a pattern feature:";
        for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i) msg += " " + std::to_string(missing[i]);
        if (missing.size() > 10) msg += " ...";
        throw ConsistencyError(msg);
    }
    return rank_scores(sigma, pps.visited);
}

std::vector<NodeId> top_k(const AnomalyScoreSet& sas, std::size_t k) {
    if (k < 1 || k > sas.ranking.size())
        throw ValidationError("k must lie in [1, " + std::to_string(sas.ranking.size()) + "], got " + std::to_string(k));
    return {sas.ranking.begin(), sas.ranking.begin() + static_cast<std::ptrdiff_t>(k)};
}

void write_suspect_report(const TransactionGraph& g, const AnomalyScoreSet& sas, const PPRScoreSet& pps,
                          const PatternFeatureSet& pfs, const BehaviorScores& bs, std::size_t k,
                          const std::filesystem::path& path) {
    const auto top = top_k(sas, k);
    auto out = csv::open_output(path);
    out << "rank,node_id,address,sigma,pi,f_value,theta_norm,omega_norm\n";
    for (std::size_t i = 0; i < top.size(); ++i) {
        const NodeId v = top[i];
        out << i + 1 << ',' << v << ',' << g.address(v) << ',' << csv::format_double(sas.sigma[v]) << ','
            << csv::format_double(v < pps.scaled.size() ? pps.scaled[v] : 0.0) << ',';
        if (const auto f = pfs.find(v)) out << csv::format_double(*f);
        out << ',';
        const auto it = std::lower_bound(bs.theta.nodes.begin(), bs.theta.nodes.end(), v);
        if (it != bs.theta.nodes.end() && *it == v) {
            const auto idx = static_cast<std::size_t>(it - bs.theta.nodes.begin());
            out << csv::format_double(bs.theta.norm[idx]) << ',' << csv::format_double(bs.omega.norm[idx]);
        } else {
            out << ',';
        }
        out << '\n';
    }
}

}  // namespace mpo
