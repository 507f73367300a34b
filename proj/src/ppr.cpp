#include "mpo/ppr.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <thread>

#include "mpo/csv.hpp"
#include "mpo/error.hpp"
#include "mpo/rng.hpp"

namespace mpo {

void PPRConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("ppr.alpha must lie in (0,1)");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ValidationError("ppr.epsilon must be positive");
    if (!(p_f > 0.0 && p_f <= 1.0)) throw ValidationError("ppr.p_f must lie in (0,1]");
    if (hop_cap && *hop_cap == 0) throw ValidationError("ppr.hop_cap must be a positive integer");
}

double lookup(const SparseScores& scores, NodeId v) {
    const auto it = std::lower_bound(scores.begin(), scores.end(), v,
                                     [](const auto& entry, NodeId key) { return entry.first < key; });
    return it != scores.end() && it->first == v ? it->second : 0.0;
}

double PPRScoreSet::score(NodeId source, NodeId v) const {
    const auto it = std::lower_bound(per_source.begin(), per_source.end(), source,
                                     [](const SourceScores& s, NodeId key) { return s.source < key; });
    if (it == per_source.end() || it->source != source) return 0.0;
    return lookup(it->scores, v);
}

bool PPRScoreSet::is_visited(NodeId v) const { return std::binary_search(visited.begin(), visited.end(), v); }

double walk_budget_raw(std::size_t out_degree, const PPRConfig& cfg) {
    cfg.validate();
    const double d = static_cast<double>(std::max<std::size_t>(out_degree, 1));
    const double log_term = std::log(2.0 / cfg.p_f);
    return ((2.0 / 3.0) * cfg.epsilon + 2.0) * d * log_term /
           (cfg.epsilon * cfg.epsilon * cfg.alpha * (1.0 - cfg.alpha));
}

std::uint64_t walk_budget(std::size_t out_degree, const PPRConfig& cfg) {
    const double raw = walk_budget_raw(out_degree, cfg);
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(raw)));
}

namespace {

constexpr std::uint32_t kUnreached = std::numeric_limits<std::uint32_t>::max();

/// Per-worker dense scratch space, reset in O(touched) between sources.
class Workspace {
public:
    explicit Workspace(std::size_t n)
        : residual(n, 0.0), reserve(n, 0.0), estimate(n, 0.0), depth(n, kUnreached), queued_(n, 0),
          touched_flag_(n, 0) {}

    void touch(NodeId v) {
        if (!touched_flag_[v]) {
            touched_flag_[v] = 1;
            touched_.push_back(v);
        }
    }

    void reset() {
        for (NodeId v : touched_) {
            residual[v] = reserve[v] = estimate[v] = 0.0;
            touched_flag_[v] = 0;
        }
        touched_.clear();
        for (NodeId v : depth_touched_) depth[v] = kUnreached;
        depth_touched_.clear();
    }

    /// Hop distances from s, up to cap.
    void bfs(const TransactionGraph& g, NodeId s, unsigned cap) {
        depth[s] = 0;
        depth_touched_.push_back(s);
        std::deque<NodeId> frontier{s};
        while (!frontier.empty()) {
            const NodeId u = frontier.front();
            frontier.pop_front();
            if (depth[u] >= cap) continue;
            for (NodeId t : g.out_targets(u)) {
                if (depth[t] == kUnreached) {
                    depth[t] = depth[u] + 1;
                    depth_touched_.push_back(t);
                    frontier.push_back(t);
                }
            }
        }
    }

    std::vector<NodeId> sorted_touched() const {
        std::vector<NodeId> nodes = touched_;
        std::sort(nodes.begin(), nodes.end());
        return nodes;
    }

    std::vector<double> residual;
    std::vector<double> reserve;
    std::vector<double> estimate;
    std::vector<std::uint32_t> depth;
    std::vector<char> queued_;

private:
    std::vector<char> touched_flag_;
    std::vector<NodeId> touched_;
    std::vector<NodeId> depth_touched_;
};

void run_push(const TransactionGraph& g, NodeId s, std::uint64_t budget, const PPRConfig& cfg, Workspace& ws) {
    const double alpha = cfg.alpha;
    const double scale = 1.0 / (alpha * static_cast<double>(budget));
    auto above = [&](NodeId u) {
        const auto d = g.out_degree(u);
        return d > 0 && ws.residual[u] > static_cast<double>(d) * scale;
    };

    ws.touch(s);
    ws.residual[s] = 1.0;
    std::deque<NodeId> queue;
    if (above(s)) {
        queue.push_back(s);
        ws.queued_[s] = 1;
    }
    while (!queue.empty()) {
        const NodeId u = queue.front();
        queue.pop_front();
        ws.queued_[u] = 0;
        const double r = ws.residual[u];
        ws.residual[u] = 0.0;
        ws.reserve[u] += alpha * r;
        const auto targets = g.out_targets(u);
        const double share = (1.0 - alpha) * r / static_cast<double>(targets.size());
        for (NodeId t : targets) {
            ws.touch(t);
            ws.residual[t] += share;
            if (!ws.queued_[t] && above(t)) {
                ws.queued_[t] = 1;
                queue.push_back(t);
            }
        }
    }
}

/// Walks from every residual holder; fills ws.estimate with pi-hat restricted to the hop set.
void run_walks(const TransactionGraph& g, NodeId s, std::uint64_t budget, const PPRConfig& cfg, Workspace& ws) {
    const bool capped = cfg.hop_cap.has_value();
    if (capped) ws.bfs(g, s, *cfg.hop_cap);
    auto in_scope = [&](NodeId v) { return !capped || ws.depth[v] != kUnreached; };

    const auto nodes = ws.sorted_touched();
    for (NodeId v : nodes) {
        if (in_scope(v)) ws.estimate[v] = ws.reserve[v];
    }

    Rng rng(cfg.seed ^ static_cast<std::uint64_t>(s));
    const double k = static_cast<double>(budget);
    const double increment = 1.0 / k;
    for (NodeId v : nodes) {
        const double r = ws.residual[v];
        if (r <= 0.0 || !in_scope(v)) continue;
        const auto walks = static_cast<std::uint64_t>(std::llround(r * k));
        for (std::uint64_t i = 0; i < walks; ++i) {
            NodeId cur = v;
            while (!rng.bernoulli(cfg.alpha)) {
                const auto targets = g.out_targets(cur);
                if (targets.empty()) {
                    if (cfg.dangling == DanglingRule::Absorb) break;
                    cur = s;
                    continue;
                }
                cur = targets[rng.below(targets.size())];
            }
            if (in_scope(cur)) {
                ws.touch(cur);
                ws.estimate[cur] += increment;
            }
        }
    }
}

SparseScores collect(const std::vector<double>& values, const Workspace& ws) {
    SparseScores out;
    for (NodeId v : ws.sorted_touched()) {
        if (values[v] != 0.0) out.emplace_back(v, values[v]);
    }
    return out;
}

SourceScores run_source(const TransactionGraph& g, NodeId s, const PPRConfig& cfg, Workspace& ws) {
    SourceScores result;
    result.source = s;
    result.walk_budget = walk_budget(g.out_degree(s), cfg);
    run_push(g, s, result.walk_budget, cfg, ws);
    run_walks(g, s, result.walk_budget, cfg, ws);
    result.scores = collect(ws.estimate, ws);
    ws.reset();
    return result;
}

std::vector<NodeId> reachable_within(const TransactionGraph& g, std::span<const NodeId> sources,
                                     std::optional<unsigned> cap) {
    std::vector<std::uint32_t> depth(g.node_count(), kUnreached);
    std::deque<NodeId> frontier;
    for (NodeId s : sources) {
        if (depth[s] == kUnreached) {
            depth[s] = 0;
            frontier.push_back(s);
        }
    }
    while (!frontier.empty()) {
        const NodeId u = frontier.front();
        frontier.pop_front();
        if (cap && depth[u] >= *cap) continue;
        for (NodeId t : g.out_targets(u)) {
            if (depth[t] == kUnreached) {
                depth[t] = depth[u] + 1;
                frontier.push_back(t);
            }
        }
    }
    std::vector<NodeId> visited;
    for (NodeId v = 0; v < g.node_count(); ++v) {
        if (depth[v] != kUnreached) visited.push_back(v);
    }
    return visited;
}

}  // namespace

PushResult forward_push(const TransactionGraph& g, NodeId s, const PPRConfig& cfg) {
    cfg.validate();
    if (!g.contains(s)) throw LookupError("unknown source node " + std::to_string(s));
    Workspace ws(g.node_count());
    PushResult result;
    result.walk_budget = walk_budget(g.out_degree(s), cfg);
    run_push(g, s, result.walk_budget, cfg, ws);
    result.residuals = collect(ws.residual, ws);
    result.reserves = collect(ws.reserve, ws);
    return result;
}

SparseScores monte_carlo_refine(const TransactionGraph& g, NodeId s, const PushResult& push, const PPRConfig& cfg) {
    cfg.validate();
    if (!g.contains(s)) throw LookupError("unknown source node " + std::to_string(s));
    Workspace ws(g.node_count());
    for (const auto& [v, r] : push.residuals) {
        ws.touch(v);
        ws.residual[v] = r;
    }
    for (const auto& [v, p] : push.reserves) {
        ws.touch(v);
        ws.reserve[v] = p;
    }
    const auto budget = push.walk_budget ? push.walk_budget : walk_budget(g.out_degree(s), cfg);
    run_walks(g, s, budget, cfg, ws);
    return collect(ws.estimate, ws);
}

void aggregate(PPRScoreSet& pps, std::size_t node_count) {
    pps.aggregated.assign(node_count, 0.0);
    pps.scaled.assign(node_count, 0.0);
    for (const auto& src : pps.per_source) {
        for (const auto& [v, p] : src.scores) pps.aggregated[v] += p;
    }
    double peak = 0.0;
    for (NodeId v : pps.visited) peak = std::max(peak, pps.aggregated[v]);
    if (peak <= 0.0) return;
    for (NodeId v : pps.visited) pps.scaled[v] = pps.aggregated[v] / peak;
}

PPRScoreSet multi_source_ppr(const TransactionGraph& g, std::span<const NodeId> sources, const PPRConfig& cfg,
                             unsigned threads) {
    cfg.validate();
    PPRScoreSet pps;
    std::vector<NodeId> order(sources.begin(), sources.end());
    std::sort(order.begin(), order.end());
    order.erase(std::unique(order.begin(), order.end()), order.end());
    for (NodeId s : order) {
        if (!g.contains(s)) throw LookupError("unknown source node " + std::to_string(s));
    }
    if (order.empty()) {
        pps.empty_sources = true;
        aggregate(pps, g.node_count());
        return pps;
    }

    pps.per_source.resize(order.size());
    const unsigned workers = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(order.size()));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        Workspace ws(g.node_count());
        for (std::size_t i = next++; i < order.size(); i = next++) {
            pps.per_source[i] = run_source(g, order[i], cfg, ws);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }

    pps.visited = reachable_within(g, order, cfg.hop_cap);
    aggregate(pps, g.node_count());
    return pps;
}

std::vector<double> exact_ppr_oracle(const TransactionGraph& g, NodeId s, double alpha, DanglingRule rule,
                                     std::optional<NodeId> teleport_target) {
    if (!g.contains(s)) throw LookupError("unknown source node " + std::to_string(s));
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0,1)");
    const NodeId restart = teleport_target.value_or(s);
    if (!g.contains(restart)) throw LookupError("unknown teleport target");

    const std::size_t n = g.node_count();
    std::vector<double> pi(n, 0.0);
    std::vector<double> next(n, 0.0);
    pi[s] = 1.0;
    constexpr int kMaxIterations = 100000;
    constexpr double kTolerance = 1e-12;
    // The update is a (1-alpha)-contraction in L1, so the distance to the fixed
    // point is at most delta * (1-alpha) / alpha.
    const double bound = (1.0 - alpha) / alpha;
    for (int it = 0; it < kMaxIterations; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        next[s] += alpha;
        for (NodeId u = 0; u < n; ++u) {
            const double mass = pi[u];
            if (mass == 0.0) continue;
            const auto targets = g.out_targets(u);
            const double carried = (1.0 - alpha) * mass;
            if (targets.empty()) {
                next[rule == DanglingRule::Absorb ? u : restart] += carried;
                continue;
            }
            const double share = carried / static_cast<double>(targets.size());
            for (NodeId t : targets) next[t] += share;
        }
        double delta = 0.0;
        for (std::size_t v = 0; v < n; ++v) delta += std::abs(next[v] - pi[v]);
        pi.swap(next);
        if (delta * bound < kTolerance) return pi;
    }
    throw OracleError("power iteration did not converge within 1e5 iterations");
}

void write_ppr_dump(const TransactionGraph& g, const PPRScoreSet& pps, const std::filesystem::path& scores,
                    const std::filesystem::path& svn) {
    (void)g;
    auto out = csv::open_output(scores);
    out << "source_id,node_id,score\n";
    for (const auto& src : pps.per_source) {
        for (const auto& [v, p] : src.scores) out << src.source << ',' << v << ',' << csv::format_double(p) << '\n';
    }
    auto visited = csv::open_output(svn);
    visited << "node_id\n";
    for (NodeId v : pps.visited) visited << v << '\n';
}

PPRScoreSet read_ppr_dump(const TransactionGraph& g, const std::filesystem::path& scores,
                          const std::filesystem::path& svn) {
    PPRScoreSet pps;
    std::map<NodeId, SparseScores> by_source;
    {
        csv::Reader reader(scores);
        std::string line;
        bool first = true;
        while (reader.next(line)) {
            const auto f = csv::split(line);
            const bool header = first;
            first = false;
            if (f.size() != 3) throw ParseError(reader.file(), reader.line_number(), "expected source_id,node_id,score");
            const auto s = csv::parse_int(f[0]);
            const auto v = csv::parse_int(f[1]);
            const auto p = csv::parse_double(f[2]);
            if (!s || !v || !p) {
                if (header) continue;
                throw ParseError(reader.file(), reader.line_number(), "malformed PPR row");
            }
            if (*s < 0 || *v < 0 || !g.contains(static_cast<NodeId>(*s)) || !g.contains(static_cast<NodeId>(*v)))
                throw LookupError(reader.file() + ":" + std::to_string(reader.line_number()) + ": unknown node id");
            by_source[static_cast<NodeId>(*s)].emplace_back(static_cast<NodeId>(*v), *p);
        }
    }
    for (auto& [s, entries] : by_source) {
        std::sort(entries.begin(), entries.end());
        pps.per_source.push_back({s, 0, std::move(entries)});
    }
    {
        csv::Reader reader(svn);
        std::string line;
        bool first = true;
        while (reader.next(line)) {
            const auto v = csv::parse_int(line);
            const bool header = first;
            first = false;
            if (!v) {
                if (header) continue;
                throw ParseError(reader.file(), reader.line_number(), "malformed node id");
            }
            if (*v < 0 || !g.contains(static_cast<NodeId>(*v)))
                throw LookupError(reader.file() + ":" + std::to_string(reader.line_number()) + ": unknown node id");
            pps.visited.push_back(static_cast<NodeId>(*v));
        }
        std::sort(pps.visited.begin(), pps.visited.end());
    }
    pps.empty_sources = pps.per_source.empty();
    aggregate(pps, g.node_count());
    return pps;
}

}  // namespace mpo
