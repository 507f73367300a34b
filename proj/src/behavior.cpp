#include "mpo/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mpo/csv.hpp"
#include "mpo/error.hpp"

namespace mpo {

namespace {

std::vector<NodeId> normalise_set(const TransactionGraph& g, std::span<const NodeId> nodes) {
    std::vector<NodeId> out(nodes.begin(), nodes.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    for (NodeId v : out) {
        if (!g.contains(v)) throw LookupError("unknown node id " + std::to_string(v));
    }
    return out;
}

double spread(const TransactionGraph& g, std::span<const EdgeId> edges) {
    if (edges.size() < 2) return 0.0;
    Timestamp lo = std::numeric_limits<Timestamp>::max();
    Timestamp hi = std::numeric_limits<Timestamp>::min();
    for (EdgeId e : edges) {
        const Timestamp t = g.edge(e).timestamp;
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }
    return static_cast<double>(hi - lo);
}

template <typename Fn>
ScoreColumn score_column(const TransactionGraph& g, std::span<const NodeId> nodes, Fn score) {
    ScoreColumn col;
    col.nodes = normalise_set(g, nodes);
    col.raw.reserve(col.nodes.size());
    for (NodeId v : col.nodes) col.raw.push_back(score(g, v));
    col.norm = min_max(col.raw);
    return col;
}

}  // namespace

std::vector<double> min_max(std::span<const double> values) {
    std::vector<double> out(values.size(), 0.0);
    if (values.empty()) return out;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) return out;
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / range;
    return out;
}

double in_time_spread(const TransactionGraph& g, NodeId v) { return spread(g, g.in_edges(v)); }
double out_time_spread(const TransactionGraph& g, NodeId v) { return spread(g, g.out_edges(v)); }

double theta(const TransactionGraph& g, NodeId v) { return std::abs(out_time_spread(g, v) - in_time_spread(g, v)); }

double omega(const TransactionGraph& g, NodeId v) {
    return std::abs(fan_in(g, v, DegreeMode::Weighted) - fan_out(g, v, DegreeMode::Weighted));
}

ScoreColumn timestamp_scores(const TransactionGraph& g, std::span<const NodeId> nodes) {
    return score_column(g, nodes, theta);
}

ScoreColumn weight_scores(const TransactionGraph& g, std::span<const NodeId> nodes) {
    return score_column(g, nodes, omega);
}

BehaviorScores behavior_scores(const TransactionGraph& g, std::span<const NodeId> nodes) {
    return {timestamp_scores(g, nodes), weight_scores(g, nodes)};
}

void write_behavior_scores(const BehaviorScores& bs, const std::filesystem::path& path) {
    if (bs.theta.nodes != bs.omega.nodes) throw ConsistencyError("theta and omega scores cover different nodes");
    auto out = csv::open_output(path);
    out << "node_id,theta_raw,theta_norm,omega_raw,omega_norm\n";
    for (std::size_t i = 0; i < bs.theta.size(); ++i) {
        out << bs.theta.nodes[i] << ',' << csv::format_double(bs.theta.raw[i]) << ','
            << csv::format_double(bs.theta.norm[i]) << ',' << csv::format_double(bs.omega.raw[i]) << ','
            << csv::format_double(bs.omega.norm[i]) << '\n';
    }
}

BehaviorScores read_behavior_scores(const std::filesystem::path& path) {
    BehaviorScores bs;
    csv::Reader reader(path);
    std::string line;
    bool first = true;
    while (reader.next(line)) {
        const auto f = csv::split(line);
        const bool header = first;
        first = false;
        if (header && !csv::parse_int(f[0])) continue;
        if (f.size() != 5) throw ParseError(reader.file(), reader.line_number(), "expected 5 fields");
        const auto v = csv::parse_int(f[0]);
        double vals[4];
        for (int i = 0; i < 4; ++i) {
            const auto x = csv::parse_double(f[i + 1]);
            if (!x) throw ParseError(reader.file(), reader.line_number(), "malformed score");
            vals[i] = *x;
        }
        if (!v || *v < 0) throw ParseError(reader.file(), reader.line_number(), "malformed node id");
        const auto id = static_cast<NodeId>(*v);
        if (!bs.theta.nodes.empty() && id <= bs.theta.nodes.back())
            throw ParseError(reader.file(), reader.line_number(), "node ids must be strictly ascending");
        bs.theta.nodes.push_back(id);
        bs.theta.raw.push_back(vals[0]);
        bs.theta.norm.push_back(vals[1]);
        bs.omega.nodes.push_back(id);
        bs.omega.raw.push_back(vals[2]);
        bs.omega.norm.push_back(vals[3]);
    }
    return bs;
}

}  // namespace mpo
