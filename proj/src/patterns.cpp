#include "mpo/patterns.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "mpo/csv.hpp"
#include "mpo/error.hpp"
#include "mpo/rng.hpp"

namespace mpo {

namespace {

constexpr std::pair<PatternKind, std::string_view> kKindNames[] = {
    {PatternKind::FanIn, "fan_in"},         {PatternKind::FanOut, "fan_out"}, {PatternKind::GatherScatter, "gather_scatter"},
    {PatternKind::Bipartite, "bipartite"}, {PatternKind::Stack, "stack"},     {PatternKind::Random, "random"},
};

double draw_weight(Rng& rng, const PatternSpec& spec) { return rng.uniform(spec.weight_lo, spec.weight_hi); }

Timestamp draw_time(Rng& rng, Timestamp lo, Timestamp hi) { return rng.between(lo, hi); }

}  // namespace

std::string_view to_string(PatternKind kind) {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "unknown";
}

PatternKind parse_pattern_kind(std::string_view name) {
    for (const auto& [k, n] : kKindNames) {
        if (n == name) return k;
    }
    throw ValidationError("unknown pattern kind '" + std::string(name) + "'");
}

void PatternSpec::validate() const {
    if (width < 1) throw ValidationError("pattern width must be at least 1");
    if ((kind == PatternKind::GatherScatter || kind == PatternKind::Bipartite) && width_out < 1)
        throw ValidationError("pattern width_out must be at least 1");
    if (kind == PatternKind::Stack && width < 2) throw ValidationError("stack length must be at least 2");
    if (kind == PatternKind::Random && width < 2) throw ValidationError("random pattern needs at least 2 nodes");
    if (!(density >= 0.0 && density <= 1.0)) throw ValidationError("pattern density must lie in [0,1]");
    if (!std::isfinite(weight_lo) || !std::isfinite(weight_hi) || weight_lo < 0.0 || weight_hi < weight_lo)
        throw ValidationError("pattern weight range must satisfy 0 <= lo <= hi");
    if (time_lo < 0 || time_hi < time_lo) throw ValidationError("pattern time range must satisfy 0 <= lo <= hi");
    if (kind == PatternKind::GatherScatter && time_hi == time_lo)
        throw ValidationError("gather-scatter needs a time range of at least two instants");
}

GeneratedPattern generate_pattern(const PatternSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    GeneratedPattern p;
    p.kind = spec.kind;
    const auto w = spec.width;
    switch (spec.kind) {
    case PatternKind::FanIn:
        p.roles.assign(w + 1, "leaf");
        p.roles[0] = "hub";
        for (unsigned i = 1; i <= w; ++i)
            p.edges.push_back({i, 0, draw_weight(rng, spec), draw_time(rng, spec.time_lo, spec.time_hi)});
        p.anchor = 0;
        break;
    case PatternKind::FanOut:
        p.roles.assign(w + 1, "leaf");
        p.roles[0] = "hub";
        for (unsigned i = 1; i <= w; ++i)
            p.edges.push_back({0, i, draw_weight(rng, spec), draw_time(rng, spec.time_lo, spec.time_hi)});
        p.anchor = 1;
        break;
    case PatternKind::GatherScatter: {
        const auto wo = spec.width_out;
        p.roles.assign(1 + w + wo, "gather");
        p.roles[0] = "hub";
        for (unsigned i = 0; i < wo; ++i) p.roles[1 + w + i] = "scatter";
        const Timestamp mid = spec.time_lo + (spec.time_hi - spec.time_lo - 1) / 2;
        double total = 0.0;
        for (unsigned i = 1; i <= w; ++i) {
            const double x = draw_weight(rng, spec);
            total += x;
            p.edges.push_back({i, 0, x, draw_time(rng, spec.time_lo, mid)});
        }
        const double share = total / static_cast<double>(wo);
        for (unsigned i = 0; i < wo; ++i)
            p.edges.push_back({0, 1 + w + i, share, draw_time(rng, mid + 1, spec.time_hi)});
        p.anchor = 1 + w;
        break;
    }
    case PatternKind::Bipartite: {
        const auto wo = spec.width_out;
        p.roles.assign(w + wo, "left");
        for (unsigned j = 0; j < wo; ++j) p.roles[w + j] = "right";
        std::set<std::pair<unsigned, unsigned>> pairs;
        // Every node gets at least one edge.
        for (unsigned i = 0; i < w; ++i) pairs.emplace(i, i % wo);
        for (unsigned j = 0; j < wo; ++j) pairs.emplace(j % w, j);
        for (unsigned i = 0; i < w; ++i) {
            for (unsigned j = 0; j < wo; ++j) {
                if (rng.bernoulli(spec.density)) pairs.emplace(i, j);
            }
        }
        for (const auto& [i, j] : pairs)
            p.edges.push_back({i, w + j, draw_weight(rng, spec), draw_time(rng, spec.time_lo, spec.time_hi)});
        p.anchor = w;
        break;
    }
    case PatternKind::Stack: {
        p.roles.assign(w, "relay");
        p.roles.front() = "head";
        p.roles.back() = "tail";
        const double amount = draw_weight(rng, spec);
        std::vector<Timestamp> times;
        const auto range = static_cast<std::uint64_t>(spec.time_hi - spec.time_lo) + 1;
        if (range >= w - 1) {
            std::set<Timestamp> distinct;
            while (distinct.size() < w - 1) distinct.insert(draw_time(rng, spec.time_lo, spec.time_hi));
            times.assign(distinct.begin(), distinct.end());
        } else {
            for (unsigned i = 0; i + 1 < w; ++i) times.push_back(draw_time(rng, spec.time_lo, spec.time_hi));
            std::sort(times.begin(), times.end());
        }
        for (unsigned i = 0; i + 1 < w; ++i) p.edges.push_back({i, i + 1, amount, times[i]});
        p.anchor = w - 1;
        break;
    }
    case PatternKind::Random: {
        p.roles.assign(w, "member");
        for (unsigned i = 0; i < w; ++i) {
            for (unsigned j = 0; j < w; ++j) {
                if (i != j && rng.bernoulli(spec.density))
                    p.edges.push_back({i, j, draw_weight(rng, spec), draw_time(rng, spec.time_lo, spec.time_hi)});
            }
        }
        if (p.edges.empty()) p.edges.push_back({0, 1, draw_weight(rng, spec), draw_time(rng, spec.time_lo, spec.time_hi)});
        p.anchor = static_cast<unsigned>(rng.below(w));
        break;
    }
    }
    return p;
}

InjectedGraph inject(const TransactionGraph& g, std::span<const PatternSpec> specs, const InjectOptions& opts) {
    if (!(opts.window_ratio >= 0.0 && opts.window_ratio <= 1.0))
        throw ValidationError("inject.window_ratio must lie in [0,1]");
    if (opts.anchor && specs.size() > g.node_count())
        throw ValidationError("requested " + std::to_string(specs.size()) + " anchor nodes but the graph has only " +
                              std::to_string(g.node_count()) + " nodes");
    std::set<std::pair<PatternKind, std::uint64_t>> seen;
    for (const auto& spec : specs) {
        spec.validate();
        if (!seen.emplace(spec.kind, spec.seed).second)
            throw ValidationError("two patterns share kind " + std::string(to_string(spec.kind)) + " and seed " +
                                  std::to_string(spec.seed));
    }

    GraphBuilder builder;
    builder.reserve(g.node_count(), g.edge_count());
    for (NodeId v = 0; v < g.node_count(); ++v) {
        builder.add_node(g.address(v));
        if (auto l = g.label(v)) builder.set_label(v, *l);
    }
    for (const Edge& e : g.edges()) builder.add_edge(e.src, e.dst, e.weight, e.timestamp);

    const auto [bg_lo, bg_hi] = time_span(g);
    const bool has_background_time = g.edge_count() > 0;
    std::unordered_set<NodeId> used_anchors;
    InjectedGraph result;

    for (const auto& spec : specs) {
        const auto pattern = generate_pattern(spec);
        Rng rng(mix_seed(opts.seed) ^ mix_seed(spec.seed * 8 + static_cast<std::uint64_t>(spec.kind)));

        InjectionRecord record;
        record.pattern = spec;
        std::vector<NodeId> ids(pattern.node_count());
        if (opts.anchor) {
            NodeId a = 0;
            do {
                a = static_cast<NodeId>(rng.below(g.node_count()));
            } while (used_anchors.count(a));
            used_anchors.insert(a);
            record.anchor = a;
        }
        for (unsigned i = 0; i < pattern.node_count(); ++i) {
            if (record.anchor && i == pattern.anchor) {
                ids[i] = *record.anchor;
            } else {
                ids[i] = builder.add_node("inj_" + std::string(to_string(spec.kind)) + "_" + std::to_string(spec.seed) +
                                          "_" + std::to_string(i));
            }
            builder.set_label(ids[i], 1);
            record.injected_nodes.push_back(ids[i]);
        }
        std::sort(record.injected_nodes.begin(), record.injected_nodes.end());

        // Map the pattern's time range onto the target window with a monotone integer map.
        Timestamp offset = spec.time_lo;
        Timestamp length = spec.time_hi - spec.time_lo;
        if (has_background_time) {
            const Timestamp span = bg_hi - bg_lo;
            if (spec.kind == PatternKind::Random && spec.random_timing) {
                offset = bg_lo;
                length = span;
            } else {
                length = static_cast<Timestamp>(std::llround(opts.window_ratio * static_cast<double>(span)));
                offset = bg_lo + static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(span - length) + 1));
            }
        }
        const Timestamp source_len = spec.time_hi - spec.time_lo;
        auto remap = [&](Timestamp t) -> Timestamp {
            if (source_len == 0) return offset;
            const auto scaled = static_cast<__int128>(t - spec.time_lo) * length / source_len;
            return offset + static_cast<Timestamp>(scaled);
        };
        for (const auto& e : pattern.edges) {
            const Edge edge{ids[e.src], ids[e.dst], e.weight, remap(e.timestamp)};
            builder.add_edge(edge.src, edge.dst, edge.weight, edge.timestamp);
            record.injected_edges.push_back(edge);
        }
        result.records.push_back(std::move(record));
    }
    result.graph = builder.build();
    return result;
}

void BackgroundSpec::validate() const {
    if (!(mean_out_degree >= 0.0) || !std::isfinite(mean_out_degree))
        throw ValidationError("background.mean_out_degree must be non-negative");
    if (mean_out_degree > 0.0 && nodes < 2) throw ValidationError("background needs at least 2 nodes to hold edges");
    if (!(weight_log_sd >= 0.0) || !std::isfinite(weight_log_mean)) throw ValidationError("invalid weight distribution");
    if (time_span < 1) throw ValidationError("background.time_span must be positive");
}

TransactionGraph generate_background(const BackgroundSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    GraphBuilder builder;
    const auto edges = static_cast<std::size_t>(std::llround(static_cast<double>(spec.nodes) * spec.mean_out_degree));
    builder.reserve(spec.nodes, edges);
    for (std::size_t i = 0; i < spec.nodes; ++i) builder.set_label(builder.add_node("bg_" + std::to_string(i)), 0);
    for (std::size_t e = 0; e < edges; ++e) {
        const auto src = static_cast<NodeId>(rng.below(spec.nodes));
        auto dst = static_cast<NodeId>(rng.below(spec.nodes - 1));
        if (dst >= src) ++dst;
        const double w = rng.lognormal(spec.weight_log_mean, spec.weight_log_sd);
        const auto t = static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(spec.time_span)));
        builder.add_edge(src, dst, w, t);
    }
    return builder.build();
}

BenchmarkManifest BenchmarkManifest::from_config(const Config& cfg) {
    BenchmarkManifest m;
    const auto nodes = cfg.get_int("background.nodes", static_cast<std::int64_t>(m.background.nodes));
    if (nodes < 0) throw ConfigError("background.nodes must be non-negative");
    m.background.nodes = static_cast<std::size_t>(nodes);
    m.background.mean_out_degree = cfg.get_double("background.mean_out_degree", m.background.mean_out_degree);
    m.background.weight_log_mean = cfg.get_double("background.weight_log_mean", m.background.weight_log_mean);
    m.background.weight_log_sd = cfg.get_double("background.weight_log_sd", m.background.weight_log_sd);
    m.background.time_span = cfg.get_int("background.time_span", m.background.time_span);
    m.background.seed = cfg.get_uint("background.seed", m.background.seed);
    m.inject.window_ratio = cfg.get_double("inject.window_ratio", m.inject.window_ratio);
    m.inject.seed = cfg.get_uint("inject.seed", m.inject.seed);
    m.inject.anchor = cfg.get_bool("inject.anchor", m.inject.anchor);

    std::set<std::uint64_t> indices;
    for (const auto& key : cfg.keys_with_prefix("pattern")) {
        const auto rest = std::string_view(key).substr(8);
        const auto dot = rest.find('.');
        const auto idx = csv::parse_uint(rest.substr(0, dot));
        if (!idx || dot == std::string_view::npos) throw ConfigError("malformed pattern key '" + key + "'");
        indices.insert(*idx);
    }
    for (auto idx : indices) {
        const std::string p = "pattern." + std::to_string(idx) + ".";
        PatternSpec spec;
        const auto kind = cfg.get(p + "kind");
        if (!kind) throw ConfigError("missing " + p + "kind");
        spec.kind = parse_pattern_kind(*kind);
        auto positive = [&](const std::string& key, unsigned fallback) {
            const auto v = cfg.get_int(key, fallback);
            if (v < 0 || v > 1'000'000) throw ConfigError(key + " out of range");
            return static_cast<unsigned>(v);
        };
        spec.width = positive(p + "width", spec.width);
        spec.width_out = positive(p + "width_out", spec.width_out);
        spec.density = cfg.get_double(p + "density", spec.density);
        const auto weights = cfg.get_doubles(p + "weight_range", {spec.weight_lo, spec.weight_hi});
        if (weights.size() != 2) throw ConfigError(p + "weight_range expects lo,hi");
        spec.weight_lo = weights[0];
        spec.weight_hi = weights[1];
        const auto times = cfg.get_doubles(p + "time_range", {static_cast<double>(spec.time_lo), static_cast<double>(spec.time_hi)});
        if (times.size() != 2) throw ConfigError(p + "time_range expects lo,hi");
        spec.time_lo = static_cast<Timestamp>(times[0]);
        spec.time_hi = static_cast<Timestamp>(times[1]);
        spec.random_timing = cfg.get_bool(p + "random_timing", spec.random_timing);
        spec.seed = cfg.get_uint(p + "seed", idx);
        try {
            spec.validate();
        } catch (const ValidationError& e) {
            throw ConfigError(p.substr(0, p.size() - 1) + ": " + e.what());
        }
        m.patterns.push_back(spec);
    }
    return m;
}

Config BenchmarkManifest::to_config() const {
    Config cfg;
    cfg.set("background.nodes", std::to_string(background.nodes));
    cfg.set("background.mean_out_degree", csv::format_double(background.mean_out_degree));
    cfg.set("background.weight_log_mean", csv::format_double(background.weight_log_mean));
    cfg.set("background.weight_log_sd", csv::format_double(background.weight_log_sd));
    cfg.set("background.time_span", std::to_string(background.time_span));
    cfg.set("background.seed", std::to_string(background.seed));
    cfg.set("inject.window_ratio", csv::format_double(inject.window_ratio));
    cfg.set("inject.seed", std::to_string(inject.seed));
    cfg.set("inject.anchor", inject.anchor ? "true" : "false");
    for (std::size_t i = 0; i < patterns.size(); ++i) {
        const auto& s = patterns[i];
        const std::string p = "pattern." + std::to_string(i) + ".";
        cfg.set(p + "kind", std::string(to_string(s.kind)));
        cfg.set(p + "width", std::to_string(s.width));
        cfg.set(p + "width_out", std::to_string(s.width_out));
        cfg.set(p + "density", csv::format_double(s.density));
        cfg.set(p + "weight_range", csv::format_double(s.weight_lo) + "," + csv::format_double(s.weight_hi));
        cfg.set(p + "time_range", std::to_string(s.time_lo) + "," + std::to_string(s.time_hi));
        cfg.set(p + "random_timing", s.random_timing ? "true" : "false");
        cfg.set(p + "seed", std::to_string(s.seed));
    }
    return cfg;
}

InjectedGraph build_benchmark(const BenchmarkManifest& manifest) {
    const auto background = generate_background(manifest.background);
    return inject(background, manifest.patterns, manifest.inject);
}

void write_benchmark(const InjectedGraph& bench, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_edge_list(bench.graph, dir / "edges.csv");
    write_labels(bench.graph, dir / "labels.csv");
    write_address_map(bench.graph, dir / "address_map.csv");
    auto out = csv::open_output(dir / "injections.csv");
    out << "pattern,kind,seed,node_id,address,anchor\n";
    for (std::size_t i = 0; i < bench.records.size(); ++i) {
        const auto& r = bench.records[i];
        for (NodeId v : r.injected_nodes) {
            out << i << ',' << to_string(r.pattern.kind) << ',' << r.pattern.seed << ',' << v << ','
                << bench.graph.address(v) << ',' << (r.anchor == v ? 1 : 0) << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Structural checks

namespace {

struct PathSearch {
    const TransactionGraph& g;
    std::size_t budget;
    std::size_t expansions = 0;
    std::size_t best = 0;
    bool exhausted = false;
    std::unordered_set<NodeId> on_path;

    void run(NodeId u, std::size_t depth) {
        best = std::max(best, depth);
        if (++expansions > budget) {
            exhausted = true;
            return;
        }
        on_path.insert(u);
        std::unordered_set<NodeId> tried;
        for (NodeId t : g.out_targets(u)) {
            if (exhausted) break;
            if (on_path.count(t) || !tried.insert(t).second) continue;
            run(t, depth + 1);
        }
        on_path.erase(u);
    }
};

bool two_colourable_around(const TransactionGraph& g, NodeId v) {
    // Undirected ball of radius 2.
    std::unordered_map<NodeId, int> dist{{v, 0}};
    std::deque<NodeId> frontier{v};
    auto neighbours = [&](NodeId u, auto&& fn) {
        for (EdgeId e : g.out_edges(u)) fn(g.edge(e).dst);
        for (EdgeId e : g.in_edges(u)) fn(g.edge(e).src);
    };
    while (!frontier.empty()) {
        const NodeId u = frontier.front();
        frontier.pop_front();
        if (dist[u] == 2) continue;
        neighbours(u, [&](NodeId w) {
            if (dist.emplace(w, dist[u] + 1).second) frontier.push_back(w);
        });
    }
    std::unordered_map<NodeId, int> colour;
    for (const auto& [start, _] : dist) {
        if (colour.count(start)) continue;
        colour[start] = 0;
        std::deque<NodeId> queue{start};
        while (!queue.empty()) {
            const NodeId u = queue.front();
            queue.pop_front();
            bool ok = true;
            neighbours(u, [&](NodeId w) {
                if (!dist.count(w)) return;
                if (w == u) {
                    ok = false;
                    return;
                }
                const auto it = colour.find(w);
                if (it == colour.end()) {
                    colour[w] = 1 - colour[u];
                    queue.push_back(w);
                } else if (it->second == colour[u]) {
                    ok = false;
                }
            });
            if (!ok) return false;
        }
    }
    return true;
}

}  // namespace

StructuralStats structural_checks(const TransactionGraph& g, NodeId v, std::size_t path_budget) {
    if (!g.contains(v)) throw LookupError("unknown node id " + std::to_string(v));
    StructuralStats s;
    s.fan_in = fan_in(g, v, DegreeMode::Weighted);
    s.fan_out = fan_out(g, v, DegreeMode::Weighted);
    s.gather_scatter = s.fan_in + s.fan_out;
    s.in_count = g.in_degree(v);
    s.out_count = g.out_degree(v);

    std::vector<NodeId> layer(g.out_targets(v).begin(), g.out_targets(v).end());
    std::sort(layer.begin(), layer.end());
    layer.erase(std::unique(layer.begin(), layer.end()), layer.end());
    if (!layer.empty()) s.random = s.fan_out / static_cast<double>(layer.size());

    PathSearch search{g, path_budget, 0, 0, false, {}};
    search.run(v, 0);
    s.longest_path = search.best;
    s.longest_path_exact = !search.exhausted;
    s.bipartite = two_colourable_around(g, v);
    return s;
}

}  // namespace mpo
