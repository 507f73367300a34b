#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpo/config.hpp"
#include "mpo/graph.hpp"

namespace mpo {

enum class PatternKind { FanIn, FanOut, GatherScatter, Bipartite, Stack, Random };

/// fan_in, fan_out, gather_scatter, bipartite, stack, random
std::string_view to_string(PatternKind kind);
PatternKind parse_pattern_kind(std::string_view name);

struct PatternSpec {
    PatternKind kind = PatternKind::FanIn;
    /// Leaves of a fan, gather-side leaves, left set size, stack length k, or node count of a random pattern.
    unsigned width = 5;
    /// Scatter-side leaves or right set size; unused by the other kinds.
    unsigned width_out = 5;
    /// Edge probability for bipartite extras and random patterns.
    double density = 0.4;
    double weight_lo = 1.0;
    double weight_hi = 10.0;
    Timestamp time_lo = 0;
    Timestamp time_hi = 100;
    /// Random kind only: spread timestamps over the whole background instead of a compressed window.
    bool random_timing = false;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Edge between local pattern node indices.
struct PatternEdge {
    unsigned src = 0;
    unsigned dst = 0;
    double weight = 0.0;
    Timestamp timestamp = 0;
};

struct GeneratedPattern {
    PatternKind kind = PatternKind::FanIn;
    std::vector<std::string> roles;  ///< one per local node
    std::vector<PatternEdge> edges;
    unsigned anchor = 0;             ///< local node merged into the background on injection

    std::size_t node_count() const noexcept { return roles.size(); }
};

/// Builds the pattern subgraph from the pattern's own seed. Weights are uniform in the weight range and
/// timestamps lie in the time range, except that a gather-scatter hub forwards its total intake split
/// evenly (and later) across its outputs and a stack relays one amount along the path with
/// increasing timestamps.
GeneratedPattern generate_pattern(const PatternSpec& spec);

struct InjectOptions {
    double window_ratio = 0.1;  ///< pattern timestamps squeezed into this fraction of the background span
    std::uint64_t seed = 0;
    bool anchor = true;         ///< merge one node of each pattern onto an existing background node
};

struct InjectionRecord {
    PatternSpec pattern;
    std::vector<NodeId> injected_nodes;  ///< ascending; includes the anchor
    std::vector<Edge> injected_edges;
    std::optional<NodeId> anchor;
};

struct InjectedGraph {
    TransactionGraph graph;
    std::vector<InjectionRecord> records;
};

/// Copies g (ids, addresses, labels and edges unchanged) and attaches every pattern. New nodes are
/// named `inj_<kind>_<seed>_<local index>`; each pattern's anchor is a distinct background node chosen
/// from the pattern's own stream. All pattern nodes are labelled 1. Throws ValidationError when more
/// anchors are requested than g has nodes, or when two specs share kind and seed.
InjectedGraph inject(const TransactionGraph& g, std::span<const PatternSpec> specs, const InjectOptions& opts = {});

struct BackgroundSpec {
    std::size_t nodes = 2000;
    double mean_out_degree = 8.0;
    double weight_log_mean = std::log(50.0);
    double weight_log_sd = 1.0;
    Timestamp time_span = 1000;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Uniform random directed multigraph without self-loops, lognormal amounts, uniform timestamps in
/// [0, time_span). Nodes are `bg_<i>` and labelled 0.
TransactionGraph generate_background(const BackgroundSpec& spec);

struct BenchmarkManifest {
    BackgroundSpec background;
    std::vector<PatternSpec> patterns;
    InjectOptions inject;

    /// Keys: background.{nodes,mean_out_degree,weight_log_mean,weight_log_sd,time_span,seed},
    /// inject.{window_ratio,seed,anchor}, pattern.<i>.{kind,width,width_out,density,weight_range,
    /// time_range,random_timing,seed}.
    static BenchmarkManifest from_config(const Config& cfg);
    Config to_config() const;
};

InjectedGraph build_benchmark(const BenchmarkManifest& manifest);

/// edges.csv, labels.csv, address_map.csv and injections.csv (`pattern,kind,seed,node_id,address,anchor`).
void write_benchmark(const InjectedGraph& bench, const std::filesystem::path& dir);

struct StructuralStats {
    double fan_in = 0.0;
    double fan_out = 0.0;
    double gather_scatter = 0.0;
    std::size_t in_count = 0;
    std::size_t out_count = 0;
    double random = 0.0;              ///< out weight per distinct out-neighbour (next BFS layer)
    std::size_t longest_path = 0;     ///< edges on the longest simple outgoing path from v
    bool longest_path_exact = true;   ///< false when the search hit its expansion budget
    bool bipartite = true;            ///< undirected radius-2 neighbourhood of v is 2-colourable
};

StructuralStats structural_checks(const TransactionGraph& g, NodeId v, std::size_t path_budget = 1'000'000);

}  // namespace mpo
