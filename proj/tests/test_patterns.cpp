#include <algorithm>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "mpo/behavior.hpp"
#include "mpo/error.hpp"
#include "mpo/patterns.hpp"
#include "test_util.hpp"

using namespace mpo;

namespace {

PatternSpec spec(PatternKind kind, unsigned width, unsigned width_out = 5, std::uint64_t seed = 1) {
    PatternSpec s;
    s.kind = kind;
    s.width = width;
    s.width_out = width_out;
    s.seed = seed;
    return s;
}

TransactionGraph small_background(std::size_t n = 100, std::uint64_t seed = 3) {
    BackgroundSpec bg;
    bg.nodes = n;
    bg.mean_out_degree = 3;
    bg.seed = seed;
    return generate_background(bg);
}

TransactionGraph pattern_graph(const GeneratedPattern& p) {
    GraphBuilder b;
    for (unsigned i = 0; i < p.node_count(); ++i) b.add_node("p" + std::to_string(i));
    for (const auto& e : p.edges) b.add_edge(e.src, e.dst, e.weight, e.timestamp);
    return b.build();
}

}  // namespace

TEST(Kind, NamesRoundTrip) {
    for (auto k : {PatternKind::FanIn, PatternKind::FanOut, PatternKind::GatherScatter, PatternKind::Bipartite,
                   PatternKind::Stack, PatternKind::Random})
        EXPECT_EQ(parse_pattern_kind(to_string(k)), k);
    EXPECT_THROW(parse_pattern_kind("spiral"), ValidationError);
}

TEST(Spec, Validation) {
    EXPECT_THROW(spec(PatternKind::FanIn, 0).validate(), ValidationError);
    EXPECT_THROW(spec(PatternKind::Stack, 1).validate(), ValidationError);
    EXPECT_THROW(spec(PatternKind::Bipartite, 2, 0).validate(), ValidationError);
    auto s = spec(PatternKind::Random, 4);
    s.density = 1.5;
    EXPECT_THROW(s.validate(), ValidationError);
    s = spec(PatternKind::FanIn, 3);
    s.weight_lo = 5;
    s.weight_hi = 1;
    EXPECT_THROW(s.validate(), ValidationError);
}

TEST(Generate, FanIn) {
    const auto p = generate_pattern(spec(PatternKind::FanIn, 3));
    const auto g = pattern_graph(p);
    EXPECT_EQ(g.in_degree(0), 3u);
    EXPECT_EQ(g.out_degree(0), 0u);
    EXPECT_EQ(p.roles[0], "hub");
}

TEST(Generate, FanOutMirrorsFanIn) {
    const auto p = generate_pattern(spec(PatternKind::FanOut, 4));
    const auto g = pattern_graph(p);
    EXPECT_EQ(g.out_degree(0), 4u);
    EXPECT_EQ(g.in_degree(0), 0u);
    EXPECT_EQ(p.anchor, 1u);
}

TEST(Generate, StackIsAPathWithIncreasingTimes) {
    const auto p = generate_pattern(spec(PatternKind::Stack, 4));
    ASSERT_EQ(p.edges.size(), 3u);
    const auto g = pattern_graph(p);
    for (NodeId v = 1; v < 3; ++v) {
        EXPECT_EQ(g.in_degree(v), 1u);
        EXPECT_EQ(g.out_degree(v), 1u);
    }
    for (std::size_t i = 1; i < p.edges.size(); ++i) EXPECT_GT(p.edges[i].timestamp, p.edges[i - 1].timestamp);
}

TEST(Generate, GatherScatterHubIsBalanced) {
    auto s = spec(PatternKind::GatherScatter, 3, 2);
    s.weight_lo = s.weight_hi = 1.0;
    const auto p = generate_pattern(s);
    const auto g = pattern_graph(p);
    EXPECT_DOUBLE_EQ(fan_in(g, 0), 3.0);
    EXPECT_DOUBLE_EQ(fan_out(g, 0), 3.0);
    for (auto e : g.out_edges(0)) EXPECT_DOUBLE_EQ(g.edge(e).weight, 1.5);
    EXPECT_EQ(omega(g, 0), 0.0);
    Timestamp last_in = 0, first_out = std::numeric_limits<Timestamp>::max();
    for (auto e : g.in_edges(0)) last_in = std::max(last_in, g.edge(e).timestamp);
    for (auto e : g.out_edges(0)) first_out = std::min(first_out, g.edge(e).timestamp);
    EXPECT_LT(last_in, first_out);
}

TEST(Generate, BipartiteOnlyCrossesSets) {
    const auto p = generate_pattern(spec(PatternKind::Bipartite, 4, 3));
    const auto g = pattern_graph(p);
    for (const auto& e : p.edges) {
        EXPECT_LT(e.src, 4u);
        EXPECT_GE(e.dst, 4u);
    }
    for (NodeId v = 0; v < 7; ++v) EXPECT_GT(g.in_degree(v) + g.out_degree(v), 0u);
}

TEST(Generate, WeightsAndTimesStayInRange) {
    for (auto k : {PatternKind::FanIn, PatternKind::FanOut, PatternKind::Bipartite, PatternKind::Random}) {
        auto s = spec(k, 6, 4, 9);
        s.weight_lo = 2;
        s.weight_hi = 3;
        s.time_lo = 10;
        s.time_hi = 20;
        for (const auto& e : generate_pattern(s).edges) {
            EXPECT_GE(e.weight, 2.0);
            EXPECT_LE(e.weight, 3.0);
            EXPECT_GE(e.timestamp, 10);
            EXPECT_LE(e.timestamp, 20);
        }
    }
}

TEST(Inject, FanInCounts) {
    const auto bg = small_background();
    const std::vector<PatternSpec> specs{spec(PatternKind::FanIn, 5)};
    const auto out = inject(bg, specs);
    EXPECT_LE(out.graph.node_count(), bg.node_count() + 6);
    EXPECT_EQ(out.graph.node_count(), bg.node_count() + 5);
    EXPECT_EQ(out.graph.edge_count(), bg.edge_count() + 5);
    for (NodeId v : out.records[0].injected_nodes) EXPECT_EQ(out.graph.label(v), 1);
    EXPECT_EQ(out.records[0].injected_nodes.size(), 6u);
}

TEST(Inject, WithoutAnchorEveryNodeIsNew) {
    const auto bg = small_background();
    const std::vector<PatternSpec> specs{spec(PatternKind::FanIn, 5)};
    InjectOptions opts;
    opts.anchor = false;
    const auto out = inject(bg, specs, opts);
    EXPECT_EQ(out.graph.node_count(), bg.node_count() + 6);
    EXPECT_FALSE(out.records[0].anchor.has_value());
}

TEST(Inject, EmptySpecListLeavesGraphUnchanged) {
    const auto bg = small_background();
    const auto out = inject(bg, {});
    ASSERT_EQ(out.graph.node_count(), bg.node_count());
    ASSERT_EQ(out.graph.edge_count(), bg.edge_count());
    for (EdgeId e = 0; e < bg.edge_count(); ++e) EXPECT_EQ(out.graph.edge(e), bg.edge(e));
}

TEST(Inject, Deterministic) {
    const auto bg = small_background();
    const std::vector<PatternSpec> specs{spec(PatternKind::Stack, 5), spec(PatternKind::Random, 6, 5, 2)};
    InjectOptions opts;
    opts.seed = 4;
    const auto a = inject(bg, specs, opts);
    const auto b = inject(bg, specs, opts);
    ASSERT_EQ(a.graph.edge_count(), b.graph.edge_count());
    for (EdgeId e = 0; e < a.graph.edge_count(); ++e) EXPECT_EQ(a.graph.edge(e), b.graph.edge(e));
}

TEST(Inject, SpecOrderDoesNotChangeEachPattern) {
    const auto bg = small_background();
    const std::vector<PatternSpec> ab{spec(PatternKind::FanIn, 4, 5, 1), spec(PatternKind::Stack, 5, 5, 2)};
    const std::vector<PatternSpec> ba{ab[1], ab[0]};
    const auto x = inject(bg, ab);
    const auto y = inject(bg, ba);
    auto edge_strings = [](const InjectedGraph& ig, std::size_t r) {
        std::set<std::string> out;
        for (const auto& e : ig.records[r].injected_edges)
            out.insert(ig.graph.address(e.src) + ">" + ig.graph.address(e.dst) + "@" + std::to_string(e.timestamp));
        return out;
    };
    EXPECT_EQ(edge_strings(x, 0), edge_strings(y, 1));
    EXPECT_EQ(edge_strings(x, 1), edge_strings(y, 0));
}

TEST(Inject, TimestampsFallInsideTheWindow) {
    const auto bg = small_background();
    const auto [lo, hi] = time_span(bg);
    const std::vector<PatternSpec> specs{spec(PatternKind::GatherScatter, 4, 4)};
    const auto out = inject(bg, specs);
    Timestamp a = std::numeric_limits<Timestamp>::max(), b = 0;
    for (const auto& e : out.records[0].injected_edges) {
        a = std::min(a, e.timestamp);
        b = std::max(b, e.timestamp);
    }
    EXPECT_GE(a, lo);
    EXPECT_LE(b, hi);
    EXPECT_LE(b - a, static_cast<Timestamp>(std::llround(0.1 * static_cast<double>(hi - lo))));
}

TEST(Inject, Errors) {
    GraphBuilder b;
    b.add_node("only");
    const auto tiny = b.build();
    const std::vector<PatternSpec> two{spec(PatternKind::FanIn, 2, 5, 1), spec(PatternKind::FanOut, 2, 5, 1)};
    EXPECT_THROW(inject(tiny, two), ValidationError);
    const std::vector<PatternSpec> dup{spec(PatternKind::FanIn, 2, 5, 1), spec(PatternKind::FanIn, 3, 5, 1)};
    EXPECT_THROW(inject(small_background(), dup), ValidationError);
}

TEST(Background, ShapeAndLabels) {
    BackgroundSpec bg;
    bg.nodes = 300;
    bg.mean_out_degree = 4;
    bg.seed = 2;
    const auto g = generate_background(bg);
    EXPECT_EQ(g.node_count(), 300u);
    EXPECT_EQ(g.edge_count(), 1200u);
    for (const auto& e : g.edges()) {
        EXPECT_NE(e.src, e.dst);
        EXPECT_GT(e.weight, 0.0);
        EXPECT_GE(e.timestamp, 0);
        EXPECT_LT(e.timestamp, 1000);
    }
    for (NodeId v = 0; v < g.node_count(); ++v) EXPECT_EQ(g.label(v), 0);
    EXPECT_EQ(g.address(7), "bg_7");
}

TEST(Manifest, ConfigRoundTrip) {
    const auto cfg = Config::load(std::string(MPO_SOURCE_DIR) + "/benchmarks/synthetic.manifest");
    const auto m = BenchmarkManifest::from_config(cfg);
    EXPECT_EQ(m.patterns.size(), 5u);
    const auto again = BenchmarkManifest::from_config(m.to_config());
    EXPECT_EQ(again.to_config().serialize(), m.to_config().serialize());
    std::set<PatternKind> kinds;
    for (const auto& p : m.patterns) kinds.insert(p.kind);
    EXPECT_EQ(kinds.size(), 5u);
}

TEST(Manifest, MalformedKeysRejected) {
    EXPECT_THROW(BenchmarkManifest::from_config(Config::parse("pattern.x.kind = fan_in\n")), ConfigError);
    EXPECT_THROW(BenchmarkManifest::from_config(Config::parse("pattern.0.width = 3\n")), ConfigError);
}

TEST(Structural, FanInHubUnitWeights) {
    auto s = spec(PatternKind::FanIn, 3);
    s.weight_lo = s.weight_hi = 1.0;
    const auto g = pattern_graph(generate_pattern(s));
    const auto st = structural_checks(g, 0);
    EXPECT_DOUBLE_EQ(st.gather_scatter, 3.0);
    EXPECT_EQ(st.in_count, 3u);
    EXPECT_EQ(st.out_count, 0u);
}

TEST(Structural, StackHeadLongestPath) {
    const auto g = pattern_graph(generate_pattern(spec(PatternKind::Stack, 5)));
    const auto st = structural_checks(g, 0);
    EXPECT_EQ(st.longest_path, 4u);
    EXPECT_TRUE(st.longest_path_exact);
}

TEST(Structural, BipartiteFlag) {
    auto g = mpo::test::make_graph({{"a", "x", 1, 0}, {"a", "y", 1, 0}, {"b", "x", 1, 0}, {"b", "y", 1, 0}});
    EXPECT_TRUE(structural_checks(g, g.id_of("a")).bipartite);
    g = mpo::test::make_graph({{"a", "x", 1, 0}, {"a", "y", 1, 0}, {"b", "x", 1, 0}, {"b", "y", 1, 0}, {"a", "b", 1, 0}});
    EXPECT_FALSE(structural_checks(g, g.id_of("a")).bipartite);
}

TEST(Structural, RandomIsOutWeightPerNextLayerNode) {
    const auto g = mpo::test::make_graph({{"v", "a", 2, 0}, {"v", "a", 4, 0}, {"v", "b", 3, 0}});
    EXPECT_DOUBLE_EQ(structural_checks(g, g.id_of("v")).random, 4.5);
}

TEST(Structural, PathBudgetIsReported) {
    const auto g = mpo::test::random_digraph(60, 4.0, 1);
    const auto st = structural_checks(g, 0, 50);
    EXPECT_FALSE(st.longest_path_exact);
}

TEST(Benchmark, WriteProducesGroundTruth) {
    mpo::test::TempDir dir;
    auto m = BenchmarkManifest::from_config(Config::load(std::string(MPO_SOURCE_DIR) + "/benchmarks/synthetic.manifest"));
    m.background.nodes = 200;
    const auto bench = build_benchmark(m);
    write_benchmark(bench, dir.path());
    for (const char* f : {"edges.csv", "labels.csv", "address_map.csv", "injections.csv"})
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    std::size_t injected = 0;
    for (const auto& r : bench.records) injected += r.injected_nodes.size();
    std::size_t positives = 0;
    for (NodeId v = 0; v < bench.graph.node_count(); ++v) positives += bench.graph.label(v) == 1;
    EXPECT_EQ(positives, injected);
}
