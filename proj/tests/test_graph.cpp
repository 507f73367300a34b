#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "mpo/error.hpp"
#include "mpo/graph.hpp"
#include "test_util.hpp"

using namespace mpo;
using mpo::test::make_graph;
using mpo::test::TempDir;
using mpo::test::write_file;

TEST(Ingest, ThreeRowFile) {
    TempDir dir;
    write_file(dir / "e.csv", "a,b,1,10\nb,c,2,20\na,c,3,15\n");
    const auto g = ingest_edge_list(dir / "e.csv");
    EXPECT_EQ(g.node_count(), 3u);
    EXPECT_EQ(g.edge_count(), 3u);
    EXPECT_EQ(g.id_of("a"), 0u);
    EXPECT_EQ(g.id_of("b"), 1u);
    EXPECT_EQ(g.id_of("c"), 2u);
    EXPECT_EQ(g.edge(2), (Edge{0, 2, 3.0, 15}));
}

TEST(Ingest, HeaderRowIsSkipped) {
    TempDir dir;
    write_file(dir / "e.csv", "src,dst,weight,timestamp\na,b,1,10\n");
    const auto g = ingest_edge_list(dir / "e.csv");
    EXPECT_EQ(g.node_count(), 2u);
    EXPECT_EQ(g.edge_count(), 1u);
}

TEST(Ingest, EmptyFile) {
    TempDir dir;
    write_file(dir / "e.csv", "");
    const auto g = ingest_edge_list(dir / "e.csv");
    EXPECT_EQ(g.node_count(), 0u);
    EXPECT_EQ(g.edge_count(), 0u);
}

TEST(Ingest, NegativeWeightRejected) {
    TempDir dir;
    write_file(dir / "e.csv", "a,b,-1,5\n");
    EXPECT_THROW(ingest_edge_list(dir / "e.csv"), ValidationError);
}

TEST(Ingest, NegativeTimestampRejected) {
    TempDir dir;
    write_file(dir / "e.csv", "a,b,1,-5\n");
    EXPECT_THROW(ingest_edge_list(dir / "e.csv"), ValidationError);
}

TEST(Ingest, MalformedRowReportsLine) {
    TempDir dir;
    write_file(dir / "e.csv", "a,b,1,10\nb,c,x,20\n");
    try {
        ingest_edge_list(dir / "e.csv");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(Ingest, MissingFileThrows) {
    EXPECT_THROW(ingest_edge_list("/nonexistent/mpo/edges.csv"), Error);
}

TEST(Ingest, LabelsAttachAndCreateIsolatedNodes) {
    TempDir dir;
    write_file(dir / "e.csv", "a,b,1,10\n");
    write_file(dir / "l.csv", "address,label\na,1\nb,0\nz,1\n");
    const auto g = ingest_edge_list(dir / "e.csv", dir / "l.csv");
    EXPECT_EQ(g.node_count(), 3u);
    EXPECT_EQ(g.label(g.id_of("a")), 1);
    EXPECT_EQ(g.label(g.id_of("b")), 0);
    EXPECT_EQ(g.out_degree(g.id_of("z")), 0u);
    EXPECT_TRUE(g.has_labels());
}

TEST(Ingest, BadLabelValueRejected) {
    TempDir dir;
    write_file(dir / "e.csv", "a,b,1,10\n");
    write_file(dir / "l.csv", "a,2\n");
    EXPECT_THROW(ingest_edge_list(dir / "e.csv", dir / "l.csv"), ValidationError);
}

TEST(Graph, ParallelEdgesPreserved) {
    const auto g = make_graph({{"a", "b", 1, 1}, {"a", "b", 2, 2}});
    EXPECT_EQ(g.out_degree(0), 2u);
    EXPECT_EQ(g.in_degree(1), 2u);
    EXPECT_DOUBLE_EQ(fan_in(g, 1), 3.0);
}

TEST(Graph, UnknownLookupsThrow) {
    const auto g = make_graph({{"a", "b", 1, 1}});
    EXPECT_THROW(g.id_of("zz"), LookupError);
    EXPECT_THROW(g.out_edges(7), LookupError);
    EXPECT_FALSE(g.find("zz").has_value());
}

TEST(Graph, RoundTripThroughFiles) {
    TempDir dir;
    const auto g = mpo::test::random_digraph(40, 3.0, 5);
    write_edge_list(g, dir / "e.csv");
    const auto h = ingest_edge_list(dir / "e.csv");
    ASSERT_EQ(h.edge_count(), g.edge_count());
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
        const auto& a = g.edge(e);
        const auto& b = h.edge(e);
        EXPECT_EQ(g.address(a.src), h.address(b.src));
        EXPECT_EQ(g.address(a.dst), h.address(b.dst));
        EXPECT_EQ(a.weight, b.weight);
        EXPECT_EQ(a.timestamp, b.timestamp);
    }
}

TEST(Sources, Examples) {
    EXPECT_EQ(identify_sources(make_graph({{"a", "b", 1, 0}, {"b", "c", 1, 0}})), std::vector<NodeId>{0});
    EXPECT_TRUE(identify_sources(make_graph({{"a", "b", 1, 0}, {"b", "a", 1, 0}})).empty());
    EXPECT_EQ(identify_sources(make_graph({{"s", "x", 1, 0}, {"s", "y", 1, 0}, {"s", "z", 1, 0}})),
              std::vector<NodeId>{0});
}

TEST(Sources, IsolatedNodeIsNotASource) {
    GraphBuilder b;
    b.add_node("lonely");
    b.add_edge("a", "b", 1, 0);
    const auto g = b.build();
    EXPECT_EQ(identify_sources(g), std::vector<NodeId>{1});
}

TEST(Fan, WeightedAndCount) {
    const auto g = make_graph({{"x", "v", 2, 0}, {"y", "v", 3, 0}, {"v", "z", 4, 0}});
    const auto v = g.id_of("v");
    EXPECT_DOUBLE_EQ(fan_in(g, v), 5.0);
    EXPECT_DOUBLE_EQ(fan_out(g, v), 4.0);
    EXPECT_DOUBLE_EQ(gather_scatter(g, v), 9.0);
    EXPECT_DOUBLE_EQ(fan_in(g, v, DegreeMode::Count), 2.0);
}

TEST(Fan, UnweightedInCount) {
    const auto g = make_graph({{"a", "v", 7, 0}, {"b", "v", 8, 0}, {"c", "v", 9, 0}});
    EXPECT_DOUBLE_EQ(fan_in(g, g.id_of("v"), DegreeMode::Count), 3.0);
}

TEST(Fan, IsolatedNode) {
    GraphBuilder b;
    b.add_node("i");
    const auto g = b.build();
    EXPECT_EQ(fan_in(g, 0), 0.0);
    EXPECT_EQ(fan_out(g, 0), 0.0);
    EXPECT_EQ(gather_scatter(g, 0), 0.0);
}

class GraphProperty : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(GraphProperty, DegreeSumsAndAdjacencyAgree) {
    const auto g = mpo::test::random_digraph(60, 2.5, GetParam());
    std::size_t out_sum = 0, in_sum = 0;
    double win = 0, wout = 0;
    std::vector<EdgeId> from_out, from_in;
    for (NodeId v = 0; v < g.node_count(); ++v) {
        out_sum += g.out_degree(v);
        in_sum += g.in_degree(v);
        win += fan_in(g, v);
        wout += fan_out(g, v);
        for (auto e : g.out_edges(v)) {
            EXPECT_EQ(g.edge(e).src, v);
            from_out.push_back(e);
        }
        for (auto e : g.in_edges(v)) {
            EXPECT_EQ(g.edge(e).dst, v);
            from_in.push_back(e);
        }
        const auto targets = g.out_targets(v);
        const auto edges = g.out_edges(v);
        ASSERT_EQ(targets.size(), edges.size());
        for (std::size_t i = 0; i < edges.size(); ++i) EXPECT_EQ(targets[i], g.edge(edges[i]).dst);
    }
    EXPECT_EQ(out_sum, g.edge_count());
    EXPECT_EQ(in_sum, g.edge_count());
    const double total = std::accumulate(g.edges().begin(), g.edges().end(), 0.0,
                                         [](double a, const Edge& e) { return a + e.weight; });
    EXPECT_NEAR(win, total, 1e-9 * total);
    EXPECT_NEAR(wout, total, 1e-9 * total);
    std::sort(from_out.begin(), from_out.end());
    std::sort(from_in.begin(), from_in.end());
    EXPECT_EQ(from_out, from_in);
    for (NodeId v = 0; v < g.node_count(); ++v) EXPECT_EQ(g.id_of(g.address(v)), v);
}

INSTANTIATE_TEST_SUITE_P(Seeds, GraphProperty, ::testing::Values(1, 2, 3, 4, 5));

TEST(TimeSpan, Extremes) {
    EXPECT_EQ(time_span(make_graph({{"a", "b", 1, 7}, {"b", "c", 1, 3}, {"c", "a", 1, 12}})),
              (std::pair<Timestamp, Timestamp>{3, 12}));
    EXPECT_EQ(time_span(TransactionGraph{}), (std::pair<Timestamp, Timestamp>{0, 0}));
}
