#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "mpo/error.hpp"
#include "mpo/ppr.hpp"
#include "test_util.hpp"

using namespace mpo;
using mpo::test::make_graph;
using mpo::test::random_digraph;

namespace {

PPRConfig config(double eps = 0.5, double p_f = 1.0, std::uint64_t seed = 1) {
    PPRConfig c;
    c.epsilon = eps;
    c.p_f = p_f;
    c.seed = seed;
    return c;
}

double total(const SparseScores& s) {
    return std::accumulate(s.begin(), s.end(), 0.0, [](double a, const auto& e) { return a + e.second; });
}

}  // namespace

TEST(WalkBudget, HandTrace) {
    EXPECT_EQ(walk_budget(2, config(0.5, 1.0)), 52u);
    EXPECT_NEAR(walk_budget_raw(2, config(0.5, 1.0)), 51.75, 0.01);
}

TEST(WalkBudget, DegreeFloorAndLinearity) {
    const auto c = config(0.3, 0.01);
    EXPECT_EQ(walk_budget_raw(0, c), walk_budget_raw(1, c));
    EXPECT_NEAR(walk_budget_raw(6, c), 2.0 * walk_budget_raw(3, c), 1e-9);
    EXPECT_GE(walk_budget(0, config(100.0, 1.0)), 1u);
}

TEST(PPRConfig, Validation) {
    auto c = config();
    c.alpha = 1.5;
    EXPECT_THROW(c.validate(), ValidationError);
    c = config();
    c.alpha = 0.0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = config();
    c.epsilon = 0.0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = config();
    c.p_f = 0.0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = config();
    c.hop_cap = 0u;
    EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Oracle, SingleNode) {
    GraphBuilder b;
    b.add_node("s");
    const auto g = b.build();
    EXPECT_NEAR(exact_ppr_oracle(g, 0, 0.5)[0], 1.0, 1e-12);
}

TEST(Oracle, TwoCycle) {
    const auto g = make_graph({{"a", "b", 1, 0}, {"b", "a", 1, 0}});
    const auto pi = exact_ppr_oracle(g, 0, 0.5);
    EXPECT_NEAR(pi[0], 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(pi[1], 1.0 / 3.0, 1e-12);
}

TEST(Oracle, ChainAbsorbs) {
    const auto g = make_graph({{"a", "b", 1, 0}, {"b", "c", 1, 0}});
    const auto pi = exact_ppr_oracle(g, 0, 0.5);
    EXPECT_NEAR(pi[0], 0.5, 1e-12);
    EXPECT_NEAR(pi[1], 0.25, 1e-12);
    EXPECT_NEAR(pi[2], 0.25, 1e-12);
}

TEST(Oracle, ChainTeleport) {
    // a -> b -> c, c jumps back to a: pi = alpha e_a + (1-alpha) pi P with P(c,a) = 1.
    // pi_a = 0.5 + 0.5 pi_c, pi_b = 0.5 pi_a, pi_c = 0.5 pi_b  =>  pi_a = 4/7.
    const auto g = make_graph({{"a", "b", 1, 0}, {"b", "c", 1, 0}});
    const auto pi = exact_ppr_oracle(g, 0, 0.5, DanglingRule::Teleport);
    EXPECT_NEAR(pi[0], 4.0 / 7.0, 1e-12);
    EXPECT_NEAR(pi[1], 2.0 / 7.0, 1e-12);
    EXPECT_NEAR(pi[2], 1.0 / 7.0, 1e-12);
}

TEST(Oracle, StochasticOnRandomGraphs) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto g = random_digraph(40, 2.0, seed);
        for (auto rule : {DanglingRule::Absorb, DanglingRule::Teleport}) {
            const auto pi = exact_ppr_oracle(g, 0, 0.3, rule);
            EXPECT_NEAR(std::accumulate(pi.begin(), pi.end(), 0.0), 1.0, 1e-10);
        }
    }
}

TEST(Push, IsolatedSourceKeepsResidual) {
    GraphBuilder b;
    b.add_node("s");
    b.add_edge("x", "y", 1, 0);
    const auto g = b.build();
    const auto push = forward_push(g, 0, config());
    ASSERT_EQ(push.residuals.size(), 1u);
    EXPECT_EQ(push.residuals[0], (std::pair<NodeId, double>{0, 1.0}));
    EXPECT_EQ(total(push.reserves), 0.0);
}

TEST(Push, MassConservation) {
    const auto g = random_digraph(80, 3.0, 9);
    const auto cfg = config(0.2, 0.01);
    for (NodeId s = 0; s < 10; ++s) {
        const auto push = forward_push(g, s, cfg);
        EXPECT_NEAR(total(push.reserves) + total(push.residuals), 1.0, 1e-12);
    }
}

TEST(Push, ThresholdHoldsAfterTermination) {
    const auto g = random_digraph(80, 3.0, 4);
    const auto cfg = config(0.2, 0.01);
    for (NodeId s = 0; s < 10; ++s) {
        const auto push = forward_push(g, s, cfg);
        const double K = static_cast<double>(push.walk_budget);
        EXPECT_EQ(push.walk_budget, walk_budget(g.out_degree(s), cfg));
        for (const auto& [u, r] : push.residuals) {
            if (g.out_degree(u) == 0) continue;
            EXPECT_LE(r, static_cast<double>(g.out_degree(u)) / (cfg.alpha * K) + 1e-15);
        }
    }
}

class PushInvariant : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(PushInvariant, ExactDecomposition) {
    const auto seed = GetParam();
    const auto g = random_digraph(10 + seed * 4, 1.5 + 0.5 * static_cast<double>(seed % 4), seed);
    for (auto rule : {DanglingRule::Absorb, DanglingRule::Teleport}) {
        auto cfg = config(0.3, 0.1);
        cfg.dangling = rule;
        for (NodeId s = 0; s < g.node_count(); s += 3) {
            const auto push = forward_push(g, s, cfg);
            const auto exact = exact_ppr_oracle(g, s, cfg.alpha, rule, s);
            std::vector<double> rhs(g.node_count(), 0.0);
            for (const auto& [v, p] : push.reserves) rhs[v] += p;
            for (const auto& [u, r] : push.residuals) {
                const auto from_u = exact_ppr_oracle(g, u, cfg.alpha, rule, s);
                for (NodeId v = 0; v < g.node_count(); ++v) rhs[v] += r * from_u[v];
            }
            for (NodeId v = 0; v < g.node_count(); ++v) EXPECT_NEAR(exact[v], rhs[v], 1e-9);
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Graphs, PushInvariant, ::testing::Range<std::uint64_t>(1, 9));

TEST(MonteCarlo, NoResidualMeansNoChange) {
    const auto g = make_graph({{"a", "b", 1, 0}});
    PushResult push;
    push.walk_budget = 10;
    push.reserves = {{0, 0.5}, {1, 0.25}};
    const auto out = monte_carlo_refine(g, 0, push, config());
    EXPECT_EQ(out, push.reserves);
}

TEST(MonteCarlo, SingleNodeAbsorbsEverything) {
    GraphBuilder b;
    b.add_node("s");
    const auto g = b.build();
    const auto push = forward_push(g, 0, config());
    const auto out = monte_carlo_refine(g, 0, push, config());
    ASSERT_EQ(out.size(), 1u);
    EXPECT_NEAR(out[0].second, 1.0, 1e-12);
}

TEST(MonteCarlo, Deterministic) {
    const auto g = random_digraph(100, 3.0, 21);
    const auto cfg = config(0.3, 0.01, 77);
    const auto push = forward_push(g, 5, cfg);
    EXPECT_EQ(monte_carlo_refine(g, 5, push, cfg), monte_carlo_refine(g, 5, push, cfg));
}

TEST(MultiSource, ChainMatchesOracle) {
    const auto g = make_graph({{"a", "b", 1, 0}, {"b", "c", 1, 0}});
    const std::vector<NodeId> sources{0};
    const auto pps = multi_source_ppr(g, sources, config(0.1, 0.01));
    EXPECT_NEAR(pps.score(0, 0), 0.5, 0.05);
    EXPECT_NEAR(pps.score(0, 1), 0.25, 0.025);
    EXPECT_NEAR(pps.score(0, 2), 0.25, 0.025);
    EXPECT_EQ(pps.visited, (std::vector<NodeId>{0, 1, 2}));
}

TEST(MultiSource, EmptySources) {
    const auto g = make_graph({{"a", "b", 1, 0}, {"b", "a", 1, 0}});
    const auto pps = multi_source_ppr(g, {}, config());
    EXPECT_TRUE(pps.empty_sources);
    EXPECT_TRUE(pps.per_source.empty());
    EXPECT_TRUE(pps.visited.empty());
}

TEST(MultiSource, DisjointChainsAggregateAsUnion) {
    const auto g = make_graph({{"a", "b", 1, 0}, {"b", "c", 1, 0}, {"x", "y", 1, 0}, {"y", "z", 1, 0}});
    const auto cfg = config(0.2, 0.01, 3);
    const std::vector<NodeId> both{0, 3}, left{0}, right{3};
    const auto all = multi_source_ppr(g, both, cfg);
    const auto a = multi_source_ppr(g, left, cfg);
    const auto b = multi_source_ppr(g, right, cfg);
    for (NodeId v = 0; v < g.node_count(); ++v) EXPECT_EQ(all.aggregated[v], a.aggregated[v] + b.aggregated[v]);
    EXPECT_EQ(all.visited.size(), a.visited.size() + b.visited.size());
}

TEST(MultiSource, InvariantsOnRandomGraphs) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const auto g = random_digraph(150, 2.5, seed * 31);
        const auto sources = identify_sources(g);
        auto cfg = config(0.2, 0.01, seed);
        const auto pps = multi_source_ppr(g, sources, cfg);
        double max_scaled = 0.0;
        for (const auto& ss : pps.per_source) {
            EXPECT_LE(total(ss.scores), 1.0 + cfg.epsilon);
            for (const auto& [v, p] : ss.scores) {
                EXPECT_GE(p, 0.0);
                if (p > 0) EXPECT_TRUE(pps.is_visited(v));
            }
        }
        for (NodeId v : pps.visited) max_scaled = std::max(max_scaled, pps.scaled[v]);
        if (!pps.visited.empty()) EXPECT_DOUBLE_EQ(max_scaled, 1.0);
    }
}

TEST(MultiSource, ThreadCountDoesNotChangeResult) {
    const auto g = random_digraph(300, 2.0, 8);
    auto sources = identify_sources(g);
    if (sources.empty()) sources = {0, 1, 2};
    const auto cfg = config(0.3, 0.01, 5);
    const auto one = multi_source_ppr(g, sources, cfg, 1);
    const auto four = multi_source_ppr(g, sources, cfg, 4);
    EXPECT_EQ(one.aggregated, four.aggregated);
    EXPECT_EQ(one.visited, four.visited);
    for (std::size_t i = 0; i < one.per_source.size(); ++i) EXPECT_EQ(one.per_source[i].scores, four.per_source[i].scores);
}

TEST(MultiSource, HopCapCoverageIsMonotone) {
    const auto g = random_digraph(200, 1.5, 12);
    std::vector<NodeId> sources{0, 1, 2};
    std::vector<NodeId> previous;
    for (unsigned m = 1; m <= 6; ++m) {
        auto cfg = config(0.3, 0.1, 2);
        cfg.hop_cap = m;
        const auto pps = multi_source_ppr(g, sources, cfg);
        EXPECT_TRUE(std::includes(pps.visited.begin(), pps.visited.end(), previous.begin(), previous.end()));
        for (NodeId v = 0; v < g.node_count(); ++v) {
            if (pps.aggregated[v] > 0) EXPECT_TRUE(pps.is_visited(v));
        }
        previous = pps.visited;
    }
}

TEST(MultiSource, HopCapOneKeepsDirectNeighbours) {
    const auto g = make_graph({{"a", "b", 1, 0}, {"b", "c", 1, 0}, {"c", "d", 1, 0}});
    auto cfg = config();
    cfg.hop_cap = 1u;
    const std::vector<NodeId> sources{0};
    const auto pps = multi_source_ppr(g, sources, cfg);
    EXPECT_EQ(pps.visited, (std::vector<NodeId>{0, 1}));
    EXPECT_EQ(pps.aggregated[2], 0.0);
    EXPECT_EQ(pps.aggregated[3], 0.0);
}

TEST(MultiSource, DumpRoundTrip) {
    mpo::test::TempDir dir;
    const auto g = random_digraph(80, 2.0, 3);
    auto sources = identify_sources(g);
    const auto pps = multi_source_ppr(g, sources, config(0.3, 0.1, 4));
    write_ppr_dump(g, pps, dir / "s.csv", dir / "v.csv");
    const auto back = read_ppr_dump(g, dir / "s.csv", dir / "v.csv");
    EXPECT_EQ(back.visited, pps.visited);
    EXPECT_EQ(back.aggregated, pps.aggregated);
    EXPECT_EQ(back.scaled, pps.scaled);
}
