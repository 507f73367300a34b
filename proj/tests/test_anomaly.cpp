#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "mpo/anomaly.hpp"
#include "mpo/error.hpp"
#include "test_util.hpp"

using namespace mpo;

namespace {

PPRScoreSet scores_over(std::vector<NodeId> visited, std::vector<double> scaled) {
    PPRScoreSet pps;
    pps.visited = std::move(visited);
    pps.aggregated = scaled;
    pps.scaled = std::move(scaled);
    return pps;
}

PatternFeatureSet features(std::vector<NodeId> nodes, std::vector<double> f) { return {std::move(nodes), std::move(f)}; }

}  // namespace

TEST(Sigma, DirectDivision) {
    const auto sas = anomaly_scores(scores_over({0}, {0.2}), features({0}, {0.5}));
    EXPECT_DOUBLE_EQ(sas.sigma[0], 0.4);
}

TEST(Sigma, FloorArithmetic) {
    const auto sas = anomaly_scores(scores_over({0}, {0.2}), features({0}, {1e-6}));
    EXPECT_NEAR(sas.sigma[0], 2e5, 1e-6);
}

TEST(Sigma, TiesRankLowerIdFirst) {
    const auto sas = anomaly_scores(scores_over({0, 1, 2}, {0.5, 0.25, 0.25}), features({0, 1, 2}, {1.0, 0.5, 0.5}));
    EXPECT_EQ(sas.ranking, (std::vector<NodeId>{0, 1, 2}));
}

TEST(Sigma, MissingFeatureNamesTheNode) {
    try {
        anomaly_scores(scores_over({0, 3}, {0.1, 0.2, 0.0, 0.7}), features({0}, {1.0}));
        FAIL() << "expected ConsistencyError";
    } catch (const ConsistencyError& e) {
        EXPECT_NE(std::string(e.what()).find(" 3"), std::string::npos);
    }
}

TEST(Ranking, UnvisitedNodesFollowInIdOrder) {
    const std::vector<double> values{0.0, 5.0, 0.0, 1.0, 0.0};
    const std::vector<NodeId> scored{3, 1};
    const auto sas = rank_scores(values, scored);
    EXPECT_EQ(sas.ranking, (std::vector<NodeId>{1, 3, 0, 2, 4}));
    EXPECT_EQ(sas.scored_count, 2u);
    EXPECT_EQ(sas.sigma[0], 0.0);
}

TEST(TopK, Examples) {
    const std::vector<double> values{3.0, 1.0, 2.0};
    const std::vector<NodeId> scored{0, 1, 2};
    const auto sas = rank_scores(values, scored);
    EXPECT_EQ(top_k(sas, 2), (std::vector<NodeId>{0, 2}));
    EXPECT_EQ(top_k(sas, 1), (std::vector<NodeId>{0}));
    EXPECT_EQ(top_k(sas, 3), sas.ranking);
    EXPECT_THROW(top_k(sas, 0), ValidationError);
    EXPECT_THROW(top_k(sas, 4), ValidationError);
}

TEST(SigmaProperty, PermutationFiniteAndScaleInvariantOrder) {
    Rng rng(5);
    const std::size_t n = 200;
    std::vector<NodeId> visited;
    std::vector<double> scaled(n, 0.0);
    for (NodeId v = 0; v < n; ++v) {
        if (rng.bernoulli(0.7)) {
            visited.push_back(v);
            scaled[v] = rng.uniform(0.01, 1.0);
        }
    }
    std::vector<double> f;
    for (std::size_t i = 0; i < visited.size(); ++i) f.push_back(std::max(kFFloor, rng.uniform()));
    const auto sas = anomaly_scores(scores_over(visited, scaled), features(visited, f));
    auto sorted = sas.ranking;
    std::sort(sorted.begin(), sorted.end());
    for (NodeId v = 0; v < n; ++v) EXPECT_EQ(sorted[v], v);
    for (double s : sas.sigma) EXPECT_TRUE(std::isfinite(s));
    for (std::size_t i = 1; i < sas.scored_count; ++i) EXPECT_GE(sas.sigma[sas.ranking[i - 1]], sas.sigma[sas.ranking[i]]);

    auto doubled = scaled;
    for (auto& x : doubled) x *= 2.0;
    const auto twice = anomaly_scores(scores_over(visited, doubled), features(visited, f));
    EXPECT_EQ(twice.ranking, sas.ranking);
}

TEST(SuspectReport, HeaderAndRows) {
    mpo::test::TempDir dir;
    const auto g = mpo::test::make_graph({{"a", "b", 1, 0}, {"b", "c", 1, 0}});
    const auto pps = scores_over({0, 1, 2}, {1.0, 0.5, 0.25});
    const auto pfs = features({0, 1, 2}, {1.0, 0.1, 0.5});
    BehaviorScores bs;
    bs.theta = {{0, 1, 2}, {0, 0, 0}, {0, 0, 0}};
    bs.omega = {{0, 1, 2}, {1, 0, 1}, {1, 0, 1}};
    const auto sas = anomaly_scores(pps, pfs);
    write_suspect_report(g, sas, pps, pfs, bs, 2, dir / "s.csv");
    const auto text = mpo::test::read_file(dir / "s.csv");
    EXPECT_EQ(text.substr(0, text.find('\n')), "rank,node_id,address,sigma,pi,f_value,theta_norm,omega_norm");
    EXPECT_NE(text.find("1,1,b,5,0.5,0.1,0,0"), std::string::npos);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}
