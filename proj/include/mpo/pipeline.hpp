#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mpo/anomaly.hpp"
#include "mpo/behavior.hpp"
#include "mpo/classifier.hpp"
#include "mpo/config.hpp"
#include "mpo/graph.hpp"
#include "mpo/metrics.hpp"
#include "mpo/ppr.hpp"

namespace mpo {

enum class Mode {
    Full,          ///< sigma = pi / F
    NormalizedTW,  ///< sigma = 1 / F over the same visited set; no PPR evidence
    RandomOnly,    ///< sigma = pi; no classifier
};

/// full, tw, random
Mode parse_mode(std::string_view name);
std::string_view to_string(Mode mode);

/// Which labelled nodes the metrics are computed on.
enum class EvalScope {
    Test,  ///< the held-out test fold of the classifier split
    All,   ///< every labelled node of the graph; unvisited nodes rank last with sigma 0
};

EvalScope parse_scope(std::string_view name);
std::string_view to_string(EvalScope scope);

struct PipelineConfig {
    PPRConfig ppr;
    TrainConfig train;
    unsigned threads = 1;
    std::optional<std::size_t> k;  ///< defaults to the number of positives in the evaluated population
    EvalScope scope = EvalScope::Test;

    /// Keys: ppr.{alpha,epsilon,p_f,hop_cap,seed,dangling_rule}, train.{split,seed,reg_grid,iter_cap,
    /// tolerance,standardize}, eval.{k,scope}, run.threads. hop_cap and k accept `none`.
    static PipelineConfig from_config(const Config& cfg);
    /// Every key with its resolved value.
    Config to_config() const;
    void validate() const;
};

PPRConfig ppr_config_from(const Config& cfg);
void ppr_config_to(const PPRConfig& ppr, Config& cfg);

/// Intermediate artefacts of one pipeline run.
struct PipelineState {
    std::vector<NodeId> sources;
    PPRScoreSet pps;
    BehaviorScores behavior;
    std::vector<FeatureRow> rows;
    TrainResult training;          ///< split indices refer to `rows`
    std::vector<NodeId> test_nodes;
    PatternFeatureSet pfs;
};

/// PPR from every zero-in-degree source, behaviour scores over SVN, features with the graph's
/// labels, classifier training on the labelled SVN rows, and F for every SVN node.
PipelineState run_stages(const TransactionGraph& g, const PipelineConfig& cfg);

AnomalyScoreSet mode_scores(const PipelineState& state, Mode mode);

struct EvalReport {
    Mode mode = Mode::Full;
    EvalScope scope = EvalScope::Test;
    TopKMetrics at_k;
    double auc = 0.0;
    /// Test-fold metrics, reported alongside when scope is All and the fold holds both classes.
    std::optional<TopKMetrics> test_at_k;
    std::optional<double> test_auc;

    std::size_t node_count = 0;
    std::size_t edge_count = 0;
    std::size_t source_count = 0;
    std::size_t visited_count = 0;
    double reg_strength = 0.0;
    std::string config_hash;  ///< FNV-1a of the resolved config with run.threads fixed at 1
    std::uint64_t seed = 0;
    std::string dataset_id;
    double wall_clock_seconds = 0.0;
};

/// Metrics of one mode over the configured population.
EvalReport evaluate(const TransactionGraph& g, const PipelineState& state, Mode mode, const PipelineConfig& cfg);

/// Loads a graph directory and runs every stage plus evaluation.
EvalReport run_pipeline(const std::filesystem::path& dataset, const PipelineConfig& cfg, Mode mode);

/// Flat JSON object with every report field. `include_wall_clock` = false drops the only
/// non-deterministic field.
std::string report_json(const EvalReport& report, bool include_wall_clock = true);

/// config_hash, seed, dataset checksum, graph size and mode.
std::string run_manifest_json(const EvalReport& report);

}  // namespace mpo
