#include "mpo/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "mpo/csv.hpp"
#include "mpo/dataset.hpp"
#include "mpo/error.hpp"

namespace mpo {

namespace {

std::string join_doubles(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += csv::format_double(values[i]);
    }
    return out;
}

}  // namespace

Mode parse_mode(std::string_view name) {
    if (name == "full") return Mode::Full;
    if (name == "tw") return Mode::NormalizedTW;
    if (name == "random") return Mode::RandomOnly;
    throw ValidationError("unknown mode '" + std::string(name) + "' (expected full, tw or random)");
}

std::string_view to_string(Mode mode) {
    switch (mode) {
    case Mode::Full: return "full";
    case Mode::NormalizedTW: return "tw";
    case Mode::RandomOnly: return "random";
    }
    return "unknown";
}

EvalScope parse_scope(std::string_view name) {
    if (name == "test") return EvalScope::Test;
    if (name == "all") return EvalScope::All;
    throw ValidationError("unknown evaluation scope '" + std::string(name) + "' (expected test or all)");
}

std::string_view to_string(EvalScope scope) { return scope == EvalScope::Test ? "test" : "all"; }

PPRConfig ppr_config_from(const Config& cfg) {
    PPRConfig ppr;
    ppr.alpha = cfg.get_double("ppr.alpha", ppr.alpha);
    ppr.epsilon = cfg.get_double("ppr.epsilon", ppr.epsilon);
    ppr.p_f = cfg.get_double("ppr.p_f", ppr.p_f);
    if (const auto cap = cfg.get("ppr.hop_cap"); cap && *cap != "none") {
        const auto m = csv::parse_int(*cap);
        if (!m || *m < 1 || *m > 1'000'000) throw ValidationError("ppr.hop_cap must be a positive integer or none");
        ppr.hop_cap = static_cast<unsigned>(*m);
    }
    ppr.seed = cfg.get_uint("ppr.seed", ppr.seed);
    const auto rule = cfg.get_string("ppr.dangling_rule", "absorb");
    if (rule == "absorb") ppr.dangling = DanglingRule::Absorb;
    else if (rule == "teleport") ppr.dangling = DanglingRule::Teleport;
    else throw ValidationError("ppr.dangling_rule must be absorb or teleport");
    ppr.validate();
    return ppr;
}

void ppr_config_to(const PPRConfig& ppr, Config& cfg) {
    cfg.set("ppr.alpha", csv::format_double(ppr.alpha));
    cfg.set("ppr.epsilon", csv::format_double(ppr.epsilon));
    cfg.set("ppr.p_f", csv::format_double(ppr.p_f));
    cfg.set("ppr.hop_cap", ppr.hop_cap ? std::to_string(*ppr.hop_cap) : "none");
    cfg.set("ppr.seed", std::to_string(ppr.seed));
    cfg.set("ppr.dangling_rule", ppr.dangling == DanglingRule::Absorb ? "absorb" : "teleport");
}

PipelineConfig PipelineConfig::from_config(const Config& cfg) {
    PipelineConfig pc;
    pc.ppr = ppr_config_from(cfg);
    const auto split = cfg.get_doubles("train.split", {pc.train.split.train, pc.train.split.validation, pc.train.split.test});
    if (split.size() != 3) throw ValidationError("train.split expects three fractions");
    pc.train.split = {split[0], split[1], split[2]};
    pc.train.seed = cfg.get_uint("train.seed", pc.train.seed);
    pc.train.reg_grid = cfg.get_doubles("train.reg_grid", pc.train.reg_grid);
    const auto cap = cfg.get_int("train.iter_cap", pc.train.iter_cap);
    if (cap < 1 || cap > 100'000'000) throw ValidationError("train.iter_cap must be a positive integer");
    pc.train.iter_cap = static_cast<unsigned>(cap);
    pc.train.tolerance = cfg.get_double("train.tolerance", pc.train.tolerance);
    pc.train.standardize = cfg.get_bool("train.standardize", pc.train.standardize);
    if (const auto k = cfg.get("eval.k"); k && *k != "none") {
        const auto v = csv::parse_int(*k);
        if (!v || *v < 1) throw ValidationError("eval.k must be a positive integer or none");
        pc.k = static_cast<std::size_t>(*v);
    }
    pc.scope = parse_scope(cfg.get_string("eval.scope", "test"));
    const auto threads = cfg.get_int("run.threads", pc.threads);
    if (threads < 1 || threads > 1024) throw ValidationError("run.threads must lie in [1, 1024]");
    pc.threads = static_cast<unsigned>(threads);
    pc.validate();
    return pc;
}

Config PipelineConfig::to_config() const {
    Config cfg;
    ppr_config_to(ppr, cfg);
    cfg.set("train.split", join_doubles({train.split.train, train.split.validation, train.split.test}));
    cfg.set("train.seed", std::to_string(train.seed));
    cfg.set("train.reg_grid", join_doubles(train.reg_grid));
    cfg.set("train.iter_cap", std::to_string(train.iter_cap));
    cfg.set("train.tolerance", csv::format_double(train.tolerance));
    cfg.set("train.standardize", train.standardize ? "true" : "false");
    cfg.set("eval.k", k ? std::to_string(*k) : "none");
    cfg.set("eval.scope", std::string(to_string(scope)));
    cfg.set("run.threads", std::to_string(threads));
    return cfg;
}

void PipelineConfig::validate() const {
    ppr.validate();
    train.split.validate();
    if (train.reg_grid.empty()) throw ValidationError("train.reg_grid is empty");
    for (double l : train.reg_grid) {
        if (!(l >= 0.0)) throw ValidationError("train.reg_grid values must be non-negative");
    }
    if (!(train.tolerance > 0.0)) throw ValidationError("train.tolerance must be positive");
    if (k && *k == 0) throw ValidationError("eval.k must be positive");
    if (threads == 0) throw ValidationError("run.threads must be positive");
}

PipelineState run_stages(const TransactionGraph& g, const PipelineConfig& cfg) {
    cfg.validate();
    PipelineState state;
    state.sources = identify_sources(g);
    state.pps = multi_source_ppr(g, state.sources, cfg.ppr, cfg.threads);
    state.behavior = behavior_scores(g, state.pps.visited);
    state.rows = build_features(state.behavior, g.labels());
    state.training = train(state.rows, cfg.train);
    for (auto i : state.training.split.test) state.test_nodes.push_back(state.rows[i].node);
    std::sort(state.test_nodes.begin(), state.test_nodes.end());
    state.pfs = predict_f(state.training.model, state.rows);
    return state;
}

AnomalyScoreSet mode_scores(const PipelineState& state, Mode mode) {
    const auto& pps = state.pps;
    switch (mode) {
    case Mode::Full:
        return anomaly_scores(pps, state.pfs);
    case Mode::NormalizedTW: {
        std::vector<double> values(pps.scaled.size(), 0.0);
        for (NodeId v : pps.visited) {
            const auto f = state.pfs.find(v);
            if (!f) throw ConsistencyError("visited node " + std::to_string(v) + " lacks a pattern feature");
            values[v] = 1.0 / *f;
        }
        return rank_scores(values, pps.visited);
    }
    case Mode::RandomOnly:
        return rank_scores(pps.scaled, pps.visited);
    }
    throw ValidationError("unknown mode");
}

namespace {

struct Population {
    std::vector<NodeId> ranking;
    std::vector<double> scores;
    std::vector<int> labels;
    std::size_t positives = 0;
};

template <typename Keep>
Population population(const TransactionGraph& g, const AnomalyScoreSet& sas, Keep keep) {
    Population p;
    const auto labels = g.labels();
    for (NodeId v : sas.ranking) {
        if (labels[v] == TransactionGraph::kUnlabeled || !keep(v)) continue;
        p.ranking.push_back(v);
        p.scores.push_back(sas.sigma[v]);
        p.labels.push_back(labels[v]);
        p.positives += labels[v] == 1;
    }
    return p;
}

}  // namespace

EvalReport evaluate(const TransactionGraph& g, const PipelineState& state, Mode mode, const PipelineConfig& cfg) {
    EvalReport report;
    report.mode = mode;
    report.scope = cfg.scope;
    report.node_count = g.node_count();
    report.edge_count = g.edge_count();
    report.source_count = state.sources.size();
    report.visited_count = state.pps.visited.size();
    report.reg_strength = state.training.model.reg_strength;
    // The worker count cannot change any result, so it stays out of the hash.
    auto hashed = cfg;
    hashed.threads = 1;
    report.config_hash = hex64(fnv1a64(hashed.to_config().serialize()));
    report.seed = cfg.ppr.seed;
    report.dataset_id = hex64(graph_checksum(g));

    const auto sas = mode_scores(state, mode);
    const std::unordered_set<NodeId> test(state.test_nodes.begin(), state.test_nodes.end());
    auto in_test = [&](NodeId v) { return test.count(v) > 0; };

    const auto pop = cfg.scope == EvalScope::All ? population(g, sas, [](NodeId) { return true; }) : population(g, sas, in_test);
    if (pop.positives == 0) throw MetricError("no positive labels in the evaluated population; recall is undefined");
    report.at_k = top_k_metrics(pop.ranking, g.labels(), cfg.k.value_or(pop.positives));
    report.auc = auc(pop.scores, pop.labels);

    if (cfg.scope == EvalScope::All) {
        const auto fold = population(g, sas, in_test);
        if (fold.positives > 0 && fold.positives < fold.ranking.size()) {
            report.test_at_k = top_k_metrics(fold.ranking, g.labels(), fold.positives);
            report.test_auc = auc(fold.scores, fold.labels);
        }
    }
    return report;
}

EvalReport run_pipeline(const std::filesystem::path& dataset, const PipelineConfig& cfg, Mode mode) {
    const auto start = std::chrono::steady_clock::now();
    const auto g = load_graph_dir(dataset);
    if (!g.has_labels()) throw MetricError(dataset.string() + " carries no labels");
    const auto state = run_stages(g, cfg);
    auto report = evaluate(g, state, mode, cfg);
    report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

std::string report_json(const EvalReport& r, bool include_wall_clock) {
    nlohmann::ordered_json j;
    j["mode"] = std::string(to_string(r.mode));
    j["scope"] = std::string(to_string(r.scope));
    j["k"] = r.at_k.k;
    j["evaluated"] = r.at_k.evaluated;
    j["positives"] = r.at_k.positives;
    j["true_positives"] = r.at_k.true_positives;
    j["precision_at_k"] = r.at_k.precision;
    j["recall_at_k"] = r.at_k.recall;
    j["f1"] = r.at_k.f1;
    j["accuracy"] = r.at_k.accuracy;
    j["auc"] = r.auc;
    if (r.test_at_k) {
        j["test_k"] = r.test_at_k->k;
        j["test_evaluated"] = r.test_at_k->evaluated;
        j["test_precision_at_k"] = r.test_at_k->precision;
        j["test_recall_at_k"] = r.test_at_k->recall;
        j["test_f1"] = r.test_at_k->f1;
        j["test_accuracy"] = r.test_at_k->accuracy;
    }
    if (r.test_auc) j["test_auc"] = *r.test_auc;
    j["nodes"] = r.node_count;
    j["edges"] = r.edge_count;
    j["sources"] = r.source_count;
    j["visited"] = r.visited_count;
    j["reg_strength"] = r.reg_strength;
    j["config_hash"] = r.config_hash;
    j["seed"] = r.seed;
    j["dataset_id"] = r.dataset_id;
    if (include_wall_clock) j["wall_clock_seconds"] = r.wall_clock_seconds;
    return j.dump(2) + "\n";
}

std::string run_manifest_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["config_hash"] = r.config_hash;
    j["seed"] = r.seed;
    j["dataset_checksum"] = r.dataset_id;
    j["mode"] = std::string(to_string(r.mode));
    j["nodes"] = r.node_count;
    j["edges"] = r.edge_count;
    return j.dump(2) + "\n";
}

}  // namespace mpo
