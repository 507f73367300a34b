// mpo: command-line front end for the detection pipeline.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mpo/anomaly.hpp"
#include "mpo/behavior.hpp"
#include "mpo/classifier.hpp"
#include "mpo/config.hpp"
#include "mpo/csv.hpp"
#include "mpo/dataset.hpp"
#include "mpo/error.hpp"
#include "mpo/patterns.hpp"
#include "mpo/pipeline.hpp"
#include "mpo/ppr.hpp"

namespace fs = std::filesystem;

namespace {

/// Flag values that map onto config keys; applied over the config file.
class Overrides {
public:
    void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        auto& slot = values_[key];
        options_.emplace_back(app->add_option(flag, slot, help), key);
    }

    void apply(mpo::Config& cfg) const {
        for (const auto& [opt, key] : options_) {
            if (opt->count()) cfg.set(key, values_.at(key));
        }
    }

private:
    std::map<std::string, std::string> values_;
    std::vector<std::pair<CLI::Option*, std::string>> options_;
};

struct Globals {
    std::string config_path;
    std::string threads;
};

mpo::Config base_config(const Globals& globals) {
    mpo::Config cfg = mpo::PipelineConfig{}.to_config();
    if (!globals.config_path.empty()) cfg.merge(mpo::Config::load(globals.config_path));
    if (!globals.threads.empty()) {
        cfg.set("run.threads", globals.threads);
    } else if (const char* env = std::getenv("MPO_THREADS"); env && *env) {
        cfg.set("run.threads", env);
    }
    return cfg;
}

void add_ppr_flags(CLI::App* app, Overrides& o) {
    o.add(app, "--alpha", "ppr.alpha", "termination probability per step, in (0,1)");
    o.add(app, "--epsilon", "ppr.epsilon", "relative accuracy target");
    o.add(app, "--p-f", "ppr.p_f", "failure probability, in (0,1]");
    o.add(app, "--hop-cap", "ppr.hop_cap", "maximum hop distance from a source, or none");
    o.add(app, "--dangling-rule", "ppr.dangling_rule", "absorb or teleport");
}

fs::path dir_of(const fs::path& file) { return file.has_parent_path() ? file.parent_path() : fs::path("."); }

void say(const std::string& msg) { std::cerr << msg << '\n'; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-source PPR and behavioural scoring for transaction-graph laundering detection"};
    app.require_subcommand(1);
    Globals globals;
    app.add_option("--config", globals.config_path, "flat key = value config file")->check(CLI::ExistingFile);
    app.add_option("--threads", globals.threads, "worker cap for PPR (falls back to MPO_THREADS)");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "read an edge list into a graph directory");
    std::string ingest_in, ingest_labels, ingest_out, ingest_adapter = "generic";
    ingest->add_option("edges", ingest_in, "edge-list file (generic) or dataset directory")->required();
    ingest->add_option("--labels", ingest_labels, "address,label file")->check(CLI::ExistingFile);
    ingest->add_option("--adapter", ingest_adapter, "generic, ellipticpp, ethereum or wormhole");
    ingest->add_option("-o,--output", ingest_out, "graph directory")->required();

    // ppr
    auto* ppr = app.add_subcommand("ppr", "multi-source PPR over a graph directory");
    Overrides ppr_flags;
    std::string ppr_dir, ppr_out;
    ppr->add_option("graph", ppr_dir, "graph directory")->required()->check(CLI::ExistingDirectory);
    add_ppr_flags(ppr, ppr_flags);
    ppr_flags.add(ppr, "--seed", "ppr.seed", "random-walk seed");
    ppr->add_option("-o,--output", ppr_out, "output directory (default: the graph directory)");

    // score
    auto* score = app.add_subcommand("score", "behavioural scores over the visited set");
    std::string score_dir, score_svn, score_out;
    score->add_option("graph", score_dir, "graph directory")->required()->check(CLI::ExistingDirectory);
    score->add_option("--svn", score_svn, "visited-node list written by ppr")->required()->check(CLI::ExistingFile);
    score->add_option("-o,--output", score_out, "output directory (default: the graph directory)");

    // train
    auto* trn = app.add_subcommand("train", "fit the pattern classifier on a feature file");
    Overrides train_flags;
    std::string train_in, train_out;
    trn->add_option("features", train_in, "features.csv written by score")->required()->check(CLI::ExistingFile);
    train_flags.add(trn, "--split", "train.split", "train,validation,test fractions");
    train_flags.add(trn, "--seed", "train.seed", "split seed");
    train_flags.add(trn, "--reg-grid", "train.reg_grid", "comma-separated L2 strengths");
    train_flags.add(trn, "--iter-cap", "train.iter_cap", "solver iteration cap");
    trn->add_option("-o,--output", train_out, "model file (default: model.txt next to the features)");

    // detect
    auto* detect = app.add_subcommand("detect", "rank suspects from stage outputs");
    std::string det_dir, det_model, det_ppr, det_svn, det_scores, det_out;
    std::size_t det_k = 0;
    detect->add_option("graph", det_dir, "graph directory")->required()->check(CLI::ExistingDirectory);
    detect->add_option("--model", det_model, "model file")->required()->check(CLI::ExistingFile);
    auto* det_k_opt = detect->add_option("-k", det_k, "number of suspects to report")->check(CLI::Range(1, 1 << 30));
    detect->add_option("--ppr", det_ppr, "PPR dump (default: <graph>/ppr_scores.csv)");
    detect->add_option("--svn", det_svn, "visited-node list (default: <graph>/svn.csv)");
    detect->add_option("--scores", det_scores, "behaviour scores (default: <graph>/scores.csv)");
    detect->add_option("-o,--output", det_out, "suspect report (default: <graph>/suspects.csv)");

    // eval
    auto* eval = app.add_subcommand("eval", "run the whole pipeline and report metrics");
    Overrides eval_flags;
    std::string eval_dir, eval_out, eval_mode = "full";
    std::string eval_seed;
    eval->add_option("graph", eval_dir, "labelled graph directory")->required()->check(CLI::ExistingDirectory);
    eval->add_option("--mode", eval_mode, "full, tw or random")->check(CLI::IsMember({"full", "tw", "random"}));
    std::size_t eval_k_value = 0;
    auto* eval_k = eval->add_option("-k", eval_k_value, "cut-off for the @K metrics")->check(CLI::Range(1, 1 << 30));
    eval_flags.add(eval, "--scope", "eval.scope", "test or all");
    eval_flags.add(eval, "--split", "train.split", "train,validation,test fractions");
    add_ppr_flags(eval, eval_flags);
    eval->add_option("--seed", eval_seed, "seed for both the walks and the split");
    eval->add_option("-o,--output", eval_out, "output directory (default: <graph>/eval_<mode>)");

    // synth
    auto* synth = app.add_subcommand("synth", "build a synthetic benchmark from a manifest");
    std::string synth_manifest, synth_out;
    synth->add_option("--manifest", synth_manifest, "benchmark manifest")->required()->check(CLI::ExistingFile);
    synth->add_option("-o,--output", synth_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = base_config(globals);

        if (*ingest) {
            const auto adapter = mpo::parse_adapter(ingest_adapter);
            mpo::TransactionGraph g;
            if (adapter == mpo::Adapter::Generic) {
                g = ingest_labels.empty() ? mpo::ingest_edge_list(ingest_in) : mpo::ingest_edge_list(ingest_in, ingest_labels);
            } else {
                if (!ingest_labels.empty()) throw mpo::ValidationError("--labels only applies to the generic adapter");
                g = mpo::load_dataset(adapter, ingest_in, cfg);
            }
            mpo::save_graph_dir(g, ingest_out);
            cfg.set("ingest.adapter", ingest_adapter);
            cfg.save(fs::path(ingest_out) / "ingest.resolved.conf");
            say(fmt::format("ingested {} nodes, {} edges into {}", g.node_count(), g.edge_count(), ingest_out));
        } else if (*ppr) {
            ppr_flags.apply(cfg);
            const auto pc = mpo::PipelineConfig::from_config(cfg);
            const auto g = mpo::load_graph_dir(ppr_dir);
            const auto sources = mpo::identify_sources(g);
            if (sources.empty()) say("warning: graph has no source nodes; PPR output is empty");
            const auto pps = mpo::multi_source_ppr(g, sources, pc.ppr, pc.threads);
            const fs::path out = ppr_out.empty() ? fs::path(ppr_dir) : fs::path(ppr_out);
            mpo::write_ppr_dump(g, pps, out / "ppr_scores.csv", out / "svn.csv");
            pc.to_config().save(out / "ppr.resolved.conf");
            say(fmt::format("{} sources, {} visited nodes", sources.size(), pps.visited.size()));
        } else if (*score) {
            const auto g = mpo::load_graph_dir(score_dir);
            mpo::csv::Reader reader(score_svn);
            std::vector<mpo::NodeId> svn;
            std::string line;
            bool first = true;
            while (reader.next(line)) {
                const auto v = mpo::csv::parse_int(line);
                const bool header = first;
                first = false;
                if (!v) {
                    if (header) continue;
                    throw mpo::ParseError(reader.file(), reader.line_number(), "malformed node id");
                }
                if (*v < 0 || !g.contains(static_cast<mpo::NodeId>(*v)))
                    throw mpo::LookupError(score_svn + ": unknown node id " + std::to_string(*v));
                svn.push_back(static_cast<mpo::NodeId>(*v));
            }
            const auto bs = mpo::behavior_scores(g, svn);
            const fs::path out = score_out.empty() ? fs::path(score_dir) : fs::path(score_out);
            mpo::write_behavior_scores(bs, out / "scores.csv");
            mpo::write_features(mpo::build_features(bs, g.labels()), out / "features.csv");
            cfg.save(out / "score.resolved.conf");
            say(fmt::format("scored {} nodes", bs.theta.size()));
        } else if (*trn) {
            train_flags.apply(cfg);
            const auto pc = mpo::PipelineConfig::from_config(cfg);
            const auto rows = mpo::read_features(train_in);
            const auto result = mpo::train(rows, pc.train);
            const fs::path out = train_out.empty() ? dir_of(train_in) / "model.txt" : fs::path(train_out);
            mpo::write_model(result.model, out);
            pc.to_config().save(dir_of(out) / "train.resolved.conf");
            say(fmt::format("reg_strength {} after {} iterations{}", result.model.reg_strength, result.model.iterations,
                            result.model.converged ? "" : " (iteration cap reached)"));
        } else if (*detect) {
            const fs::path dir(det_dir);
            const auto g = mpo::load_graph_dir(dir);
            const auto pps = mpo::read_ppr_dump(g, det_ppr.empty() ? dir / "ppr_scores.csv" : fs::path(det_ppr),
                                                det_svn.empty() ? dir / "svn.csv" : fs::path(det_svn));
            const auto bs = mpo::read_behavior_scores(det_scores.empty() ? dir / "scores.csv" : fs::path(det_scores));
            const auto model = mpo::read_model(det_model);
            const auto pfs = mpo::predict_f(model, mpo::build_features(bs));
            const auto sas = mpo::anomaly_scores(pps, pfs);
            const std::size_t k = det_k_opt->count() ? det_k : sas.scored_count;
            const fs::path out = det_out.empty() ? dir / "suspects.csv" : fs::path(det_out);
            mpo::write_suspect_report(g, sas, pps, pfs, bs, k, out);
            cfg.set("detect.k", std::to_string(k));
            cfg.save(dir_of(out) / "detect.resolved.conf");
            say(fmt::format("wrote {} suspects to {}", k, out.string()));
        } else if (*eval) {
            eval_flags.apply(cfg);
            if (!eval_seed.empty()) {
                cfg.set("ppr.seed", eval_seed);
                cfg.set("train.seed", eval_seed);
            }
            if (eval_k->count()) cfg.set("eval.k", std::to_string(eval_k_value));
            const auto pc = mpo::PipelineConfig::from_config(cfg);
            const auto mode = mpo::parse_mode(eval_mode);
            const fs::path dir(eval_dir);
            const fs::path out = eval_out.empty() ? dir / ("eval_" + eval_mode) : fs::path(eval_out);

            const auto start = std::chrono::steady_clock::now();
            const auto g = mpo::load_graph_dir(dir);
            if (!g.has_labels()) throw mpo::MetricError(eval_dir + " carries no labels");
            const auto state = mpo::run_stages(g, pc);
            auto report = mpo::evaluate(g, state, mode, pc);
            report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

            fs::create_directories(out);
            mpo::csv::open_output(out / "metrics.json") << mpo::report_json(report);
            mpo::csv::open_output(out / "run_manifest.json") << mpo::run_manifest_json(report);
            const auto sas = mpo::mode_scores(state, mode);
            mpo::write_suspect_report(g, sas, state.pps, state.pfs, state.behavior, pc.k.value_or(report.at_k.k),
                                      out / "suspects.csv");
            pc.to_config().save(out / "eval.resolved.conf");
            say(fmt::format("{}: precision@{} {:.4f}, recall@{} {:.4f}, auc {:.4f}", eval_mode, report.at_k.k,
                            report.at_k.precision, report.at_k.k, report.at_k.recall, report.auc));
        } else if (*synth) {
            const auto manifest = mpo::BenchmarkManifest::from_config(mpo::Config::load(synth_manifest));
            const auto bench = mpo::build_benchmark(manifest);
            mpo::write_benchmark(bench, synth_out);
            mpo::save_graph_dir(bench.graph, synth_out);
            manifest.to_config().save(fs::path(synth_out) / "manifest.resolved.conf");
            std::size_t labelled = 0;
            for (const auto& r : bench.records) labelled += r.injected_nodes.size();
            say(fmt::format("benchmark: {} nodes, {} edges, {} pattern nodes", bench.graph.node_count(),
                            bench.graph.edge_count(), labelled));
        }
    } catch (const mpo::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const mpo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
