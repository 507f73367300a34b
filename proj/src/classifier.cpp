#include "mpo/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Dense>

#include "mpo/csv.hpp"
#include "mpo/error.hpp"
#include "mpo/rng.hpp"

namespace mpo {

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::string join(std::span<const double> values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += csv::format_double(values[i]);
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Features

std::vector<FeatureRow> build_features(const BehaviorScores& bs, std::span<const std::int8_t> labels) {
    if (bs.theta.nodes != bs.omega.nodes) {
        std::vector<NodeId> diff;
        std::set_symmetric_difference(bs.theta.nodes.begin(), bs.theta.nodes.end(), bs.omega.nodes.begin(),
                                      bs.omega.nodes.end(), std::back_inserter(diff));
        std::string msg = "timestamp and weight scores cover different nodes";
        if (!diff.empty()) msg += " (first mismatch: node " + std::to_string(diff.front()) + ")";
        throw ConsistencyError(msg);
    }
    std::vector<FeatureRow> rows;
    rows.reserve(bs.theta.size());
    for (std::size_t i = 0; i < bs.theta.size(); ++i) {
        FeatureRow row;
        row.node = bs.theta.nodes[i];
        row.features = {bs.theta.norm[i], bs.omega.norm[i]};
        if (row.node < labels.size() && labels[row.node] != TransactionGraph::kUnlabeled)
            row.label = labels[row.node];
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_features(std::span<const FeatureRow> rows, const std::filesystem::path& path) {
    auto out = csv::open_output(path);
    out << "node_id,theta_norm,omega_norm,label\n";
    for (const auto& row : rows) {
        if (row.features.size() != 2) throw ValidationError("feature rows must have 2 columns");
        out << row.node << ',' << csv::format_double(row.features[0]) << ',' << csv::format_double(row.features[1])
            << ',';
        if (row.label) out << *row.label;
        out << '\n';
    }
}

std::vector<FeatureRow> read_features(const std::filesystem::path& path) {
    std::vector<FeatureRow> rows;
    csv::Reader reader(path);
    std::string line;
    bool first = true;
    while (reader.next(line)) {
        const auto f = csv::split(line);
        const bool header = first;
        first = false;
        if (header && !csv::parse_int(f[0])) continue;
        if (f.size() != 4) throw ParseError(reader.file(), reader.line_number(), "expected node_id,theta_norm,omega_norm,label");
        const auto v = csv::parse_int(f[0]);
        const auto a = csv::parse_double(f[1]);
        const auto b = csv::parse_double(f[2]);
        if (!v || *v < 0 || !a || !b) throw ParseError(reader.file(), reader.line_number(), "malformed feature row");
        FeatureRow row{static_cast<NodeId>(*v), {*a, *b}, std::nullopt};
        if (!f[3].empty()) {
            const auto l = csv::parse_int(f[3]);
            if (!l || (*l != 0 && *l != 1))
                throw ParseError(reader.file(), reader.line_number(), "label must be 0, 1 or empty");
            row.label = static_cast<int>(*l);
        }
        if (!rows.empty() && row.node <= rows.back().node)
            throw ParseError(reader.file(), reader.line_number(), "node ids must be strictly ascending");
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Model

double LogisticModel::decision(std::span<const double> features) const {
    if (features.size() != weights.size())
        throw ValidationError("feature dimension " + std::to_string(features.size()) + " does not match model dimension " +
                              std::to_string(weights.size()));
    double z = bias;
    for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * features[j];
    return z;
}

double LogisticModel::probability_illicit(std::span<const double> features) const {
    return sigmoid(decision(features));
}

double LogisticModel::probability_benign(std::span<const double> features) const {
    return sigmoid(-decision(features));
}

void SplitFractions::validate() const {
    for (double f : {train, validation, test}) {
        if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("split fractions must lie in [0,1]");
    }
    if (!(train > 0.0)) throw ValidationError("training fraction must be positive");
    if (std::abs(train + validation + test - 1.0) > 1e-9) throw ValidationError("split fractions must sum to 1");
}

DataSplit stratified_split(std::span<const FeatureRow> rows, const SplitFractions& fractions, std::uint64_t seed) {
    fractions.validate();
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rows[a].node < rows[b].node; });

    DataSplit split;
    Rng rng(seed);
    for (int cls : {0, 1}) {
        std::vector<std::size_t> members;
        for (auto i : order) {
            if (rows[i].label == cls) members.push_back(i);
        }
        rng.shuffle(members.begin(), members.end());
        const auto n = members.size();
        const auto n_train = std::min(n, static_cast<std::size_t>(std::llround(fractions.train * static_cast<double>(n))));
        const auto n_val = std::min(n - n_train,
                                    static_cast<std::size_t>(std::llround(fractions.validation * static_cast<double>(n))));
        split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
        split.validation.insert(split.validation.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train),
                                members.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
        split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), members.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

// ---------------------------------------------------------------------------
// Objective

LogLossObjective::LogLossObjective(std::vector<std::vector<double>> x, std::vector<int> y, double lambda)
    : x_(std::move(x)), y_(std::move(y)), lambda_(lambda) {
    if (x_.size() != y_.size()) throw ValidationError("design and label sizes differ");
    if (!(lambda_ >= 0.0)) throw ValidationError("regularisation strength must be non-negative");
    dim_ = x_.empty() ? 0 : x_.front().size();
    std::size_t positives = 0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
        if (x_[i].size() != dim_) throw ValidationError("ragged design matrix");
        if (y_[i] != 0 && y_[i] != 1) throw ValidationError("labels must be 0 or 1");
        positives += static_cast<std::size_t>(y_[i]);
    }
    const double n = static_cast<double>(x_.size());
    const double w_pos = positives ? n / (2.0 * static_cast<double>(positives)) : 0.0;
    const double w_neg = positives < x_.size() ? n / (2.0 * static_cast<double>(x_.size() - positives)) : 0.0;
    c_.reserve(x_.size());
    for (int label : y_) c_.push_back(label ? w_pos : w_neg);
    c_total_ = std::accumulate(c_.begin(), c_.end(), 0.0);
}

double LogLossObjective::data_loss(std::span<const double> params) const {
    if (params.size() != dimension()) throw ValidationError("parameter vector has the wrong length");
    if (x_.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
        double z = params[dim_];
        for (std::size_t j = 0; j < dim_; ++j) z += params[j] * x_[i][j];
        total += c_[i] * (softplus(z) - y_[i] * z);
    }
    return total / c_total_;
}

double LogLossObjective::value(std::span<const double> params) const {
    double reg = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) reg += params[j] * params[j];
    return data_loss(params) + 0.5 * lambda_ * reg;
}

std::vector<double> LogLossObjective::gradient(std::span<const double> params) const {
    if (params.size() != dimension()) throw ValidationError("parameter vector has the wrong length");
    std::vector<double> g(dimension(), 0.0);
    if (!x_.empty()) {
        for (std::size_t i = 0; i < x_.size(); ++i) {
            double z = params[dim_];
            for (std::size_t j = 0; j < dim_; ++j) z += params[j] * x_[i][j];
            const double r = c_[i] * (sigmoid(z) - y_[i]);
            for (std::size_t j = 0; j < dim_; ++j) g[j] += r * x_[i][j];
            g[dim_] += r;
        }
        for (double& v : g) v /= c_total_;
    }
    for (std::size_t j = 0; j < dim_; ++j) g[j] += lambda_ * params[j];
    return g;
}

std::vector<double> LogLossObjective::hessian(std::span<const double> params) const {
    if (params.size() != dimension()) throw ValidationError("parameter vector has the wrong length");
    const std::size_t d = dimension();
    std::vector<double> h(d * d, 0.0);
    std::vector<double> row(d);
    if (!x_.empty()) {
        for (std::size_t i = 0; i < x_.size(); ++i) {
            double z = params[dim_];
            for (std::size_t j = 0; j < dim_; ++j) z += params[j] * x_[i][j];
            const double p = sigmoid(z);
            const double s = c_[i] * p * (1.0 - p);
            for (std::size_t j = 0; j < dim_; ++j) row[j] = x_[i][j];
            row[dim_] = 1.0;
            for (std::size_t a = 0; a < d; ++a) {
                for (std::size_t b = 0; b < d; ++b) h[a * d + b] += s * row[a] * row[b];
            }
        }
        for (double& v : h) v /= c_total_;
    }
    for (std::size_t j = 0; j < dim_; ++j) h[j * d + j] += lambda_;
    return h;
}

// ---------------------------------------------------------------------------
// Fitting

namespace {

/// Damped Newton with Armijo backtracking. Records the objective after every accepted step.
std::vector<double> newton(const LogLossObjective& obj, const TrainConfig& cfg, LogisticModel& diag) {
    const auto d = static_cast<Eigen::Index>(obj.dimension());
    std::vector<double> params(obj.dimension(), 0.0);
    double f = obj.value(params);
    diag.loss_history = {f};
    diag.converged = false;
    diag.iterations = 0;
    for (unsigned it = 0; it < cfg.iter_cap; ++it) {
        const auto g = obj.gradient(params);
        const Eigen::Map<const Eigen::VectorXd> grad(g.data(), d);
        if (grad.norm() < cfg.tolerance) {
            diag.converged = true;
            break;
        }
        const auto hv = obj.hessian(params);
        const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> hess(hv.data(), d, d);
        Eigen::VectorXd step = hess.ldlt().solve(-grad);
        if (!step.allFinite() || step.dot(grad) >= 0.0) step = -grad;

        double t = 1.0;
        std::vector<double> trial(params.size());
        double f_trial = f;
        bool accepted = false;
        for (int halving = 0; halving < 60; ++halving) {
            for (Eigen::Index j = 0; j < d; ++j) trial[j] = params[j] + t * step[j];
            f_trial = obj.value(trial);
            if (f_trial <= f + 1e-4 * t * step.dot(grad)) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        ++diag.iterations;
        if (!accepted) {
            // No representable decrease left along the Newton direction.
            diag.converged = grad.norm() < std::sqrt(cfg.tolerance);
            break;
        }
        params = trial;
        f = f_trial;
        diag.loss_history.push_back(f);
    }
    if (!diag.converged) {
        const auto g = obj.gradient(params);
        diag.converged = Eigen::Map<const Eigen::VectorXd>(g.data(), d).norm() < cfg.tolerance;
    }
    return params;
}

double weighted_loss_on(const LogisticModel& model, std::span<const FeatureRow> rows, std::span<const std::size_t> idx) {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (auto i : idx) {
        x.push_back(rows[i].features);
        y.push_back(*rows[i].label);
    }
    if (x.empty()) return 0.0;
    LogLossObjective obj(std::move(x), std::move(y), 0.0);
    std::vector<double> params = model.weights;
    params.push_back(model.bias);
    return obj.data_loss(params);
}

}  // namespace

LogisticModel fit_logistic(std::span<const FeatureRow> rows, double lambda, const TrainConfig& cfg) {
    if (rows.empty()) throw TrainingError("no training rows");
    const std::size_t dim = rows.front().features.size();
    std::size_t positives = 0;
    for (const auto& row : rows) {
        if (!row.label) throw TrainingError("training rows must be labelled");
        if (row.features.size() != dim) throw ValidationError("training rows have inconsistent feature counts");
        positives += static_cast<std::size_t>(*row.label);
    }
    if (positives == 0 || positives == rows.size())
        throw TrainingError("training fold contains a single class; use stratified resampling or add labelled data");

    std::vector<double> mean(dim, 0.0);
    std::vector<double> scale(dim, 1.0);
    if (cfg.standardize) {
        const double n = static_cast<double>(rows.size());
        for (const auto& row : rows) {
            for (std::size_t j = 0; j < dim; ++j) mean[j] += row.features[j] / n;
        }
        for (std::size_t j = 0; j < dim; ++j) {
            double var = 0.0;
            for (const auto& row : rows) var += (row.features[j] - mean[j]) * (row.features[j] - mean[j]) / n;
            scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
        }
    }

    std::vector<std::vector<double>> x;
    std::vector<int> y;
    x.reserve(rows.size());
    for (const auto& row : rows) {
        std::vector<double> z(dim);
        for (std::size_t j = 0; j < dim; ++j) z[j] = (row.features[j] - mean[j]) / scale[j];
        x.push_back(std::move(z));
        y.push_back(*row.label);
    }
    const LogLossObjective obj(std::move(x), std::move(y), lambda);

    LogisticModel model;
    model.reg_strength = lambda;
    model.iter_cap = cfg.iter_cap;
    model.seed = cfg.seed;
    const auto params = newton(obj, cfg, model);

    model.weights.resize(dim);
    model.bias = params[dim];
    for (std::size_t j = 0; j < dim; ++j) {
        model.weights[j] = params[j] / scale[j];
        model.bias -= params[j] * mean[j] / scale[j];
    }
    return model;
}

TrainResult train(std::span<const FeatureRow> rows, const TrainConfig& cfg) {
    if (cfg.reg_grid.empty()) throw ValidationError("regularisation grid is empty");
    for (double lambda : cfg.reg_grid) {
        if (!(lambda >= 0.0)) throw ValidationError("regularisation strengths must be non-negative");
    }
    if (cfg.iter_cap == 0) throw ValidationError("iteration cap must be positive");

    TrainResult result;
    result.split = stratified_split(rows, cfg.split, cfg.seed);
    std::vector<FeatureRow> fold;
    for (auto i : result.split.train) fold.push_back(rows[i]);
    const auto positives = std::count_if(fold.begin(), fold.end(), [](const auto& r) { return r.label == 1; });
    if (positives == 0 || static_cast<std::size_t>(positives) == fold.size())
        throw TrainingError("training fold contains a single class (" + std::to_string(fold.size()) +
                            " rows); use stratified resampling or add labelled data");

    std::vector<double> grid = cfg.reg_grid;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    bool have = false;
    double best = 0.0;
    for (double lambda : grid) {
        auto model = fit_logistic(fold, lambda, cfg);
        const double loss = weighted_loss_on(model, rows, result.split.validation);
        result.validation_loss.push_back(loss);
        if (!have || loss < best) {
            have = true;
            best = loss;
            result.model = std::move(model);
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Prediction and persistence

std::optional<double> PatternFeatureSet::find(NodeId v) const {
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), v);
    if (it == nodes.end() || *it != v) return std::nullopt;
    return f_value[static_cast<std::size_t>(it - nodes.begin())];
}

PatternFeatureSet predict_f(const LogisticModel& model, std::span<const FeatureRow> rows) {
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return rows[a].node < rows[b].node; });
    PatternFeatureSet pfs;
    pfs.nodes.reserve(rows.size());
    pfs.f_value.reserve(rows.size());
    for (auto i : order) {
        if (!pfs.nodes.empty() && pfs.nodes.back() == rows[i].node)
            throw ConsistencyError("duplicate feature row for node " + std::to_string(rows[i].node));
        pfs.nodes.push_back(rows[i].node);
        pfs.f_value.push_back(std::clamp(model.probability_benign(rows[i].features), kFFloor, 1.0));
    }
    return pfs;
}

void write_model(const LogisticModel& model, const std::filesystem::path& path) {
    auto out = csv::open_output(path);
    out << "mpo-logistic-model 1\n";
    out << "schema = " << model.schema << '\n';
    out << "weights = " << join(model.weights) << '\n';
    out << "bias = " << csv::format_double(model.bias) << '\n';
    out << "reg_strength = " << csv::format_double(model.reg_strength) << '\n';
    out << "iter_cap = " << model.iter_cap << '\n';
    out << "seed = " << model.seed << '\n';
}

LogisticModel read_model(const std::filesystem::path& path) {
    csv::Reader reader(path);
    std::string line;
    if (!reader.next(line) || csv::trim(line) != "mpo-logistic-model 1")
        throw ParseError(reader.file(), reader.line_number(), "not a version 1 model file");
    std::map<std::string, std::string, std::less<>> kv;
    while (reader.next(line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(reader.file(), reader.line_number(), "expected key = value");
        kv[std::string(csv::trim(std::string_view(line).substr(0, eq)))] =
            std::string(csv::trim(std::string_view(line).substr(eq + 1)));
    }
    auto need = [&](std::string_view key) -> const std::string& {
        const auto it = kv.find(key);
        if (it == kv.end()) throw ParseError(reader.file(), 0, "missing key '" + std::string(key) + "'");
        return it->second;
    };
    LogisticModel model;
    model.schema = need("schema");
    if (model.schema != kFeatureSchema) throw ValidationError("unsupported feature schema '" + model.schema + "'");
    for (auto field : csv::split(need("weights"))) {
        const auto w = csv::parse_double(field);
        if (!w) throw ParseError(reader.file(), 0, "malformed weight");
        model.weights.push_back(*w);
    }
    const auto bias = csv::parse_double(need("bias"));
    const auto reg = csv::parse_double(need("reg_strength"));
    const auto cap = csv::parse_int(need("iter_cap"));
    const auto seed = csv::parse_uint(need("seed"));
    if (!bias || !reg || !cap || *cap <= 0 || !seed) throw ParseError(reader.file(), 0, "malformed model parameters");
    model.bias = *bias;
    model.reg_strength = *reg;
    model.iter_cap = static_cast<unsigned>(*cap);
    model.seed = *seed;
    if (model.weights.size() != 2) throw ValidationError("model must have 2 weights");
    return model;
}

void write_predictions(const PatternFeatureSet& pfs, const std::filesystem::path& path) {
    auto out = csv::open_output(path);
    out << "node_id,f_value\n";
    for (std::size_t i = 0; i < pfs.nodes.size(); ++i) out << pfs.nodes[i] << ',' << csv::format_double(pfs.f_value[i]) << '\n';
}

}  // namespace mpo
