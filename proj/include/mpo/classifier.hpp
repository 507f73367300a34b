#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpo/behavior.hpp"
#include "mpo/graph.hpp"

namespace mpo {

inline constexpr const char* kFeatureSchema = "theta_norm,omega_norm";
inline constexpr double kFFloor = 1e-6;

struct FeatureRow {
    NodeId node = 0;
    std::vector<double> features;  ///< [theta_norm, omega_norm]
    std::optional<int> label;      ///< 1 = illicit
};

/// One row per scored node, ascending. `labels` is indexed by node id (TransactionGraph::labels());
/// pass an empty span when there is no ground truth. Throws ConsistencyError when the two
/// score columns cover different nodes.
std::vector<FeatureRow> build_features(const BehaviorScores& bs, std::span<const std::int8_t> labels = {});

/// `node_id,theta_norm,omega_norm,label`; the label field is empty for unlabelled rows.
void write_features(std::span<const FeatureRow> rows, const std::filesystem::path& path);
std::vector<FeatureRow> read_features(const std::filesystem::path& path);

struct LogisticModel {
    std::vector<double> weights;
    double bias = 0.0;
    double reg_strength = 0.0;
    unsigned iter_cap = 1000;
    std::uint64_t seed = 0;
    std::string schema = kFeatureSchema;

    // Fit diagnostics, not persisted.
    unsigned iterations = 0;
    bool converged = false;
    std::vector<double> loss_history;  ///< objective after every accepted step, starting at the initial point

    double decision(std::span<const double> features) const;
    double probability_illicit(std::span<const double> features) const;
    double probability_benign(std::span<const double> features) const;
};

struct SplitFractions {
    double train = 0.8;
    double validation = 0.1;
    double test = 0.1;

    /// Each fraction in [0,1], train > 0, sum equal to 1.
    void validate() const;
};

struct TrainConfig {
    SplitFractions split;
    std::uint64_t seed = 0;
    std::vector<double> reg_grid{0.01, 0.1, 1.0};
    unsigned iter_cap = 1000;
    double tolerance = 1e-6;  ///< on the gradient 2-norm
    bool standardize = true;  ///< fit on z-scored features, then fold the scaling back into the weights
};

/// Indices into the row list handed to stratified_split.
struct DataSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

/// Per class, rows are taken in ascending node order, shuffled with the seed and cut by the
/// fractions (rounded). Unlabelled rows are skipped.
DataSplit stratified_split(std::span<const FeatureRow> rows, const SplitFractions& fractions, std::uint64_t seed);

/// Class-weighted, L2-regularised mean log-loss over a fixed design:
///   L(w,b) = sum_i c_i l_i / sum_i c_i + (lambda/2) |w|^2
/// with inverse-frequency class weights c_i. The bias is not regularised.
/// Parameters are laid out as [w_0, ..., w_{d-1}, b].
class LogLossObjective {
public:
    LogLossObjective(std::vector<std::vector<double>> x, std::vector<int> y, double lambda);

    std::size_t dimension() const noexcept { return dim_ + 1; }
    double lambda() const noexcept { return lambda_; }

    double value(std::span<const double> params) const;
    std::vector<double> gradient(std::span<const double> params) const;
    /// Row-major (d+1) x (d+1).
    std::vector<double> hessian(std::span<const double> params) const;

    /// Unregularised class-weighted log-loss.
    double data_loss(std::span<const double> params) const;

private:
    std::vector<std::vector<double>> x_;
    std::vector<int> y_;
    std::vector<double> c_;
    double c_total_ = 0.0;
    std::size_t dim_ = 0;
    double lambda_ = 0.0;
};

/// Fits one model on exactly these rows (all must be labelled, both classes present).
LogisticModel fit_logistic(std::span<const FeatureRow> rows, double lambda, const TrainConfig& cfg);

struct TrainResult {
    LogisticModel model;
    DataSplit split;
    std::vector<double> validation_loss;  ///< one entry per reg_grid value
};

/// Splits, fits one model per grid value on the training fold and keeps the one with the lowest
/// class-weighted validation log-loss (ties keep the smaller value). Throws TrainingError when the
/// training fold holds a single class.
TrainResult train(std::span<const FeatureRow> rows, const TrainConfig& cfg);

struct PatternFeatureSet {
    std::vector<NodeId> nodes;    ///< ascending
    std::vector<double> f_value;  ///< clamp(P(benign), 1e-6, 1)

    std::optional<double> find(NodeId v) const;
};

/// Throws ValidationError when a row's feature count differs from the model's.
PatternFeatureSet predict_f(const LogisticModel& model, std::span<const FeatureRow> rows);

void write_model(const LogisticModel& model, const std::filesystem::path& path);
LogisticModel read_model(const std::filesystem::path& path);

void write_predictions(const PatternFeatureSet& pfs, const std::filesystem::path& path);

}  // namespace mpo
