#pragma once

#include "tristage/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tristage::gbdt {

/// First and diagonal second derivative of a loss w.r.t. one prediction.
struct GradHess {
    double grad = 0.0;
    double hess = 0.0;
};

/// Hyperparameters of the boosting loop. Defaults are this library's own
/// choices; see README for the reasoning behind them.
struct TrainConfig {
    int num_rounds = 300;
    int max_depth = 5;
    double learning_rate = 0.1;
    double lambda = 0.0;
    double min_child_weight = 0.0;
    double min_gain = 0.0;
    std::int64_t seed = 7;
    /// Worker threads for split search. Never changes results.
    int threads = 1;

    void validate() const;
};

/// Loss over a full prediction vector. Implementations may couple samples
/// (e.g. through weekly sums) but must report per-sample gradients and
/// strictly positive diagonal Hessians.
class Objective {
public:
    virtual ~Objective() = default;

    virtual std::string_view name() const = 0;
    /// Number of predictions the objective expects.
    virtual std::size_t size() const = 0;
    /// Initial prediction shared by every row.
    virtual double base_score() const = 0;
    virtual double loss(std::span<const double> preds) const = 0;
    virtual void gradhess(std::span<const double> preds, std::span<GradHess> out) const = 0;
};

struct TreeNode {
    bool is_leaf = true;
    int split_feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double weight = 0.0;

    bool operator==(const TreeNode&) const = default;
};

/// Binary regression tree in a flat node array; node 0 is the root.
/// Rows with value < threshold go left, all others go right.
struct RegressionTree {
    std::vector<TreeNode> nodes;
    int depth = 0;

    double predict(std::span<const double> row) const;
    bool operator==(const RegressionTree&) const = default;
};

/// prediction(x) = base_score + learning_rate * sum_t tree_t(x), trees summed
/// in order before scaling.
struct GbdtModel {
    double base_score = 0.0;
    double learning_rate = 1.0;
    std::size_t feature_count = 0;
    std::vector<RegressionTree> trees;

    double predict_row(std::span<const double> row) const;
    std::vector<double> predict(const FeatureMatrix& features) const;

    bool operator==(const GbdtModel&) const = default;
};

struct SplitCandidate {
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;

    bool operator==(const SplitCandidate&) const = default;
};

/// Newton gain of splitting (G, H) into (G_L, H_L) and (G - G_L, H - H_L).
double split_gain(double grad_left, double hess_left, double grad_right, double hess_right,
                  double lambda);

/// Optimal leaf value -G / (H + lambda).
double leaf_weight(double grad_sum, double hess_sum, double lambda);

/// Exact greedy search over every feature and every midpoint between
/// consecutive distinct values. Ties go to the lowest feature, then the
/// lowest threshold. Returns nothing unless some candidate beats min_gain
/// with both children meeting min_child_weight.
std::optional<SplitCandidate> find_best_split(std::span<const std::size_t> rows,
                                              std::span<const GradHess> gh,
                                              const FeatureMatrix& features,
                                              const TrainConfig& config);

struct TrainLog {
    /// Objective loss at the base score, then after every round.
    std::vector<double> loss_curve;
};

GbdtModel fit(const FeatureMatrix& features, const Objective& objective, const TrainConfig& config,
              TrainLog* log = nullptr);

/// Grows one tree on fixed gradient statistics. Exposed for tests.
RegressionTree grow_tree(std::span<const GradHess> gh, const FeatureMatrix& features,
                         const TrainConfig& config);

/// Model JSON document: version, base_score, learning_rate, feature_count,
/// and trees with explicitly tagged split/leaf nodes.
std::string save_model(const GbdtModel& model);
GbdtModel load_model(std::string_view json);

void save_model_file(const GbdtModel& model, const std::string& path);
GbdtModel load_model_file(const std::string& path);

inline constexpr int kModelVersion = 1;

} // namespace tristage::gbdt
