#include "tristage/gbdt.hpp"

#include "tristage/error.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

namespace tristage::gbdt {

void TrainConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::Config, "train config: " + what); };
    if (num_rounds < 1) fail("num_rounds must be positive");
    if (max_depth < 1) fail("max_depth must be positive");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) fail("learning_rate must be in (0, 1]");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("lambda must be non-negative");
    if (!(min_child_weight >= 0.0) || !std::isfinite(min_child_weight)) fail("min_child_weight must be non-negative");
    if (!(min_gain >= 0.0) || !std::isfinite(min_gain)) fail("min_gain must be non-negative");
    if (threads < 1) fail("threads must be positive");
}

double RegressionTree::predict(std::span<const double> row) const {
    int idx = 0;
    while (!nodes[static_cast<std::size_t>(idx)].is_leaf) {
        const auto& n = nodes[static_cast<std::size_t>(idx)];
        idx = row[static_cast<std::size_t>(n.split_feature)] < n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(idx)].weight;
}

double GbdtModel::predict_row(std::span<const double> row) const {
    double sum = 0.0;
    for (const auto& t : trees) sum += t.predict(row);
    return base_score + learning_rate * sum;
}

std::vector<double> GbdtModel::predict(const FeatureMatrix& features) const {
    if (features.cols() != feature_count) {
        throw Error(ErrorKind::Validation, "predict: model expects " + std::to_string(feature_count) +
                                               " features, got " + std::to_string(features.cols()));
    }
    std::vector<double> out(features.rows());
    for (std::size_t r = 0; r < features.rows(); ++r) out[r] = predict_row(features.row(r));
    return out;
}

double split_gain(double grad_left, double hess_left, double grad_right, double hess_right,
                  double lambda) {
    const double g = grad_left + grad_right;
    const double h = hess_left + hess_right;
    return 0.5 * (grad_left * grad_left / (hess_left + lambda) +
                  grad_right * grad_right / (hess_right + lambda) - g * g / (h + lambda));
}

double leaf_weight(double grad_sum, double hess_sum, double lambda) {
    const double denom = hess_sum + lambda;
    if (denom == 0.0) throw Error(ErrorKind::DegenerateLeaf, "leaf has zero Hessian mass and lambda = 0");
    return -grad_sum / denom;
}

namespace {

/// Fixed-size worker pool running index-parallel loops.
class WorkerPool {
public:
    explicit WorkerPool(int threads) {
        for (int i = 1; i < threads; ++i) workers_.emplace_back([this] { worker_loop(); });
    }

    ~WorkerPool() {
        {
            std::lock_guard lock(mutex_);
            stop_ = true;
        }
        wake_.notify_all();
        for (auto& w : workers_) w.join();
    }

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
        if (workers_.empty() || count < 2) {
            for (std::size_t i = 0; i < count; ++i) body(i);
            return;
        }
        {
            std::lock_guard lock(mutex_);
            body_ = &body;
            count_ = count;
            next_ = 0;
            pending_ = count;
            ++generation_;
        }
        wake_.notify_all();
        drain();
        std::unique_lock lock(mutex_);
        done_.wait(lock, [this] { return pending_ == 0; });
        body_ = nullptr;
    }

private:
    void drain() {
        for (;;) {
            std::size_t i;
            const std::function<void(std::size_t)>* body;
            {
                std::lock_guard lock(mutex_);
                if (body_ == nullptr || next_ >= count_) return;
                i = next_++;
                body = body_;
            }
            (*body)(i);
            std::lock_guard lock(mutex_);
            if (--pending_ == 0) done_.notify_all();
        }
    }

    void worker_loop() {
        std::uint64_t seen = 0;
        for (;;) {
            {
                std::unique_lock lock(mutex_);
                wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
                if (stop_) return;
                seen = generation_;
            }
            drain();
        }
    }

    std::vector<std::thread> workers_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    const std::function<void(std::size_t)>* body_ = nullptr;
    std::size_t count_ = 0;
    std::size_t next_ = 0;
    std::size_t pending_ = 0;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
};

struct FeatureBest {
    bool found = false;
    double threshold = 0.0;
    double gain = -std::numeric_limits<double>::infinity();
};

FeatureBest best_for_feature(std::span<const std::size_t> rows, std::span<const GradHess> gh,
                             const FeatureMatrix& x, std::size_t feature, const TrainConfig& config) {
    std::vector<std::size_t> order(rows.begin(), rows.end());
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = x(a, feature), vb = x(b, feature);
        return va != vb ? va < vb : a < b;
    });

    double g_total = 0.0, h_total = 0.0;
    for (auto r : order) {
        g_total += gh[r].grad;
        h_total += gh[r].hess;
    }

    FeatureBest best;
    double g_left = 0.0, h_left = 0.0;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        g_left += gh[order[k]].grad;
        h_left += gh[order[k]].hess;
        const double lo = x(order[k], feature);
        const double hi = x(order[k + 1], feature);
        if (lo == hi) continue;
        const double g_right = g_total - g_left;
        const double h_right = h_total - h_left;
        if (h_left < config.min_child_weight || h_right < config.min_child_weight) continue;
        const double gain = split_gain(g_left, h_left, g_right, h_right, config.lambda);
        if (gain > best.gain) {
            double threshold = lo + (hi - lo) / 2.0;
            // Adjacent doubles: the midpoint may round onto the lower value.
            if (!(threshold > lo)) threshold = hi;
            best = {true, threshold, gain};
        }
    }
    return best;
}

std::optional<SplitCandidate> best_split_impl(std::span<const std::size_t> rows,
                                              std::span<const GradHess> gh, const FeatureMatrix& x,
                                              const TrainConfig& config, WorkerPool* pool) {
    std::vector<FeatureBest> per_feature(x.cols());
    auto body = [&](std::size_t f) { per_feature[f] = best_for_feature(rows, gh, x, f, config); };
    if (pool) pool->parallel_for(x.cols(), body);
    else for (std::size_t f = 0; f < x.cols(); ++f) body(f);

    std::optional<SplitCandidate> best;
    for (std::size_t f = 0; f < per_feature.size(); ++f) {
        const auto& c = per_feature[f];
        if (c.found && (!best || c.gain > best->gain)) best = SplitCandidate{f, c.threshold, c.gain};
    }
    if (best && !(best->gain > config.min_gain)) return std::nullopt;
    return best;
}

class TreeBuilder {
public:
    TreeBuilder(std::span<const GradHess> gh, const FeatureMatrix& x, const TrainConfig& config,
                WorkerPool* pool)
        : gh_(gh), x_(x), config_(config), pool_(pool) {}

    RegressionTree build() {
        std::vector<std::size_t> rows(x_.rows());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        grow(rows, 0);
        tree_.depth = depth_;
        return std::move(tree_);
    }

private:
    int grow(const std::vector<std::size_t>& rows, int depth) {
        const int index = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        depth_ = std::max(depth_, depth);

        std::optional<SplitCandidate> split;
        if (depth < config_.max_depth && rows.size() >= 2) {
            split = best_split_impl(rows, gh_, x_, config_, pool_);
        }
        if (!split) {
            double g = 0.0, h = 0.0;
            for (auto r : rows) {
                g += gh_[r].grad;
                h += gh_[r].hess;
            }
            auto& leaf = tree_.nodes[static_cast<std::size_t>(index)];
            leaf.is_leaf = true;
            leaf.weight = leaf_weight(g, h, config_.lambda);
            return index;
        }

        std::vector<std::size_t> left, right;
        for (auto r : rows) (x_(r, split->feature) < split->threshold ? left : right).push_back(r);
        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        auto& node = tree_.nodes[static_cast<std::size_t>(index)];
        node.is_leaf = false;
        node.split_feature = static_cast<int>(split->feature);
        node.threshold = split->threshold;
        node.left = l;
        node.right = r;
        return index;
    }

    std::span<const GradHess> gh_;
    const FeatureMatrix& x_;
    const TrainConfig& config_;
    WorkerPool* pool_;
    RegressionTree tree_;
    int depth_ = 0;
};

void check_gradhess(std::span<const GradHess> gh, std::string_view objective) {
    for (std::size_t i = 0; i < gh.size(); ++i) {
        if (!std::isfinite(gh[i].grad) || !(gh[i].hess > 0.0) || !std::isfinite(gh[i].hess)) {
            throw Error(ErrorKind::Objective, std::string(objective) + ": invalid gradient/Hessian at row " +
                                                  std::to_string(i) + " (Hessian must be positive)");
        }
    }
}

} // namespace

std::optional<SplitCandidate> find_best_split(std::span<const std::size_t> rows,
                                              std::span<const GradHess> gh,
                                              const FeatureMatrix& features,
                                              const TrainConfig& config) {
    if (rows.empty()) throw Error(ErrorKind::Validation, "find_best_split: empty sample set");
    if (gh.size() != features.rows()) throw Error(ErrorKind::Validation, "find_best_split: gradient count mismatch");
    if (config.threads > 1) {
        WorkerPool pool(config.threads);
        return best_split_impl(rows, gh, features, config, &pool);
    }
    return best_split_impl(rows, gh, features, config, nullptr);
}

RegressionTree grow_tree(std::span<const GradHess> gh, const FeatureMatrix& features,
                         const TrainConfig& config) {
    config.validate();
    if (gh.size() != features.rows()) throw Error(ErrorKind::Validation, "grow_tree: gradient count mismatch");
    check_gradhess(gh, "grow_tree");
    std::optional<WorkerPool> pool;
    if (config.threads > 1) pool.emplace(config.threads);
    return TreeBuilder(gh, features, config, pool ? &*pool : nullptr).build();
}

GbdtModel fit(const FeatureMatrix& features, const Objective& objective, const TrainConfig& config,
              TrainLog* log) {
    config.validate();
    const std::size_t n = features.rows();
    if (n == 0) throw Error(ErrorKind::Validation, "fit: empty training set");
    if (objective.size() != n) {
        throw Error(ErrorKind::Validation, "fit: objective '" + std::string(objective.name()) + "' expects " +
                                               std::to_string(objective.size()) + " rows, features have " +
                                               std::to_string(n));
    }

    GbdtModel model;
    model.base_score = objective.base_score();
    model.learning_rate = config.learning_rate;
    model.feature_count = features.cols();
    if (!std::isfinite(model.base_score)) throw Error(ErrorKind::Objective, "fit: non-finite base score");

    std::optional<WorkerPool> pool;
    if (config.threads > 1) pool.emplace(config.threads);

    // Predictions are always recomputed as base + lr * (tree sum) so that the
    // training-time vector matches GbdtModel::predict bit for bit.
    std::vector<double> tree_sum(n, 0.0);
    std::vector<double> preds(n, model.base_score);
    std::vector<GradHess> gh(n);
    if (log) log->loss_curve.assign(1, objective.loss(preds));

    for (int round = 0; round < config.num_rounds; ++round) {
        objective.gradhess(preds, gh);
        check_gradhess(gh, objective.name());
        auto tree = TreeBuilder(gh, features, config, pool ? &*pool : nullptr).build();
        for (std::size_t i = 0; i < n; ++i) {
            tree_sum[i] += tree.predict(features.row(i));
            preds[i] = model.base_score + model.learning_rate * tree_sum[i];
        }
        model.trees.push_back(std::move(tree));
        if (log) log->loss_curve.push_back(objective.loss(preds));
    }
    return model;
}

} // namespace tristage::gbdt
