#pragma once

#include "tristage/gbdt.hpp"
#include "tristage/panel.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace tristage::objectives {

using gbdt::GradHess;

enum class StageKind { Stage1, Stage2, Stage3 };

/// Training targets of one stage. Stage 1 covers the m historical rows;
/// stages 2 and 3 cover all n rows.
struct StageTargets {
    StageKind kind = StageKind::Stage1;
    std::vector<double> values;
};

/// Each row's share of its week's summed stage-1 prediction.
struct RatioVector {
    std::vector<double> values;
};

// Losses below share one normalisation: the fit term averages over rows and
// each week contributes its squared residual R_w = total_w - sum_{j in w} p_j
// once, divided by n. Hessians are the exact diagonal; the -2/n coupling
// between rows of the same week is dropped.

std::vector<GradHess> stage1_gradhess(const StageTargets& targets, std::span<const double> preds);
double stage1_loss(const StageTargets& targets, std::span<const double> preds);

double stage2_loss(const PanelDataset& dataset, const StageTargets& targets, std::span<const double> preds);
std::vector<GradHess> stage2_gradhess(const PanelDataset& dataset, const StageTargets& targets,
                                      std::span<const double> preds);

/// The two parts of the stage-2 loss, with the fit term split at row m.
struct Stage2Terms {
    double fit_historical = 0.0;
    double fit_future = 0.0;
    double constraint = 0.0;
    double constraint_future = 0.0;

    double total() const { return fit_historical + fit_future + constraint; }
};
Stage2Terms stage2_terms(const PanelDataset& dataset, const StageTargets& targets, std::span<const double> preds);

RatioVector pred_ratio(std::span<const double> stage1_preds, std::span<const WeekGroup> groups);
StageTargets stage3_target(const RatioVector& ratios, std::span<const WeekGroup> groups);

double stage3_loss(const PanelDataset& dataset, const StageTargets& targets, std::span<const double> preds);
std::vector<GradHess> stage3_gradhess(const PanelDataset& dataset, const StageTargets& targets,
                                      std::span<const double> preds);

/// The weekly-sum penalty on its own.
double constraint_only_loss(std::span<const WeekGroup> groups, std::span<const double> preds);
std::vector<GradHess> constraint_only_gradhess(std::span<const WeekGroup> groups, std::span<const double> preds);

/// Residual total_w - sum of member predictions, per group.
std::vector<double> week_residuals(std::span<const WeekGroup> groups, std::span<const double> preds);

// Objective adapters for the boosting engine. Each keeps references to its
// inputs, which must outlive it.

class Stage1Objective final : public gbdt::Objective {
public:
    explicit Stage1Objective(const StageTargets& targets);
    std::string_view name() const override { return "stage1"; }
    std::size_t size() const override { return targets_.values.size(); }
    double base_score() const override;
    double loss(std::span<const double> preds) const override;
    void gradhess(std::span<const double> preds, std::span<GradHess> out) const override;

private:
    const StageTargets& targets_;
};

class Stage2Objective final : public gbdt::Objective {
public:
    Stage2Objective(const PanelDataset& dataset, const StageTargets& targets);
    std::string_view name() const override { return "stage2"; }
    std::size_t size() const override { return dataset_.n(); }
    double base_score() const override;
    double loss(std::span<const double> preds) const override;
    void gradhess(std::span<const double> preds, std::span<GradHess> out) const override;

private:
    const PanelDataset& dataset_;
    const StageTargets& targets_;
};

class Stage3Objective final : public gbdt::Objective {
public:
    Stage3Objective(const PanelDataset& dataset, const StageTargets& targets);
    std::string_view name() const override { return "stage3"; }
    std::size_t size() const override { return dataset_.n(); }
    double base_score() const override;
    double loss(std::span<const double> preds) const override;
    void gradhess(std::span<const double> preds, std::span<GradHess> out) const override;

private:
    const PanelDataset& dataset_;
    const StageTargets& targets_;
};

/// Constraint term alone. Base score is the row mean of total_w / count_w.
class ConstraintOnlyObjective final : public gbdt::Objective {
public:
    ConstraintOnlyObjective(std::span<const WeekGroup> groups, std::size_t n);
    std::string_view name() const override { return "constraint-only"; }
    std::size_t size() const override { return n_; }
    double base_score() const override;
    double loss(std::span<const double> preds) const override;
    void gradhess(std::span<const double> preds, std::span<GradHess> out) const override;

private:
    std::span<const WeekGroup> groups_;
    std::size_t n_;
};

} // namespace tristage::objectives
