#pragma once

#include "tristage/gbdt.hpp"
#include "tristage/kvconfig.hpp"
#include "tristage/objectives.hpp"
#include "tristage/panel.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace tristage::pipeline {

using gbdt::GbdtModel;
using gbdt::TrainConfig;
using objectives::RatioVector;
using objectives::StageTargets;

/// Per-stage training settings plus the knobs of the diagnostics.
struct PipelineConfig {
    TrainConfig stage1;
    TrainConfig stage2;
    TrainConfig stage3;
    /// Constraint-only probe run by diagnose().
    TrainConfig probe{.num_rounds = 200, .max_depth = 8};
    /// Share of historical weeks held out for the bias tally.
    double bias_holdout_fraction = 0.2;

    /// Shared keys (num_rounds, max_depth, learning_rate, lambda,
    /// min_child_weight, min_gain, seed) apply to the three stages;
    /// `stageN.<key>` and `probe.<key>` override them.
    static PipelineConfig from_kv(const KeyValues& kv);
    /// Fully resolved echo; from_kv(to_kv()) reproduces this config.
    KeyValues to_kv() const;

    void set_threads(int threads);
    void validate() const;
};

struct StageResult {
    std::vector<double> preds;
    GbdtModel model;
    std::vector<double> loss_curve;
};

struct Stage3Result : StageResult {
    RatioVector ratios;
    StageTargets targets;
};

/// Predictions of every stage, aligned with dataset rows.
struct StageOutputs {
    std::vector<double> stage1;
    std::vector<double> stage2;
    std::vector<double> stage3;
    RatioVector ratios;
    StageTargets stage3_targets{objectives::StageKind::Stage3, {}};
};

struct WeekDeviation {
    std::int64_t week = 0;
    bool is_future = false;
    double predicted_sum = 0.0;
    double category_total = 0.0;
    /// predicted_sum - category_total
    double deviation = 0.0;
    double squared = 0.0;
};

struct BiasTally {
    /// "holdout-refit" or "in-sample".
    std::string source;
    std::size_t holdout_weeks = 0;
    std::size_t rows = 0;
    std::size_t over = 0;
    std::size_t under = 0;
    /// max(over, under) / rows
    double consistency_rate = 0.0;
    /// "over", "under" or "none".
    std::string direction;
};

struct TermMagnitudes {
    objectives::Stage2Terms terms;
    /// Future-row fit term over the full constraint term.
    double fit_to_constraint = 0.0;
    /// Future-row fit term over the future-week constraint term.
    double fit_to_constraint_future = 0.0;
};

struct TrivialProbe {
    int rounds = 0;
    double final_loss = 0.0;
    /// max over rows of |prediction - total_w / count_w|
    double max_gap = 0.0;
    double max_relative_gap = 0.0;
};

struct DiagnosticsReport {
    std::vector<WeekDeviation> stage1_weeks;
    double stage1_future_squared_deviation = 0.0;
    BiasTally bias;
    TermMagnitudes terms;
    TrivialProbe probe;

    bool all_finite() const;
};

struct DiagnoseOptions {
    /// Refit stage 1 without the held-out tail for the bias tally; otherwise
    /// tally the in-sample stage-1 fit on the tail.
    bool refit_bias_tail = true;
    bool run_probe = true;
};

struct PipelineResult {
    StageOutputs outputs;
    std::array<GbdtModel, 3> models;
    std::array<std::vector<double>, 3> loss_curves;
    DiagnosticsReport diagnostics;
};

StageResult run_stage1(const PanelDataset& dataset, const TrainConfig& config);

/// Actuals on rows [0, m), stage-1 predictions on [m, n), copied bitwise.
StageTargets stage2_targets(const PanelDataset& dataset, std::span<const double> stage1);
StageResult run_stage2(const PanelDataset& dataset, std::span<const double> stage1, const TrainConfig& config);

/// Dataset features with the stage-2 predictions appended as one column.
FeatureMatrix stage3_features(const PanelDataset& dataset, std::span<const double> stage2);
Stage3Result run_stage3(const PanelDataset& dataset, std::span<const double> stage1,
                        std::span<const double> stage2, const TrainConfig& config);

PipelineResult run_pipeline(const PanelDataset& dataset, const PipelineConfig& config,
                            const DiagnoseOptions& options = {});

/// Recomputes every stage's predictions from persisted models.
StageOutputs predict_stages(const PanelDataset& dataset, const std::array<GbdtModel, 3>& models);

DiagnosticsReport diagnose(const PanelDataset& dataset, const StageOutputs& outputs, const PipelineConfig& config,
                           const DiagnoseOptions& options = {});

BiasTally tally_bias(std::span<const double> preds, std::span<const double> actuals);

/// Constraint-only training on a copy of the dataset whose only feature is
/// the week index, i.e. features carry no information within a week.
TrivialProbe run_trivial_probe(const PanelDataset& dataset, const TrainConfig& config,
                               std::vector<double>* preds_out = nullptr);

} // namespace tristage::pipeline
