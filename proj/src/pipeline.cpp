#include "tristage/pipeline.hpp"

#include "tristage/csv.hpp"
#include "tristage/error.hpp"

#include <algorithm>
#include <cmath>

namespace tristage::pipeline {

namespace {

const char* const kTrainKeys[] = {"num_rounds", "max_depth", "learning_rate", "lambda",
                                  "min_child_weight", "min_gain", "seed"};

TrainConfig train_config_from(const KeyValues& kv, const std::string& prefix, TrainConfig c) {
    auto key = [&](const char* name) { return prefix + name; };
    c.num_rounds = static_cast<int>(kv.get_int(key("num_rounds"), c.num_rounds));
    c.max_depth = static_cast<int>(kv.get_int(key("max_depth"), c.max_depth));
    c.learning_rate = kv.get_double(key("learning_rate"), c.learning_rate);
    c.lambda = kv.get_double(key("lambda"), c.lambda);
    c.min_child_weight = kv.get_double(key("min_child_weight"), c.min_child_weight);
    c.min_gain = kv.get_double(key("min_gain"), c.min_gain);
    c.seed = kv.get_int(key("seed"), c.seed);
    return c;
}

void train_config_to(KeyValues& kv, const std::string& prefix, const TrainConfig& c) {
    kv.set(prefix + "num_rounds", std::to_string(c.num_rounds));
    kv.set(prefix + "max_depth", std::to_string(c.max_depth));
    kv.set(prefix + "learning_rate", csv::format_double(c.learning_rate));
    kv.set(prefix + "lambda", csv::format_double(c.lambda));
    kv.set(prefix + "min_child_weight", csv::format_double(c.min_child_weight));
    kv.set(prefix + "min_gain", csv::format_double(c.min_gain));
    kv.set(prefix + "seed", std::to_string(c.seed));
}

template <class F>
auto in_stage(const char* stage, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(stage) + ": " + e.what());
    }
}

} // namespace

PipelineConfig PipelineConfig::from_kv(const KeyValues& kv) {
    std::set<std::string> known{"bias_holdout_fraction"};
    for (const char* prefix : {"", "stage1.", "stage2.", "stage3.", "probe."}) {
        for (const char* k : kTrainKeys) known.insert(std::string(prefix) + k);
    }
    kv.reject_unknown(known, "pipeline");

    PipelineConfig c;
    const auto shared = train_config_from(kv, "", TrainConfig{});
    c.stage1 = train_config_from(kv, "stage1.", shared);
    c.stage2 = train_config_from(kv, "stage2.", shared);
    c.stage3 = train_config_from(kv, "stage3.", shared);
    TrainConfig probe = c.probe;
    probe.learning_rate = shared.learning_rate;
    probe.seed = shared.seed;
    c.probe = train_config_from(kv, "probe.", probe);
    c.bias_holdout_fraction = kv.get_double("bias_holdout_fraction", c.bias_holdout_fraction);
    c.validate();
    return c;
}

KeyValues PipelineConfig::to_kv() const {
    KeyValues kv;
    train_config_to(kv, "stage1.", stage1);
    train_config_to(kv, "stage2.", stage2);
    train_config_to(kv, "stage3.", stage3);
    train_config_to(kv, "probe.", probe);
    kv.set("bias_holdout_fraction", csv::format_double(bias_holdout_fraction));
    return kv;
}

void PipelineConfig::set_threads(int threads) {
    for (auto* c : {&stage1, &stage2, &stage3, &probe}) c->threads = threads;
}

void PipelineConfig::validate() const {
    stage1.validate();
    stage2.validate();
    stage3.validate();
    probe.validate();
    if (!(bias_holdout_fraction > 0.0 && bias_holdout_fraction < 1.0)) {
        throw Error(ErrorKind::Config, "bias_holdout_fraction must be in (0, 1)");
    }
}

StageResult run_stage1(const PanelDataset& dataset, const TrainConfig& config) {
    const StageTargets targets{objectives::StageKind::Stage1, dataset.actuals()};
    const objectives::Stage1Objective objective(targets);
    gbdt::TrainLog log;
    StageResult out;
    out.model = gbdt::fit(dataset.features().slice_rows(0, dataset.m()), objective, config, &log);
    out.preds = out.model.predict(dataset.features());
    out.loss_curve = std::move(log.loss_curve);
    return out;
}

StageTargets stage2_targets(const PanelDataset& dataset, std::span<const double> stage1) {
    if (stage1.size() != dataset.n()) throw Error(ErrorKind::Validation, "stage-1 predictions do not cover every row");
    StageTargets t{objectives::StageKind::Stage2, dataset.actuals()};
    t.values.insert(t.values.end(), stage1.begin() + static_cast<std::ptrdiff_t>(dataset.m()), stage1.end());
    return t;
}

StageResult run_stage2(const PanelDataset& dataset, std::span<const double> stage1, const TrainConfig& config) {
    const auto targets = stage2_targets(dataset, stage1);
    const objectives::Stage2Objective objective(dataset, targets);
    gbdt::TrainLog log;
    StageResult out;
    out.model = gbdt::fit(dataset.features(), objective, config, &log);
    out.preds = out.model.predict(dataset.features());
    out.loss_curve = std::move(log.loss_curve);
    return out;
}

FeatureMatrix stage3_features(const PanelDataset& dataset, std::span<const double> stage2) {
    if (stage2.size() != dataset.n()) throw Error(ErrorKind::Validation, "stage-2 predictions do not cover every row");
    return dataset.features().with_column(stage2);
}

Stage3Result run_stage3(const PanelDataset& dataset, std::span<const double> stage1,
                        std::span<const double> stage2, const TrainConfig& config) {
    if (stage1.size() != dataset.n()) throw Error(ErrorKind::Validation, "stage-1 predictions do not cover every row");
    Stage3Result out;
    out.ratios = objectives::pred_ratio(stage1, dataset.groups());
    out.targets = objectives::stage3_target(out.ratios, dataset.groups());
    const auto features = stage3_features(dataset, stage2);
    const objectives::Stage3Objective objective(dataset, out.targets);
    gbdt::TrainLog log;
    out.model = gbdt::fit(features, objective, config, &log);
    out.preds = out.model.predict(features);
    out.loss_curve = std::move(log.loss_curve);
    return out;
}

PipelineResult run_pipeline(const PanelDataset& dataset, const PipelineConfig& config,
                            const DiagnoseOptions& options) {
    config.validate();
    PipelineResult result;
    auto s1 = in_stage("stage 1", [&] { return run_stage1(dataset, config.stage1); });
    auto s2 = in_stage("stage 2", [&] { return run_stage2(dataset, s1.preds, config.stage2); });
    auto s3 = in_stage("stage 3", [&] { return run_stage3(dataset, s1.preds, s2.preds, config.stage3); });

    result.outputs.stage1 = std::move(s1.preds);
    result.outputs.stage2 = std::move(s2.preds);
    result.outputs.stage3 = std::move(s3.preds);
    result.outputs.ratios = std::move(s3.ratios);
    result.outputs.stage3_targets = std::move(s3.targets);
    result.models = {std::move(s1.model), std::move(s2.model), std::move(s3.model)};
    result.loss_curves = {std::move(s1.loss_curve), std::move(s2.loss_curve), std::move(s3.loss_curve)};
    result.diagnostics = in_stage("diagnostics", [&] { return diagnose(dataset, result.outputs, config, options); });
    return result;
}

StageOutputs predict_stages(const PanelDataset& dataset, const std::array<GbdtModel, 3>& models) {
    StageOutputs out;
    out.stage1 = in_stage("stage 1", [&] { return models[0].predict(dataset.features()); });
    out.stage2 = in_stage("stage 2", [&] { return models[1].predict(dataset.features()); });
    out.stage3 = in_stage("stage 3", [&] { return models[2].predict(stage3_features(dataset, out.stage2)); });
    out.ratios = in_stage("stage 3", [&] { return objectives::pred_ratio(out.stage1, dataset.groups()); });
    out.stage3_targets = objectives::stage3_target(out.ratios, dataset.groups());
    return out;
}

BiasTally tally_bias(std::span<const double> preds, std::span<const double> actuals) {
    if (preds.size() != actuals.size()) throw Error(ErrorKind::Validation, "tally_bias: length mismatch");
    BiasTally t;
    t.rows = preds.size();
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] > actuals[i]) ++t.over;
        else if (preds[i] < actuals[i]) ++t.under;
    }
    t.consistency_rate = t.rows == 0 ? 0.0 : static_cast<double>(std::max(t.over, t.under)) / static_cast<double>(t.rows);
    t.direction = t.over > t.under ? "over" : t.under > t.over ? "under" : "none";
    return t;
}

TrivialProbe run_trivial_probe(const PanelDataset& dataset, const TrainConfig& config,
                               std::vector<double>* preds_out) {
    FeatureMatrix week_only(dataset.n(), 1);
    for (std::size_t i = 0; i < dataset.n(); ++i) week_only(i, 0) = static_cast<double>(dataset.records()[i].week);

    const objectives::ConstraintOnlyObjective objective(dataset.groups(), dataset.n());
    gbdt::TrainLog log;
    const auto model = gbdt::fit(week_only, objective, config, &log);
    const auto preds = model.predict(week_only);

    TrivialProbe probe;
    probe.rounds = config.num_rounds;
    probe.final_loss = log.loss_curve.back();
    for (const auto& g : dataset.groups()) {
        const double trivial = g.category_total / static_cast<double>(g.count);
        for (auto i : g.member_indices) {
            const double gap = std::abs(preds[i] - trivial);
            probe.max_gap = std::max(probe.max_gap, gap);
            probe.max_relative_gap = std::max(probe.max_relative_gap, trivial > 0.0 ? gap / trivial : gap);
        }
    }
    if (preds_out) *preds_out = preds;
    return probe;
}

DiagnosticsReport diagnose(const PanelDataset& dataset, const StageOutputs& outputs, const PipelineConfig& config,
                           const DiagnoseOptions& options) {
    const auto n = dataset.n();
    if (outputs.stage1.size() != n || outputs.stage2.size() != n) {
        throw Error(ErrorKind::Validation, "diagnose: stage outputs do not cover every row");
    }
    DiagnosticsReport report;

    // Unconstrained weekly sums of the stage-1 model against the totals.
    const auto residuals = objectives::week_residuals(dataset.groups(), outputs.stage1);
    for (std::size_t g = 0; g < dataset.groups().size(); ++g) {
        const auto& group = dataset.groups()[g];
        WeekDeviation d;
        d.week = group.week;
        d.is_future = group.is_future;
        d.category_total = group.category_total;
        d.deviation = -residuals[g];
        d.predicted_sum = group.category_total + d.deviation;
        d.squared = d.deviation * d.deviation;
        if (group.is_future) report.stage1_future_squared_deviation += d.squared;
        report.stage1_weeks.push_back(d);
    }

    // Bias on the last historical weeks.
    std::vector<std::size_t> hist_groups;
    for (std::size_t g = 0; g < dataset.groups().size(); ++g) {
        if (!dataset.groups()[g].is_future) hist_groups.push_back(g);
    }
    auto tail_weeks = static_cast<std::size_t>(
        std::ceil(config.bias_holdout_fraction * static_cast<double>(hist_groups.size())));
    tail_weeks = std::clamp<std::size_t>(tail_weeks, 1, hist_groups.size());
    const auto& first_tail = dataset.groups()[hist_groups[hist_groups.size() - tail_weeks]];
    const std::size_t head_rows = first_tail.member_indices.front();
    const auto actuals = dataset.actuals();
    const std::span<const double> tail_actuals(actuals.data() + head_rows, dataset.m() - head_rows);
    if (options.refit_bias_tail && head_rows > 0) {
        const StageTargets head{objectives::StageKind::Stage1,
                                std::vector<double>(actuals.begin(), actuals.begin() + static_cast<std::ptrdiff_t>(head_rows))};
        const objectives::Stage1Objective objective(head);
        const auto model = gbdt::fit(dataset.features().slice_rows(0, head_rows), objective, config.stage1);
        const auto tail_preds = model.predict(dataset.features().slice_rows(head_rows, dataset.m() - head_rows));
        report.bias = tally_bias(tail_preds, tail_actuals);
        report.bias.source = "holdout-refit";
    } else {
        report.bias = tally_bias(std::span<const double>(outputs.stage1).subspan(head_rows, dataset.m() - head_rows),
                                 tail_actuals);
        report.bias.source = "in-sample";
    }
    report.bias.holdout_weeks = tail_weeks;

    // Stage-2 loss components at the trained solution.
    const auto targets = stage2_targets(dataset, outputs.stage1);
    auto& tm = report.terms;
    tm.terms = objectives::stage2_terms(dataset, targets, outputs.stage2);
    // A zero constraint term only occurs without future rows or at an exact
    // fit; the ratio is reported as 0 there.
    tm.fit_to_constraint = tm.terms.constraint > 0.0 ? tm.terms.fit_future / tm.terms.constraint : 0.0;
    tm.fit_to_constraint_future =
        tm.terms.constraint_future > 0.0 ? tm.terms.fit_future / tm.terms.constraint_future : 0.0;

    if (options.run_probe) report.probe = run_trivial_probe(dataset, config.probe);
    return report;
}

bool DiagnosticsReport::all_finite() const {
    auto ok = [](double v) { return std::isfinite(v); };
    for (const auto& w : stage1_weeks) {
        if (!ok(w.predicted_sum) || !ok(w.deviation) || !ok(w.squared)) return false;
    }
    return ok(stage1_future_squared_deviation) && ok(bias.consistency_rate) && ok(terms.terms.fit_future) &&
           ok(terms.terms.fit_historical) && ok(terms.terms.constraint) && ok(terms.terms.constraint_future) &&
           ok(terms.fit_to_constraint) && ok(terms.fit_to_constraint_future) && ok(probe.final_loss) &&
           ok(probe.max_gap) && ok(probe.max_relative_gap);
}

} // namespace tristage::pipeline
