#include "tristage/objectives.hpp"

#include "tristage/error.hpp"

#include <cmath>

namespace tristage::objectives {

namespace {

void require_length(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw Error(ErrorKind::Validation, std::string(what) + ": expected length " + std::to_string(want) +
                                               ", got " + std::to_string(got));
    }
}

void require_kind(const StageTargets& t, StageKind kind, const char* what) {
    if (t.kind != kind) throw Error(ErrorKind::Validation, std::string(what) + ": wrong target kind");
}

void require_members_in_range(std::span<const WeekGroup> groups, std::size_t n) {
    for (const auto& g : groups) {
        for (auto i : g.member_indices) {
            if (i >= n) throw Error(ErrorKind::Validation, "week group member index out of range");
        }
    }
}

double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sum_squared_residuals(std::span<const WeekGroup> groups, std::span<const double> preds) {
    double s = 0.0;
    for (double r : week_residuals(groups, preds)) s += r * r;
    return s;
}

// Shared by stages 2 and 3: grad_j = -2(t_j - p_j)/n - 2 R_w(j)/n.
void coupled_gradhess(const PanelDataset& ds, std::span<const double> targets, std::span<const double> preds,
                      std::span<GradHess> out) {
    const double n = static_cast<double>(ds.n());
    const auto residuals = week_residuals(ds.groups(), preds);
    for (std::size_t j = 0; j < ds.n(); ++j) {
        out[j].grad = -2.0 * (targets[j] - preds[j]) / n - 2.0 * residuals[ds.group_of(j)] / n;
        out[j].hess = 4.0 / n;
    }
}

double coupled_loss(const PanelDataset& ds, std::span<const double> targets, std::span<const double> preds) {
    double fit = 0.0;
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const double e = targets[i] - preds[i];
        fit += e * e;
    }
    const double n = static_cast<double>(ds.n());
    return fit / n + sum_squared_residuals(ds.groups(), preds) / n;
}

} // namespace

std::vector<double> week_residuals(std::span<const WeekGroup> groups, std::span<const double> preds) {
    std::vector<double> out;
    out.reserve(groups.size());
    for (const auto& g : groups) {
        double s = 0.0;
        for (auto i : g.member_indices) s += preds[i];
        out.push_back(g.category_total - s);
    }
    return out;
}

double stage1_loss(const StageTargets& targets, std::span<const double> preds) {
    require_kind(targets, StageKind::Stage1, "stage1_loss");
    require_length(preds.size(), targets.values.size(), "stage1_loss");
    double s = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double e = targets.values[i] - preds[i];
        s += e * e;
    }
    return s / static_cast<double>(preds.size());
}

std::vector<GradHess> stage1_gradhess(const StageTargets& targets, std::span<const double> preds) {
    require_kind(targets, StageKind::Stage1, "stage1_gradhess");
    require_length(preds.size(), targets.values.size(), "stage1_gradhess");
    const double m = static_cast<double>(preds.size());
    std::vector<GradHess> out(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        out[i] = {-2.0 * (targets.values[i] - preds[i]) / m, 2.0 / m};
    }
    return out;
}

double stage2_loss(const PanelDataset& dataset, const StageTargets& targets, std::span<const double> preds) {
    require_kind(targets, StageKind::Stage2, "stage2_loss");
    require_length(targets.values.size(), dataset.n(), "stage2_loss targets");
    require_length(preds.size(), dataset.n(), "stage2_loss predictions");
    return coupled_loss(dataset, targets.values, preds);
}

std::vector<GradHess> stage2_gradhess(const PanelDataset& dataset, const StageTargets& targets,
                                      std::span<const double> preds) {
    require_kind(targets, StageKind::Stage2, "stage2_gradhess");
    require_length(targets.values.size(), dataset.n(), "stage2_gradhess targets");
    require_length(preds.size(), dataset.n(), "stage2_gradhess predictions");
    std::vector<GradHess> out(dataset.n());
    coupled_gradhess(dataset, targets.values, preds, out);
    return out;
}

Stage2Terms stage2_terms(const PanelDataset& dataset, const StageTargets& targets, std::span<const double> preds) {
    require_kind(targets, StageKind::Stage2, "stage2_terms");
    require_length(targets.values.size(), dataset.n(), "stage2_terms targets");
    require_length(preds.size(), dataset.n(), "stage2_terms predictions");
    const double n = static_cast<double>(dataset.n());
    Stage2Terms terms;
    for (std::size_t i = 0; i < dataset.n(); ++i) {
        const double e = targets.values[i] - preds[i];
        (i < dataset.m() ? terms.fit_historical : terms.fit_future) += e * e;
    }
    const auto residuals = week_residuals(dataset.groups(), preds);
    for (std::size_t g = 0; g < residuals.size(); ++g) {
        const double r2 = residuals[g] * residuals[g];
        terms.constraint += r2;
        if (dataset.groups()[g].is_future) terms.constraint_future += r2;
    }
    terms.fit_historical /= n;
    terms.fit_future /= n;
    terms.constraint /= n;
    terms.constraint_future /= n;
    return terms;
}

RatioVector pred_ratio(std::span<const double> stage1_preds, std::span<const WeekGroup> groups) {
    require_members_in_range(groups, stage1_preds.size());
    RatioVector out;
    out.values.assign(stage1_preds.size(), 0.0);
    for (const auto& g : groups) {
        double sum = 0.0, abs_sum = 0.0;
        for (auto i : g.member_indices) {
            sum += stage1_preds[i];
            abs_sum += std::abs(stage1_preds[i]);
        }
        const double eps = 1e-9 * (abs_sum / static_cast<double>(g.member_indices.size()) + 1.0);
        if (!(std::abs(sum) >= eps)) {
            throw Error(ErrorKind::DegenerateRatio,
                        "week " + std::to_string(g.week) + ": stage-1 predictions sum to ~0, ratio undefined");
        }
        for (auto i : g.member_indices) out.values[i] = stage1_preds[i] / sum;
    }
    return out;
}

StageTargets stage3_target(const RatioVector& ratios, std::span<const WeekGroup> groups) {
    require_members_in_range(groups, ratios.values.size());
    StageTargets out{StageKind::Stage3, std::vector<double>(ratios.values.size(), 0.0)};
    for (const auto& g : groups) {
        for (auto i : g.member_indices) out.values[i] = ratios.values[i] * g.category_total;
    }
    return out;
}

double stage3_loss(const PanelDataset& dataset, const StageTargets& targets, std::span<const double> preds) {
    require_kind(targets, StageKind::Stage3, "stage3_loss");
    require_length(targets.values.size(), dataset.n(), "stage3_loss targets");
    require_length(preds.size(), dataset.n(), "stage3_loss predictions");
    return coupled_loss(dataset, targets.values, preds);
}

std::vector<GradHess> stage3_gradhess(const PanelDataset& dataset, const StageTargets& targets,
                                      std::span<const double> preds) {
    require_kind(targets, StageKind::Stage3, "stage3_gradhess");
    require_length(targets.values.size(), dataset.n(), "stage3_gradhess targets");
    require_length(preds.size(), dataset.n(), "stage3_gradhess predictions");
    std::vector<GradHess> out(dataset.n());
    coupled_gradhess(dataset, targets.values, preds, out);
    return out;
}

double constraint_only_loss(std::span<const WeekGroup> groups, std::span<const double> preds) {
    require_members_in_range(groups, preds.size());
    return sum_squared_residuals(groups, preds) / static_cast<double>(preds.size());
}

std::vector<GradHess> constraint_only_gradhess(std::span<const WeekGroup> groups, std::span<const double> preds) {
    require_members_in_range(groups, preds.size());
    const double n = static_cast<double>(preds.size());
    const auto residuals = week_residuals(groups, preds);
    std::vector<GradHess> out(preds.size(), GradHess{0.0, 2.0 / n});
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (auto i : groups[g].member_indices) out[i].grad = -2.0 * residuals[g] / n;
    }
    return out;
}

Stage1Objective::Stage1Objective(const StageTargets& targets) : targets_(targets) {
    require_kind(targets, StageKind::Stage1, "Stage1Objective");
}

double Stage1Objective::base_score() const { return mean(targets_.values); }

double Stage1Objective::loss(std::span<const double> preds) const { return stage1_loss(targets_, preds); }

void Stage1Objective::gradhess(std::span<const double> preds, std::span<GradHess> out) const {
    const auto gh = stage1_gradhess(targets_, preds);
    std::copy(gh.begin(), gh.end(), out.begin());
}

Stage2Objective::Stage2Objective(const PanelDataset& dataset, const StageTargets& targets)
    : dataset_(dataset), targets_(targets) {
    require_kind(targets, StageKind::Stage2, "Stage2Objective");
    require_length(targets.values.size(), dataset.n(), "Stage2Objective targets");
}

double Stage2Objective::base_score() const { return mean(targets_.values); }

double Stage2Objective::loss(std::span<const double> preds) const { return stage2_loss(dataset_, targets_, preds); }

void Stage2Objective::gradhess(std::span<const double> preds, std::span<GradHess> out) const {
    require_length(preds.size(), dataset_.n(), "stage2 predictions");
    coupled_gradhess(dataset_, targets_.values, preds, out);
}

Stage3Objective::Stage3Objective(const PanelDataset& dataset, const StageTargets& targets)
    : dataset_(dataset), targets_(targets) {
    require_kind(targets, StageKind::Stage3, "Stage3Objective");
    require_length(targets.values.size(), dataset.n(), "Stage3Objective targets");
}

double Stage3Objective::base_score() const { return mean(targets_.values); }

double Stage3Objective::loss(std::span<const double> preds) const { return stage3_loss(dataset_, targets_, preds); }

void Stage3Objective::gradhess(std::span<const double> preds, std::span<GradHess> out) const {
    require_length(preds.size(), dataset_.n(), "stage3 predictions");
    coupled_gradhess(dataset_, targets_.values, preds, out);
}

ConstraintOnlyObjective::ConstraintOnlyObjective(std::span<const WeekGroup> groups, std::size_t n)
    : groups_(groups), n_(n) {
    require_members_in_range(groups, n);
}

double ConstraintOnlyObjective::base_score() const {
    double s = 0.0;
    for (const auto& g : groups_) s += g.category_total;  // count_w rows each at total_w / count_w
    return n_ == 0 ? 0.0 : s / static_cast<double>(n_);
}

double ConstraintOnlyObjective::loss(std::span<const double> preds) const {
    return constraint_only_loss(groups_, preds);
}

void ConstraintOnlyObjective::gradhess(std::span<const double> preds, std::span<GradHess> out) const {
    const auto gh = constraint_only_gradhess(groups_, preds);
    std::copy(gh.begin(), gh.end(), out.begin());
}

} // namespace tristage::objectives
