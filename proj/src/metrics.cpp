#include "tristage/metrics.hpp"

#include "tristage/error.hpp"

#include <algorithm>
#include <cmath>

namespace tristage::metrics {

ProductMetrics product_metrics(std::span<const double> preds, std::span<const double> truth) {
    if (preds.size() != truth.size()) {
        throw Error(ErrorKind::Validation, "product_metrics: " + std::to_string(preds.size()) +
                                               " predictions vs " + std::to_string(truth.size()) + " truth values");
    }
    if (preds.empty()) throw Error(ErrorKind::Metric, "product_metrics: no rows");
    double abs_err = 0.0, sq_err = 0.0, abs_truth = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double e = preds[i] - truth[i];
        abs_err += std::abs(e);
        sq_err += e * e;
        abs_truth += std::abs(truth[i]);
    }
    if (abs_truth == 0.0) throw Error(ErrorKind::Metric, "WMAPE undefined: truth is identically zero");
    const double n = static_cast<double>(preds.size());
    return {abs_err / n, std::sqrt(sq_err / n), abs_err / abs_truth};
}

Adherence category_adherence(std::span<const double> preds, std::span<const WeekGroup> groups) {
    Adherence out;
    if (groups.empty()) return out;
    double total_dev = 0.0;
    for (const auto& g : groups) {
        if (!(g.category_total > 0.0)) {
            throw Error(ErrorKind::Metric, "week " + std::to_string(g.week) + ": category total is not positive");
        }
        double s = 0.0;
        for (auto i : g.member_indices) {
            if (i >= preds.size()) throw Error(ErrorKind::Validation, "category_adherence: member index out of range");
            s += preds[i];
        }
        const double dev = std::abs(s - g.category_total) / g.category_total;
        out.weeks.push_back({g.week, dev});
        total_dev += dev;
        out.max = std::max(out.max, dev);
    }
    out.mean = total_dev / static_cast<double>(groups.size());
    return out;
}

std::vector<WeekGroup> future_groups(const PanelDataset& dataset) {
    std::vector<WeekGroup> out;
    for (const auto& g : dataset.groups()) {
        if (g.is_future) out.push_back(g);
    }
    return out;
}

} // namespace tristage::metrics
