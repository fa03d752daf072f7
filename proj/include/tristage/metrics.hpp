#pragma once

#include "tristage/panel.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace tristage::metrics {

struct ProductMetrics {
    double mae = 0.0;
    double rmse = 0.0;
    /// sum |error| / sum |truth|
    double wmape = 0.0;
};

ProductMetrics product_metrics(std::span<const double> preds, std::span<const double> truth);

struct WeekAdherence {
    std::int64_t week = 0;
    double deviation = 0.0;
};

/// Relative miss of each week's summed prediction against its category total.
struct Adherence {
    std::vector<WeekAdherence> weeks;
    double mean = 0.0;
    double max = 0.0;
};

/// |sum_{i in w} preds_i - total_w| / total_w over the given groups.
Adherence category_adherence(std::span<const double> preds, std::span<const WeekGroup> groups);

/// The future-week groups of a dataset.
std::vector<WeekGroup> future_groups(const PanelDataset& dataset);

} // namespace tristage::metrics
