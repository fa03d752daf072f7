#pragma once

#include "tristage/kvconfig.hpp"
#include "tristage/panel.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

namespace tristage::scenario {

enum class CurveKind { Flat, LinearTrend, Seasonal };

/// Weekly category total S_w.
struct CategoryCurve {
    CurveKind kind = CurveKind::Seasonal;
    double level = 1000.0;
    /// Fractional growth per week (linear-trend).
    double slope = 0.002;
    /// Relative amplitude (seasonal).
    double amplitude = 0.15;
    double period = 52.0;

    double total(std::int64_t week) const;
};

/// Synthetic cannibalisation scenario. Products missing from
/// `launch_schedule` are on sale from week 0; every scheduled product enters
/// at its launch week and takes `share_decay_on_launch` of the market from
/// the products already on sale.
struct ScenarioConfig {
    int num_products = 5;
    int num_weeks_hist = 80;
    int num_weeks_future = 20;
    std::map<int, std::int64_t> launch_schedule{{3, 40}, {4, 88}};
    CategoryCurve curve;
    double share_decay_on_launch = 0.2;
    double noise_sd = 0.05;
    /// Multiplicative corruption of the lagged-sales feature on future rows.
    double stage1_bias_injection = 0.3;
    std::int64_t seed = 7;

    void validate() const;

    static ScenarioConfig from_kv(const KeyValues& kv);
    KeyValues to_kv() const;
};

/// Column order of generated features (CSV names are f_0..f_5).
enum FeatureColumn : std::size_t {
    kProductAge = 0,
    kWeeksSinceLaunch,
    kWeeksToNextLaunch,
    kLaggedSales,
    kAttractiveness,
    kSeason,
    kFeatureCount,
};

struct TruthRow {
    std::string product_id;
    std::int64_t week = 0;
    double true_sales = 0.0;
};

struct Scenario {
    PanelDataset dataset;
    /// True sales of every dataset row, in dataset order.
    std::vector<double> true_sales;
    /// True sales of the future rows only; never used for training.
    std::vector<TruthRow> truth;
};

std::string product_name(int index, int num_products);

Scenario generate(const ScenarioConfig& config);

/// Noise-free market shares, [week][product]; zero before a product launches.
std::vector<std::vector<double>> expected_shares(const ScenarioConfig& config);

/// Writes train.csv (historical rows), test.csv (future rows) and truth.csv.
void write_scenario(const Scenario& scenario, const std::filesystem::path& dir);

std::vector<TruthRow> read_truth_csv(const std::filesystem::path& path);
void write_truth_csv(std::span<const TruthRow> truth, const std::filesystem::path& path);

} // namespace tristage::scenario
