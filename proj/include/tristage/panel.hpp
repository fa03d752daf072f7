#pragma once

#include "tristage/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tristage {

/// One product-week observation. `actual_sales` is present exactly on
/// historical rows.
struct PanelRecord {
    std::string product_id;
    std::int64_t week = 0;
    std::vector<double> features;
    std::optional<double> actual_sales;

    bool operator==(const PanelRecord&) const = default;
};

/// All rows of one week. The group couples its members through the weekly
/// category total: the exact sum of member actuals for historical weeks, the
/// externally supplied total for future weeks.
struct WeekGroup {
    std::int64_t week = 0;
    std::vector<std::size_t> member_indices;
    std::size_t count = 0;
    double category_total = 0.0;
    bool is_future = false;

    bool operator==(const WeekGroup&) const = default;
};

/// Column names used when reading and writing panel CSV files.
struct PanelSchema {
    std::string product = "product_id";
    std::string week = "week";
    std::string target = "sales";
    std::string category_total = "category_total";
    /// Optional single-category column; must be constant when present.
    std::string category = "category";
    /// Feature columns in order. Empty means every column not named above,
    /// in header order.
    std::vector<std::string> features;
};

/// Immutable product-week panel. Rows are sorted by (week, product_id);
/// rows [0, m) are historical and rows [m, n) are future.
class PanelDataset {
public:
    PanelDataset(std::vector<PanelRecord> records, std::vector<std::string> feature_names,
                 const std::map<std::int64_t, double>& future_totals);

    const std::vector<PanelRecord>& records() const noexcept { return records_; }
    const std::vector<WeekGroup>& groups() const noexcept { return groups_; }
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    const FeatureMatrix& features() const noexcept { return features_; }

    std::size_t m() const noexcept { return m_; }
    std::size_t n() const noexcept { return records_.size(); }
    std::size_t feature_count() const noexcept { return feature_names_.size(); }

    /// Index into groups() of the week containing row `row`.
    std::size_t group_of(std::size_t row) const { return row_group_[row]; }

    /// Actual sales of the historical rows, in row order (length m).
    std::vector<double> actuals() const;

    /// Supplied totals of the future weeks.
    std::map<std::int64_t, double> future_totals() const;

    bool operator==(const PanelDataset& other) const {
        return records_ == other.records_ && feature_names_ == other.feature_names_ &&
               groups_ == other.groups_ && m_ == other.m_;
    }

private:
    std::vector<PanelRecord> records_;
    std::vector<std::string> feature_names_;
    std::vector<WeekGroup> groups_;
    std::vector<std::size_t> row_group_;
    FeatureMatrix features_;
    std::size_t m_ = 0;
};

/// Groups sorted records by week. Historical totals are member sums taken in
/// member order; future totals are copied from `future_totals`.
std::vector<WeekGroup> build_week_groups(std::span<const PanelRecord> records, std::size_t m,
                                         const std::map<std::int64_t, double>& future_totals);

PanelDataset load_panel_csv(const std::filesystem::path& path, const PanelSchema& schema = {});

/// Loads several files (for example a train and a test split) as one panel.
PanelDataset load_panel_csv(std::span<const std::filesystem::path> paths,
                            const PanelSchema& schema = {});

/// Writes rows [first, first + count) of the dataset in the panel CSV schema.
void write_panel_csv(const PanelDataset& dataset, const std::filesystem::path& path,
                     std::size_t first, std::size_t count);
void write_panel_csv(const PanelDataset& dataset, const std::filesystem::path& path);

} // namespace tristage
