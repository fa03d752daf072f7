#include "tristage/panel.hpp"

#include "tristage/csv.hpp"
#include "tristage/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace tristage {

namespace {

std::string row_label(const PanelRecord& r) {
    return "product '" + r.product_id + "' week " + std::to_string(r.week);
}

void validate_record(const PanelRecord& r, std::size_t dim) {
    if (r.week < 0) throw Error(ErrorKind::Validation, row_label(r) + ": negative week index");
    if (r.features.size() != dim) {
        throw Error(ErrorKind::Validation, row_label(r) + ": expected " + std::to_string(dim) +
                                               " features, got " + std::to_string(r.features.size()));
    }
    for (double v : r.features) {
        if (!std::isfinite(v)) throw Error(ErrorKind::Validation, row_label(r) + ": non-finite feature");
    }
    if (r.actual_sales) {
        if (!std::isfinite(*r.actual_sales) || *r.actual_sales < 0.0) {
            throw Error(ErrorKind::Validation, row_label(r) + ": sales must be finite and non-negative");
        }
    }
}

} // namespace

std::vector<WeekGroup> build_week_groups(std::span<const PanelRecord> records, std::size_t m,
                                         const std::map<std::int64_t, double>& future_totals) {
    std::vector<WeekGroup> groups;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (groups.empty() || groups.back().week != r.week) {
            if (!groups.empty() && r.week < groups.back().week) {
                throw Error(ErrorKind::Ordering, "records are not sorted by week at " + row_label(r));
            }
            WeekGroup g;
            g.week = r.week;
            g.is_future = i >= m;
            groups.push_back(std::move(g));
        }
        auto& g = groups.back();
        if (g.is_future != (i >= m)) {
            throw Error(ErrorKind::Ordering,
                        "week " + std::to_string(r.week) + " mixes historical and future rows");
        }
        g.member_indices.push_back(i);
    }
    for (auto& g : groups) {
        g.count = g.member_indices.size();
        if (g.is_future) {
            auto it = future_totals.find(g.week);
            if (it == future_totals.end()) {
                throw Error(ErrorKind::ConstraintData,
                            "future week " + std::to_string(g.week) + " has no category total");
            }
            if (!std::isfinite(it->second) || it->second < 0.0) {
                throw Error(ErrorKind::ConstraintData, "future week " + std::to_string(g.week) +
                                                           " has an invalid category total");
            }
            g.category_total = it->second;
        } else {
            double total = 0.0;
            for (auto idx : g.member_indices) total += *records[idx].actual_sales;
            g.category_total = total;
        }
    }
    return groups;
}

PanelDataset::PanelDataset(std::vector<PanelRecord> records, std::vector<std::string> feature_names,
                           const std::map<std::int64_t, double>& future_totals)
    : records_(std::move(records)), feature_names_(std::move(feature_names)) {
    if (records_.empty()) throw Error(ErrorKind::Validation, "panel dataset has no rows");
    const std::size_t dim = feature_names_.size();
    for (const auto& r : records_) validate_record(r, dim);

    std::stable_sort(records_.begin(), records_.end(), [](const PanelRecord& a, const PanelRecord& b) {
        return a.week != b.week ? a.week < b.week : a.product_id < b.product_id;
    });
    for (std::size_t i = 1; i < records_.size(); ++i) {
        if (records_[i].week == records_[i - 1].week &&
            records_[i].product_id == records_[i - 1].product_id) {
            throw Error(ErrorKind::Validation, row_label(records_[i]) + ": duplicate row");
        }
    }

    // Historical rows must form a week-contiguous prefix.
    std::size_t m = 0;
    while (m < records_.size() && records_[m].actual_sales) ++m;
    for (std::size_t i = m; i < records_.size(); ++i) {
        if (records_[i].actual_sales) {
            throw Error(ErrorKind::Ordering,
                        row_label(records_[i]) + (records_[i].week == records_[m].week
                                                      ? ": week mixes rows with and without sales"
                                                      : ": historical row appears after a future week"));
        }
    }
    if (m == 0) throw Error(ErrorKind::Validation, "panel dataset has no historical rows");
    if (m < records_.size() && records_[m].week == records_[m - 1].week) {
        throw Error(ErrorKind::Ordering, "week " + std::to_string(records_[m].week) +
                                             " mixes rows with and without sales");
    }
    m_ = m;

    groups_ = build_week_groups(records_, m_, future_totals);
    row_group_.resize(records_.size());
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        for (auto idx : groups_[g].member_indices) row_group_[idx] = g;
    }

    std::vector<double> values;
    values.reserve(records_.size() * dim);
    for (const auto& r : records_) values.insert(values.end(), r.features.begin(), r.features.end());
    features_ = FeatureMatrix(records_.size(), dim, std::move(values));
}

std::vector<double> PanelDataset::actuals() const {
    std::vector<double> out;
    out.reserve(m_);
    for (std::size_t i = 0; i < m_; ++i) out.push_back(*records_[i].actual_sales);
    return out;
}

std::map<std::int64_t, double> PanelDataset::future_totals() const {
    std::map<std::int64_t, double> out;
    for (const auto& g : groups_) {
        if (g.is_future) out[g.week] = g.category_total;
    }
    return out;
}

namespace {

struct ParsedFile {
    std::vector<PanelRecord> records;
    std::vector<std::string> feature_names;
    std::map<std::int64_t, double> future_totals;
    std::optional<std::string> category;
};

std::size_t require_column(const csv::Table& t, const std::string& name,
                           const std::filesystem::path& path) {
    auto idx = t.column(name);
    if (!idx) throw Error(ErrorKind::Schema, path.string() + ": missing column '" + name + "'");
    return *idx;
}

ParsedFile parse_file(const std::filesystem::path& path, const PanelSchema& schema) {
    const auto table = csv::read(path);
    const auto product_col = require_column(table, schema.product, path);
    const auto week_col = require_column(table, schema.week, path);
    const auto target_col = require_column(table, schema.target, path);
    const auto total_col = require_column(table, schema.category_total, path);
    const auto category_col = table.column(schema.category);

    ParsedFile out;
    std::vector<std::size_t> feature_cols;
    if (schema.features.empty()) {
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            if (c == product_col || c == week_col || c == target_col || c == total_col ||
                (category_col && c == *category_col)) {
                continue;
            }
            feature_cols.push_back(c);
            out.feature_names.push_back(table.header[c]);
        }
    } else {
        for (const auto& name : schema.features) feature_cols.push_back(require_column(table, name, path));
        out.feature_names = schema.features;
    }

    for (std::size_t line = 0; line < table.rows.size(); ++line) {
        const auto& row = table.rows[line];
        const auto where = [&] { return path.string() + ":" + std::to_string(line + 2); };

        PanelRecord rec;
        rec.product_id = row[product_col];
        if (rec.product_id.empty()) throw Error(ErrorKind::Validation, where() + ": empty product id");
        auto week = csv::parse_int(row[week_col]);
        if (!week) throw Error(ErrorKind::Validation, where() + ": week is not an integer");
        rec.week = *week;

        for (auto c : feature_cols) {
            auto v = csv::parse_double(row[c]);
            if (!v || !std::isfinite(*v)) {
                throw Error(ErrorKind::Validation,
                            where() + ": feature '" + table.header[c] + "' is missing or not finite");
            }
            rec.features.push_back(*v);
        }

        const auto& sales = row[target_col];
        if (sales.find_first_not_of(" \t") != std::string::npos) {
            auto v = csv::parse_double(sales);
            if (!v) throw Error(ErrorKind::Validation, where() + ": sales is not a number");
            rec.actual_sales = *v;
        } else {
            const auto& total_text = row[total_col];
            auto total = csv::parse_double(total_text);
            if (!total) {
                throw Error(ErrorKind::ConstraintData,
                            where() + ": future row lacks a category total");
            }
            auto [it, inserted] = out.future_totals.emplace(rec.week, *total);
            if (!inserted && it->second != *total) {
                throw Error(ErrorKind::ConstraintData,
                            where() + ": conflicting category totals for week " + std::to_string(rec.week));
            }
        }

        if (category_col) {
            const auto& cat = row[*category_col];
            if (!out.category) out.category = cat;
            else if (*out.category != cat) {
                throw Error(ErrorKind::Validation, where() + ": more than one category in file");
            }
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

} // namespace

PanelDataset load_panel_csv(const std::filesystem::path& path, const PanelSchema& schema) {
    return load_panel_csv(std::span<const std::filesystem::path>(&path, 1), schema);
}

PanelDataset load_panel_csv(std::span<const std::filesystem::path> paths, const PanelSchema& schema) {
    if (paths.empty()) throw Error(ErrorKind::Usage, "no panel files given");
    std::vector<PanelRecord> records;
    std::vector<std::string> names;
    std::map<std::int64_t, double> totals;
    std::optional<std::string> category;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        auto file = parse_file(paths[i], schema);
        if (i == 0) names = file.feature_names;
        else if (file.feature_names != names) {
            throw Error(ErrorKind::Schema, paths[i].string() + ": feature columns differ from " +
                                               paths[0].string());
        }
        if (file.category) {
            if (category && *category != *file.category) {
                throw Error(ErrorKind::Validation, "panel files disagree on the category");
            }
            category = file.category;
        }
        for (auto& [week, total] : file.future_totals) {
            auto [it, inserted] = totals.emplace(week, total);
            if (!inserted && it->second != total) {
                throw Error(ErrorKind::ConstraintData,
                            "conflicting category totals for week " + std::to_string(week));
            }
        }
        std::move(file.records.begin(), file.records.end(), std::back_inserter(records));
    }
    return PanelDataset(std::move(records), std::move(names), totals);
}

void write_panel_csv(const PanelDataset& dataset, const std::filesystem::path& path,
                     std::size_t first, std::size_t count) {
    if (first + count > dataset.n()) throw Error(ErrorKind::Validation, "write_panel_csv: row range out of bounds");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << "product_id,week,sales,category_total";
    for (const auto& name : dataset.feature_names()) out << ',' << csv::quote(name);
    out << '\n';
    for (std::size_t i = first; i < first + count; ++i) {
        const auto& r = dataset.records()[i];
        out << csv::quote(r.product_id) << ',' << r.week << ',';
        if (r.actual_sales) {
            out << csv::format_double(*r.actual_sales) << ',';
        } else {
            out << ',' << csv::format_double(dataset.groups()[dataset.group_of(i)].category_total);
        }
        for (double v : r.features) out << ',' << csv::format_double(v);
        out << '\n';
    }
    if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

void write_panel_csv(const PanelDataset& dataset, const std::filesystem::path& path) {
    write_panel_csv(dataset, path, 0, dataset.n());
}

} // namespace tristage
