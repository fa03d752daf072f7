#pragma once

#include "tristage/panel.hpp"

#include <filesystem>
#include <map>
#include <fstream>
#include <iterator>
#include <random>
#include <unistd.h>
#include <string>
#include <vector>

namespace testing_support {

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("tristage_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Random panel: `weeks` weeks of 1..max_count products, the first
/// `hist_weeks` historical. Features are uniform in [0, 1).
inline tristage::PanelDataset random_panel(std::mt19937_64& rng, int weeks, int hist_weeks, int max_count,
                                           std::size_t features = 2) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> count(1, max_count);
    std::vector<tristage::PanelRecord> records;
    std::map<std::int64_t, double> totals;
    for (int w = 0; w < weeks; ++w) {
        const int c = count(rng);
        for (int p = 0; p < c; ++p) {
            tristage::PanelRecord r;
            r.product_id = "P" + std::to_string(p);
            r.week = w;
            for (std::size_t f = 0; f < features; ++f) r.features.push_back(unit(rng));
            if (w < hist_weeks) r.actual_sales = unit(rng) * 2.0;
            records.push_back(r);
        }
        if (w >= hist_weeks) totals[w] = 0.5 + unit(rng) * static_cast<double>(c);
    }
    std::vector<std::string> names;
    for (std::size_t f = 0; f < features; ++f) names.push_back("f_" + std::to_string(f));
    return tristage::PanelDataset(std::move(records), std::move(names), totals);
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

} // namespace testing_support
