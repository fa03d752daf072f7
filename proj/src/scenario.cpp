#include "tristage/scenario.hpp"

#include "tristage/csv.hpp"
#include "tristage/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace tristage::scenario {

namespace {

constexpr std::int64_t kLaunchHorizon = 52;
constexpr double kProxyNoiseSd = 0.1;
constexpr double kBaseAttractivenessSd = 0.4;
constexpr double kTrendRange = 0.005;

[[noreturn]] void config_error(const std::string& what) {
    throw Error(ErrorKind::Config, "scenario config: " + what);
}

/// Platform-independent draws on top of mt19937_64 (the standard
/// distributions are implementation-defined).
class Rng {
public:
    explicit Rng(std::int64_t seed) : engine_(static_cast<std::uint64_t>(seed)) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (spare_) {
            const double v = *spare_;
            spare_.reset();
            return v;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

std::string_view curve_name(CurveKind kind) {
    switch (kind) {
    case CurveKind::Flat: return "flat";
    case CurveKind::LinearTrend: return "linear-trend";
    case CurveKind::Seasonal: return "seasonal";
    }
    return "seasonal";
}

/// Latent attractiveness of every product and the launch bookkeeping.
struct Market {
    std::vector<std::int64_t> launch_week;
    std::vector<double> offset;
    std::vector<double> trend;

    bool active(int p, std::int64_t w) const { return w >= launch_week[static_cast<std::size_t>(p)]; }

    double attractiveness(int p, std::int64_t w) const {
        const auto i = static_cast<std::size_t>(p);
        return offset[i] + trend[i] * static_cast<double>(w - launch_week[i]);
    }

    std::vector<double> shares(std::int64_t w) const {
        std::vector<double> s(launch_week.size(), 0.0);
        double z = 0.0;
        for (int p = 0; p < static_cast<int>(s.size()); ++p) {
            if (!active(p, w)) continue;
            s[static_cast<std::size_t>(p)] = std::exp(attractiveness(p, w));
            z += s[static_cast<std::size_t>(p)];
        }
        for (auto& v : s) v /= z;
        return s;
    }
};

Market build_market(const ScenarioConfig& config, Rng& rng) {
    const auto n = static_cast<std::size_t>(config.num_products);
    Market m;
    m.launch_week.assign(n, 0);
    m.offset.resize(n);
    m.trend.resize(n);
    for (std::size_t p = 0; p < n; ++p) m.offset[p] = kBaseAttractivenessSd * rng.normal();
    for (std::size_t p = 0; p < n; ++p) m.trend[p] = kTrendRange * (2.0 * rng.uniform() - 1.0);
    for (const auto& [p, w] : config.launch_schedule) m.launch_week[static_cast<std::size_t>(p)] = w;

    // An entrant's offset is set so that, in its launch week, it holds exactly
    // `share_decay_on_launch` of the market and every other product keeps
    // (1 - share_decay_on_launch) of what it would otherwise have had.
    std::vector<std::pair<std::int64_t, int>> launches;
    for (const auto& [p, w] : config.launch_schedule) launches.emplace_back(w, p);
    std::sort(launches.begin(), launches.end());
    const double d = config.share_decay_on_launch;
    for (const auto& [week, entrant] : launches) {
        double z = 0.0;
        for (int p = 0; p < config.num_products; ++p) {
            if (p != entrant && m.active(p, week)) z += std::exp(m.attractiveness(p, week));
        }
        m.offset[static_cast<std::size_t>(entrant)] = std::log(d * z / (1.0 - d));
    }
    return m;
}

} // namespace

double CategoryCurve::total(std::int64_t week) const {
    const double w = static_cast<double>(week);
    switch (kind) {
    case CurveKind::Flat: return level;
    case CurveKind::LinearTrend: return level * (1.0 + slope * w);
    case CurveKind::Seasonal: return level * (1.0 + amplitude * std::sin(2.0 * std::numbers::pi * w / period));
    }
    return level;
}

void ScenarioConfig::validate() const {
    if (num_products < 1) config_error("num_products must be positive");
    if (num_weeks_hist < 1 || num_weeks_future < 1) config_error("week counts must be positive");
    const std::int64_t weeks = static_cast<std::int64_t>(num_weeks_hist) + num_weeks_future;
    if (!(share_decay_on_launch > 0.0 && share_decay_on_launch < 1.0)) {
        config_error("share_decay_on_launch must be in (0, 1)");
    }
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) config_error("noise_sd must be non-negative");
    if (!(stage1_bias_injection > -1.0) || !std::isfinite(stage1_bias_injection)) {
        config_error("stage1_bias_injection must be finite and > -1");
    }
    if (!(curve.period > 0.0) || !std::isfinite(curve.level)) config_error("invalid category curve");
    for (std::int64_t w = 0; w < weeks; ++w) {
        const double s = curve.total(w);
        if (!(s > 0.0) || !std::isfinite(s)) config_error("category total is not positive at week " + std::to_string(w));
    }

    std::set<std::int64_t> weeks_used;
    bool future_launch = false;
    for (const auto& [p, w] : launch_schedule) {
        if (p < 0 || p >= num_products) config_error("launch for unknown product " + std::to_string(p));
        if (w < 1 || w >= weeks) config_error("launch week " + std::to_string(w) + " outside (0, last week]");
        if (!weeks_used.insert(w).second) config_error("two launches in week " + std::to_string(w));
        if (w >= num_weeks_hist) future_launch = true;
    }
    if (static_cast<int>(launch_schedule.size()) >= num_products) {
        config_error("at least one product must be on sale from week 0");
    }
    if (num_products > 1 && !future_launch) config_error("no launch inside the future window");
}

ScenarioConfig ScenarioConfig::from_kv(const KeyValues& kv) {
    kv.reject_unknown({"num_products", "num_weeks_hist", "num_weeks_future", "launches", "curve",
                       "curve.level", "curve.slope", "curve.amplitude", "curve.period",
                       "share_decay_on_launch", "noise_sd", "stage1_bias_injection", "seed"},
                      "scenario");
    ScenarioConfig c;
    c.num_products = static_cast<int>(kv.get_int("num_products", c.num_products));
    c.num_weeks_hist = static_cast<int>(kv.get_int("num_weeks_hist", c.num_weeks_hist));
    c.num_weeks_future = static_cast<int>(kv.get_int("num_weeks_future", c.num_weeks_future));
    if (auto launches = kv.get("launches")) {
        c.launch_schedule.clear();
        for (const auto& item : csv::split_line(*launches)) {
            if (item.find_first_not_of(' ') == std::string::npos) continue;
            const auto colon = item.find(':');
            auto p = colon == std::string::npos ? std::nullopt : csv::parse_int(item.substr(0, colon));
            auto w = colon == std::string::npos ? std::nullopt : csv::parse_int(item.substr(colon + 1));
            if (!p || !w) config_error("launches entry '" + item + "' is not product:week");
            if (!c.launch_schedule.emplace(static_cast<int>(*p), *w).second) {
                config_error("product " + std::to_string(*p) + " launched twice");
            }
        }
    }
    const auto curve = kv.get_string("curve", std::string(curve_name(c.curve.kind)));
    if (curve == "flat") c.curve.kind = CurveKind::Flat;
    else if (curve == "linear-trend") c.curve.kind = CurveKind::LinearTrend;
    else if (curve == "seasonal") c.curve.kind = CurveKind::Seasonal;
    else config_error("unknown curve '" + curve + "'");
    c.curve.level = kv.get_double("curve.level", c.curve.level);
    c.curve.slope = kv.get_double("curve.slope", c.curve.slope);
    c.curve.amplitude = kv.get_double("curve.amplitude", c.curve.amplitude);
    c.curve.period = kv.get_double("curve.period", c.curve.period);
    c.share_decay_on_launch = kv.get_double("share_decay_on_launch", c.share_decay_on_launch);
    c.noise_sd = kv.get_double("noise_sd", c.noise_sd);
    c.stage1_bias_injection = kv.get_double("stage1_bias_injection", c.stage1_bias_injection);
    c.seed = kv.get_int("seed", c.seed);
    c.validate();
    return c;
}

KeyValues ScenarioConfig::to_kv() const {
    KeyValues kv;
    kv.set("num_products", std::to_string(num_products));
    kv.set("num_weeks_hist", std::to_string(num_weeks_hist));
    kv.set("num_weeks_future", std::to_string(num_weeks_future));
    std::string launches;
    for (const auto& [p, w] : launch_schedule) {
        if (!launches.empty()) launches += ',';
        launches += std::to_string(p) + ":" + std::to_string(w);
    }
    kv.set("launches", launches);
    kv.set("curve", std::string(curve_name(curve.kind)));
    kv.set("curve.level", csv::format_double(curve.level));
    kv.set("curve.slope", csv::format_double(curve.slope));
    kv.set("curve.amplitude", csv::format_double(curve.amplitude));
    kv.set("curve.period", csv::format_double(curve.period));
    kv.set("share_decay_on_launch", csv::format_double(share_decay_on_launch));
    kv.set("noise_sd", csv::format_double(noise_sd));
    kv.set("stage1_bias_injection", csv::format_double(stage1_bias_injection));
    kv.set("seed", std::to_string(seed));
    return kv;
}

std::string product_name(int index, int num_products) {
    const auto width = std::max<std::size_t>(2, std::to_string(std::max(0, num_products - 1)).size());
    auto digits = std::to_string(index);
    return "P" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

std::vector<std::vector<double>> expected_shares(const ScenarioConfig& config) {
    config.validate();
    Rng rng(config.seed);
    const auto market = build_market(config, rng);
    std::vector<std::vector<double>> out;
    const std::int64_t weeks = static_cast<std::int64_t>(config.num_weeks_hist) + config.num_weeks_future;
    for (std::int64_t w = 0; w < weeks; ++w) out.push_back(market.shares(w));
    return out;
}

Scenario generate(const ScenarioConfig& config) {
    config.validate();
    Rng rng(config.seed);
    const auto market = build_market(config, rng);
    const auto num_products = config.num_products;
    const std::int64_t hist = config.num_weeks_hist;
    const std::int64_t weeks = hist + config.num_weeks_future;

    std::vector<std::int64_t> launches;
    for (const auto& [p, w] : config.launch_schedule) launches.push_back(w);
    std::sort(launches.begin(), launches.end());

    // sales[w][p], zero while a product is not on sale.
    std::vector<std::vector<double>> sales(static_cast<std::size_t>(weeks),
                                           std::vector<double>(static_cast<std::size_t>(num_products), 0.0));
    std::vector<std::vector<double>> proxy = sales;
    for (std::int64_t w = 0; w < weeks; ++w) {
        auto shares = market.shares(w);
        double z = 0.0;
        for (int p = 0; p < num_products; ++p) {
            const double share_noise = rng.normal();
            const double proxy_noise = rng.normal();
            if (!market.active(p, w)) continue;
            auto& s = shares[static_cast<std::size_t>(p)];
            s *= std::exp(config.noise_sd * share_noise);
            z += s;
            proxy[static_cast<std::size_t>(w)][static_cast<std::size_t>(p)] =
                market.attractiveness(p, w) + kProxyNoiseSd * proxy_noise;
        }
        const double total = config.curve.total(w);
        for (int p = 0; p < num_products; ++p) {
            if (market.active(p, w)) {
                sales[static_cast<std::size_t>(w)][static_cast<std::size_t>(p)] =
                    shares[static_cast<std::size_t>(p)] / z * total;
            }
        }
    }

    std::vector<PanelRecord> records;
    std::vector<double> true_sales;
    std::map<std::int64_t, double> future_totals;
    for (std::int64_t w = 0; w < weeks; ++w) {
        const auto since = std::upper_bound(launches.begin(), launches.end(), w);
        const double weeks_since = since == launches.begin()
                                       ? static_cast<double>(kLaunchHorizon)
                                       : static_cast<double>(std::min(kLaunchHorizon, w - *std::prev(since)));
        const double weeks_to = since == launches.end()
                                    ? static_cast<double>(kLaunchHorizon)
                                    : static_cast<double>(std::min(kLaunchHorizon, *since - w));
        const bool future = w >= hist;
        if (future) future_totals[w] = config.curve.total(w);

        for (int p = 0; p < num_products; ++p) {
            if (!market.active(p, w)) continue;
            const auto pi = static_cast<std::size_t>(p);
            double lag = 0.0;
            if (!future) {
                if (w > 0 && market.active(p, w - 1)) lag = sales[static_cast<std::size_t>(w - 1)][pi];
            } else if (market.active(p, hist - 1)) {
                lag = sales[static_cast<std::size_t>(hist - 1)][pi] * (1.0 + config.stage1_bias_injection);
            }

            PanelRecord r;
            r.product_id = product_name(p, num_products);
            r.week = w;
            r.features.resize(kFeatureCount);
            r.features[kProductAge] = static_cast<double>(w - market.launch_week[pi]);
            r.features[kWeeksSinceLaunch] = weeks_since;
            r.features[kWeeksToNextLaunch] = weeks_to;
            r.features[kLaggedSales] = lag;
            r.features[kAttractiveness] = proxy[static_cast<std::size_t>(w)][pi];
            r.features[kSeason] = std::sin(2.0 * std::numbers::pi * static_cast<double>(w) / config.curve.period);
            const double y = sales[static_cast<std::size_t>(w)][pi];
            if (!future) r.actual_sales = y;
            records.push_back(std::move(r));
            true_sales.push_back(y);
        }
    }

    std::vector<std::string> names;
    for (std::size_t f = 0; f < kFeatureCount; ++f) names.push_back("f_" + std::to_string(f));
    const auto emitted = records;
    PanelDataset dataset(std::move(records), std::move(names), future_totals);
    if (dataset.records() != emitted) {
        throw Error(ErrorKind::Validation, "scenario rows are not in canonical (week, product) order");
    }

    std::vector<TruthRow> truth;
    for (std::size_t i = dataset.m(); i < dataset.n(); ++i) {
        truth.push_back({dataset.records()[i].product_id, dataset.records()[i].week, true_sales[i]});
    }
    return Scenario{std::move(dataset), std::move(true_sales), std::move(truth)};
}

void write_truth_csv(std::span<const TruthRow> truth, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << "product_id,week,true_sales\n";
    for (const auto& t : truth) {
        out << csv::quote(t.product_id) << ',' << t.week << ',' << csv::format_double(t.true_sales) << '\n';
    }
    if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

std::vector<TruthRow> read_truth_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const auto pc = table.column("product_id");
    const auto wc = table.column("week");
    const auto sc = table.column("true_sales");
    if (!pc || !wc || !sc) throw Error(ErrorKind::Schema, path.string() + ": expected product_id, week, true_sales");
    std::vector<TruthRow> out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        auto w = csv::parse_int(row[*wc]);
        auto s = csv::parse_double(row[*sc]);
        if (!w || !s || !std::isfinite(*s)) {
            throw Error(ErrorKind::Validation, path.string() + ":" + std::to_string(i + 2) + ": bad truth row");
        }
        out.push_back({row[*pc], *w, *s});
    }
    return out;
}

void write_scenario(const Scenario& scenario, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
    const auto& ds = scenario.dataset;
    write_panel_csv(ds, dir / "train.csv", 0, ds.m());
    write_panel_csv(ds, dir / "test.csv", ds.m(), ds.n() - ds.m());
    write_truth_csv(scenario.truth, dir / "truth.csv");
}

} // namespace tristage::scenario
