#include "test_support.hpp"

#include "tristage/error.hpp"
#include "tristage/scenario.hpp"

#include <doctest.h>

#include <cmath>

using namespace tristage;
using namespace tristage::scenario;

namespace {

double week_truth_sum(const Scenario& s, const WeekGroup& g) {
    double sum = 0.0;
    for (auto i : g.member_indices) sum += s.true_sales[i];
    return sum;
}

void check_conservation(const ScenarioConfig& config) {
    const auto s = generate(config);
    REQUIRE(s.true_sales.size() == s.dataset.n());
    for (const auto& g : s.dataset.groups()) {
        const double total = config.curve.total(g.week);
        CHECK(std::abs(week_truth_sum(s, g) - total) <= 1e-9 * total);
        CHECK(std::abs(g.category_total - total) <= 1e-9 * total);
        for (auto i : g.member_indices) CHECK(s.true_sales[i] >= 0.0);
    }
}

} // namespace

TEST_CASE("single product without noise sells the whole category") {
    ScenarioConfig c;
    c.num_products = 1;
    c.launch_schedule.clear();
    c.noise_sd = 0.0;
    c.num_weeks_hist = 10;
    c.num_weeks_future = 4;
    const auto s = generate(c);
    REQUIRE(s.dataset.n() == 14);
    for (std::size_t i = 0; i < s.dataset.n(); ++i) CHECK(s.true_sales[i] == c.curve.total(s.dataset.records()[i].week));
}

TEST_CASE("generated weeks conserve the category total") {
    ScenarioConfig c;
    check_conservation(c);
    for (auto kind : {CurveKind::Flat, CurveKind::LinearTrend, CurveKind::Seasonal}) {
        for (std::int64_t seed : {1, 2, 3}) {
            c.curve.kind = kind;
            c.seed = seed;
            c.noise_sd = 0.2;
            check_conservation(c);
        }
    }
}

TEST_CASE("default scenario layout") {
    const auto s = generate(ScenarioConfig{});
    const auto& ds = s.dataset;
    CHECK(ds.groups().size() == 100);
    CHECK(ds.feature_count() == kFeatureCount);
    std::size_t future_rows = 0;
    for (const auto& g : ds.groups()) {
        CHECK(g.is_future == (g.week >= 80));
        // Products 0-2 from week 0, product 3 from 40, product 4 from 88.
        const std::size_t expect = g.week < 40 ? 3 : g.week < 88 ? 4 : 5;
        CHECK(g.count == expect);
        if (g.is_future) future_rows += g.count;
    }
    CHECK(s.truth.size() == future_rows);
    CHECK(ds.n() - ds.m() == future_rows);
    for (std::size_t k = 0; k < s.truth.size(); ++k) {
        const auto& r = ds.records()[ds.m() + k];
        CHECK(s.truth[k].product_id == r.product_id);
        CHECK(s.truth[k].week == r.week);
        CHECK(s.truth[k].true_sales == s.true_sales[ds.m() + k]);
        CHECK_FALSE(r.actual_sales);
    }
    CHECK(product_name(3, 5) == "P03");
}

TEST_CASE("generation is deterministic under the seed") {
    ScenarioConfig c;
    const auto a = generate(c);
    const auto b = generate(c);
    CHECK(a.dataset == b.dataset);
    CHECK(a.true_sales == b.true_sales);
    c.seed = 8;
    CHECK_FALSE(generate(c).true_sales == a.true_sales);
}

TEST_CASE("incumbents lose expected share in every launch week") {
    for (double decay : {0.05, 0.2, 0.6}) {
        ScenarioConfig c;
        c.share_decay_on_launch = decay;
        c.curve.kind = CurveKind::LinearTrend;
        const auto shares = expected_shares(c);
        for (const auto& [product, week] : c.launch_schedule) {
            const auto w = static_cast<std::size_t>(week);
            CHECK(shares[w - 1][static_cast<std::size_t>(product)] == 0.0);
            CHECK(shares[w][static_cast<std::size_t>(product)] > 0.0);
            for (std::size_t p = 0; p < shares[w].size(); ++p) {
                if (static_cast<int>(p) == product || shares[w - 1][p] == 0.0) continue;
                CHECK(shares[w][p] < shares[w - 1][p]);
            }
        }
        for (const auto& week : shares) {
            double sum = 0.0;
            for (double v : week) sum += v;
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("bias injection shifts the future lagged-sales feature only") {
    ScenarioConfig c;
    c.stage1_bias_injection = 0.0;
    const auto clean = generate(c);
    c.stage1_bias_injection = 0.3;
    const auto biased = generate(c);
    CHECK(clean.true_sales == biased.true_sales);
    const auto& fa = clean.dataset.features();
    const auto& fb = biased.dataset.features();
    for (std::size_t i = 0; i < clean.dataset.n(); ++i) {
        const double a = fa(i, kLaggedSales), b = fb(i, kLaggedSales);
        if (i < clean.dataset.m()) CHECK(a == b);
        else CHECK(b == doctest::Approx(a * 1.3).epsilon(1e-12));
    }
}

TEST_CASE("config validation") {
    auto expect_config_error = [](const ScenarioConfig& c) {
        try {
            c.validate();
            FAIL("expected config error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Config);
        }
    };
    ScenarioConfig c;
    CHECK_NOTHROW(c.validate());

    auto bad = c;
    bad.launch_schedule = {{3, 40}, {4, 40}};
    expect_config_error(bad);
    bad = c;
    bad.launch_schedule = {{3, 40}};
    expect_config_error(bad);
    bad = c;
    bad.share_decay_on_launch = 1.0;
    expect_config_error(bad);
    bad = c;
    bad.noise_sd = -0.1;
    expect_config_error(bad);
    bad = c;
    bad.num_weeks_future = 0;
    expect_config_error(bad);
    bad = c;
    bad.launch_schedule = {{7, 90}};
    expect_config_error(bad);
    bad = c;
    bad.curve.kind = CurveKind::Seasonal;
    bad.curve.amplitude = 1.5;
    expect_config_error(bad);
}

TEST_CASE("config key-value round trip") {
    ScenarioConfig c;
    c.num_products = 7;
    c.launch_schedule = {{5, 30}, {6, 95}};
    c.curve.kind = CurveKind::Flat;
    c.curve.level = 250.5;
    c.noise_sd = 0.125;
    c.seed = 123;
    const auto back = ScenarioConfig::from_kv(KeyValues::parse(c.to_kv().to_string()));
    CHECK(back.to_kv().to_string() == c.to_kv().to_string());
    CHECK(back.launch_schedule == c.launch_schedule);
    CHECK(back.curve.level == 250.5);

    CHECK_THROWS_AS(ScenarioConfig::from_kv(KeyValues::parse("num_prodcuts = 3\n")), Error);
    CHECK_THROWS_AS(ScenarioConfig::from_kv(KeyValues::parse("launches = 3-40\n")), Error);
}

TEST_CASE("scenario files") {
    const testing_support::TempDir a("scenario_a"), b("scenario_b");
    const auto s = generate(ScenarioConfig{});
    write_scenario(s, a.path());
    write_scenario(generate(ScenarioConfig{}), b.path());

    for (const char* name : {"train.csv", "test.csv", "truth.csv"})
        CHECK(testing_support::read_file(a / name) == testing_support::read_file(b / name));

    const std::vector<std::filesystem::path> parts{a / "train.csv", a / "test.csv"};
    CHECK(load_panel_csv(parts) == s.dataset);
    CHECK(load_panel_csv(a / "train.csv").n() == s.dataset.m());

    const auto truth = read_truth_csv(a / "truth.csv");
    REQUIRE(truth.size() == s.truth.size());
    CHECK(truth.size() == s.dataset.n() - s.dataset.m());
    for (std::size_t k = 0; k < truth.size(); ++k) {
        CHECK(truth[k].product_id == s.truth[k].product_id);
        CHECK(truth[k].true_sales == s.truth[k].true_sales);
    }

    testing_support::write_file(a / "bad_truth.csv", "product_id,week\nP00,1\n");
    CHECK_THROWS_AS(read_truth_csv(a / "bad_truth.csv"), Error);
}
