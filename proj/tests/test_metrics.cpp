#include "test_support.hpp"

#include "tristage/error.hpp"
#include "tristage/metrics.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace tristage;
using namespace tristage::metrics;

namespace {

WeekGroup group(std::int64_t week, std::vector<std::size_t> members, double total) {
    WeekGroup g;
    g.week = week;
    g.count = members.size();
    g.member_indices = std::move(members);
    g.category_total = total;
    return g;
}

} // namespace

TEST_CASE("product metrics") {
    const std::vector<double> truth{1, 5, 2, 8};
    const auto exact = product_metrics(truth, truth);
    CHECK(exact.mae == 0.0);
    CHECK(exact.rmse == 0.0);
    CHECK(exact.wmape == 0.0);

    const auto shifted = product_metrics(std::vector<double>{2, 6, 3, 9}, truth);
    CHECK(shifted.mae == 1.0);
    CHECK(shifted.rmse == 1.0);

    const auto m = product_metrics(std::vector<double>{2, 4}, std::vector<double>{1, 5});
    CHECK(m.mae == 1.0);
    CHECK(m.rmse == 1.0);
    CHECK(m.wmape == doctest::Approx(2.0 / 6.0).epsilon(1e-15));

    CHECK_THROWS_AS(product_metrics(std::vector<double>{1}, truth), Error);
    try {
        product_metrics(std::vector<double>{1, 2}, std::vector<double>{0, 0});
        FAIL("expected metric error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Metric);
    }
}

TEST_CASE("category adherence") {
    const std::vector<WeekGroup> gs{group(1, {0, 1}, 5.0), group(2, {2}, 4.0)};
    const auto a = category_adherence(std::vector<double>{3, 3, 4}, gs);
    REQUIRE(a.weeks.size() == 2);
    CHECK(a.weeks[0].week == 1);
    CHECK(a.weeks[0].deviation == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(a.weeks[1].deviation == 0.0);
    CHECK(a.mean == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(a.max == doctest::Approx(0.2).epsilon(1e-15));

    CHECK(category_adherence(std::vector<double>{2, 3, 4}, gs).max == 0.0);

    const std::vector<WeekGroup> zero{group(1, {0}, 0.0)};
    try {
        category_adherence(std::vector<double>{1}, zero);
        FAIL("expected metric error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Metric);
    }
}

TEST_CASE("metrics are invariant under a consistent row permutation") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 5 + static_cast<std::size_t>(trial);
        const auto truth = testing_support::random_vector(rng, n, 0.5, 10);
        const auto preds = testing_support::random_vector(rng, n, 0, 10);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<double> pt(n), pp(n);
        for (std::size_t i = 0; i < n; ++i) {
            pt[i] = truth[perm[i]];
            pp[i] = preds[perm[i]];
        }
        const auto a = product_metrics(preds, truth);
        const auto b = product_metrics(pp, pt);
        CHECK(a.mae == doctest::Approx(b.mae).epsilon(1e-12));
        CHECK(a.rmse == doctest::Approx(b.rmse).epsilon(1e-12));
        CHECK(a.wmape == doctest::Approx(b.wmape).epsilon(1e-12));

        // Same weeks, rows relabelled through the permutation.
        std::vector<std::size_t> inverse(n);
        for (std::size_t i = 0; i < n; ++i) inverse[perm[i]] = i;
        const std::vector<WeekGroup> gs{group(0, {0, 1, 2}, 12.0), group(1, {3, 4}, 7.0)};
        std::vector<WeekGroup> moved = gs;
        for (auto& g : moved)
            for (auto& idx : g.member_indices) idx = inverse[idx];
        CHECK(category_adherence(preds, gs).mean ==
              doctest::Approx(category_adherence(pp, moved).mean).epsilon(1e-12));
    }
}

TEST_CASE("future_groups selects the future weeks") {
    std::mt19937_64 rng(4);
    const auto ds = testing_support::random_panel(rng, 6, 4, 3);
    const auto fg = future_groups(ds);
    REQUIRE(fg.size() == 2);
    for (const auto& g : fg) CHECK(g.is_future);
}
