#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "polypersona/random.hpp"

using namespace polypersona;

TEST_CASE("fnv1a64 matches the published test vectors", "[random]") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("Rng is mt19937_64 underneath", "[random]") {
    // The standard requires the 10000th output of a default-seeded mt19937_64.
    Rng rng(5489u);
    std::uint64_t x = 0;
    for (int i = 0; i < 10000; ++i) x = rng.next();
    CHECK(x == 9981545732273789042ULL);
}

TEST_CASE("Rng::below stays in range and unit in [0,1)", "[random]") {
    Rng rng(1);
    for (int i = 0; i < 10000; ++i) {
        const auto n = static_cast<std::size_t>(1 + i % 17);
        CHECK(rng.below(n) < n);
        const double u = rng.unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("derive_seed separates streams", "[random]") {
    CHECK(derive_seed(7, "a") == derive_seed(7, "a"));
    CHECK(derive_seed(7, "a") != derive_seed(7, "b"));
    CHECK(derive_seed(7, "a") != derive_seed(8, "a"));
}

TEST_CASE("shuffle is a seeded permutation", "[random]") {
    std::vector<int> a(50), b(50);
    std::iota(a.begin(), a.end(), 0);
    std::iota(b.begin(), b.end(), 0);
    Rng r1(42), r2(42);
    shuffle(a, r1);
    shuffle(b, r2);
    CHECK(a == b);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> expect(50);
    std::iota(expect.begin(), expect.end(), 0);
    CHECK(sorted == expect);
}

TEST_CASE("apportion: largest remainder examples", "[random]") {
    const std::array<double, 4> ratios{0.427, 0.317, 0.183, 0.073};
    CHECK(apportion(10, ratios) == std::vector<std::size_t>{4, 3, 2, 1});
    CHECK(apportion(0, ratios) == std::vector<std::size_t>{0, 0, 0, 0});
    const std::array<double, 3> split{0.8, 0.1, 0.1};
    CHECK(apportion(3568, split) == std::vector<std::size_t>{2854, 357, 357});
    CHECK(apportion(10, split) == std::vector<std::size_t>{8, 1, 1});
    // Exact ties go to the lower index.
    const std::array<double, 3> thirds{1.0, 1.0, 1.0};
    CHECK(apportion(4, thirds) == std::vector<std::size_t>{2, 1, 1});
}

TEST_CASE("apportion: sums to total and stays within one of the quota", "[random][property]") {
    std::mt19937_64 gen(99);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t k = 1 + gen() % 8;
        std::vector<double> w(k);
        double sum = 0.0;
        for (auto& x : w) {
            x = (gen() % 4 == 0) ? 0.0 : static_cast<double>(gen() % 1000) / 7.0;
            sum += x;
        }
        const std::size_t total = gen() % 5000;
        const auto seats = apportion(total, w);
        REQUIRE(seats.size() == k);
        if (sum <= 0.0) {
            CHECK(std::accumulate(seats.begin(), seats.end(), std::size_t{0}) == 0);
            continue;
        }
        CHECK(std::accumulate(seats.begin(), seats.end(), std::size_t{0}) == total);
        for (std::size_t i = 0; i < k; ++i) {
            const double quota = static_cast<double>(total) * w[i] / sum;
            CHECK(std::abs(static_cast<double>(seats[i]) - quota) < 1.0 + 1e-9);
            if (w[i] == 0.0) CHECK(seats[i] == 0);
        }
    }
}

TEST_CASE("apportion_table: rows, columns and cells are consistent", "[random][property]") {
    std::mt19937_64 gen(2024);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n_rows = 1 + gen() % 40;
        std::vector<std::size_t> rows(n_rows);
        for (auto& r : rows) r = gen() % 30;
        const std::size_t n_cols = 1 + gen() % 4;
        std::vector<double> w(n_cols);
        double wsum = 0.0;
        for (auto& x : w) wsum += (x = 1.0 + static_cast<double>(gen() % 9));
        const auto table = apportion_table(rows, w);
        const std::size_t total = std::accumulate(rows.begin(), rows.end(), std::size_t{0});
        const auto columns = apportion(total, w);
        std::vector<std::size_t> col_sums(n_cols, 0);
        for (std::size_t r = 0; r < n_rows; ++r) {
            std::size_t row_sum = 0;
            for (std::size_t c = 0; c < n_cols; ++c) {
                const double quota = static_cast<double>(rows[r]) * w[c] / wsum;
                CHECK(static_cast<double>(table[r][c]) >= std::floor(quota + 1e-9) - 1e-9);
                CHECK(static_cast<double>(table[r][c]) <= std::ceil(quota - 1e-9) + 1e-9);
                row_sum += table[r][c];
                col_sums[c] += table[r][c];
            }
            CHECK(row_sum == rows[r]);
        }
        CHECK(col_sums == columns);
    }
}

TEST_CASE("apportion_table: tiny strata still fill the small columns", "[random]") {
    // Ten strata of four: per-stratum rounding alone would give every unit to the first column.
    const std::vector<std::size_t> rows(10, 4);
    const std::array<double, 3> w{0.8, 0.1, 0.1};
    const auto table = apportion_table(rows, w);
    std::array<std::size_t, 3> cols{};
    for (const auto& r : table)
        for (std::size_t c = 0; c < 3; ++c) cols[c] += r[c];
    CHECK(cols == std::array<std::size_t, 3>{32, 4, 4});
}
