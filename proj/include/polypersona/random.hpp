#pragma once

// Portable seeded randomness.
//
// std::mt19937_64 has a sequence fixed by the standard, but the standard
// distributions and std::shuffle are implementation-defined. Everything that
// turns engine output into indices, unit reals or permutations is therefore
// written out here so that a seed yields the same stream on every platform.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace polypersona {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Independent child seed for a named sub-stream (e.g. "questions/healthcare").
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view stream) noexcept {
    return splitmix64(splitmix64(base) ^ fnv1a64(stream));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform integer in [0, n). Rejection sampling, no modulo bias. n must be > 0.
    std::size_t below(std::size_t n) {
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound + 1) % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x > limit);
        return static_cast<std::size_t>(x % bound);
    }

    // Uniform real in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

// Fisher-Yates, drawing indices from Rng::below.
template <class T>
void shuffle(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = rng.below(i);
        using std::swap;
        swap(items[i - 1], items[j]);
    }
}

// Largest-remainder (Hamilton) apportionment of `total` units across
// `weights`. Weights are normalized by their sum. Ties in the fractional part
// go to the higher `tie_priority` (when given), then to the lower index.
// Result is nonnegative and sums to `total`.
inline std::vector<std::size_t> apportion(std::size_t total, std::span<const double> weights,
                                          std::span<const double> tie_priority = {}) {
    std::vector<std::size_t> seats(weights.size(), 0);
    double sum = 0.0;
    for (double w : weights) sum += w > 0.0 ? w : 0.0;
    if (total == 0 || weights.empty() || sum <= 0.0) return seats;

    std::vector<double> remainder(weights.size(), 0.0);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double w = weights[i] > 0.0 ? weights[i] : 0.0;
        const double quota = static_cast<double>(total) * w / sum;
        // Absorb representation error such as 0.8 * 10 = 7.999999999.
        const double whole = std::floor(quota + 1e-9);
        seats[i] = static_cast<std::size_t>(whole);
        remainder[i] = w > 0.0 ? quota - whole : -1.0;
        assigned += seats[i];
    }
    while (assigned < total) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < remainder.size(); ++i) {
            if (remainder[i] > remainder[best] + 1e-12) {
                best = i;
            } else if (remainder[i] >= remainder[best] - 1e-12 && remainder[i] >= 0.0 && i < tie_priority.size() &&
                       best < tie_priority.size() && tie_priority[i] > tie_priority[best] + 1e-12) {
                best = i;
            }
        }
        ++seats[best];
        remainder[best] = -1.0;
        ++assigned;
    }
    return seats;
}

// Two-way apportionment. Row s holds rows[s] units split by `weights`. Every
// cell ends up at the floor or ceiling of its quota rows[s] * w / sum(w), each
// row sums to rows[s], and column j sums to apportion(sum(rows), weights)[j].
// Such a rounding always exists; cells with larger fractional parts get the
// extra units first, ties to the lower row, then the lower column.
inline std::vector<std::vector<std::size_t>> apportion_table(std::span<const std::size_t> rows,
                                                             std::span<const double> weights) {
    const std::size_t n_rows = rows.size();
    const std::size_t n_cols = weights.size();
    std::vector<std::vector<std::size_t>> table(n_rows, std::vector<std::size_t>(n_cols, 0));
    double sum = 0.0;
    for (double w : weights) sum += w > 0.0 ? w : 0.0;
    std::size_t total = 0;
    for (auto r : rows) total += r;
    if (n_cols == 0 || sum <= 0.0 || total == 0) return table;

    const std::vector<std::size_t> columns = apportion(total, weights);
    std::vector<std::vector<double>> rem(n_rows, std::vector<double>(n_cols, 0.0));
    std::vector<std::size_t> row_need(n_rows, 0);
    std::vector<std::ptrdiff_t> col_need(columns.begin(), columns.end());
    for (std::size_t s = 0; s < n_rows; ++s) {
        std::size_t floors = 0;
        for (std::size_t j = 0; j < n_cols; ++j) {
            const double w = weights[j] > 0.0 ? weights[j] : 0.0;
            const double quota = static_cast<double>(rows[s]) * w / sum;
            const double whole = std::floor(quota + 1e-9);
            table[s][j] = static_cast<std::size_t>(whole);
            rem[s][j] = quota - whole > 1e-9 ? quota - whole : 0.0;
            floors += table[s][j];
            col_need[j] -= static_cast<std::ptrdiff_t>(table[s][j]);
        }
        row_need[s] = rows[s] - std::min(rows[s], floors);
    }

    // extra[s][j]: cell (s, j) took its ceiling.
    std::vector<std::vector<bool>> extra(n_rows, std::vector<bool>(n_cols, false));
    struct Cell {
        double rem;
        std::size_t s, j;
    };
    std::vector<Cell> cells;
    for (std::size_t s = 0; s < n_rows; ++s)
        for (std::size_t j = 0; j < n_cols; ++j)
            if (rem[s][j] > 0.0) cells.push_back({rem[s][j], s, j});
    std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) { return a.rem > b.rem + 1e-12; });
    for (const auto& c : cells) {
        if (row_need[c.s] > 0 && col_need[c.j] > 0) {
            extra[c.s][c.j] = true;
            --row_need[c.s];
            --col_need[c.j];
        }
    }

    // Greedy can strand a row whose fractional cells all sit in full columns;
    // reroute along alternating paths (row -> free cell -> column -> taken cell -> row ...).
    for (std::size_t start = 0; start < n_rows; ++start) {
        while (row_need[start] > 0) {
            std::vector<std::ptrdiff_t> col_from(n_cols, -1);  // row that reached the column
            std::vector<std::ptrdiff_t> row_from(n_rows, -1);  // column that reached the row
            std::vector<bool> row_seen(n_rows, false);
            std::vector<std::size_t> queue{start};
            row_seen[start] = true;
            std::ptrdiff_t end_col = -1;
            for (std::size_t qi = 0; qi < queue.size() && end_col < 0; ++qi) {
                const std::size_t s = queue[qi];
                for (std::size_t j = 0; j < n_cols && end_col < 0; ++j) {
                    if (rem[s][j] <= 0.0 || extra[s][j] || col_from[j] >= 0) continue;
                    col_from[j] = static_cast<std::ptrdiff_t>(s);
                    if (col_need[j] > 0) {
                        end_col = static_cast<std::ptrdiff_t>(j);
                        break;
                    }
                    for (std::size_t s2 = 0; s2 < n_rows; ++s2) {
                        if (!row_seen[s2] && extra[s2][j]) {
                            row_seen[s2] = true;
                            row_from[s2] = static_cast<std::ptrdiff_t>(j);
                            queue.push_back(s2);
                        }
                    }
                }
            }
            if (end_col < 0) {
                // Unreachable for consistent input; keep the row total exact regardless.
                for (std::size_t j = 0; j < n_cols && row_need[start] > 0; ++j)
                    if (rem[start][j] > 0.0 && !extra[start][j]) {
                        extra[start][j] = true;
                        --row_need[start];
                    }
                break;
            }
            auto j = static_cast<std::size_t>(end_col);
            --col_need[j];
            for (;;) {
                const auto s = static_cast<std::size_t>(col_from[j]);
                extra[s][j] = true;
                if (s == start) break;
                const auto prev = static_cast<std::size_t>(row_from[s]);
                extra[s][prev] = false;
                j = prev;
            }
            --row_need[start];
        }
    }

    for (std::size_t s = 0; s < n_rows; ++s)
        for (std::size_t j = 0; j < n_cols; ++j)
            if (extra[s][j]) ++table[s][j];
    return table;
}

}  // namespace polypersona
