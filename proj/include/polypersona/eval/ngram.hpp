#pragma once

// N-gram overlap metrics over token sequences: BLEU, ROUGE-N, ROUGE-L, Distinct-n.
// The text overloads tokenize with polypersona::tokenize first.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "polypersona/text.hpp"

namespace polypersona::eval {

using Tokens = std::vector<std::string>;

struct Score {
    double value = 0.0;
    bool degenerate = false;
};

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool degenerate = false;
};

inline double harmonic_f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

namespace detail {

// Maps tokens of both sides onto small integers so n-grams compare cheaply.
struct Interned {
    std::vector<std::uint32_t> a;
    std::vector<std::uint32_t> b;
};

inline Interned intern(std::span<const std::string> a, std::span<const std::string> b) {
    std::unordered_map<std::string_view, std::uint32_t> ids;
    Interned out;
    out.a.reserve(a.size());
    out.b.reserve(b.size());
    const auto id = [&](const std::string& t) {
        return ids.emplace(t, static_cast<std::uint32_t>(ids.size())).first->second;
    };
    for (const auto& t : a) out.a.push_back(id(t));
    for (const auto& t : b) out.b.push_back(id(t));
    return out;
}

using NgramCounts = std::map<std::vector<std::uint32_t>, std::size_t>;

inline NgramCounts count_ngrams(const std::vector<std::uint32_t>& seq, std::size_t n) {
    NgramCounts counts;
    if (n == 0 || seq.size() < n) return counts;
    for (std::size_t i = 0; i + n <= seq.size(); ++i) ++counts[std::vector<std::uint32_t>(seq.begin() + i, seq.begin() + i + n)];
    return counts;
}

inline std::size_t clipped_overlap(const NgramCounts& cand, const NgramCounts& ref) {
    std::size_t overlap = 0;
    for (const auto& [gram, c] : cand) {
        const auto it = ref.find(gram);
        if (it != ref.end()) overlap += std::min(c, it->second);
    }
    return overlap;
}

inline std::size_t ngram_total(std::size_t len, std::size_t n) { return len >= n ? len - n + 1 : 0; }

}  // namespace detail

// Sentence BLEU: clipped n-gram precisions for orders 1..min(max_n, |cand|),
// geometric mean, brevity penalty exp(1 - r/c) when c < r. A zero precision at
// order n is replaced by 1 / (2 * candidate n-gram count). Empty candidate: 0, degenerate.
inline Score bleu(std::span<const std::string> candidate, std::span<const std::string> reference, std::size_t max_n = 4) {
    if (candidate.empty() || max_n == 0) return {0.0, true};
    const auto ids = detail::intern(candidate, reference);
    const std::size_t orders = std::min(max_n, candidate.size());
    double log_sum = 0.0;
    for (std::size_t n = 1; n <= orders; ++n) {
        const std::size_t total = detail::ngram_total(candidate.size(), n);
        const std::size_t matches =
            detail::clipped_overlap(detail::count_ngrams(ids.a, n), detail::count_ngrams(ids.b, n));
        const double p = matches > 0 ? static_cast<double>(matches) / static_cast<double>(total)
                                     : 1.0 / (2.0 * static_cast<double>(total));
        log_sum += std::log(p);
    }
    const double c = static_cast<double>(candidate.size());
    const double r = static_cast<double>(reference.size());
    const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
    return {std::clamp(bp * std::exp(log_sum / static_cast<double>(orders)), 0.0, 1.0), false};
}

// Clipped n-gram overlap. When neither side has an n-gram of this order the
// result is (1,1,1) for identical nonempty sequences and (0,0,0) otherwise,
// flagged degenerate either way.
inline Prf rouge_n(std::span<const std::string> candidate, std::span<const std::string> reference, std::size_t n) {
    const std::size_t tc = detail::ngram_total(candidate.size(), n);
    const std::size_t tr = detail::ngram_total(reference.size(), n);
    if (tc == 0 && tr == 0) {
        const bool same = !candidate.empty() && std::equal(candidate.begin(), candidate.end(), reference.begin(), reference.end());
        return same ? Prf{1.0, 1.0, 1.0, true} : Prf{0.0, 0.0, 0.0, true};
    }
    const auto ids = detail::intern(candidate, reference);
    const double overlap = static_cast<double>(
        detail::clipped_overlap(detail::count_ngrams(ids.a, n), detail::count_ngrams(ids.b, n)));
    const double p = tc > 0 ? overlap / static_cast<double>(tc) : 0.0;
    const double r = tr > 0 ? overlap / static_cast<double>(tr) : 0.0;
    return {p, r, harmonic_f1(p, r), false};
}

inline std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
    if (a.empty() || b.empty()) return 0;
    const auto ids = detail::intern(a, b);
    std::vector<std::size_t> prev(ids.b.size() + 1, 0);
    std::vector<std::size_t> cur(ids.b.size() + 1, 0);
    for (std::size_t i = 1; i <= ids.a.size(); ++i) {
        for (std::size_t j = 1; j <= ids.b.size(); ++j) {
            cur[j] = ids.a[i - 1] == ids.b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[ids.b.size()];
}

inline Prf rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference) {
    if (candidate.empty() && reference.empty()) return {0.0, 0.0, 0.0, true};
    if (candidate.empty() || reference.empty()) return {};
    const double lcs = static_cast<double>(lcs_length(candidate, reference));
    const double p = lcs / static_cast<double>(candidate.size());
    const double r = lcs / static_cast<double>(reference.size());
    return {p, r, harmonic_f1(p, r), false};
}

// Distinct n-grams over total n-grams across the whole corpus.
inline Score distinct_n(std::span<const Tokens> texts, std::size_t n) {
    std::set<std::vector<std::string_view>> seen;
    std::size_t total = 0;
    for (const auto& t : texts) {
        for (std::size_t i = 0; n > 0 && i + n <= t.size(); ++i) {
            seen.emplace(t.begin() + i, t.begin() + i + n);
            ++total;
        }
    }
    if (total == 0) return {0.0, true};
    return {static_cast<double>(seen.size()) / static_cast<double>(total), false};
}

inline Score distinct_n(std::span<const std::string> tokens, std::size_t n) {
    const Tokens copy(tokens.begin(), tokens.end());
    return distinct_n(std::span<const Tokens>(&copy, 1), n);
}

inline Score bleu(std::string_view candidate, std::string_view reference, std::size_t max_n = 4) {
    return bleu(tokenize(candidate), tokenize(reference), max_n);
}
inline Prf rouge_n(std::string_view candidate, std::string_view reference, std::size_t n) {
    return rouge_n(tokenize(candidate), tokenize(reference), n);
}
inline Prf rouge_l(std::string_view candidate, std::string_view reference) {
    return rouge_l(tokenize(candidate), tokenize(reference));
}
inline Score distinct_n(const std::vector<std::string_view>& texts, std::size_t n) {
    std::vector<Tokens> toks;
    toks.reserve(texts.size());
    for (auto t : texts) toks.push_back(tokenize(t));
    return distinct_n(std::span<const Tokens>(toks), n);
}

}  // namespace polypersona::eval
