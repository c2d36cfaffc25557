#pragma once

// BERTScore-style semantic F1 over pluggable token embeddings.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "polypersona/errors.hpp"
#include "polypersona/eval/ngram.hpp"
#include "polypersona/random.hpp"

namespace polypersona::eval {

using Embedding = std::vector<double>;

// One fixed-dimension vector per input token, deterministic for identical
// input. Implementations must tolerate concurrent calls.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<Embedding> embed(std::span<const std::string> tokens) const = 0;
};

// Offline provider: each token's character trigrams (with '#' boundary marks)
// are hashed and pushed through a fixed pseudo-random projection, then the
// sum is unit-normalized. Tokens sharing trigrams get correlated vectors.
class HashedTrigramProvider final : public EmbeddingProvider {
public:
    explicit HashedTrigramProvider(std::size_t dimension = 64, std::uint64_t seed = 0x5eedULL)
        : dimension_(dimension), seed_(seed) {}

    std::size_t dimension() const override { return dimension_; }

    std::vector<Embedding> embed(std::span<const std::string> tokens) const override {
        std::vector<Embedding> out;
        out.reserve(tokens.size());
        for (const auto& t : tokens) out.push_back(embed_token(t));
        return out;
    }

    Embedding embed_token(std::string_view token) const {
        Embedding v(dimension_, 0.0);
        const std::string padded = "#" + std::string(token) + "#";
        for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
            const std::uint64_t h = fnv1a64(std::string_view(padded).substr(i, 3)) ^ seed_;
            for (std::size_t k = 0; k < dimension_; ++k) {
                const std::uint64_t x = splitmix64(h + k);
                v[k] += static_cast<double>(x >> 11) * 0x1.0p-52 - 1.0;  // uniform in [-1, 1)
            }
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm > 0.0)
            for (double& x : v) x /= norm;
        return v;
    }

private:
    std::size_t dimension_;
    std::uint64_t seed_;
};

// Cosine similarity; 0 when either vector is all zeros.
inline double cosine(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    if (std::equal(a.begin(), a.end(), b.begin(), b.end())) return 1.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

// Inverse document frequency weights; unseen tokens get `unseen_weight`.
struct IdfTable {
    std::unordered_map<std::string, double> weights;
    double unseen_weight = 1.0;

    double operator()(const std::string& token) const {
        const auto it = weights.find(token);
        return it == weights.end() ? unseen_weight : it->second;
    }
};

// idf(w) = log((M + 1) / (df(w) + 1)) over M reference documents.
inline IdfTable compute_idf(std::span<const Tokens> documents) {
    std::unordered_map<std::string, std::size_t> df;
    for (const auto& doc : documents) {
        std::set<std::string_view> seen(doc.begin(), doc.end());
        for (auto t : seen) ++df[std::string(t)];
    }
    const double m = static_cast<double>(documents.size());
    IdfTable table;
    table.unseen_weight = std::log(m + 1.0);
    for (const auto& [t, n] : df) table.weights[t] = std::log((m + 1.0) / (static_cast<double>(n) + 1.0));
    return table;
}

// Greedy matching: recall averages, over reference tokens, the best cosine
// against any candidate token; precision does the same from the candidate
// side. Optional idf weighting; P and R are clamped to [0, 1].
inline Prf semantic_f1(std::span<const std::string> candidate, std::span<const std::string> reference,
                       const EmbeddingProvider& provider, const IdfTable* idf = nullptr) {
    if (candidate.empty() || reference.empty()) return {0.0, 0.0, 0.0, true};
    const auto ce = provider.embed(candidate);
    const auto re = provider.embed(reference);
    if (ce.size() != candidate.size() || re.size() != reference.size())
        throw ProviderError("embedding provider returned the wrong number of vectors");
    for (const auto* side : {&ce, &re})
        for (const auto& v : *side)
            if (v.size() != provider.dimension()) throw ProviderError("embedding provider returned a vector of the wrong dimension");

    std::vector<double> best_for_cand(ce.size(), -1.0);
    std::vector<double> best_for_ref(re.size(), -1.0);
    for (std::size_t i = 0; i < ce.size(); ++i) {
        for (std::size_t j = 0; j < re.size(); ++j) {
            const double s = cosine(ce[i], re[j]);
            best_for_cand[i] = std::max(best_for_cand[i], s);
            best_for_ref[j] = std::max(best_for_ref[j], s);
        }
    }
    const auto weighted_mean = [&](std::span<const std::string> toks, const std::vector<double>& best) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < toks.size(); ++i) {
            const double w = idf ? (*idf)(toks[i]) : 1.0;
            num += w * best[i];
            den += w;
        }
        if (den <= 0.0) {  // all-zero idf weights: fall back to a plain mean
            num = 0.0;
            for (double b : best) num += b;
            den = static_cast<double>(best.size());
        }
        return std::clamp(num / den, 0.0, 1.0);
    };
    const double p = weighted_mean(candidate, best_for_cand);
    const double r = weighted_mean(reference, best_for_ref);
    return {p, r, harmonic_f1(p, r), false};
}

inline Prf semantic_f1(std::string_view candidate, std::string_view reference, const EmbeddingProvider& provider,
                       const IdfTable* idf = nullptr) {
    return semantic_f1(tokenize(candidate), tokenize(reference), provider, idf);
}

}  // namespace polypersona::eval
