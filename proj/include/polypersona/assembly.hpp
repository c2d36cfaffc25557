#pragma once

// Dataset assembly from a per-domain plan and the stratified train/val/test split.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "polypersona/dataset.hpp"
#include "polypersona/errors.hpp"
#include "polypersona/persona_store.hpp"
#include "polypersona/question_bank.hpp"
#include "polypersona/random.hpp"

namespace polypersona {

struct AssemblyPlan {
    std::array<std::size_t, kDomainCount> counts{};
    TypeRatios ratios = TypeRatios::defaults();
    std::uint64_t seed = 0;
    // Consecutive records that share a persona inside one domain.
    std::size_t responses_per_persona = 8;
    PersonaSampling persona_strategy = PersonaSampling::uniform;

    std::size_t total() const {
        std::size_t n = 0;
        for (auto c : counts) n += c;
        return n;
    }
};

// Per-domain record counts of the reference corpus (3,568 records).
inline constexpr std::array<std::size_t, kDomainCount> kReferenceDomainCounts = {
    520,  // demographics
    416,  // healthcare
    416,  // education
    400,  // work_experience
    384,  // technology
    368,  // consumer_preferences
    368,  // finance
    264,  // social_issues
    216,  // environment
    216,  // lifestyle
};

// {"counts": {domain: n, ...}, "ratios"?: {...}, "seed"?: n,
//  "responses_per_persona"?: n, "persona_strategy"?: "uniform"|"category_balanced"}
inline AssemblyPlan plan_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("counts") || !j["counts"].is_object())
        throw ConfigError("plan needs a 'counts' object keyed by domain");
    AssemblyPlan plan;
    for (const auto& [key, value] : j["counts"].items()) {
        const auto d = parse_domain(key);
        if (!d) throw ConfigError("unknown domain in plan: " + key);
        if (!value.is_number_integer() || value.get<long long>() < 0)
            throw ConfigError("plan count for " + key + " must be a nonnegative integer");
        plan.counts[index_of(*d)] = value.get<std::size_t>();
    }
    if (j.contains("ratios")) plan.ratios = ratios_from_json(j["ratios"]);
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ConfigError("plan seed must be a nonnegative integer");
        plan.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("responses_per_persona")) {
        if (!j["responses_per_persona"].is_number_unsigned() || j["responses_per_persona"].get<std::size_t>() == 0)
            throw ConfigError("responses_per_persona must be a positive integer");
        plan.responses_per_persona = j["responses_per_persona"].get<std::size_t>();
    }
    if (j.contains("persona_strategy")) {
        const auto s = j["persona_strategy"].get<std::string>();
        if (s == "uniform") plan.persona_strategy = PersonaSampling::uniform;
        else if (s == "category_balanced") plan.persona_strategy = PersonaSampling::category_balanced;
        else throw ConfigError("unknown persona_strategy '" + s + "'");
    }
    return plan;
}

inline AssemblyPlan load_plan(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open plan " + path.string());
    try {
        return plan_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

// Ratios restricted to the types this domain actually has questions for,
// renormalized. A bank may legitimately leave a type list empty.
inline TypeRatios available_ratios(const QuestionBank& bank, Domain d, const TypeRatios& ratios) {
    std::array<double, kQuestionTypeCount> f{};
    double sum = 0.0;
    for (QuestionType t : kAllQuestionTypes) {
        if (!bank.pool(d, t).empty()) {
            f[index_of(t)] = ratios[t];
            sum += ratios[t];
        }
    }
    if (sum <= 0.0) throw EmptyPoolError("domain " + std::string(to_string(d)) + " has no questions for the requested types");
    for (auto& x : f) x /= sum;
    // Absorb rounding so the constructor's sum check holds.
    double total = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        total += f[i];
        if (f[i] > 0.0) last = i;
    }
    f[last] += 1.0 - total;
    return TypeRatios(f);
}

// Records in domain order. Questions per domain come from sample_questions,
// personas from sample_personas; each persona answers up to
// `responses_per_persona` consecutive questions, cycling when the store is
// smaller than needed. Pure function of (personas, bank, plan).
inline std::vector<ChatRecord> assemble_dataset(const PersonaStore& personas, const QuestionBank& bank,
                                                const AssemblyPlan& plan) {
    std::vector<ChatRecord> records;
    records.reserve(plan.total());
    if (plan.total() > 0 && personas.empty()) throw InsufficientPersonasError("persona store is empty");
    std::size_t sequence = 0;
    for (Domain d : kAllDomains) {
        const std::size_t count = plan.counts[index_of(d)];
        if (count == 0) continue;
        const std::string name(to_string(d));
        const auto questions =
            sample_questions(bank, d, count, available_ratios(bank, d, plan.ratios), derive_seed(plan.seed, "questions/" + name));
        const std::size_t rpp = std::max<std::size_t>(1, plan.responses_per_persona);
        const std::size_t wanted = (count + rpp - 1) / rpp;
        const auto cast = sample_personas(personas, std::min(wanted, personas.size()), plan.persona_strategy,
                                          derive_seed(plan.seed, "personas/" + name));
        for (std::size_t i = 0; i < count; ++i) {
            const PersonaCard& persona = cast[(i / rpp) % cast.size()];
            records.push_back(build_record(persona, questions[i], std::nullopt, sequence++));
        }
    }
    return records;
}

struct SplitSpec {
    std::array<double, 3> fractions{0.8, 0.1, 0.1};  // train, val, test
    bool stratify_domain = false;
    bool stratify_qtype = false;
    std::uint64_t seed = 0;

    void validate() const {
        double sum = 0.0;
        for (double f : fractions) {
            if (!(f >= 0.0)) throw ConfigError("split fractions must be nonnegative");
            sum += f;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
    }
};

struct SplitResult {
    std::vector<ChatRecord> train;
    std::vector<ChatRecord> val;
    std::vector<ChatRecord> test;
};

// Strata are the cartesian product of the selected keys. Sizes come from a
// two-way largest-remainder rounding: every stratum's train/val/test counts are
// the floor or ceiling of its fractional targets, and the split totals equal
// the largest-remainder apportionment over the whole dataset (surplus to
// train). Each stratum is shuffled under its own derived seed before the cut.
// Every split keeps the input order.
inline SplitResult split_dataset(const std::vector<ChatRecord>& records, const SplitSpec& spec) {
    spec.validate();
    if (records.empty()) throw EmptyDatasetError("cannot split an empty dataset");

    std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const int d = spec.stratify_domain ? static_cast<int>(records[i].meta.domain) : -1;
        const int t = spec.stratify_qtype ? static_cast<int>(records[i].meta.qtype) : -1;
        strata[{d, t}].push_back(i);
    }

    std::vector<std::size_t> sizes_per_stratum;
    for (const auto& [key, members] : strata) sizes_per_stratum.push_back(members.size());
    const auto table = apportion_table(sizes_per_stratum, spec.fractions);

    std::vector<int> assignment(records.size(), 0);
    std::size_t row = 0;
    for (auto& [key, members] : strata) {
        const std::string stream = "split/" + std::to_string(key.first) + "/" + std::to_string(key.second);
        Rng rng(derive_seed(spec.seed, stream));
        shuffle(members, rng);
        std::size_t cursor = 0;
        for (std::size_t s = 0; s < 3; ++s)
            for (std::size_t k = 0; k < table[row][s]; ++k) assignment[members[cursor++]] = static_cast<int>(s);
        ++row;
    }

    SplitResult out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        switch (assignment[i]) {
            case 0: out.train.push_back(records[i]); break;
            case 1: out.val.push_back(records[i]); break;
            default: out.test.push_back(records[i]); break;
        }
    }
    return out;
}

}  // namespace polypersona
