#pragma once

// Hierarchical survey question bank: domain -> question type -> questions.
//
// Bank file layout (UTF-8 JSON):
//
//   {
//     "provenance": "free-text source note",            // optional
//     "healthcare": {
//       "likert":    [{"id": "...", "text": "...", "scale": ["...", ...]}],
//       "open":      [{"id": "...", "text": "..."}],
//       "yesno":     [...],
//       "agreement": [...]
//     },
//     ... one node per domain, all ten required ...
//   }

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "polypersona/errors.hpp"
#include "polypersona/random.hpp"

namespace polypersona {

enum class Domain : std::uint8_t {
    demographics,
    healthcare,
    education,
    work_experience,
    technology,
    consumer_preferences,
    finance,
    social_issues,
    environment,
    lifestyle,
};

inline constexpr std::size_t kDomainCount = 10;

inline constexpr std::array<Domain, kDomainCount> kAllDomains = {
    Domain::demographics,         Domain::healthcare, Domain::education,     Domain::work_experience,
    Domain::technology,           Domain::consumer_preferences, Domain::finance, Domain::social_issues,
    Domain::environment,          Domain::lifestyle,
};

inline constexpr std::array<std::string_view, kDomainCount> kDomainNames = {
    "demographics", "healthcare", "education",     "work_experience", "technology",
    "consumer_preferences", "finance", "social_issues", "environment", "lifestyle",
};

inline constexpr std::array<std::string_view, kDomainCount> kDomainLabels = {
    "Demographics", "Healthcare", "Education",     "Work Experience", "Technology",
    "Consumer Preferences", "Finance", "Social Issues", "Environment", "Lifestyle",
};

inline std::size_t index_of(Domain d) { return static_cast<std::size_t>(d); }
inline std::string_view to_string(Domain d) { return kDomainNames[index_of(d)]; }
inline std::string_view display_name(Domain d) { return kDomainLabels[index_of(d)]; }

inline std::optional<Domain> parse_domain(std::string_view name) {
    for (std::size_t i = 0; i < kDomainCount; ++i) {
        if (kDomainNames[i] == name) return kAllDomains[i];
    }
    return std::nullopt;
}

// Fixed order; it is also the tie-break order for apportionment.
enum class QuestionType : std::uint8_t { open, likert, yesno, agreement };

inline constexpr std::size_t kQuestionTypeCount = 4;

inline constexpr std::array<QuestionType, kQuestionTypeCount> kAllQuestionTypes = {
    QuestionType::open, QuestionType::likert, QuestionType::yesno, QuestionType::agreement};

inline constexpr std::array<std::string_view, kQuestionTypeCount> kQuestionTypeNames = {"open", "likert", "yesno",
                                                                                        "agreement"};

inline std::size_t index_of(QuestionType t) { return static_cast<std::size_t>(t); }
inline std::string_view to_string(QuestionType t) { return kQuestionTypeNames[index_of(t)]; }

inline std::optional<QuestionType> parse_question_type(std::string_view name) {
    for (std::size_t i = 0; i < kQuestionTypeCount; ++i) {
        if (kQuestionTypeNames[i] == name) return kAllQuestionTypes[i];
    }
    return std::nullopt;
}

struct SurveyQuestion {
    std::string id;
    Domain domain = Domain::demographics;
    QuestionType qtype = QuestionType::open;
    std::string text;
    std::vector<std::string> scale;  // ordered anchors, likert only

    friend bool operator==(const SurveyQuestion&, const SurveyQuestion&) = default;
};

// Fractions per question type, indexed in kAllQuestionTypes order.
class TypeRatios {
public:
    TypeRatios() = default;

    // Throws ConfigError unless every fraction is >= 0 and they sum to 1 (1e-9).
    explicit TypeRatios(std::array<double, kQuestionTypeCount> fractions) : fractions_(fractions) {
        double sum = 0.0;
        for (double f : fractions_) {
            if (!(f >= 0.0) || f > 1.0) throw ConfigError("type ratio outside [0,1]");
            sum += f;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("type ratios must sum to 1, got " + std::to_string(sum));
    }

    // Observed corpus mix: open 42.7%, likert 31.7%, yes/no 18.3%, agreement 7.3%.
    static TypeRatios defaults() { return TypeRatios({0.427, 0.317, 0.183, 0.073}); }

    double operator[](QuestionType t) const { return fractions_[index_of(t)]; }
    std::span<const double> fractions() const { return fractions_; }

    friend bool operator==(const TypeRatios&, const TypeRatios&) = default;

private:
    std::array<double, kQuestionTypeCount> fractions_{1.0, 0.0, 0.0, 0.0};
};

inline TypeRatios ratios_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("type ratios must be a JSON object");
    std::array<double, kQuestionTypeCount> f{};
    for (const auto& [key, value] : j.items()) {
        const auto t = parse_question_type(key);
        if (!t) throw ConfigError("unknown question type in ratios: " + key);
        if (!value.is_number()) throw ConfigError("ratio for " + key + " is not a number");
        f[index_of(*t)] = value.get<double>();
    }
    return TypeRatios(f);
}

inline nlohmann::ordered_json to_json(const TypeRatios& r) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (QuestionType t : kAllQuestionTypes) j[std::string(to_string(t))] = r[t];
    return j;
}

class QuestionBank {
public:
    using Pool = std::vector<SurveyQuestion>;

    const Pool& pool(Domain d, QuestionType t) const { return pools_[index_of(d)][index_of(t)]; }
    Pool& pool(Domain d, QuestionType t) { return pools_[index_of(d)][index_of(t)]; }

    // Appends to the pool selected by the question's own domain/qtype.
    void add(SurveyQuestion q) { pool(q.domain, q.qtype).push_back(std::move(q)); }

    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& node : pools_)
            for (const auto& p : node) n += p.size();
        return n;
    }

    std::size_t size(Domain d) const {
        std::size_t n = 0;
        for (const auto& p : pools_[index_of(d)]) n += p.size();
        return n;
    }

    // Domain order, then type order, then file order.
    std::vector<SurveyQuestion> all() const {
        std::vector<SurveyQuestion> out;
        out.reserve(size());
        for (const auto& node : pools_)
            for (const auto& p : node) out.insert(out.end(), p.begin(), p.end());
        return out;
    }

    const SurveyQuestion* find(std::string_view id) const {
        for (const auto& node : pools_)
            for (const auto& p : node)
                for (const auto& q : p)
                    if (q.id == id) return &q;
        return nullptr;
    }

    std::string provenance;

private:
    std::array<std::array<Pool, kQuestionTypeCount>, kDomainCount> pools_;
};

struct BankViolation {
    enum class Kind { duplicate_id, empty_id, empty_text, missing_scale, unexpected_scale, misplaced };
    Kind kind;
    std::string id;
    std::string field;
    std::string message;
};

// Total function: lists every invariant violation, empty iff the bank is valid.
// Empty pools are allowed.
inline std::vector<BankViolation> validate_bank(const QuestionBank& bank) {
    std::vector<BankViolation> out;
    std::unordered_set<std::string> seen;
    for (Domain d : kAllDomains) {
        for (QuestionType t : kAllQuestionTypes) {
            for (const auto& q : bank.pool(d, t)) {
                using K = BankViolation::Kind;
                if (q.id.empty()) out.push_back({K::empty_id, q.id, "id", "question id is empty"});
                if (!q.id.empty() && !seen.insert(q.id).second)
                    out.push_back({K::duplicate_id, q.id, "id", "duplicate question id '" + q.id + "'"});
                if (q.text.empty()) out.push_back({K::empty_text, q.id, "text", "question text is empty"});
                if (q.domain != d || q.qtype != t)
                    out.push_back({K::misplaced, q.id, "domain",
                                   "question filed under " + std::string(to_string(d)) + "/" +
                                       std::string(to_string(t)) + " but tagged " + std::string(to_string(q.domain)) +
                                       "/" + std::string(to_string(q.qtype))});
                if (q.qtype == QuestionType::likert && q.scale.size() < 2)
                    out.push_back({K::missing_scale, q.id, "scale", "likert question needs at least 2 scale anchors"});
                if (q.qtype != QuestionType::likert && !q.scale.empty())
                    out.push_back({K::unexpected_scale, q.id, "scale", "only likert questions carry a scale"});
            }
        }
    }
    return out;
}

inline QuestionBank parse_question_bank(const nlohmann::json& root) {
    if (!root.is_object()) throw SchemaError("question bank must be a JSON object keyed by domain");
    QuestionBank bank;
    std::array<bool, kDomainCount> present{};
    for (const auto& [key, node] : root.items()) {
        if (key == "provenance") {
            if (!node.is_string()) throw SchemaError("provenance must be a string");
            bank.provenance = node.get<std::string>();
            continue;
        }
        const auto domain = parse_domain(key);
        if (!domain) throw SchemaError("unknown domain node '" + key + "'");
        if (!node.is_object()) throw SchemaError("domain node '" + key + "' must be an object");
        present[index_of(*domain)] = true;
        for (const auto& [tkey, list] : node.items()) {
            if (!parse_question_type(tkey)) throw SchemaError("unknown question type '" + tkey + "' in " + key);
        }
        for (QuestionType t : kAllQuestionTypes) {
            const std::string tname(to_string(t));
            if (!node.contains(tname)) throw SchemaError("domain '" + key + "' is missing the '" + tname + "' list");
            const auto& list = node.at(tname);
            if (!list.is_array()) throw SchemaError(key + "/" + tname + " must be an array");
            for (const auto& item : list) {
                if (!item.is_object() || !item.contains("id") || !item.contains("text") || !item["id"].is_string() ||
                    !item["text"].is_string())
                    throw SchemaError(key + "/" + tname + ": each question needs string 'id' and 'text'");
                SurveyQuestion q{item["id"].get<std::string>(), *domain, t, item["text"].get<std::string>(), {}};
                if (item.contains("scale")) {
                    if (!item["scale"].is_array()) throw SchemaError("scale of '" + q.id + "' must be an array");
                    for (const auto& a : item["scale"]) {
                        if (!a.is_string()) throw SchemaError("scale anchors of '" + q.id + "' must be strings");
                        q.scale.push_back(a.get<std::string>());
                    }
                }
                bank.add(std::move(q));
            }
        }
    }
    for (std::size_t i = 0; i < kDomainCount; ++i) {
        if (!present[i]) throw SchemaError("missing domain node '" + std::string(kDomainNames[i]) + "'");
    }

    const auto violations = validate_bank(bank);
    for (const auto& v : violations) {
        if (v.kind == BankViolation::Kind::duplicate_id) throw DuplicateIdError(v.message);
    }
    if (!violations.empty()) throw SchemaError(violations.front().id + ": " + violations.front().message);
    return bank;
}

inline QuestionBank load_question_bank(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open question bank " + path.string());
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return parse_question_bank(root);
}

inline nlohmann::ordered_json to_json(const QuestionBank& bank) {
    nlohmann::ordered_json root = nlohmann::ordered_json::object();
    if (!bank.provenance.empty()) root["provenance"] = bank.provenance;
    for (Domain d : kAllDomains) {
        nlohmann::ordered_json node = nlohmann::ordered_json::object();
        for (QuestionType t : kAllQuestionTypes) {
            nlohmann::ordered_json list = nlohmann::ordered_json::array();
            for (const auto& q : bank.pool(d, t)) {
                nlohmann::ordered_json item = {{"id", q.id}, {"text", q.text}};
                if (!q.scale.empty()) item["scale"] = q.scale;
                list.push_back(std::move(item));
            }
            node[std::string(to_string(t))] = std::move(list);
        }
        root[std::string(to_string(d))] = std::move(node);
    }
    return root;
}

using TypeAllocation = std::array<std::size_t, kQuestionTypeCount>;

// Largest-remainder split of `count` across types, ties in type order.
inline TypeAllocation allocate_types(std::size_t count, const TypeRatios& ratios) {
    const auto seats = apportion(count, ratios.fractions());
    TypeAllocation out{};
    std::copy(seats.begin(), seats.end(), out.begin());
    return out;
}

// Draws `count` questions from one domain. Per-type counts come from
// allocate_types; within a type, questions are drawn without replacement until
// the pool is exhausted and with replacement after that. The result is
// shuffled so types interleave. Same inputs and seed, same sequence.
inline std::vector<SurveyQuestion> sample_questions(const QuestionBank& bank, Domain domain, std::size_t count,
                                                    const TypeRatios& ratios, std::uint64_t seed) {
    const TypeAllocation alloc = allocate_types(count, ratios);
    for (QuestionType t : kAllQuestionTypes) {
        if (alloc[index_of(t)] > 0 && bank.pool(domain, t).empty())
            throw EmptyPoolError("no " + std::string(to_string(t)) + " questions in domain " +
                                 std::string(to_string(domain)) + " but " + std::to_string(alloc[index_of(t)]) +
                                 " requested");
    }

    Rng rng(seed);
    std::vector<SurveyQuestion> out;
    out.reserve(count);
    for (QuestionType t : kAllQuestionTypes) {
        const auto& pool = bank.pool(domain, t);
        const std::size_t want = alloc[index_of(t)];
        if (want == 0) continue;
        std::vector<std::size_t> order(pool.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        shuffle(order, rng);
        for (std::size_t k = 0; k < want; ++k) {
            const std::size_t pick = k < order.size() ? order[k] : rng.below(pool.size());
            out.push_back(pool[pick]);
        }
    }
    shuffle(out, rng);
    return out;
}

// One question whose type is drawn from the categorical distribution given by
// `ratios`. Use this for streaming single draws; sample_questions with
// count = 1 always yields the type with the largest ratio.
inline const SurveyQuestion& draw_question(const QuestionBank& bank, Domain domain, const TypeRatios& ratios,
                                           Rng& rng) {
    const double u = rng.unit();
    double cumulative = 0.0;
    QuestionType chosen = QuestionType::open;
    // u past the rounded cumulative sum falls through to the last nonzero type.
    for (QuestionType t : kAllQuestionTypes) {
        if (ratios[t] <= 0.0) continue;
        chosen = t;
        cumulative += ratios[t];
        if (u < cumulative) break;
    }
    const auto& pool = bank.pool(domain, chosen);
    if (pool.empty())
        throw EmptyPoolError("no " + std::string(to_string(chosen)) + " questions in domain " +
                             std::string(to_string(domain)));
    return pool[rng.below(pool.size())];
}

inline TypeRatios type_distribution(std::span<const SurveyQuestion> questions) {
    if (questions.empty()) throw EmptyInputError("type_distribution needs at least one question");
    std::array<std::size_t, kQuestionTypeCount> counts{};
    for (const auto& q : questions) ++counts[index_of(q.qtype)];
    std::array<double, kQuestionTypeCount> f{};
    for (std::size_t i = 0; i < kQuestionTypeCount; ++i)
        f[i] = static_cast<double>(counts[i]) / static_cast<double>(questions.size());
    return TypeRatios(f);
}

}  // namespace polypersona
