#pragma once

// Persona cards: ingestion from line-delimited sources, keyword-rule
// categorization, seeded sampling and domain-reuse analytics.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "polypersona/errors.hpp"
#include "polypersona/hash.hpp"
#include "polypersona/question_bank.hpp"
#include "polypersona/random.hpp"
#include "polypersona/text.hpp"

namespace polypersona {

enum class PersonaCategory : std::uint8_t {
    healthcare_worker,
    educator,
    student,
    technical_specialist,
    creative,
    retiree,
    professional,
    other,
};

inline constexpr std::size_t kPersonaCategoryCount = 8;

inline constexpr std::array<std::string_view, kPersonaCategoryCount> kPersonaCategoryNames = {
    "healthcare_worker", "educator", "student", "technical_specialist", "creative", "retiree", "professional", "other",
};

inline std::string_view to_string(PersonaCategory c) { return kPersonaCategoryNames[static_cast<std::size_t>(c)]; }

struct CategoryRule {
    PersonaCategory category;
    std::vector<std::string_view> keywords;  // single words or space-separated phrases
};

// Checked top to bottom; the first rule with a matching keyword wins.
inline const std::vector<CategoryRule>& category_rules() {
    static const std::vector<CategoryRule> rules = {
        {PersonaCategory::healthcare_worker,
         {"nurse", "doctor", "physician", "surgeon", "pharmacist", "paramedic", "dentist", "therapist",
          "physiotherapist", "midwife", "caregiver", "medical", "clinician", "healthcare worker", "hospital"}},
        {PersonaCategory::educator,
         {"teacher", "professor", "educator", "lecturer", "tutor", "instructor", "principal", "librarian",
          "schoolteacher"}},
        {PersonaCategory::student,
         {"student", "undergraduate", "graduate student", "phd candidate", "pupil", "freshman", "sophomore"}},
        {PersonaCategory::technical_specialist,
         {"engineer", "developer", "programmer", "software", "data scientist", "technician", "it specialist",
          "sysadmin", "cybersecurity", "coder"}},
        {PersonaCategory::creative,
         {"artist", "writer", "musician", "designer", "photographer", "author", "poet", "filmmaker", "painter",
          "novelist", "journalist"}},
        {PersonaCategory::retiree, {"retired", "retiree", "pensioner"}},
        {PersonaCategory::professional,
         {"manager", "lawyer", "attorney", "accountant", "consultant", "executive", "entrepreneur", "professional",
          "banker", "analyst", "marketing", "business owner", "director", "administrator"}},
    };
    return rules;
}

namespace detail {

// Token equality allowing a plural "s"/"es" on the description side.
inline bool token_matches(std::string_view token, std::string_view keyword) {
    if (token == keyword) return true;
    if (token.size() == keyword.size() + 1 && token.back() == 's' && token.starts_with(keyword)) return true;
    if (token.size() == keyword.size() + 2 && token.ends_with("es") && token.starts_with(keyword)) return true;
    return false;
}

inline bool contains_phrase(const std::vector<std::string>& tokens, const std::vector<std::string>& phrase) {
    if (phrase.empty() || phrase.size() > tokens.size()) return false;
    for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i) {
        bool ok = true;
        for (std::size_t k = 0; k < phrase.size() && ok; ++k) {
            // Plural only on the last word of a phrase.
            ok = (k + 1 == phrase.size()) ? token_matches(tokens[i + k], phrase[k]) : tokens[i + k] == phrase[k];
        }
        if (ok) return true;
    }
    return false;
}

}  // namespace detail

inline PersonaCategory categorize_text(std::string_view description) {
    const auto tokens = tokenize(description);
    for (const auto& rule : category_rules()) {
        for (std::string_view kw : rule.keywords) {
            if (detail::contains_phrase(tokens, tokenize(kw))) return rule.category;
        }
    }
    return PersonaCategory::other;
}

struct PersonaCard {
    std::string id;
    std::string description;
    PersonaCategory category = PersonaCategory::other;
    std::map<std::string, std::string> attributes;

    friend bool operator==(const PersonaCard&, const PersonaCard&) = default;
};

inline PersonaCategory categorize(const PersonaCard& persona) { return categorize_text(persona.description); }

// Pulls "N-year-old" / "aged N" into age and age_bracket when present.
inline std::map<std::string, std::string> extract_attributes(std::string_view description) {
    std::map<std::string, std::string> attrs;
    const auto tokens = tokenize(description);
    const auto is_number = [](const std::string& s) {
        return !s.empty() && s.size() <= 3 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
    };
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const bool year_old = i + 2 < tokens.size() && is_number(tokens[i]) && tokens[i + 1] == "year" &&
                              tokens[i + 2] == "old";
        const bool aged = i + 1 < tokens.size() && tokens[i] == "aged" && is_number(tokens[i + 1]);
        if (!year_old && !aged) continue;
        const int age = std::stoi(year_old ? tokens[i] : tokens[i + 1]);
        attrs["age"] = std::to_string(age);
        if (age < 18) attrs["age_bracket"] = "under_18";
        else if (age < 25) attrs["age_bracket"] = "18-24";
        else if (age < 35) attrs["age_bracket"] = "25-34";
        else if (age < 45) attrs["age_bracket"] = "35-44";
        else if (age < 55) attrs["age_bracket"] = "45-54";
        else if (age < 65) attrs["age_bracket"] = "55-64";
        else attrs["age_bracket"] = "65+";
        break;
    }
    return attrs;
}

inline std::string persona_id_for(std::string_view description) { return stable_id("p-", description); }

// Immutable after construction; lookup by id is O(1).
class PersonaStore {
public:
    PersonaStore() = default;

    // Throws DuplicateIdError on repeated ids or SchemaError on empty descriptions.
    explicit PersonaStore(std::vector<PersonaCard> cards) : cards_(std::move(cards)) {
        for (std::size_t i = 0; i < cards_.size(); ++i) {
            if (trim(cards_[i].description).empty())
                throw SchemaError("persona '" + cards_[i].id + "' has an empty description");
            if (!index_.emplace(cards_[i].id, i).second) throw DuplicateIdError("duplicate persona id '" + cards_[i].id + "'");
        }
    }

    const std::vector<PersonaCard>& cards() const { return cards_; }
    std::size_t size() const { return cards_.size(); }
    bool empty() const { return cards_.empty(); }

    const PersonaCard* find(std::string_view id) const {
        const auto it = index_.find(std::string(id));
        return it == index_.end() ? nullptr : &cards_[it->second];
    }

    friend bool operator==(const PersonaStore& a, const PersonaStore& b) { return a.cards_ == b.cards_; }

private:
    std::vector<PersonaCard> cards_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct SkippedLine {
    std::size_t line;  // 1-based
    std::string reason;
};

struct IngestResult {
    PersonaStore store;
    std::vector<SkippedLine> skipped;
};

// One card per input line. Lines starting with '{' are JSON objects
// {"id"?, "description", "attributes"?}; anything else is a plain-text
// description. Blank descriptions and repeated ids are skipped and reported;
// malformed JSON is a ParseError naming the line.
inline IngestResult ingest_personas_from_string(std::string_view content, std::string_view source = "<memory>") {
    std::vector<PersonaCard> cards;
    std::vector<SkippedLine> skipped;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    bool any_line = false;

    std::size_t start = 0;
    while (start < content.size()) {
        std::size_t end = content.find('\n', start);
        if (end == std::string_view::npos) end = content.size();
        std::string_view raw = content.substr(start, end - start);
        start = end + 1;
        ++line_no;
        any_line = true;
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
        const std::string_view line = trim(raw);

        PersonaCard card;
        bool has_attributes = false;
        if (!line.empty() && line.front() == '{') {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError(std::string(source) + ": " + e.what(), line_no);
            }
            if (!j.is_object()) throw ParseError(std::string(source) + ": expected a JSON object", line_no);
            if (j.contains("description")) {
                if (!j["description"].is_string())
                    throw ParseError(std::string(source) + ": description must be a string", line_no);
                card.description = std::string(trim(j["description"].get<std::string>()));
            }
            if (j.contains("id")) {
                if (!j["id"].is_string()) throw ParseError(std::string(source) + ": id must be a string", line_no);
                card.id = j["id"].get<std::string>();
            }
            if (j.contains("attributes")) {
                if (!j["attributes"].is_object())
                    throw ParseError(std::string(source) + ": attributes must be an object", line_no);
                for (const auto& [k, v] : j["attributes"].items()) {
                    card.attributes[k] = v.is_string() ? v.get<std::string>() : v.dump();
                }
                has_attributes = true;
            }
        } else {
            card.description = std::string(line);
        }

        if (card.description.empty()) {
            skipped.push_back({line_no, "blank description"});
            continue;
        }
        if (card.id.empty()) card.id = persona_id_for(card.description);
        if (!seen.insert(card.id).second) {
            skipped.push_back({line_no, "duplicate id '" + card.id + "'"});
            continue;
        }
        if (!has_attributes) card.attributes = extract_attributes(card.description);
        card.category = categorize(card);
        cards.push_back(std::move(card));
    }
    if (!any_line) throw EmptyFileError(std::string(source) + ": no persona lines");
    return {PersonaStore(std::move(cards)), std::move(skipped)};
}

inline IngestResult ingest_personas(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open persona file " + path.string());
    const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return ingest_personas_from_string(content, path.string());
}

inline nlohmann::ordered_json to_json(const PersonaCard& p) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["description"] = p.description;
    j["category"] = std::string(to_string(p.category));
    j["attributes"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : p.attributes) j["attributes"][k] = v;
    return j;
}

inline void write_personas(const PersonaStore& store, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& p : store.cards()) out << to_json(p).dump() << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

struct ReuseReport {
    std::map<std::string, std::size_t> domains_per_persona;  // persona id -> distinct domains
    std::map<std::size_t, std::size_t> histogram;            // distinct-domain count -> personas
    double fraction_single_domain = 0.0;
    double fraction_multi_domain = 0.0;
    bool defined = false;  // false for empty input; fractions are then reported as 0
};

inline ReuseReport reuse_stats(std::span<const std::pair<std::string, Domain>> assignments) {
    std::map<std::string, std::set<Domain>> domains;
    for (const auto& [persona, domain] : assignments) domains[persona].insert(domain);

    ReuseReport report;
    std::size_t single = 0;
    for (const auto& [persona, set] : domains) {
        report.domains_per_persona[persona] = set.size();
        ++report.histogram[set.size()];
        if (set.size() == 1) ++single;
    }
    if (!domains.empty()) {
        report.defined = true;
        const double n = static_cast<double>(domains.size());
        report.fraction_single_domain = static_cast<double>(single) / n;
        report.fraction_multi_domain = static_cast<double>(domains.size() - single) / n;
    }
    return report;
}

enum class PersonaSampling { uniform, category_balanced };

inline std::array<std::size_t, kPersonaCategoryCount> category_allocation(const PersonaStore& store, std::size_t n) {
    std::array<double, kPersonaCategoryCount> weights{};
    for (const auto& p : store.cards()) weights[static_cast<std::size_t>(p.category)] += 1.0;
    const auto seats = apportion(n, weights);
    std::array<std::size_t, kPersonaCategoryCount> out{};
    std::copy(seats.begin(), seats.end(), out.begin());
    return out;
}

// Without replacement. category_balanced apportions n across categories in
// proportion to their frequency in the store (largest remainder), samples
// inside each category, then shuffles the combined list.
inline std::vector<PersonaCard> sample_personas(const PersonaStore& store, std::size_t n, PersonaSampling strategy,
                                                std::uint64_t seed) {
    if (n > store.size())
        throw InsufficientPersonasError("requested " + std::to_string(n) + " personas from a store of " +
                                        std::to_string(store.size()));
    Rng rng(seed);
    std::vector<PersonaCard> out;
    out.reserve(n);
    if (strategy == PersonaSampling::uniform) {
        std::vector<std::size_t> order(store.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        shuffle(order, rng);
        for (std::size_t i = 0; i < n; ++i) out.push_back(store.cards()[order[i]]);
        return out;
    }

    const auto alloc = category_allocation(store, n);
    std::array<std::vector<std::size_t>, kPersonaCategoryCount> members;
    for (std::size_t i = 0; i < store.size(); ++i)
        members[static_cast<std::size_t>(store.cards()[i].category)].push_back(i);
    for (std::size_t c = 0; c < kPersonaCategoryCount; ++c) {
        shuffle(members[c], rng);
        for (std::size_t k = 0; k < alloc[c]; ++k) out.push_back(store.cards()[members[c][k]]);
    }
    shuffle(out, rng);
    return out;
}

}  // namespace polypersona
