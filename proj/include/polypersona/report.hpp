#pragma once

// Aggregation of per-example metrics into per-model (and per-model x domain)
// tables, per-domain winners, and markdown/CSV rendering.

#include <array>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "polypersona/dataset.hpp"
#include "polypersona/errors.hpp"
#include "polypersona/eval/evaluate.hpp"
#include "polypersona/question_bank.hpp"

namespace polypersona::report {

using eval::kMetricCount;
using eval::kMetricNames;

using MetricValues = std::array<std::optional<double>, kMetricCount>;

inline MetricValues to_values(const eval::MetricVector& m) {
    MetricValues out;
    const auto a = eval::as_array(m);
    for (std::size_t i = 0; i < kMetricCount; ++i) out[i] = a[i];
    return out;
}

// One line of the evaluation output:
//   {"record_id", "model", "domain", "question_type", "metrics": {...}, "flags": [...]}
struct MetricRecord {
    std::string record_id;
    std::string model;
    std::string domain;  // may be empty
    std::string question_type;
    MetricValues values;
    std::vector<std::string> flags;
};

inline nlohmann::ordered_json to_json(const MetricRecord& r) {
    nlohmann::ordered_json j;
    j["record_id"] = r.record_id;
    j["model"] = r.model;
    if (!r.domain.empty()) j["domain"] = r.domain;
    if (!r.question_type.empty()) j["question_type"] = r.question_type;
    j["metrics"] = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < kMetricCount; ++i)
        if (r.values[i]) j["metrics"][std::string(kMetricNames[i])] = *r.values[i];
    j["flags"] = r.flags;
    return j;
}

inline MetricRecord metric_record_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("model") || !j["model"].is_string() || !j.contains("metrics") ||
        !j["metrics"].is_object())
        throw SchemaError("metric line needs string 'model' and object 'metrics'");
    MetricRecord r;
    r.record_id = j.value("record_id", std::string{});
    r.model = j["model"].get<std::string>();
    r.domain = j.value("domain", std::string{});
    r.question_type = j.value("question_type", std::string{});
    for (std::size_t i = 0; i < kMetricCount; ++i) {
        const std::string key(kMetricNames[i]);
        if (!j["metrics"].contains(key)) continue;
        if (!j["metrics"][key].is_number()) throw SchemaError("metric '" + key + "' is not a number");
        r.values[i] = j["metrics"][key].get<double>();
    }
    if (j.contains("flags") && j["flags"].is_array())
        for (const auto& f : j["flags"]) r.flags.push_back(f.get<std::string>());
    return r;
}

inline std::vector<MetricRecord> read_metrics(const std::filesystem::path& path) {
    std::vector<MetricRecord> out;
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t line) {
        try {
            out.push_back(metric_record_from_json(j));
        } catch (const SchemaError& e) {
            throw ParseError(path.string() + ": " + e.what(), line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ": " + e.what(), line);
        }
    });
    return out;
}

struct GroupKey {
    std::string model;
    std::optional<std::string> domain;

    friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
};

struct AggregateRow {
    GroupKey key;
    MetricValues means;  // nullopt when no example in the group carried the field
    std::size_t count = 0;
};

enum class Averaging {
    micro,  // mean over examples
    macro,  // mean over domains of the per-domain means
};

// Arithmetic mean per field per group; rows sorted by key.
inline std::vector<AggregateRow> aggregate(std::span<const std::pair<GroupKey, MetricValues>> items) {
    if (items.empty()) throw EmptyInputError("nothing to aggregate");
    struct Acc {
        std::array<double, kMetricCount> sum{};
        std::array<std::size_t, kMetricCount> n{};
        std::size_t count = 0;
    };
    std::map<GroupKey, Acc> groups;
    for (const auto& [key, values] : items) {
        Acc& acc = groups[key];
        ++acc.count;
        for (std::size_t i = 0; i < kMetricCount; ++i) {
            if (!values[i]) continue;
            acc.sum[i] += *values[i];
            ++acc.n[i];
        }
    }
    std::vector<AggregateRow> rows;
    rows.reserve(groups.size());
    for (const auto& [key, acc] : groups) {
        AggregateRow row{key, {}, acc.count};
        for (std::size_t i = 0; i < kMetricCount; ++i)
            if (acc.n[i] > 0) row.means[i] = acc.sum[i] / static_cast<double>(acc.n[i]);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<AggregateRow> aggregate(std::span<const MetricRecord> records, bool by_domain,
                                           Averaging averaging = Averaging::micro) {
    std::vector<std::pair<GroupKey, MetricValues>> items;
    items.reserve(records.size());
    const bool macro = averaging == Averaging::macro && !by_domain;
    for (const auto& r : records) {
        GroupKey key{r.model, std::nullopt};
        if (by_domain || macro) key.domain = r.domain;
        items.emplace_back(std::move(key), r.values);
    }
    auto rows = aggregate(items);
    if (!macro) return rows;

    // Collapse per-domain rows into one row per model, averaging domain means.
    std::vector<std::pair<GroupKey, MetricValues>> domain_means;
    std::map<std::string, std::size_t> counts;
    for (const auto& row : rows) {
        domain_means.emplace_back(GroupKey{row.key.model, std::nullopt}, row.means);
        counts[row.key.model] += row.count;
    }
    auto out = aggregate(domain_means);
    for (auto& row : out) row.count = counts[row.key.model];
    return out;
}

struct DomainWinner {
    std::string domain;
    std::string model;
    std::optional<double> bleu;
    std::optional<double> rouge1_f;
    std::optional<double> quality;
    double criterion = 0.0;
};

// Argmax of `criterion` (a metric name) per domain; exact ties go to the
// lexicographically smaller model name. `required_domains`, when nonempty,
// must all be present.
inline std::vector<DomainWinner> best_per_domain(std::span<const AggregateRow> rows, std::string_view criterion,
                                                 std::span<const std::string> required_domains = {}) {
    const auto idx = eval::metric_index(criterion);
    if (!idx) throw ConfigError("unknown criterion metric '" + std::string(criterion) + "'");
    std::map<std::string, const AggregateRow*> best;
    for (const auto& row : rows) {
        if (!row.key.domain || row.key.domain->empty())
            throw MissingDomainError("best_per_domain needs rows grouped by model and domain");
        const auto& value = row.means[*idx];
        if (!value) continue;
        auto [it, inserted] = best.emplace(*row.key.domain, &row);
        if (inserted) continue;
        const AggregateRow& cur = *it->second;
        const double cv = *cur.means[*idx];
        if (*value > cv || (*value == cv && row.key.model < cur.key.model)) it->second = &row;
    }
    for (const auto& d : required_domains)
        if (!best.count(d)) throw MissingDomainError("no scored row for domain '" + d + "'");

    // Known domains in canonical order, then anything else alphabetically.
    std::vector<std::string> order;
    for (Domain d : kAllDomains)
        if (best.count(std::string(to_string(d)))) order.emplace_back(to_string(d));
    for (const auto& [d, row] : best)
        if (!parse_domain(d)) order.push_back(d);

    std::vector<DomainWinner> out;
    for (const auto& d : order) {
        const AggregateRow& row = *best.at(d);
        out.push_back({d, row.key.model, row.means[0], row.means[1], row.means[5], *row.means[*idx]});
    }
    return out;
}

enum class Format { markdown, csv };

inline constexpr std::size_t kTableColumns = 9;
inline constexpr std::array<std::string_view, kTableColumns> kTableHeaders = {
    "BLEU", "R1", "R2", "RL", "BERT-F1", "Qual.", "Len.", "Sent.", "SentSim"};

inline constexpr std::string_view kMissing = "—";

inline std::string fixed3(std::optional<double> v) {
    if (!v) return std::string(kMissing);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *v);
    return buf;
}

inline std::string domain_label(const std::string& name) {
    const auto d = parse_domain(name);
    return d ? std::string(display_name(*d)) : name;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

// Columns: Model[, Domain], the nine metric columns, N. Values to 3 decimals.
inline std::string render(std::span<const AggregateRow> rows, Format format) {
    bool with_domain = false;
    for (const auto& r : rows) with_domain = with_domain || r.key.domain.has_value();

    std::ostringstream out;
    if (format == Format::markdown) {
        out << "| Model |";
        if (with_domain) out << " Domain |";
        for (auto h : kTableHeaders) out << ' ' << h << " |";
        out << " N |\n|---|";
        if (with_domain) out << "---|";
        for (std::size_t i = 0; i < kTableColumns; ++i) out << "---:|";
        out << "---:|\n";
        for (const auto& r : rows) {
            out << "| " << r.key.model << " |";
            if (with_domain) out << ' ' << domain_label(r.key.domain.value_or(std::string(kMissing))) << " |";
            for (std::size_t i = 0; i < kTableColumns; ++i) out << ' ' << fixed3(r.means[i]) << " |";
            out << ' ' << r.count << " |\n";
        }
    } else {
        out << "model";
        if (with_domain) out << ",domain";
        for (std::size_t i = 0; i < kTableColumns; ++i) out << ',' << kMetricNames[i];
        out << ",n\n";
        for (const auto& r : rows) {
            out << csv_field(r.key.model);
            if (with_domain) out << ',' << csv_field(r.key.domain.value_or(std::string(kMissing)));
            for (std::size_t i = 0; i < kTableColumns; ++i) out << ',' << fixed3(r.means[i]);
            out << ',' << r.count << '\n';
        }
    }
    return out.str();
}

inline std::string render(std::span<const DomainWinner> winners, Format format) {
    std::ostringstream out;
    if (format == Format::markdown) {
        out << "| Domain | Top Model | BLEU | ROUGE-1 | Survey Quality |\n|---|---|---:|---:|---:|\n";
        for (const auto& w : winners)
            out << "| " << domain_label(w.domain) << " | " << w.model << " | " << fixed3(w.bleu) << " | "
                << fixed3(w.rouge1_f) << " | " << fixed3(w.quality) << " |\n";
    } else {
        out << "domain,model,bleu,rouge1_f,quality\n";
        for (const auto& w : winners)
            out << csv_field(w.domain) << ',' << csv_field(w.model) << ',' << fixed3(w.bleu) << ','
                << fixed3(w.rouge1_f) << ',' << fixed3(w.quality) << '\n';
    }
    return out.str();
}

}  // namespace polypersona::report
