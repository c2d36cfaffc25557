#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "polypersona/dataset.hpp"
#include "polypersona/errors.hpp"
#include "polypersona/eval/ngram.hpp"
#include "polypersona/eval/semantic.hpp"
#include "polypersona/eval/survey.hpp"

namespace polypersona::eval {

struct MetricVector {
    double bleu = 0.0;
    double rouge1_f = 0.0;
    double rouge2_f = 0.0;
    double rougeL_f = 0.0;
    double semantic_f1 = 0.0;
    double quality = 0.0;
    double length_sim = 0.0;
    double sentence_count_sim = 0.0;
    double sentiment_sim = 0.0;
    double distinct1 = 0.0;
    double distinct2 = 0.0;

    friend bool operator==(const MetricVector&, const MetricVector&) = default;
};

inline constexpr std::size_t kMetricCount = 11;

// JSON keys, in output order. The first nine are the report columns.
inline constexpr std::array<std::string_view, kMetricCount> kMetricNames = {
    "bleu",       "rouge1_f",           "rouge2_f",      "rougeL_f",  "semantic_f1", "quality",
    "length_sim", "sentence_count_sim", "sentiment_sim", "distinct1", "distinct2",
};

inline std::array<double, kMetricCount> as_array(const MetricVector& m) {
    return {m.bleu,       m.rouge1_f,           m.rouge2_f,      m.rougeL_f,  m.semantic_f1, m.quality,
            m.length_sim, m.sentence_count_sim, m.sentiment_sim, m.distinct1, m.distinct2};
}

inline std::optional<std::size_t> metric_index(std::string_view name) {
    for (std::size_t i = 0; i < kMetricCount; ++i)
        if (kMetricNames[i] == name) return i;
    return std::nullopt;
}

inline nlohmann::ordered_json to_json(const MetricVector& m) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    const auto values = as_array(m);
    for (std::size_t i = 0; i < kMetricCount; ++i) j[std::string(kMetricNames[i])] = values[i];
    return j;
}

struct EvalContext {
    const EmbeddingProvider* embeddings = nullptr;
    const SentimentLexicon* lexicon = nullptr;
    const IdfTable* idf = nullptr;
    QualityConfig quality;
};

struct Evaluation {
    MetricVector metrics;
    std::vector<std::string> flags;
};

// The survey question a record was built from, as far as the record itself
// tells: type and domain from meta, no scale.
inline SurveyQuestion question_from_meta(const ChatRecord& record) {
    return {record.meta.question_id, record.meta.domain, record.meta.qtype, record.user(), {}};
}

// Every metric for one generated/reference pair. Pure function of its inputs.
// `question` supplies likert anchors for the quality score when known.
inline Evaluation evaluate_pair(const ChatRecord& record, std::string_view generated, std::string_view reference,
                                const EvalContext& ctx, const SurveyQuestion* question = nullptr) {
    if (reference.empty()) throw EmptyInputError("record " + record.id + ": reference response is empty");
    if (ctx.embeddings == nullptr) throw ProviderError("no embedding provider configured");
    if (ctx.lexicon == nullptr) throw ProviderError("no sentiment lexicon configured");

    Evaluation out;
    const Tokens cand = tokenize(generated);
    const Tokens ref = tokenize(reference);
    auto& m = out.metrics;

    const Score b = bleu(cand, ref);
    m.bleu = b.value;
    if (b.degenerate) out.flags.emplace_back("bleu_degenerate");

    const Prf r1 = rouge_n(cand, ref, 1);
    const Prf r2 = rouge_n(cand, ref, 2);
    const Prf rl = rouge_l(cand, ref);
    m.rouge1_f = r1.f1;
    m.rouge2_f = r2.f1;
    m.rougeL_f = rl.f1;
    if (r2.degenerate) out.flags.emplace_back("rouge2_degenerate");

    const Prf sem = semantic_f1(cand, ref, *ctx.embeddings, ctx.idf);
    m.semantic_f1 = sem.f1;
    if (sem.degenerate) out.flags.emplace_back("semantic_degenerate");

    const SurveyQuestion fallback = question_from_meta(record);
    m.quality = survey_quality(generated, question ? *question : fallback, ctx.quality);
    m.length_sim = length_similarity(generated, reference);
    m.sentence_count_sim = sentence_count_similarity(generated, reference);
    m.sentiment_sim = sentiment_similarity(sentiment_score(cand, *ctx.lexicon), sentiment_score(ref, *ctx.lexicon));

    const Score d1 = distinct_n(std::span<const std::string>(cand), 1);
    const Score d2 = distinct_n(std::span<const std::string>(cand), 2);
    m.distinct1 = d1.value;
    m.distinct2 = d2.value;
    if (d2.degenerate) out.flags.emplace_back("distinct_degenerate");
    if (cand.empty()) out.flags.emplace_back("empty_generation");
    return out;
}

}  // namespace polypersona::eval
