#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <string>

#include "polypersona/eval/evaluate.hpp"
#include "support/fixtures.hpp"

using namespace polypersona;
using namespace polypersona::eval;
using Catch::Approx;

namespace {

struct Env {
    HashedTrigramProvider provider;
    SentimentLexicon lexicon = load_lexicon(fixtures::data_dir() / "sentiment_lexicon.tsv");
    EvalContext ctx() const { return {&provider, &lexicon, nullptr, {}}; }
};

ChatRecord record(QuestionType t) {
    const PersonaCard p{"p", "A teacher", PersonaCategory::educator, {}};
    SurveyQuestion q{"q", Domain::education, t, "How do you feel about homework?", {}};
    if (t == QuestionType::likert) q.scale = {"Bad", "Okay", "Good"};
    return build_record(p, q);
}

}  // namespace

TEST_CASE("evaluate_pair: generated equals reference", "[evaluate]") {
    const Env env;
    const std::string text = "I think homework helps a little. It also takes time away from family.";
    const auto m = evaluate_pair(record(QuestionType::open), text, text, env.ctx()).metrics;
    CHECK(m.bleu == Approx(1.0).margin(1e-12));
    CHECK(m.rouge1_f == 1.0);
    CHECK(m.rouge2_f == 1.0);
    CHECK(m.rougeL_f == 1.0);
    CHECK(m.semantic_f1 == Approx(1.0).margin(1e-12));
    CHECK(m.length_sim == 1.0);
    CHECK(m.sentence_count_sim == 1.0);
    CHECK(m.sentiment_sim == 1.0);
}

TEST_CASE("evaluate_pair: empty generation", "[evaluate]") {
    const Env env;
    const auto e = evaluate_pair(record(QuestionType::yesno), "", "Yes, it helps.", env.ctx());
    CHECK(e.metrics.bleu == 0.0);
    CHECK(e.metrics.rouge1_f == 0.0);
    CHECK(e.metrics.rouge2_f == 0.0);
    CHECK(e.metrics.rougeL_f == 0.0);
    CHECK(e.metrics.length_sim == 0.0);
    CHECK(std::find(e.flags.begin(), e.flags.end(), "empty_generation") != e.flags.end());
}

TEST_CASE("evaluate_pair: preconditions", "[evaluate]") {
    const Env env;
    CHECK_THROWS_AS(evaluate_pair(record(QuestionType::open), "x", "", env.ctx()), EmptyInputError);
    EvalContext none;
    CHECK_THROWS_AS(evaluate_pair(record(QuestionType::open), "x", "y", none), ProviderError);
}

TEST_CASE("metric vector stays in [0,1] with identity and symmetry over 1000 pairs", "[evaluate][property]") {
    const Env env;
    std::mt19937_64 rng(1000);
    for (int i = 0; i < 1000; ++i) {
        const auto t = kAllQuestionTypes[rng() % kQuestionTypeCount];
        const auto a = fixtures::random_text(rng, 40);
        auto b = fixtures::random_text(rng, 40);
        if (b.empty()) b = "fallback reference";
        const auto rec = record(t);
        for (double v : as_array(evaluate_pair(rec, a, b, env.ctx()).metrics)) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        CHECK(sentiment_score(std::string_view(a), env.lexicon) >= -1.0);
        CHECK(sentiment_score(std::string_view(a), env.lexicon) <= 1.0);

        CHECK(length_similarity(a, b) == length_similarity(b, a));
        CHECK(sentence_count_similarity(a, b) == sentence_count_similarity(b, a));
        CHECK(sentiment_similarity(a, b, env.lexicon) == sentiment_similarity(b, a, env.lexicon));
        CHECK(semantic_f1(a, b, env.provider).f1 == Approx(semantic_f1(b, a, env.provider).f1).margin(1e-12));

        if (!tokenize(b).empty()) {
            const auto self = evaluate_pair(rec, b, b, env.ctx()).metrics;
            CHECK(self.bleu == Approx(1.0).margin(1e-12));
            CHECK(self.rouge1_f == 1.0);
            CHECK(self.rouge2_f == 1.0);
            CHECK(self.rougeL_f == 1.0);
            CHECK(self.semantic_f1 == Approx(1.0).margin(1e-12));
            CHECK(self.length_sim == 1.0);
            CHECK(self.sentence_count_sim == 1.0);
            CHECK(self.sentiment_sim == 1.0);
        }
    }
}

TEST_CASE("metric vector JSON uses the fixed key order", "[evaluate]") {
    MetricVector m;
    m.bleu = 0.5;
    const auto j = to_json(m);
    std::size_t i = 0;
    for (const auto& [k, v] : j.items()) CHECK(k == kMetricNames[i++]);
    CHECK(i == kMetricCount);
    CHECK(metric_index("quality") == 5u);
    CHECK_FALSE(metric_index("accuracy").has_value());
}
