#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polypersona/question_bank.hpp"
#include "support/fixtures.hpp"

using namespace polypersona;
using nlohmann::json;

namespace {

json bank_json(std::size_t per_type) { return json::parse(to_json(fixtures::uniform_bank(per_type)).dump()); }

std::array<std::size_t, kQuestionTypeCount> type_counts(const std::vector<SurveyQuestion>& qs) {
    std::array<std::size_t, kQuestionTypeCount> c{};
    for (const auto& q : qs) ++c[index_of(q.qtype)];
    return c;
}

}  // namespace

TEST_CASE("load: 10 domains x {2,2,2,2} gives 80 questions", "[bank]") {
    fixtures::TempDir dir("bank");
    fixtures::spit(dir / "bank.json", bank_json(2).dump(2));
    const auto bank = load_question_bank(dir / "bank.json");
    CHECK(bank.size() == 80);
    for (Domain d : kAllDomains) CHECK(bank.size(d) == 8);
}

TEST_CASE("load: likert without a scale is a SchemaError", "[bank]") {
    auto j = bank_json(1);
    j["healthcare"]["likert"][0].erase("scale");
    CHECK_THROWS_AS(parse_question_bank(j), SchemaError);
}

TEST_CASE("load: structural failures", "[bank]") {
    SECTION("missing domain node") {
        auto j = bank_json(1);
        j.erase("finance");
        CHECK_THROWS_AS(parse_question_bank(j), SchemaError);
    }
    SECTION("unknown question type") {
        auto j = bank_json(1);
        j["finance"]["multiple_choice"] = json::array();
        CHECK_THROWS_AS(parse_question_bank(j), SchemaError);
    }
    SECTION("duplicate id across domains") {
        auto j = bank_json(1);
        j["finance"]["open"][0]["id"] = j["healthcare"]["open"][0]["id"];
        CHECK_THROWS_AS(parse_question_bank(j), DuplicateIdError);
    }
    SECTION("malformed file") {
        fixtures::TempDir dir("bank");
        fixtures::spit(dir / "bad.json", "{\"demographics\": [");
        CHECK_THROWS_AS(load_question_bank(dir / "bad.json"), ParseError);
    }
}

TEST_CASE("shipped default bank: 82 questions, open 35 / likert 26 / yesno 15 / agreement 6", "[bank]") {
    const auto bank = load_question_bank(fixtures::data_dir() / "default_bank.json");
    CHECK(bank.size() == 82);
    const auto counts = type_counts(bank.all());
    CHECK(counts == std::array<std::size_t, 4>{35, 26, 15, 6});
    // The same counts follow from apportioning 82 by the default ratios.
    const auto expected = allocate_types(82, TypeRatios::defaults());
    CHECK(counts == expected);
    for (Domain d : kAllDomains) CHECK(bank.size(d) > 0);
    CHECK(validate_bank(bank).empty());
}

TEST_CASE("shipped default bank: type mix within 0.01 of the default ratios", "[bank]") {
    const auto bank = load_question_bank(fixtures::data_dir() / "default_bank.json");
    const auto all = bank.all();
    const auto mix = type_distribution(all);
    const auto def = TypeRatios::defaults();
    for (QuestionType t : kAllQuestionTypes) CHECK(std::abs(mix[t] - def[t]) <= 0.01);
}

TEST_CASE("validate_bank examples", "[bank]") {
    SECTION("valid bank") { CHECK(validate_bank(fixtures::uniform_bank(2)).empty()); }
    SECTION("duplicate id across two domains") {
        auto bank = fixtures::uniform_bank(1);
        auto q = bank.pool(Domain::finance, QuestionType::open).front();
        q.domain = Domain::healthcare;
        bank.add(q);
        const auto v = validate_bank(bank);
        REQUIRE(v.size() == 1);
        CHECK(v[0].kind == BankViolation::Kind::duplicate_id);
        CHECK(v[0].id == q.id);
    }
    SECTION("empty agreement list is allowed") {
        auto bank = fixtures::uniform_bank(1);
        bank.pool(Domain::lifestyle, QuestionType::agreement).clear();
        CHECK(validate_bank(bank).empty());
    }
    SECTION("each violation names its field") {
        QuestionBank bank;
        bank.add({"", Domain::finance, QuestionType::likert, "", {}});
        bank.add({"x", Domain::finance, QuestionType::open, "text", {"a", "b"}});
        const auto v = validate_bank(bank);
        std::map<std::string, int> fields;
        for (const auto& e : v) ++fields[e.field];
        CHECK(fields["id"] == 1);
        CHECK(fields["text"] == 1);
        CHECK(fields["scale"] == 2);
    }
}

TEST_CASE("TypeRatios rejects bad fractions", "[bank]") {
    CHECK_THROWS_AS(TypeRatios({0.5, 0.5, 0.5, 0.0}), ConfigError);
    CHECK_THROWS_AS(TypeRatios({-0.1, 0.6, 0.5, 0.0}), ConfigError);
    CHECK_NOTHROW(TypeRatios({0.25, 0.25, 0.25, 0.25}));
    CHECK(ratios_from_json(json{{"open", 0.5}, {"likert", 0.5}}) == TypeRatios({0.5, 0.5, 0.0, 0.0}));
    CHECK_THROWS_AS(ratios_from_json(json{{"essay", 1.0}}), ConfigError);
}

TEST_CASE("sample_questions: allocation for count=10 under default ratios", "[bank]") {
    CHECK(allocate_types(10, TypeRatios::defaults()) == TypeAllocation{4, 3, 2, 1});
    const auto bank = fixtures::uniform_bank(5);
    const auto qs = sample_questions(bank, Domain::education, 10, TypeRatios::defaults(), 1);
    CHECK(qs.size() == 10);
    CHECK(type_counts(qs) == std::array<std::size_t, 4>{4, 3, 2, 1});
    for (const auto& q : qs) CHECK(q.domain == Domain::education);
}

TEST_CASE("sample_questions: count=0 gives nothing", "[bank]") {
    CHECK(sample_questions(fixtures::uniform_bank(1), Domain::finance, 0, TypeRatios::defaults(), 3).empty());
}

TEST_CASE("sample_questions: same seed, same sequence", "[bank]") {
    const auto bank = fixtures::uniform_bank(6);
    const auto a = sample_questions(bank, Domain::technology, 17, TypeRatios::defaults(), 123);
    const auto b = sample_questions(bank, Domain::technology, 17, TypeRatios::defaults(), 123);
    const auto c = sample_questions(bank, Domain::technology, 17, TypeRatios::defaults(), 124);
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("sample_questions: without replacement until the pool runs out", "[bank]") {
    const auto bank = fixtures::uniform_bank(3);
    const TypeRatios only_open({1.0, 0.0, 0.0, 0.0});
    const auto three = sample_questions(bank, Domain::finance, 3, only_open, 5);
    std::set<std::string> ids;
    for (const auto& q : three) ids.insert(q.id);
    CHECK(ids.size() == 3);
    // Past exhaustion, draws repeat but every pool member has appeared.
    const auto many = sample_questions(bank, Domain::finance, 20, only_open, 5);
    ids.clear();
    for (const auto& q : many) ids.insert(q.id);
    CHECK(ids.size() == 3);
    CHECK(many.size() == 20);
}

TEST_CASE("sample_questions: empty pool with nonzero allocation", "[bank]") {
    auto bank = fixtures::uniform_bank(2);
    bank.pool(Domain::finance, QuestionType::agreement).clear();
    CHECK_THROWS_AS(sample_questions(bank, Domain::finance, 100, TypeRatios::defaults(), 1), EmptyPoolError);
    // Allocation to agreement is zero for count=2, so no error.
    CHECK_NOTHROW(sample_questions(bank, Domain::finance, 2, TypeRatios::defaults(), 1));
}

TEST_CASE("apportionment is exact for every count", "[bank][property]") {
    const std::vector<TypeRatios> mixes = {TypeRatios::defaults(), TypeRatios({0.25, 0.25, 0.25, 0.25}),
                                           TypeRatios({1.0, 0.0, 0.0, 0.0}), TypeRatios({0.1, 0.2, 0.3, 0.4})};
    for (const auto& r : mixes) {
        for (std::size_t n = 0; n <= 500; ++n) {
            const auto a = allocate_types(n, r);
            CHECK(a[0] + a[1] + a[2] + a[3] == n);
        }
    }
}

TEST_CASE("type_distribution examples", "[bank]") {
    const SurveyQuestion open{"a", Domain::finance, QuestionType::open, "t", {}};
    const SurveyQuestion likert{"b", Domain::finance, QuestionType::likert, "t", {"x", "y"}};
    const SurveyQuestion yesno{"c", Domain::finance, QuestionType::yesno, "t", {}};
    const std::vector<SurveyQuestion> four{open, open, likert, yesno};
    CHECK(type_distribution(four) == TypeRatios({0.5, 0.25, 0.25, 0.0}));
    const std::vector<SurveyQuestion> one{yesno};
    CHECK(type_distribution(one)[QuestionType::yesno] == 1.0);
    CHECK_THROWS_AS(type_distribution(std::vector<SurveyQuestion>{}), EmptyInputError);
}

TEST_CASE("draw_question follows the categorical ratios", "[bank][property]") {
    const auto bank = fixtures::uniform_bank(2);
    const auto def = TypeRatios::defaults();
    std::array<std::size_t, 4> counts{};
    Rng rng(77);
    const int n = 20000;
    for (int i = 0; i < n; ++i) ++counts[index_of(draw_question(bank, Domain::healthcare, def, rng).qtype)];
    for (QuestionType t : kAllQuestionTypes)
        CHECK(std::abs(static_cast<double>(counts[index_of(t)]) / n - def[t]) <= 0.01);
}

TEST_CASE("bank JSON round-trip", "[bank]") {
    const auto bank = load_question_bank(fixtures::data_dir() / "default_bank.json");
    const auto again = parse_question_bank(json::parse(to_json(bank).dump()));
    CHECK(again.all() == bank.all());
    CHECK(again.provenance == bank.provenance);
}
