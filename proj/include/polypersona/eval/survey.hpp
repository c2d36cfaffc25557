#pragma once

// Survey-structure metrics: length and sentence-count similarity, lexicon
// sentiment, and the composite survey-quality score.
//
// The formulas here are this toolkit's own definitions:
//   length_similarity          min(|c|,|r|) / max(|c|,|r|) over code points
//   sentence_count_similarity  min/max of sentence counts
//   sentiment_score            (P - N) / max(1, P + N) over lexicon hits
//   sentiment_similarity       1 - |s_c - s_r| / 2
//   survey_quality             weighted mean of format, length and
//                              non-degeneracy sub-scores

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "polypersona/errors.hpp"
#include "polypersona/eval/ngram.hpp"
#include "polypersona/question_bank.hpp"
#include "polypersona/text.hpp"

namespace polypersona::eval {

inline double min_max_ratio(double a, double b) {
    if (a == 0.0 && b == 0.0) return 1.0;
    return std::min(a, b) / std::max(a, b);
}

inline double length_similarity(std::string_view candidate, std::string_view reference) {
    return min_max_ratio(static_cast<double>(utf8::length(candidate)), static_cast<double>(utf8::length(reference)));
}

// Words that end in '.' without ending a sentence. Single letters
// (initials, "e.g.", "U.S.") are guarded separately.
inline const std::unordered_set<std::string>& sentence_abbreviations() {
    static const std::unordered_set<std::string> words = {
        "mr",  "mrs", "ms",  "dr",  "prof", "sr",  "jr",   "st",  "vs",  "etc", "inc", "ltd", "co",
        "corp", "jan", "feb", "mar", "apr",  "jun", "jul",  "aug", "sep", "sept", "oct", "nov", "dec",
        "approx", "dept", "est", "fig", "gen", "gov", "lt", "mt",  "rev", "sgt", "capt", "col", "ave",
    };
    return words;
}

// Sentences end at runs of '.', '!', '?' or U+2026. A single '.' does not end
// a sentence after a guarded abbreviation, after a single letter, or between
// digits. Segments without any letter or digit are not counted.
inline std::size_t count_sentences(std::string_view text) {
    std::vector<char32_t> cps;
    cps.reserve(text.size());
    for (std::size_t pos = 0; pos < text.size();) cps.push_back(utf8::next(text, pos));

    const auto is_terminal = [](char32_t c) { return c == '.' || c == '!' || c == '?' || c == 0x2026; };
    const auto is_digit = [](char32_t c) { return c >= '0' && c <= '9'; };
    const auto is_ascii_letter = [](char32_t c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };

    std::size_t count = 0;
    bool has_content = false;
    std::string word;  // ASCII letters immediately before the current position, lowercased
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const char32_t c = cps[i];
        if (!is_terminal(c)) {
            if (!is_word_boundary(c)) has_content = true;
            if (is_ascii_letter(c)) {
                word.push_back(static_cast<char>(to_lower(c)));
            } else {
                word.clear();
            }
            continue;
        }
        std::size_t j = i;
        while (j + 1 < cps.size() && is_terminal(cps[j + 1])) ++j;
        bool boundary = true;
        if (j == i && c == '.') {
            const bool before_digit = i > 0 && is_digit(cps[i - 1]);
            const bool after_digit = i + 1 < cps.size() && is_digit(cps[i + 1]);
            if (before_digit && after_digit) boundary = false;
            if (word.size() == 1 && i + 1 < cps.size()) boundary = false;
            if (sentence_abbreviations().count(word) > 0) boundary = false;
        }
        word.clear();
        i = j;
        if (boundary) {
            if (has_content) ++count;
            has_content = false;
        }
    }
    if (has_content) ++count;
    return count;
}

inline double sentence_count_similarity(std::string_view candidate, std::string_view reference) {
    return min_max_ratio(static_cast<double>(count_sentences(candidate)), static_cast<double>(count_sentences(reference)));
}

// token -> +1 / -1. File format: one `token<TAB>+1` or `token<TAB>-1` per
// line; blank lines and lines starting with '#' are ignored. Tokens must be
// lowercase and unique.
class SentimentLexicon {
public:
    SentimentLexicon() = default;

    void add(std::string token, int polarity) {
        if (token.empty()) throw ParseError("empty lexicon token");
        if (polarity != 1 && polarity != -1) throw ParseError("lexicon polarity must be +1 or -1");
        if (lowercase(token) != token) throw ParseError("lexicon token '" + token + "' is not lowercase");
        if (!polarity_.emplace(std::move(token), polarity).second) throw ParseError("duplicate lexicon token");
    }

    // 0 when the token is not in the lexicon.
    int polarity(const std::string& token) const {
        const auto it = polarity_.find(token);
        return it == polarity_.end() ? 0 : it->second;
    }

    std::size_t size() const { return polarity_.size(); }

private:
    std::unordered_map<std::string, int> polarity_;
};

inline SentimentLexicon parse_lexicon(std::string_view content) {
    SentimentLexicon lex;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= content.size()) {
        std::size_t end = content.find('\n', start);
        if (end == std::string_view::npos) end = content.size();
        const std::string_view line = trim(content.substr(start, end - start));
        start = end + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') {
            if (end == content.size()) break;
            continue;
        }
        const std::size_t tab = line.find('\t');
        if (tab == std::string_view::npos) throw ParseError("expected token<TAB>+1|-1", line_no);
        const std::string token(trim(line.substr(0, tab)));
        const std::string_view pol = trim(line.substr(tab + 1));
        int polarity = 0;
        if (pol == "+1" || pol == "1") polarity = 1;
        else if (pol == "-1") polarity = -1;
        else throw ParseError("polarity must be +1 or -1", line_no);
        try {
            lex.add(token, polarity);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line_no);
        }
        if (end == content.size()) break;
    }
    return lex;
}

inline SentimentLexicon load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open lexicon " + path.string());
    const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return parse_lexicon(content);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

inline double sentiment_score(std::span<const std::string> tokens, const SentimentLexicon& lexicon) {
    double pos = 0.0, neg = 0.0;
    for (const auto& t : tokens) {
        const int p = lexicon.polarity(t);
        if (p > 0) pos += 1.0;
        if (p < 0) neg += 1.0;
    }
    return (pos - neg) / std::max(1.0, pos + neg);
}

inline double sentiment_score(std::string_view text, const SentimentLexicon& lexicon) {
    return sentiment_score(tokenize(text), lexicon);
}

inline double sentiment_similarity(double score_candidate, double score_reference) {
    return std::clamp(1.0 - std::abs(score_candidate - score_reference) / 2.0, 0.0, 1.0);
}

inline double sentiment_similarity(std::string_view candidate, std::string_view reference, const SentimentLexicon& lexicon) {
    return sentiment_similarity(sentiment_score(candidate, lexicon), sentiment_score(reference, lexicon));
}

struct LengthBand {
    std::size_t min_chars;
    std::size_t max_chars;
};

struct QualityConfig {
    // format, length, non-degeneracy
    std::array<double, 3> weights{1.0, 1.0, 1.0};
    // Plausible response length per question type, in code points, indexed
    // in kAllQuestionTypes order (open, likert, yesno, agreement).
    std::array<LengthBand, kQuestionTypeCount> bands{
        LengthBand{150, 800}, LengthBand{20, 300}, LengthBand{20, 300}, LengthBand{20, 300}};
    // distinct-2 at or above this saturates the non-degeneracy sub-score.
    double distinct2_target = 0.5;
    std::size_t open_min_sentences = 2;
    std::size_t open_min_tokens = 15;
};

struct QualityBreakdown {
    double format = 0.0;
    double length = 0.0;
    double non_degeneracy = 0.0;
    double score = 0.0;
};

inline const std::vector<std::string>& yes_no_markers() {
    static const std::vector<std::string> words = {"yes",        "no",         "yeah",      "yep",  "yup",  "nope",
                                                   "nah",        "absolutely", "definitely", "certainly", "never"};
    return words;
}

// Used for likert items that carry no scale of their own.
inline const std::vector<std::string>& default_likert_anchors() {
    static const std::vector<std::string> anchors = {
        "strongly agree", "agree",         "neither agree nor disagree", "neutral",       "disagree",
        "strongly disagree", "very satisfied", "satisfied",             "dissatisfied",  "very dissatisfied",
        "very likely",    "likely",        "unlikely",                  "very unlikely", "always",
        "often",          "sometimes",     "rarely",                    "never",         "excellent",
        "fair",           "poor",          "very important",            "important",     "not important",
    };
    return anchors;
}

namespace detail {

inline bool contains_token_phrase(const Tokens& tokens, const Tokens& phrase) {
    if (phrase.empty() || phrase.size() > tokens.size()) return false;
    return std::search(tokens.begin(), tokens.end(), phrase.begin(), phrase.end()) != tokens.end();
}

}  // namespace detail

// Question-type format check in [0, 1].
//   yesno      1 if the first word affirms/negates, 0.5 if such a word appears later, else 0
//   likert     1 if a scale anchor (or a scale position number) appears
//   agreement  1 if an agree/disagree stem appears
//   open       1 with at least 2 sentences and 15 words
inline double format_compliance(std::string_view response, const SurveyQuestion& question, const QualityConfig& cfg = {}) {
    const Tokens tokens = tokenize(response);
    if (tokens.empty()) return 0.0;
    const auto& markers = yes_no_markers();
    const auto is_marker = [&](const std::string& t) { return std::find(markers.begin(), markers.end(), t) != markers.end(); };
    switch (question.qtype) {
        case QuestionType::yesno:
            if (is_marker(tokens.front())) return 1.0;
            return std::any_of(tokens.begin(), tokens.end(), is_marker) ? 0.5 : 0.0;
        case QuestionType::likert: {
            const auto& anchors = question.scale.empty() ? default_likert_anchors() : question.scale;
            for (const auto& a : anchors)
                if (detail::contains_token_phrase(tokens, tokenize(a))) return 1.0;
            if (!question.scale.empty()) {
                for (std::size_t k = 1; k <= question.scale.size(); ++k)
                    if (std::find(tokens.begin(), tokens.end(), std::to_string(k)) != tokens.end()) return 1.0;
            }
            return 0.0;
        }
        case QuestionType::agreement:
            return std::any_of(tokens.begin(), tokens.end(),
                               [](const std::string& t) { return t.starts_with("agree") || t.starts_with("disagree"); })
                       ? 1.0
                       : 0.0;
        case QuestionType::open:
            return count_sentences(response) >= cfg.open_min_sentences && tokens.size() >= cfg.open_min_tokens ? 1.0 : 0.0;
    }
    return 0.0;
}

// 1 inside the type's band; outside it, length_similarity against the nearer edge.
inline double length_plausibility(std::string_view response, QuestionType qtype, const QualityConfig& cfg = {}) {
    const LengthBand band = cfg.bands[index_of(qtype)];
    const double n = static_cast<double>(utf8::length(response));
    if (n >= static_cast<double>(band.min_chars) && n <= static_cast<double>(band.max_chars)) return 1.0;
    const double edge = n < static_cast<double>(band.min_chars) ? static_cast<double>(band.min_chars)
                                                                 : static_cast<double>(band.max_chars);
    return min_max_ratio(n, edge);
}

inline double non_degeneracy(std::string_view response, const QualityConfig& cfg = {}) {
    const Tokens tokens = tokenize(response);
    const Score d2 = distinct_n(std::span<const std::string>(tokens), 2);
    return std::min(1.0, d2.value / cfg.distinct2_target);
}

inline QualityBreakdown survey_quality_breakdown(std::string_view response, const SurveyQuestion& question,
                                                 const QualityConfig& cfg = {}) {
    QualityBreakdown b;
    b.format = format_compliance(response, question, cfg);
    b.length = length_plausibility(response, question.qtype, cfg);
    b.non_degeneracy = non_degeneracy(response, cfg);
    const double wsum = cfg.weights[0] + cfg.weights[1] + cfg.weights[2];
    if (wsum > 0.0)
        b.score = std::clamp(
            (cfg.weights[0] * b.format + cfg.weights[1] * b.length + cfg.weights[2] * b.non_degeneracy) / wsum, 0.0, 1.0);
    return b;
}

inline double survey_quality(std::string_view response, const SurveyQuestion& question, const QualityConfig& cfg = {}) {
    return survey_quality_breakdown(response, question, cfg).score;
}

}  // namespace polypersona::eval
