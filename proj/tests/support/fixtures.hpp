#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "polypersona/dataset.hpp"
#include "polypersona/persona_store.hpp"
#include "polypersona/question_bank.hpp"

namespace fixtures {

namespace fs = std::filesystem;

inline fs::path test_dir() { return fs::path(POLYPERSONA_TEST_DIR); }
inline fs::path repo_dir() { return test_dir().parent_path(); }
inline fs::path data_dir() { return repo_dir() / "data"; }
inline fs::path golden_dir() { return test_dir() / "golden"; }

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path_ = fs::temp_directory_path() /
                ("polypersona-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

// Every domain gets `per_type` questions of every type.
inline polypersona::QuestionBank uniform_bank(std::size_t per_type) {
    using namespace polypersona;
    QuestionBank bank;
    for (Domain d : kAllDomains) {
        for (QuestionType t : kAllQuestionTypes) {
            for (std::size_t i = 0; i < per_type; ++i) {
                SurveyQuestion q;
                q.id = std::string(to_string(d)) + "-" + std::string(to_string(t)) + "-" + std::to_string(i);
                q.domain = d;
                q.qtype = t;
                q.text = "Question " + std::to_string(i) + " about " + std::string(display_name(d)) + "?";
                if (t == QuestionType::likert) q.scale = {"Strongly disagree", "Disagree", "Neutral", "Agree", "Strongly agree"};
                bank.add(q);
            }
        }
    }
    return bank;
}

inline polypersona::PersonaStore sample_store(std::size_t n) {
    using namespace polypersona;
    static const std::vector<std::string> roles = {"nurse",    "teacher",  "student", "software engineer",
                                                   "painter",  "retired",  "manager", "farmer"};
    std::vector<PersonaCard> cards;
    for (std::size_t i = 0; i < n; ++i) {
        PersonaCard c;
        c.description = "A " + std::to_string(20 + i % 50) + " year old " + roles[i % roles.size()] + " number " +
                        std::to_string(i);
        c.id = persona_id_for(c.description);
        c.category = categorize_text(c.description);
        cards.push_back(c);
    }
    return PersonaStore(cards);
}

// Words for random text generation, some shared with the sentiment lexicon.
inline const std::vector<std::string>& vocabulary() {
    static const std::vector<std::string> words = {
        "the",   "a",     "cat",    "dog",     "sat",   "on",      "mat",   "good", "bad",   "happy",
        "sad",   "work",  "school", "doctor",  "money", "save",    "yes",   "no",   "agree", "disagree",
        "often", "never", "we",     "i",       "think", "because", "time",  "home", "city",  "great",
        "poor",  "very",  "much",   "and",     "but",   "or",      "it",    "is",   "was",   "trust"};
    return words;
}

inline std::vector<std::string> random_tokens(std::mt19937_64& rng, std::size_t max_len, std::size_t vocab = 0) {
    const auto& words = vocabulary();
    const std::size_t v = vocab == 0 ? words.size() : std::min(vocab, words.size());
    const std::size_t len = rng() % (max_len + 1);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < len; ++i) out.push_back(words[rng() % v]);
    return out;
}

// Random sentence-ish text: words, punctuation, occasional non-ASCII.
inline std::string random_text(std::mt19937_64& rng, std::size_t max_words) {
    static const std::vector<std::string> punct = {".", "!", "?", ",", ";", " —", "…"};
    static const std::vector<std::string> extra = {"café", "naïve", "Ünïcode", "日本", "42", "Dr.", "e.g."};
    const auto& words = vocabulary();
    const std::size_t n = rng() % (max_words + 1);
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!out.empty()) out += ' ';
        out += rng() % 12 == 0 ? extra[rng() % extra.size()] : words[rng() % words.size()];
        if (rng() % 6 == 0) out += punct[rng() % punct.size()];
    }
    return out;
}

}  // namespace fixtures
