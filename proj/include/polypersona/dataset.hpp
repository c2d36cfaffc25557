#pragma once

// ChatML records: construction, rendering to model-ready text, and JSONL I/O.
//
// Dataset line:
//   {"id": ..., "messages": [{"role": "system", "content": ...},
//                            {"role": "user", "content": ...},
//                            {"role": "assistant", "content": ...}],
//    "meta": {"persona_id": ..., "domain": ..., "question_id": ..., "question_type": ...}}

#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "polypersona/errors.hpp"
#include "polypersona/hash.hpp"
#include "polypersona/persona_store.hpp"
#include "polypersona/question_bank.hpp"
#include "polypersona/text.hpp"

namespace polypersona {

enum class Role { system, user, assistant };

inline std::string_view to_string(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "system";
}

struct Message {
    Role role = Role::system;
    std::string content;

    friend bool operator==(const Message&, const Message&) = default;
};

struct RecordMeta {
    std::string persona_id;
    Domain domain = Domain::demographics;
    std::string question_id;
    QuestionType qtype = QuestionType::open;

    friend bool operator==(const RecordMeta&, const RecordMeta&) = default;
};

struct ChatRecord {
    std::string id;
    std::array<Message, 3> messages{Message{Role::system, {}}, Message{Role::user, {}}, Message{Role::assistant, {}}};
    RecordMeta meta;

    const std::string& system() const { return messages[0].content; }
    const std::string& user() const { return messages[1].content; }
    const std::string& assistant() const { return messages[2].content; }

    // Assistant turn not yet filled in.
    bool pending_generation() const { return messages[2].content.empty(); }

    friend bool operator==(const ChatRecord&, const ChatRecord&) = default;
};

inline constexpr std::string_view kSystemInstruction =
    "You are a survey respondent. Answer the survey question in character as the persona described, "
    "staying consistent with their background, values, and experiences.";

// "You are answering a survey.\nPersona: ...\nDomain: ...\nQuestion (qtype): ..."
// followed by "\nScale: a | b | c" for likert items.
inline std::string compose_user_message(const PersonaCard& persona, const SurveyQuestion& question) {
    std::string out = "You are answering a survey.\nPersona: ";
    out += persona.description;
    out += "\nDomain: ";
    out += display_name(question.domain);
    out += "\nQuestion (";
    out += to_string(question.qtype);
    out += "): ";
    out += question.text;
    if (!question.scale.empty()) {
        out += "\nScale: ";
        out += join(question.scale, " | ");
    }
    return out;
}

inline std::string record_id_for(std::string_view persona_id, std::string_view question_id, std::size_t sequence) {
    return stable_id("r-", persona_id, question_id, std::to_string(sequence));
}

inline ChatRecord build_record(const PersonaCard& persona, const SurveyQuestion& question,
                               std::optional<std::string> response = std::nullopt, std::size_t sequence = 0) {
    if (trim(persona.description).empty()) throw SchemaError("persona '" + persona.id + "' has an empty description");
    if (question.text.empty()) throw SchemaError("question '" + question.id + "' has empty text");
    ChatRecord r;
    r.id = record_id_for(persona.id, question.id, sequence);
    r.messages[0].content = std::string(kSystemInstruction);
    r.messages[1].content = compose_user_message(persona, question);
    r.messages[2].content = response.value_or(std::string{});
    r.meta = {persona.id, question.domain, question.id, question.qtype};
    return r;
}

// Structural checks on a record read from disk.
inline std::vector<std::string> validate_record(const ChatRecord& r) {
    std::vector<std::string> problems;
    if (r.id.empty()) problems.push_back("empty id");
    const std::array<Role, 3> order = {Role::system, Role::user, Role::assistant};
    for (std::size_t i = 0; i < 3; ++i) {
        if (r.messages[i].role != order[i]) problems.push_back("message " + std::to_string(i) + " has the wrong role");
    }
    if (r.system().empty()) problems.push_back("empty system message");
    if (r.user().empty()) problems.push_back("empty user message");
    if (r.meta.persona_id.empty()) problems.push_back("empty meta.persona_id");
    if (r.meta.question_id.empty()) problems.push_back("empty meta.question_id");
    return problems;
}

enum class ChatTemplate { native_passthrough, fallback };

struct RenderedPair {
    std::string input_text;  // prompt side: system and user turns
    std::string full_text;   // input_text followed by the assistant turn

    friend bool operator==(const RenderedPair&, const RenderedPair&) = default;
};

// fallback:
//   <|system|>\n{system}</s>\n<|user|>\n{user}</s>\n<|assistant|>\n{assistant}</s>
// native_passthrough is a neutral role-tagged form for endpoints that apply
// their own chat template server-side.
inline RenderedPair render_chatml(const ChatRecord& r, ChatTemplate tmpl) {
    RenderedPair out;
    if (tmpl == ChatTemplate::fallback) {
        out.input_text = "<|system|>\n" + r.system() + "</s>\n<|user|>\n" + r.user() + "</s>\n";
        out.full_text = out.input_text + "<|assistant|>\n" + r.assistant() + "</s>";
    } else {
        out.input_text = "[system]\n" + r.system() + "\n[user]\n" + r.user() + "\n";
        out.full_text = out.input_text + "[assistant]\n" + r.assistant() + "\n";
    }
    return out;
}

inline nlohmann::ordered_json to_json(const ChatRecord& r) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["messages"] = nlohmann::ordered_json::array();
    for (const auto& m : r.messages) j["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
    j["meta"] = {{"persona_id", r.meta.persona_id},
                 {"domain", to_string(r.meta.domain)},
                 {"question_id", r.meta.question_id},
                 {"question_type", to_string(r.meta.qtype)}};
    return j;
}

inline nlohmann::ordered_json to_json(const RenderedPair& p) {
    return {{"input_text", p.input_text}, {"full_text", p.full_text}};
}

inline ChatRecord record_from_json(const nlohmann::json& j) {
    const auto str = [](const nlohmann::json& obj, const char* key) -> std::string {
        if (!obj.is_object() || !obj.contains(key) || !obj[key].is_string())
            throw SchemaError(std::string("missing string field '") + key + "'");
        return obj[key].get<std::string>();
    };
    ChatRecord r;
    r.id = str(j, "id");
    if (!j.contains("messages") || !j["messages"].is_array() || j["messages"].size() != 3)
        throw SchemaError("'messages' must hold exactly three entries");
    const std::array<Role, 3> order = {Role::system, Role::user, Role::assistant};
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& m = j["messages"][i];
        if (str(m, "role") != to_string(order[i]))
            throw SchemaError("message " + std::to_string(i) + " must have role " + std::string(to_string(order[i])));
        r.messages[i] = {order[i], str(m, "content")};
    }
    if (!j.contains("meta")) throw SchemaError("missing 'meta'");
    const auto& meta = j["meta"];
    r.meta.persona_id = str(meta, "persona_id");
    r.meta.question_id = str(meta, "question_id");
    const auto domain = parse_domain(str(meta, "domain"));
    if (!domain) throw SchemaError("unknown domain '" + str(meta, "domain") + "'");
    r.meta.domain = *domain;
    const auto qtype = parse_question_type(str(meta, "question_type"));
    if (!qtype) throw SchemaError("unknown question_type '" + str(meta, "question_type") + "'");
    r.meta.qtype = *qtype;
    return r;
}

// One JSON document per line, UTF-8, trailing newline after every line.
template <class T>
void write_jsonl(std::span<const T> items, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& item : items) out << to_json(item).dump() << '\n';
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

inline void write_jsonl(const std::vector<ChatRecord>& records, const std::filesystem::path& path) {
    write_jsonl(std::span<const ChatRecord>(records), path);
}

// Calls `fn(json, line_number)` for every non-blank line; JSON syntax errors
// become ParseError with the line number.
template <class Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path.string() + ": " + e.what(), line_no);
        }
        fn(j, line_no);
    }
}

inline std::vector<ChatRecord> read_jsonl(const std::filesystem::path& path) {
    std::vector<ChatRecord> records;
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t line_no) {
        try {
            records.push_back(record_from_json(j));
        } catch (const SchemaError& e) {
            throw ParseError(path.string() + ": " + e.what(), line_no);
        }
    });
    return records;
}

}  // namespace polypersona
