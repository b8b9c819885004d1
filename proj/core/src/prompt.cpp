#include "queryforge/prompt.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace qf {

const char* role_name(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "unknown";
}

Role role_from_name(const std::string& name) {
    if (name == "system") return Role::system;
    if (name == "user") return Role::user;
    if (name == "assistant") return Role::assistant;
    throw ValidationError("unknown chat role \"" + name + "\"");
}

PromptTemplate load_template(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open template file: " + path.string());
    nlohmann::json obj;
    try {
        in >> obj;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": invalid template JSON: " + e.what());
    }
    PromptTemplate tmpl;
    tmpl.task_id = obj.value("task_id", "");
    tmpl.system_text = obj.value("system_text", "");
    tmpl.user_prefix = obj.value("user_prefix", "");
    tmpl.assistant_prefix = obj.value("assistant_prefix", "");
    if (trim(tmpl.system_text).empty())
        throw ValidationError(path.string() + ": template system_text is empty");
    return tmpl;
}

void save_template(const std::filesystem::path& path, const PromptTemplate& tmpl) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write template file: " + path.string());
    nlohmann::ordered_json obj;
    obj["task_id"] = tmpl.task_id;
    obj["system_text"] = tmpl.system_text;
    obj["user_prefix"] = tmpl.user_prefix;
    obj["assistant_prefix"] = tmpl.assistant_prefix;
    out << obj.dump(2) << "\n";
}

std::vector<ChatMessage> build_chat(const PromptTemplate& tmpl,
                                    const std::vector<FewShotExample>& examples,
                                    const Document& target) {
    if (trim(target.text).empty())
        throw ValidationError("build_chat: target document \"" + target.id +
                              "\" has empty text");
    std::vector<ChatMessage> messages;
    messages.reserve(2 * examples.size() + 2);
    messages.push_back({Role::system, tmpl.system_text});
    for (const auto& ex : examples) {
        messages.push_back({Role::user, tmpl.user_prefix + ex.document_text});
        messages.push_back({Role::assistant, tmpl.assistant_prefix + ex.query_text});
    }
    messages.push_back({Role::user, tmpl.user_prefix + target.text});
    return messages;
}

std::vector<std::string> validate_template(const PromptTemplate& tmpl) {
    std::vector<std::string> warnings;
    if (tmpl.system_text.empty())
        warnings.push_back("system_text is empty");
    else if (trim(tmpl.system_text).empty())
        warnings.push_back("system_text is whitespace-only");
    if (!tmpl.user_prefix.empty() && trim(tmpl.user_prefix).empty())
        warnings.push_back("user_prefix is whitespace-only");
    if (!tmpl.assistant_prefix.empty() && trim(tmpl.assistant_prefix).empty())
        warnings.push_back("assistant_prefix is whitespace-only");
    // Prefixes are prepended verbatim; "{}" placeholders are a sign the
    // template was written for a substitution engine.
    for (const auto* field : {&tmpl.system_text, &tmpl.user_prefix, &tmpl.assistant_prefix}) {
        if (field->find("{}") != std::string::npos) {
            warnings.push_back("\"{}\" placeholder found; prefixes are concatenated, not substituted");
            break;
        }
    }
    if (tmpl.task_id.empty()) warnings.push_back("task_id is empty");
    return warnings;
}

} // namespace qf
