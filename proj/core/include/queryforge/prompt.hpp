#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "queryforge/corpus.hpp"

namespace qf {

enum class Role { system, user, assistant };

const char* role_name(Role r);
Role role_from_name(const std::string& name);

struct ChatMessage {
    Role role;
    std::string content;
};

/// Task-specific prompt skeleton. user_prefix is prepended verbatim to both
/// exemplar and target document turns (e.g. "Abstract: ").
struct PromptTemplate {
    std::string task_id;
    std::string system_text;
    std::string user_prefix;
    std::string assistant_prefix;
};

PromptTemplate load_template(const std::filesystem::path& path);
void save_template(const std::filesystem::path& path, const PromptTemplate& tmpl);

/// Assembles [system, (user, assistant) x examples, user(target)].
/// Document titles never appear; only .text is injected.
std::vector<ChatMessage> build_chat(const PromptTemplate& tmpl,
                                    const std::vector<FewShotExample>& examples,
                                    const Document& target);

/// Lint-style checks; returns human-readable warnings, never throws.
std::vector<std::string> validate_template(const PromptTemplate& tmpl);

} // namespace qf
