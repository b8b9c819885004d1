#include "queryforge/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace qf {

SamplingPreset default_preset() {
    SamplingPreset p;
    p.name = "default";
    p.temperature = 0.7;
    p.max_tokens = 256;
    p.num_return_sequences = 8;
    return p;
}

SamplingPreset creative_preset() {
    SamplingPreset p;
    p.name = "creative";
    p.temperature = 1.0;
    p.top_p = 0.95;
    p.top_k = 70;
    p.repetition_penalty = 1.2;
    p.presence_penalty = 0.3;
    p.max_tokens = 256;
    p.num_return_sequences = 8;
    return p;
}

SamplingPreset preset_by_name(const std::string& name) {
    if (name == "default") return default_preset();
    if (name == "creative") return creative_preset();
    throw ValidationError("unknown sampling preset \"" + name + "\"");
}

std::string clean_query_text(const std::string& text) {
    std::string q = trim(text);
    for (const char* label : {"query:", "claim:"}) {
        if (starts_with_icase(q, label)) {
            q = trim(q.substr(std::string_view(label).size()));
            break;
        }
    }
    // Symmetric surrounding quotes only.
    while (q.size() >= 2 && (q.front() == '"' || q.front() == '\'') && q.back() == q.front())
        q = trim(q.substr(1, q.size() - 2));
    return q;
}

std::vector<SyntheticPair> clean_queries(const std::vector<SyntheticPair>& pairs) {
    std::vector<SyntheticPair> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        std::string q = clean_query_text(p.query_text);
        if (q.empty()) continue;
        SyntheticPair kept = p;
        kept.query_text = std::move(q);
        out.push_back(std::move(kept));
    }
    return out;
}

EvalSplit split_eval(const std::vector<SyntheticPair>& pairs, double eval_fraction,
                     std::uint64_t seed) {
    if (eval_fraction <= 0.0 || eval_fraction >= 1.0)
        throw ValidationError("split_eval: eval_fraction must be in (0, 1)");

    std::vector<std::string> doc_ids; // first-appearance order
    std::unordered_set<std::string> seen;
    for (const auto& p : pairs)
        if (seen.insert(p.doc_id).second) doc_ids.push_back(p.doc_id);
    if (doc_ids.size() < 2)
        throw ValidationError("split_eval: need at least 2 distinct source documents, got " +
                              std::to_string(doc_ids.size()));

    auto n_eval = static_cast<std::size_t>(std::llround(eval_fraction * double(doc_ids.size())));
    n_eval = std::clamp<std::size_t>(n_eval, 1, doc_ids.size() - 1);

    std::mt19937_64 rng(seed);
    std::shuffle(doc_ids.begin(), doc_ids.end(), rng);
    std::unordered_set<std::string> eval_docs(doc_ids.begin(), doc_ids.begin() + n_eval);

    EvalSplit split;
    split.eval_doc_ids.assign(doc_ids.begin(), doc_ids.begin() + n_eval);
    for (const auto& p : pairs)
        (eval_docs.count(p.doc_id) ? split.eval : split.train).push_back(p);
    return split;
}

void save_pairs(const std::filesystem::path& path, const std::vector<SyntheticPair>& pairs) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write pairs file: " + path.string());
    for (const auto& p : pairs) {
        nlohmann::ordered_json obj;
        obj["doc_id"] = p.doc_id;
        obj["query"] = p.query_text;
        obj["model"] = p.generator_id;
        obj["preset"] = p.preset_name;
        obj["seq"] = p.sequence_index;
        out << obj.dump() << "\n";
    }
}

std::vector<SyntheticPair> load_pairs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open pairs file: " + path.string());
    std::vector<SyntheticPair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": invalid JSON: " + e.what());
        }
        SyntheticPair p;
        p.doc_id = obj.at("doc_id").get<std::string>();
        p.query_text = obj.at("query").get<std::string>();
        p.generator_id = obj.value("model", "");
        p.preset_name = obj.value("preset", "");
        p.sequence_index = obj.at("seq").get<int>();
        pairs.push_back(std::move(p));
    }
    return pairs;
}

} // namespace qf
