#include "queryforge/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace qf {

namespace {

using ordered_json = nlohmann::ordered_json;

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path.string());
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path.string());
    return out;
}

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line_no,
                             const std::string& what) {
    std::ostringstream msg;
    msg << path.string() << ":" << line_no << ": " << what;
    throw ParseError(msg.str());
}

std::string require_string(const ordered_json& obj, const char* key,
                           const std::filesystem::path& path, std::size_t line_no) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string())
        parse_fail(path, line_no, std::string("missing or non-string field \"") + key + "\"");
    return it->get<std::string>();
}

} // namespace

std::vector<Document> load_corpus(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<Document> docs;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ordered_json obj;
        try {
            obj = ordered_json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            parse_fail(path, line_no, std::string("invalid JSON: ") + e.what());
        }
        Document doc;
        doc.id = require_string(obj, "_id", path, line_no);
        doc.text = require_string(obj, "text", path, line_no);
        if (auto it = obj.find("title"); it != obj.end() && it->is_string())
            doc.title = it->get<std::string>();
        if (trim(doc.text).empty())
            parse_fail(path, line_no, "document text is empty");
        if (!seen.insert(doc.id).second)
            throw ValidationError(path.string() + ": duplicate document id \"" + doc.id + "\"");
        docs.push_back(std::move(doc));
    }
    return docs;
}

void save_corpus(const std::filesystem::path& path, const std::vector<Document>& docs) {
    auto out = open_output(path);
    for (const auto& d : docs) {
        ordered_json obj;
        obj["_id"] = d.id;
        obj["title"] = d.title;
        obj["text"] = d.text;
        out << obj.dump() << "\n";
    }
}

std::vector<QueryRecord> load_queries(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<QueryRecord> queries;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ordered_json obj;
        try {
            obj = ordered_json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            parse_fail(path, line_no, std::string("invalid JSON: ") + e.what());
        }
        QueryRecord q;
        q.id = require_string(obj, "_id", path, line_no);
        q.text = require_string(obj, "text", path, line_no);
        if (trim(q.text).empty()) parse_fail(path, line_no, "query text is empty");
        if (!seen.insert(q.id).second)
            throw ValidationError(path.string() + ": duplicate query id \"" + q.id + "\"");
        queries.push_back(std::move(q));
    }
    return queries;
}

void save_queries(const std::filesystem::path& path, const std::vector<QueryRecord>& queries) {
    auto out = open_output(path);
    for (const auto& q : queries) {
        ordered_json obj;
        obj["_id"] = q.id;
        obj["text"] = q.text;
        out << obj.dump() << "\n";
    }
}

std::vector<QrelEntry> load_qrels(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<QrelEntry> qrels;
    std::unordered_set<std::string> seen_pairs;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            auto tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 3)
            parse_fail(path, line_no, "expected 3 tab-separated fields");
        if (!header_seen) {
            header_seen = true;
            if (trim(fields[0]) != "query-id" || trim(fields[1]) != "corpus-id" ||
                trim(fields[2]) != "score")
                parse_fail(path, line_no, "expected header \"query-id corpus-id score\"");
            continue;
        }
        QrelEntry entry;
        entry.query_id = trim(fields[0]);
        entry.doc_id = trim(fields[1]);
        const std::string grade_str = trim(fields[2]);
        try {
            std::size_t consumed = 0;
            entry.grade = std::stoi(grade_str, &consumed);
            if (consumed != grade_str.size()) throw std::invalid_argument(grade_str);
        } catch (const std::exception&) {
            parse_fail(path, line_no, "non-integer grade \"" + grade_str + "\"");
        }
        if (entry.grade < 0)
            throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                  ": negative grade");
        if (!seen_pairs.insert(entry.query_id + "\t" + entry.doc_id).second)
            throw ValidationError(path.string() + ": duplicate qrel pair (" + entry.query_id +
                                  ", " + entry.doc_id + ")");
        qrels.push_back(std::move(entry));
    }
    if (!header_seen) parse_fail(path, 1, "missing qrels header");
    return qrels;
}

void save_qrels(const std::filesystem::path& path, const std::vector<QrelEntry>& qrels) {
    auto out = open_output(path);
    out << "query-id\tcorpus-id\tscore\n";
    for (const auto& e : qrels)
        out << e.query_id << "\t" << e.doc_id << "\t" << e.grade << "\n";
}

std::vector<Document> sample_corpus(const std::vector<Document>& corpus,
                                    std::size_t max_docs, std::uint64_t seed) {
    if (max_docs < 1) throw ValidationError("sample_corpus: max_docs must be >= 1");
    if (corpus.size() <= max_docs) return corpus;

    // Partial Fisher-Yates over indices: exactly max_docs unique picks.
    std::vector<std::size_t> idx(corpus.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::vector<Document> out;
    out.reserve(max_docs);
    for (std::size_t i = 0; i < max_docs; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
        out.push_back(corpus[idx[i]]);
    }
    return out;
}

FewShotSelection select_few_shot(const std::vector<QueryRecord>& queries,
                                 const std::vector<QrelEntry>& qrels,
                                 const std::vector<Document>& corpus,
                                 std::size_t k, std::uint64_t seed) {
    if (k < 1) throw ValidationError("select_few_shot: k must be >= 1");
    if (qrels.empty()) throw ValidationError("select_few_shot: qrels are empty");

    std::unordered_map<std::string, const QueryRecord*> query_by_id;
    for (const auto& q : queries) query_by_id.emplace(q.id, &q);
    std::unordered_map<std::string, const Document*> doc_by_id;
    for (const auto& d : corpus) doc_by_id.emplace(d.id, &d);

    int max_grade = 0;
    for (const auto& e : qrels) max_grade = std::max(max_grade, e.grade);
    if (max_grade <= 0)
        throw ValidationError("select_few_shot: no positively graded qrel pairs");

    std::vector<const QrelEntry*> candidates;
    for (const auto& e : qrels) {
        if (e.grade != max_grade) continue;
        if (!query_by_id.count(e.query_id) || !doc_by_id.count(e.doc_id)) continue;
        candidates.push_back(&e);
    }
    if (candidates.size() < k)
        throw ValidationError("select_few_shot: requested " + std::to_string(k) +
                              " exemplars but only " + std::to_string(candidates.size()) +
                              " max-grade pairs are available");

    std::mt19937_64 rng(seed);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    candidates.resize(k);

    FewShotSelection sel;
    std::unordered_set<std::string> exemplar_docs;
    for (const auto* e : candidates) {
        FewShotExample ex;
        ex.query_text = query_by_id.at(e->query_id)->text;
        ex.document_text = doc_by_id.at(e->doc_id)->text;
        ex.grade = e->grade;
        sel.examples.push_back(std::move(ex));
        if (exemplar_docs.insert(e->doc_id).second)
            sel.exemplar_doc_ids.push_back(e->doc_id);
    }
    for (const auto& d : corpus)
        if (!exemplar_docs.count(d.id)) sel.generation_pool.push_back(d);
    return sel;
}

} // namespace qf
