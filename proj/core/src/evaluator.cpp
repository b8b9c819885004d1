#include "queryforge/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace qf {

Gain gain_from_name(const std::string& name) {
    if (name == "linear") return Gain::linear;
    if (name == "exponential") return Gain::exponential;
    throw ValidationError("unknown NDCG gain \"" + name + "\"");
}

const char* gain_name(Gain g) {
    return g == Gain::linear ? "linear" : "exponential";
}

DenseIndex build_index(const Encoder& encoder, const std::vector<Document>& corpus) {
    if (corpus.empty()) throw ValidationError("build_index: corpus is empty");
    DenseIndex index;
    std::unordered_set<std::string> seen;
    std::vector<std::string> texts;
    texts.reserve(corpus.size());
    for (const auto& d : corpus) {
        if (!seen.insert(d.id).second)
            throw ValidationError("build_index: duplicate document id \"" + d.id + "\"");
        index.doc_ids.push_back(d.id);
        texts.push_back(d.text);
    }
    index.vectors = encoder.encode(texts);
    return index;
}

RankedList search(const DenseIndex& index, std::span<const double> query_vector,
                  std::size_t k) {
    if (k < 1) throw ValidationError("search: k must be >= 1");
    if (query_vector.size() != index.vectors.cols)
        throw ValidationError("search: query dimension " +
                              std::to_string(query_vector.size()) + " != index dimension " +
                              std::to_string(index.vectors.cols));
    RankedList out;
    out.entries.reserve(index.doc_ids.size());
    for (std::size_t i = 0; i < index.doc_ids.size(); ++i)
        out.entries.push_back({index.doc_ids[i], dot(query_vector, index.vectors.row_span(i))});
    auto better = [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    };
    const std::size_t keep = std::min(k, out.entries.size());
    std::partial_sort(out.entries.begin(), out.entries.begin() + keep, out.entries.end(),
                      better);
    out.entries.resize(keep);
    return out;
}

namespace {
double gain_value(int grade, Gain gain) {
    return gain == Gain::linear ? double(grade) : std::exp2(double(grade)) - 1.0;
}
} // namespace

double ndcg_at_k(const RankedList& ranking, const std::vector<QrelEntry>& qrels,
                 std::size_t k, Gain gain) {
    std::unordered_map<std::string, int> grades;
    std::vector<int> all_grades;
    for (const auto& e : qrels) {
        if (e.query_id != ranking.query_id) continue;
        grades[e.doc_id] = e.grade;
        all_grades.push_back(e.grade);
    }
    std::sort(all_grades.rbegin(), all_grades.rend());
    double ideal = 0.0;
    for (std::size_t i = 0; i < std::min(k, all_grades.size()); ++i)
        ideal += gain_value(all_grades[i], gain) / std::log2(double(i) + 2.0);
    if (ideal == 0.0)
        throw ValidationError("ndcg_at_k: undefined ideal DCG for query \"" +
                              ranking.query_id + "\" (no positive-grade qrels)");
    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ranking.entries.size()); ++i) {
        auto it = grades.find(ranking.entries[i].doc_id);
        if (it == grades.end()) continue;
        dcg += gain_value(it->second, gain) / std::log2(double(i) + 2.0);
    }
    return dcg / ideal;
}

EvalReport evaluate_run(const Encoder& encoder, const std::vector<Document>& corpus,
                        const std::vector<QueryRecord>& test_queries,
                        const std::vector<QrelEntry>& qrels, std::size_t k, Gain gain,
                        const std::string& dataset_id) {
    auto index = build_index(encoder, corpus);

    std::unordered_map<std::string, bool> has_positive;
    for (const auto& e : qrels)
        if (e.grade > 0) has_positive[e.query_id] = true;

    std::vector<const QueryRecord*> evaluable;
    for (const auto& q : test_queries) {
        auto it = has_positive.find(q.id);
        if (it != has_positive.end() && it->second) evaluable.push_back(&q);
    }
    if (evaluable.empty())
        throw ValidationError("evaluate_run: zero evaluable queries (none with a "
                              "positive-grade qrel)");

    std::vector<std::string> texts;
    for (const auto* q : evaluable) texts.push_back(q->text);
    Matrix query_vectors = encoder.encode(texts);

    EvalReport report;
    report.dataset_id = dataset_id;
    report.gain = gain_name(gain);
    double sum = 0.0;
    for (std::size_t i = 0; i < evaluable.size(); ++i) {
        RankedList ranking = search(index, query_vectors.row_span(i), k);
        ranking.query_id = evaluable[i]->id;
        const double score = ndcg_at_k(ranking, qrels, k, gain);
        report.per_query_ndcg[evaluable[i]->id] = score;
        sum += score;
    }
    report.mean_ndcg_at_10 = sum / double(evaluable.size());
    return report;
}

void save_report(const std::filesystem::path& path, const EvalReport& report) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write eval report: " + path.string());
    nlohmann::ordered_json obj;
    obj["dataset_id"] = report.dataset_id;
    obj["gain"] = report.gain;
    obj["mean_ndcg_at_10"] = report.mean_ndcg_at_10;
    obj["per_query_ndcg"] = report.per_query_ndcg;
    out << obj.dump(2) << "\n";
}

EvalReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open eval report: " + path.string());
    nlohmann::json obj;
    in >> obj;
    EvalReport report;
    report.dataset_id = obj.value("dataset_id", "");
    report.gain = obj.value("gain", "linear");
    report.mean_ndcg_at_10 = obj.at("mean_ndcg_at_10").get<double>();
    for (auto& [id, v] : obj.at("per_query_ndcg").items())
        report.per_query_ndcg[id] = v.get<double>();
    return report;
}

void save_trec_run(const std::filesystem::path& path,
                   const std::vector<RankedList>& rankings) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write run file: " + path.string());
    out << std::setprecision(10);
    for (const auto& r : rankings)
        for (std::size_t i = 0; i < r.entries.size(); ++i)
            out << r.query_id << "\t" << r.entries[i].doc_id << "\t" << (i + 1) << "\t"
                << r.entries[i].score << "\n";
}

} // namespace qf
