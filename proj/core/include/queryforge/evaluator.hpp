#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "queryforge/corpus.hpp"
#include "queryforge/encoder.hpp"

namespace qf {

struct DenseIndex {
    std::vector<std::string> doc_ids;
    Matrix vectors; // N x dim, same order as doc_ids
};

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;
};

struct RankedList {
    std::string query_id;
    std::vector<ScoredDoc> entries; // score descending, doc_id ascending on ties
};

enum class Gain { linear, exponential };

Gain gain_from_name(const std::string& name);
const char* gain_name(Gain g);

struct EvalReport {
    std::string dataset_id;
    std::string gain = "linear";
    std::map<std::string, double> per_query_ndcg;
    double mean_ndcg_at_10 = 0.0;
};

DenseIndex build_index(const Encoder& encoder, const std::vector<Document>& corpus);

/// Exhaustive exact inner-product scan; ties broken by lexicographic doc id.
RankedList search(const DenseIndex& index, std::span<const double> query_vector,
                  std::size_t k);

/// DCG_k = sum g(rel_i)/log2(i+1), g(r) = r (linear) or 2^r - 1
/// (exponential); normalized by the ideal DCG from the query's qrels.
double ndcg_at_k(const RankedList& ranking, const std::vector<QrelEntry>& qrels,
                 std::size_t k, Gain gain = Gain::linear);

/// Encodes corpus + queries, retrieves top-k, scores NDCG@k per query.
/// Queries with no positive-grade qrel row are skipped.
EvalReport evaluate_run(const Encoder& encoder, const std::vector<Document>& corpus,
                        const std::vector<QueryRecord>& test_queries,
                        const std::vector<QrelEntry>& qrels, std::size_t k = 10,
                        Gain gain = Gain::linear,
                        const std::string& dataset_id = "");

void save_report(const std::filesystem::path& path, const EvalReport& report);
EvalReport load_report(const std::filesystem::path& path);

/// trec-style run file: "query_id doc_id rank score" per line, tab-separated.
void save_trec_run(const std::filesystem::path& path,
                   const std::vector<RankedList>& rankings);

} // namespace qf
