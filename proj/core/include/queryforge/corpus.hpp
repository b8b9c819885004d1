#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "queryforge/common.hpp"

namespace qf {

struct Document {
    std::string id;
    std::string title; // possibly empty, never used in prompts
    std::string text;
};

struct QueryRecord {
    std::string id;
    std::string text;
};

struct QrelEntry {
    std::string query_id;
    std::string doc_id;
    int grade = 0;
};

/// One annotated exemplar embedded in a few-shot prompt. grade is always
/// the maximum grade present in the split it was drawn from.
struct FewShotExample {
    std::string query_text;
    std::string document_text;
    int grade = 0;
};

// JSON-lines corpus: one object per line with keys _id, title, text.
std::vector<Document> load_corpus(const std::filesystem::path& path);
void save_corpus(const std::filesystem::path& path, const std::vector<Document>& docs);

// JSON-lines queries: _id, text.
std::vector<QueryRecord> load_queries(const std::filesystem::path& path);
void save_queries(const std::filesystem::path& path, const std::vector<QueryRecord>& queries);

// Tab-separated qrels with header "query-id  corpus-id  score".
std::vector<QrelEntry> load_qrels(const std::filesystem::path& path);
void save_qrels(const std::filesystem::path& path, const std::vector<QrelEntry>& qrels);

/// Uniform sample of at most max_docs documents, deterministic per seed.
/// Returns the whole corpus (input order) when it already fits.
std::vector<Document> sample_corpus(const std::vector<Document>& corpus,
                                    std::size_t max_docs, std::uint64_t seed);

struct FewShotSelection {
    std::vector<FewShotExample> examples;
    /// Input corpus minus the exemplar documents, order preserved.
    std::vector<Document> generation_pool;
    std::vector<std::string> exemplar_doc_ids;
};

/// Picks k exemplars among the (query, doc) pairs carrying the split's
/// maximum grade; ties broken by seeded uniform sampling. The selected
/// documents are quarantined out of the generation pool.
FewShotSelection select_few_shot(const std::vector<QueryRecord>& queries,
                                 const std::vector<QrelEntry>& qrels,
                                 const std::vector<Document>& corpus,
                                 std::size_t k, std::uint64_t seed);

} // namespace qf
