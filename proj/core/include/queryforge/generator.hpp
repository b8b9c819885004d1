#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "queryforge/corpus.hpp"
#include "queryforge/endpoint.hpp"
#include "queryforge/prompt.hpp"
#include "queryforge/synthetic.hpp"

namespace qf {

/// Resume state for one (dataset, generator, preset) run. Persisted as a
/// JSON file, rewritten atomically via rename after every document.
struct GenerationManifest {
    std::string dataset_id;
    std::string generator_id;
    std::string preset_name;
    std::set<std::string> completed_doc_ids;
    std::map<std::string, std::string> failed_doc_ids; // doc id -> error
    TokenUsage usage;

    static GenerationManifest load(const std::filesystem::path& path);
    void save_atomic(const std::filesystem::path& path) const;
};

struct GenerationOptions {
    int concurrency_limit = 4;
    RetryPolicy retry;
};

struct GenerationResult {
    std::vector<SyntheticPair> pairs; // sorted by (doc_id, sequence_index)
    GenerationManifest manifest;
};

/// Drives the endpoint over every pending document in the pool, emitting
/// num_return_sequences cleaned pairs per document. Per-document failures
/// land in the manifest and never abort the run. Completed documents are
/// skipped on resume; the final pairs vector (and the file written from it)
/// is deterministic regardless of interrupt/resume history.
///
/// partial_path accumulates per-document records as they finish; the final
/// sorted pairs file is the caller's to write (save_pairs).
GenerationResult run_generation(const std::vector<Document>& pool,
                                const PromptTemplate& tmpl,
                                const std::vector<FewShotExample>& examples,
                                const SamplingPreset& preset,
                                ChatEndpoint& endpoint,
                                GenerationManifest manifest,
                                const GenerationOptions& options,
                                const std::filesystem::path& manifest_path,
                                const std::filesystem::path& partial_path);

} // namespace qf
