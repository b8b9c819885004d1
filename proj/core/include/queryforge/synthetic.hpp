#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "queryforge/common.hpp"

namespace qf {

/// Decoding parameters for one generation run. Unset optionals mean "use
/// the endpoint's default" and are omitted from the wire request.
struct SamplingPreset {
    std::string name;
    std::optional<double> temperature;
    std::optional<double> top_p;
    std::optional<int> top_k;
    std::optional<double> repetition_penalty;
    std::optional<double> presence_penalty;
    int max_tokens = 256;
    int num_return_sequences = 8;
};

/// temperature 0.7, endpoint defaults elsewhere.
SamplingPreset default_preset();
/// temperature 1.0, top_p 0.95, top_k 70, repetition_penalty 1.2,
/// presence_penalty 0.3 — the diversity-oriented preset.
SamplingPreset creative_preset();
SamplingPreset preset_by_name(const std::string& name);

struct SyntheticPair {
    std::string doc_id;
    std::string query_text;
    std::string generator_id; // model name
    std::string preset_name;
    int sequence_index = 0; // [0, num_return_sequences)
};

/// Drops pairs whose query is empty after trimming; strips surrounding
/// quotation marks and leading "Query:"/"Claim:" labels (case-insensitive).
/// Order preserved; duplicates kept — training happens on raw generations.
std::vector<SyntheticPair> clean_queries(const std::vector<SyntheticPair>& pairs);

/// clean_queries applied to a single query text; empty result means "drop".
std::string clean_query_text(const std::string& text);

struct EvalSplit {
    std::vector<SyntheticPair> train;
    std::vector<SyntheticPair> eval;
    std::vector<std::string> eval_doc_ids;
};

/// Document-level holdout: every pair from one source document lands on
/// exactly one side. |eval docs| = round(eval_fraction * |docs|), clamped
/// so both sides stay non-empty.
EvalSplit split_eval(const std::vector<SyntheticPair>& pairs, double eval_fraction,
                     std::uint64_t seed);

// JSON-lines pair files: keys doc_id, query, model, preset, seq.
void save_pairs(const std::filesystem::path& path, const std::vector<SyntheticPair>& pairs);
std::vector<SyntheticPair> load_pairs(const std::filesystem::path& path);

} // namespace qf
