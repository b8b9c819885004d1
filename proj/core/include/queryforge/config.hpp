#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "queryforge/trainer.hpp"

namespace qf {

struct Seeds {
    std::uint64_t sampling = 0;
    std::uint64_t split = 0;
    std::uint64_t training = 0;
};

/// Optional analysis inputs, all desk-scale file references.
struct AnalysisConfig {
    /// Named (x, y) series to correlate, e.g. verbosity vs NDCG across runs.
    struct CorrelationInput {
        std::string name;
        std::vector<double> x;
        std::vector<double> y;
    };
    std::vector<CorrelationInput> correlation_inputs;

    /// Score tables keyed "model,dataset" for the default-vs-creative delta.
    std::optional<std::filesystem::path> default_scores_path;
    std::optional<std::filesystem::path> creative_scores_path;

    /// LLM-as-judge pass over the generated pairs.
    std::optional<std::string> judge_endpoint_url;
    std::string judge_model;
    std::optional<std::filesystem::path> rubric_path;
    std::size_t judge_max_pairs = 0; // 0 = all
};

struct PipelineConfig {
    std::string dataset_id;
    std::filesystem::path corpus_path;
    std::filesystem::path queries_path;
    std::filesystem::path qrels_path;
    std::string split = "dev"; // which split the qrels/queries come from

    std::filesystem::path template_path;
    std::string preset_name = "default";
    std::string endpoint_url;
    std::string model;
    std::size_t max_docs = 100000;
    std::size_t few_shot_k = 4; // 1..8
    int concurrency_limit = 4;

    Seeds seeds;
    TrainRunConfig train;
    std::string eval_gain = "linear";

    std::filesystem::path output_dir;
    AnalysisConfig analysis;

    // Derived artifact locations, all under output_dir.
    std::filesystem::path pairs_path() const { return output_dir / "pairs.jsonl"; }
    std::filesystem::path partial_pairs_path() const { return output_dir / "pairs.partial.jsonl"; }
    std::filesystem::path manifest_path() const { return output_dir / "manifest.json"; }
    std::filesystem::path generation_stats_path() const { return output_dir / "generation_stats.json"; }
    std::filesystem::path checkpoints_dir() const { return output_dir / "checkpoints"; }
    std::filesystem::path eval_report_path() const { return output_dir / "eval_report.json"; }
    std::filesystem::path trec_run_path() const { return output_dir / "run.tsv"; }
    std::filesystem::path analysis_report_path() const { return output_dir / "analysis_report.json"; }
};

PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const PipelineConfig& config);

/// Total validation before any side effect: referenced input paths must
/// exist, preset and gain names must resolve, numeric ranges must hold.
void validate_config(const PipelineConfig& config);

} // namespace qf
