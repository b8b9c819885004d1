#pragma once

#include "queryforge/analysis.hpp"
#include "queryforge/config.hpp"
#include "queryforge/evaluator.hpp"
#include "queryforge/generator.hpp"
#include "queryforge/trainer.hpp"

namespace qf {

/// Stage drivers shared by the CLI and the integration tests. Each stage
/// validates the config, reads its inputs from disk, and writes its
/// artifacts under config.output_dir.

struct GenerateOutputs {
    std::size_t pair_count = 0;
    GenerationManifest manifest;
};

GenerateOutputs run_generate(const PipelineConfig& config);
TrainResult run_train(const PipelineConfig& config);
EvalReport run_evaluate(const PipelineConfig& config);

struct AnalyzeOutputs {
    VerbosityStat verbosity;
    std::map<std::string, CorrelationResult> correlations;
    std::optional<JudgeSummary> judge;
    std::optional<DeltaReport> deltas;
    std::filesystem::path report_path;
};

AnalyzeOutputs run_analyze(const PipelineConfig& config);

/// generate -> train -> evaluate -> analyze.
void run_pipeline(const PipelineConfig& config);

} // namespace qf
