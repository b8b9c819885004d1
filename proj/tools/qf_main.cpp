// queryforge: amplify a few annotated query-document pairs into synthetic
// training data, fine-tune a dense retriever, and score it with NDCG@10.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "queryforge/pipeline.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::optional<std::string> preset;
    std::optional<std::string> output;
    std::optional<std::string> endpoint;
    std::optional<std::string> model;
    std::optional<std::uint64_t> seed_sampling;
    std::optional<std::uint64_t> seed_split;
    std::optional<std::uint64_t> seed_training;
};

void add_common_options(CLI::App* cmd, CliOverrides& o) {
    cmd->add_option("--config", o.config_path, "Path to the run config JSON")
        ->required();
    cmd->add_option("--preset", o.preset, "Sampling preset: default or creative");
    cmd->add_option("--output", o.output, "Output directory override");
    cmd->add_option("--endpoint", o.endpoint, "Chat endpoint URL override");
    cmd->add_option("--model", o.model, "Generator model name override");
    cmd->add_option("--seed-sampling", o.seed_sampling, "Corpus/few-shot sampling seed");
    cmd->add_option("--seed-split", o.seed_split, "Eval split seed");
    cmd->add_option("--seed-training", o.seed_training, "Training seed");
}

qf::PipelineConfig load_with_overrides(const CliOverrides& o) {
    auto config = qf::load_config(o.config_path);
    if (o.preset) config.preset_name = *o.preset;
    if (o.output) config.output_dir = *o.output;
    if (o.endpoint) config.endpoint_url = *o.endpoint;
    if (o.model) config.model = *o.model;
    if (o.seed_sampling) config.seeds.sampling = *o.seed_sampling;
    if (o.seed_split) config.seeds.split = *o.seed_split;
    if (o.seed_training) config.seeds.training = *o.seed_training;
    config.train.seed = config.seeds.training;
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"queryforge: synthetic-query dense retriever training pipeline"};
    app.require_subcommand(1);

    CliOverrides o;
    auto* generate = app.add_subcommand("generate", "Generate synthetic query-document pairs");
    auto* train = app.add_subcommand("train", "Fine-tune the dense retriever on generated pairs");
    auto* evaluate = app.add_subcommand("evaluate", "Score the trained retriever with NDCG@10");
    auto* analyze = app.add_subcommand("analyze", "Verbosity / correlation / judge analysis");
    auto* pipeline = app.add_subcommand("pipeline", "generate, train, evaluate, analyze in order");
    for (auto* cmd : {generate, train, evaluate, analyze, pipeline})
        add_common_options(cmd, o);

    CLI11_PARSE(app, argc, argv);

    try {
        auto config = load_with_overrides(o);
        if (generate->parsed()) {
            auto out = qf::run_generate(config);
            std::cout << "generated " << out.pair_count << " pairs ("
                      << out.manifest.completed_doc_ids.size() << " documents, "
                      << out.manifest.failed_doc_ids.size() << " failed)\n"
                      << "pairs:    " << config.pairs_path().string() << "\n"
                      << "manifest: " << config.manifest_path().string() << "\n";
        } else if (train->parsed()) {
            auto result = qf::run_train(config);
            std::cout << "best checkpoint: epoch " << result.best.epoch << " (eval loss "
                      << result.best.eval_loss << ")\n"
                      << result.best.artifact_path.string() << "\n";
        } else if (evaluate->parsed()) {
            auto report = qf::run_evaluate(config);
            std::cout << "mean NDCG@10 = " << report.mean_ndcg_at_10 << " over "
                      << report.per_query_ndcg.size() << " queries ("
                      << report.gain << " gain)\n"
                      << config.eval_report_path().string() << "\n";
        } else if (analyze->parsed()) {
            auto out = qf::run_analyze(config);
            std::cout << "verbosity r_bar = " << out.verbosity.r_bar << " over "
                      << out.verbosity.num_documents << " documents\n";
            for (const auto& [name, corr] : out.correlations)
                std::cout << "spearman[" << name << "]: rho = " << corr.rho
                          << ", p = " << corr.p_value << ", n = " << corr.n << "\n";
            if (out.judge && out.judge->low_coverage_warning)
                std::cout << "warning: judge coverage " << out.judge->coverage
                          << " is below 0.9\n";
            std::cout << out.report_path.string() << "\n";
        } else if (pipeline->parsed()) {
            qf::run_pipeline(config);
            std::cout << "pipeline complete; artifacts under "
                      << config.output_dir.string() << "\n";
        }
    } catch (const qf::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const qf::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const qf::EndpointError& e) {
        std::cerr << "endpoint error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
