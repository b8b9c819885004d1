#include "queryforge/pipeline.hpp"

#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

namespace qf {

namespace {

std::map<RunKey, double> load_score_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open score table: " + path.string());
    nlohmann::json obj;
    try {
        in >> obj;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": invalid score table JSON: " + e.what());
    }
    std::map<RunKey, double> scores;
    for (const auto& row : obj.at("scores")) {
        RunKey key{row.at("model").get<std::string>(), row.at("dataset").get<std::string>()};
        if (!scores.emplace(key, row.at("value").get<double>()).second)
            throw ValidationError(path.string() + ": duplicate score for (" + key.first +
                                  ", " + key.second + ")");
    }
    return scores;
}

} // namespace

GenerateOutputs run_generate(const PipelineConfig& config) {
    validate_config(config);

    auto corpus = load_corpus(config.corpus_path);
    auto queries = load_queries(config.queries_path);
    auto qrels = load_qrels(config.qrels_path);
    auto tmpl = load_template(config.template_path);
    auto preset = preset_by_name(config.preset_name);

    auto sampled = sample_corpus(corpus, config.max_docs, config.seeds.sampling);
    auto selection = select_few_shot(queries, qrels, sampled, config.few_shot_k,
                                     mix_seed(config.seeds.sampling, 0xf5));

    const char* token_env = std::getenv("QUERYFORGE_API_TOKEN");
    auto endpoint = make_endpoint(config.endpoint_url, token_env ? token_env : "");

    GenerationManifest manifest;
    if (std::filesystem::exists(config.manifest_path())) {
        manifest = GenerationManifest::load(config.manifest_path());
        if (manifest.generator_id != config.model || manifest.preset_name != config.preset_name)
            throw ValidationError("existing manifest was produced by a different "
                                  "(model, preset); refusing to mix runs");
    } else {
        manifest.dataset_id = config.dataset_id;
        manifest.generator_id = config.model;
        manifest.preset_name = config.preset_name;
    }

    GenerationOptions options;
    options.concurrency_limit = config.concurrency_limit;
    auto result = run_generation(selection.generation_pool, tmpl, selection.examples, preset,
                                 *endpoint, std::move(manifest), options,
                                 config.manifest_path(), config.partial_pairs_path());

    save_pairs(config.pairs_path(), result.pairs);

    nlohmann::ordered_json stats;
    stats["dataset_id"] = config.dataset_id;
    stats["model"] = config.model;
    stats["preset"] = config.preset_name;
    stats["pair_count"] = result.pairs.size();
    stats["completed_documents"] = result.manifest.completed_doc_ids.size();
    stats["failed_documents"] = result.manifest.failed_doc_ids.size();
    stats["input_tokens"] = result.manifest.usage.input_tokens;
    stats["output_tokens"] = result.manifest.usage.output_tokens;
    stats["requests"] = result.manifest.usage.requests;
    std::ofstream out(config.generation_stats_path(), std::ios::binary);
    out << stats.dump(2) << "\n";

    return {result.pairs.size(), std::move(result.manifest)};
}

TrainResult run_train(const PipelineConfig& config) {
    validate_config(config);
    if (!std::filesystem::exists(config.pairs_path()))
        throw ValidationError("train: pairs file not found: " + config.pairs_path().string() +
                              " (run generate first)");
    auto pairs = load_pairs(config.pairs_path());
    if (pairs.empty())
        throw ValidationError("train: pairs file is empty: " + config.pairs_path().string());
    auto corpus = load_corpus(config.corpus_path);

    TrainRunConfig train_config = config.train;
    // train() derives shuffle and eval-split sub-seeds from this; fold the
    // dedicated split seed in so both named seeds matter.
    train_config.seed = mix_seed(config.seeds.training, config.seeds.split);
    return train(pairs, corpus, train_config, config.checkpoints_dir());
}

EvalReport run_evaluate(const PipelineConfig& config) {
    validate_config(config);
    const auto best_path = config.checkpoints_dir() / "best.json";
    if (!std::filesystem::exists(best_path))
        throw ValidationError("evaluate: no trained checkpoint at " + best_path.string() +
                              " (run train first)");
    nlohmann::json best;
    {
        std::ifstream in(best_path);
        in >> best;
    }
    auto encoder = TinyEncoder::load(best.at("path").get<std::string>());

    auto corpus = load_corpus(config.corpus_path);
    auto queries = load_queries(config.queries_path);
    auto qrels = load_qrels(config.qrels_path);

    auto report = evaluate_run(encoder, corpus, queries, qrels, 10,
                               gain_from_name(config.eval_gain), config.dataset_id);
    save_report(config.eval_report_path(), report);

    // trec-style run file alongside the JSON report.
    auto index = build_index(encoder, corpus);
    std::vector<RankedList> rankings;
    for (const auto& q : queries) {
        if (!report.per_query_ndcg.count(q.id)) continue;
        Matrix v = encoder.encode({q.text});
        RankedList r = search(index, v.row_span(0), 10);
        r.query_id = q.id;
        rankings.push_back(std::move(r));
    }
    save_trec_run(config.trec_run_path(), rankings);
    return report;
}

AnalyzeOutputs run_analyze(const PipelineConfig& config) {
    validate_config(config);
    if (!std::filesystem::exists(config.pairs_path()))
        throw ValidationError("analyze: pairs file not found: " + config.pairs_path().string());
    auto pairs = load_pairs(config.pairs_path());
    auto corpus = load_corpus(config.corpus_path);

    AnalyzeOutputs outputs;
    auto preset = preset_by_name(config.preset_name);
    outputs.verbosity = verbosity(pairs, corpus, std::size_t(preset.num_return_sequences),
                                  config.dataset_id);

    for (const auto& input : config.analysis.correlation_inputs)
        outputs.correlations[input.name] = spearman(input.x, input.y);

    if (config.analysis.judge_endpoint_url) {
        if (!config.analysis.rubric_path)
            throw ValidationError("analyze: judge endpoint set but rubric_path missing");
        auto rubric = load_template(*config.analysis.rubric_path);
        const char* token_env = std::getenv("QUERYFORGE_API_TOKEN");
        auto endpoint =
            make_endpoint(*config.analysis.judge_endpoint_url, token_env ? token_env : "");
        auto judged = pairs;
        if (config.analysis.judge_max_pairs > 0 &&
            judged.size() > config.analysis.judge_max_pairs)
            judged.resize(config.analysis.judge_max_pairs);
        outputs.judge = judge_queries(*endpoint, config.analysis.judge_model, judged, corpus,
                                      rubric);
    }

    if (config.analysis.default_scores_path && config.analysis.creative_scores_path) {
        auto def = load_score_table(*config.analysis.default_scores_path);
        auto cre = load_score_table(*config.analysis.creative_scores_path);
        outputs.deltas = delta_report(def, cre);
        std::ofstream csv(config.output_dir / "deltas.csv", std::ios::binary);
        csv << outputs.deltas->to_csv();
    }

    std::filesystem::create_directories(config.output_dir);
    {
        std::ofstream csv(config.output_dir / "verbosity.csv", std::ios::binary);
        csv << "dataset_id,r_bar,num_documents,queries_per_doc\n"
            << config.dataset_id << "," << outputs.verbosity.r_bar << ","
            << outputs.verbosity.num_documents << "," << outputs.verbosity.queries_per_doc
            << "\n";
    }
    if (!outputs.correlations.empty()) {
        std::ofstream csv(config.output_dir / "correlations.csv", std::ios::binary);
        csv << "name,rho,p_value,n\n";
        for (const auto& [name, corr] : outputs.correlations)
            csv << name << "," << corr.rho << "," << corr.p_value << "," << corr.n << "\n";
    }

    nlohmann::ordered_json report;
    report["dataset_id"] = config.dataset_id;
    report["verbosity"] = {{"r_bar", outputs.verbosity.r_bar},
                           {"num_documents", outputs.verbosity.num_documents},
                           {"queries_per_doc", outputs.verbosity.queries_per_doc}};
    report["correlations"] = nlohmann::ordered_json::object();
    for (const auto& [name, corr] : outputs.correlations)
        report["correlations"][name] = {{"rho", corr.rho},
                                        {"p_value", corr.p_value},
                                        {"n", corr.n}};
    if (outputs.judge) {
        report["judge_summary"] = {{"judge_model", config.analysis.judge_model},
                                   {"total", outputs.judge->total},
                                   {"missing", outputs.judge->missing},
                                   {"coverage", outputs.judge->coverage},
                                   {"low_coverage_warning", outputs.judge->low_coverage_warning},
                                   {"mean_grade", outputs.judge->mean_grade}};
    }
    if (outputs.deltas) {
        report["deltas"] = nlohmann::ordered_json::array();
        for (std::size_t r = 0; r < outputs.deltas->models.size(); ++r)
            for (std::size_t c = 0; c < outputs.deltas->datasets.size(); ++c)
                report["deltas"].push_back({{"model", outputs.deltas->models[r]},
                                            {"dataset", outputs.deltas->datasets[c]},
                                            {"delta", outputs.deltas->deltas.at(r, c)}});
    }
    outputs.report_path = config.analysis_report_path();
    std::filesystem::create_directories(config.output_dir);
    std::ofstream out(outputs.report_path, std::ios::binary);
    if (!out)
        throw ValidationError("cannot write analysis report: " + outputs.report_path.string());
    out << report.dump(2) << "\n";
    return outputs;
}

void run_pipeline(const PipelineConfig& config) {
    run_generate(config);
    run_train(config);
    run_evaluate(config);
    run_analyze(config);
}

} // namespace qf
