// qf-fixture: writes a self-contained demo dataset plus a ready-to-run
// config so the pipeline can be exercised offline against mock endpoints.

#include <iostream>

#include <CLI11.hpp>

#include "demo_corpus.hpp"
#include "queryforge/config.hpp"
#include "queryforge/prompt.hpp"

int main(int argc, char** argv) {
    CLI::App app{"qf-fixture: build an offline demo dataset for queryforge"};
    std::string out_dir = "demo";
    std::size_t n_docs = 200;
    std::size_t n_queries = 20;
    std::uint64_t seed = 7;
    app.add_option("output_dir", out_dir, "Directory to create the fixture in");
    app.add_option("--docs", n_docs, "Number of documents");
    app.add_option("--queries", n_queries, "Number of annotated queries");
    app.add_option("--seed", seed, "Fixture seed");
    CLI11_PARSE(app, argc, argv);

    try {
        qf::demo::DemoSpec spec;
        spec.n_docs = n_docs;
        spec.n_queries = n_queries;
        spec.seed = seed;
        auto data = qf::demo::make_demo_dataset(spec);

        const std::filesystem::path dir(out_dir);
        std::filesystem::create_directories(dir);
        qf::save_corpus(dir / "corpus.jsonl", data.corpus);
        qf::save_queries(dir / "queries.jsonl", data.queries);
        qf::save_qrels(dir / "qrels.tsv", data.qrels);

        qf::PromptTemplate tmpl;
        tmpl.task_id = "demo";
        tmpl.system_text =
            "You generate one concise search query for the given passage. "
            "A query is good if the passage fully answers it. Respond with "
            "only the query.";
        tmpl.user_prefix = "Passage: ";
        qf::save_template(dir / "template.json", tmpl);

        qf::PromptTemplate rubric;
        rubric.task_id = "relevance-0-3";
        rubric.system_text =
            "You are a search relevance assessor. Given a query and a "
            "document, answer with a single integer grade: 3 if the document "
            "is dedicated to the query and contains the exact answer, 2 if "
            "it answers the query but the answer is unclear or buried, 1 if "
            "it is on-topic but does not answer the query, 0 if it is "
            "unrelated. Answer with the integer only.";
        qf::save_template(dir / "rubric.json", rubric);

        qf::PipelineConfig config;
        config.dataset_id = "demo";
        config.corpus_path = "corpus.jsonl";
        config.queries_path = "queries.jsonl";
        config.qrels_path = "qrels.tsv";
        config.split = "test";
        config.template_path = "template.json";
        config.preset_name = "default";
        config.endpoint_url = "mock://synth";
        config.model = "mock-qgen";
        config.few_shot_k = 4;
        config.seeds = {1, 2, 3};
        config.output_dir = "out";
        config.train.learning_rate = 0.01;
        config.train.max_epochs = 12;
        config.train.encoder.vocab_size = 4096;
        config.train.encoder.dim = 48;
        config.train.encoder.max_len = 48;
        qf::save_config(dir / "config.json", config);

        std::cout << "fixture written to " << dir.string() << "\n"
                  << "run: queryforge pipeline --config " << (dir / "config.json").string()
                  << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
