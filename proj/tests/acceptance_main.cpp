// Acceptance checks for the release gate: one pass/fail line per criterion.
// Each criterion verifies library output against values or reference
// implementations computed independently of the library code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "demo_corpus.hpp"
#include "queryforge/analysis.hpp"
#include "queryforge/pipeline.hpp"
#include "queryforge/trainer.hpp"
#include "test_support.hpp"

using namespace qf;

namespace {

int failures = 0;

void criterion(int number, const std::string& description,
               const std::function<void()>& body) {
    try {
        body();
        std::cout << "[PASS] criterion " << number << ": " << description << "\n";
    } catch (const std::exception& e) {
        ++failures;
        std::cout << "[FAIL] criterion " << number << ": " << description << " -- "
                  << e.what() << "\n";
    }
}

void require(bool condition, const std::string& message) {
    if (!condition) throw std::runtime_error(message);
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
}

// ---------------------------------------------------------------------------

void check_spearman_pvalues() {
    struct Case {
        std::size_t n;
        std::vector<std::pair<int, int>> swaps;
        double rho, p;
    };
    const std::vector<Case> cases = {
        {10, {{1, 6}, {2, 5}, {3, 4}}, 0.5758, 0.0816},
        {11, {{1, 6}, {2, 5}, {3, 4}, {7, 8}}, 0.6727, 0.0233},
        {10, {{1, 6}, {2, 3}}, 0.6848, 0.0289},
    };
    for (const auto& c : cases) {
        auto r = spearman(qftest::identity_ranks(c.n), qftest::swapped_ranks(c.n, c.swaps));
        require(std::abs(r.rho - c.rho) < 5e-4,
                "rho " + fmt(r.rho) + " != " + fmt(c.rho) + " (n=" + std::to_string(c.n) + ")");
        require(std::abs(r.p_value - c.p) < 1e-3,
                "p " + fmt(r.p_value) + " != " + fmt(c.p) + " (n=" + std::to_string(c.n) + ")");
    }
}

void check_loss_oracle() {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t B = 2 + rng() % 15;   // <= 16
        const std::size_t dim = 2 + rng() % 31; // <= 32
        auto q = qftest::random_matrix(B, dim, rng, 0.6);
        auto d = qftest::random_matrix(B, dim, rng, 0.6);
        const double tau = 0.05 + 0.05 * double(rng() % 8);
        const double got = inbatch_loss(q, d, tau);
        const double expected = qftest::naive_inbatch_loss(q, d, tau);
        require(std::abs(got - expected) < 1e-6,
                "loss " + fmt(got) + " vs reference " + fmt(expected));
    }

    // Finite-difference gradient check on a handful of instances.
    for (int trial = 0; trial < 3; ++trial) {
        const std::size_t B = 3 + trial, dim = 6;
        auto q = qftest::random_matrix(B, dim, rng, 0.5);
        auto d = qftest::random_matrix(B, dim, rng, 0.5);
        const double tau = 0.1;
        Matrix dq, dd;
        inbatch_loss_grad(q, d, tau, dq, dd);
        const double h = 1e-6;
        auto probe = [&](Matrix& m, const Matrix& grad) {
            for (std::size_t i = 0; i < m.rows; ++i)
                for (std::size_t c = 0; c < m.cols; ++c) {
                    const double orig = m.at(i, c);
                    m.at(i, c) = orig + h;
                    const double up = inbatch_loss(q, d, tau);
                    m.at(i, c) = orig - h;
                    const double down = inbatch_loss(q, d, tau);
                    m.at(i, c) = orig;
                    const double numeric = (up - down) / (2 * h);
                    const double analytic = grad.at(i, c);
                    // Absolute escape for near-zero gradients, where central
                    // differences are dominated by fp cancellation noise.
                    if (std::abs(numeric - analytic) < 1e-7) continue;
                    const double denom =
                        std::max({std::abs(numeric), std::abs(analytic), 1e-8});
                    require(std::abs(numeric - analytic) / denom < 1e-4,
                            "gradient mismatch: numeric " + fmt(numeric) + " vs analytic " +
                                fmt(analytic));
                }
        };
        probe(q, dq);
        probe(d, dd);
    }
}

void check_grad_cache_equivalence() {
    TinyEncoderConfig cfg;
    cfg.vocab_size = 512;
    cfg.dim = 16;
    cfg.seed = 3;
    TinyEncoder encoder(cfg);

    std::vector<std::string> qs, ds;
    std::mt19937_64 rng(55);
    for (int i = 0; i < 32; ++i) {
        qs.push_back("question word" + std::to_string(rng() % 64) + " idx" +
                     std::to_string(i));
        ds.push_back("answer word" + std::to_string(rng() % 64) + " body" +
                     std::to_string(i) + " filler text");
    }
    TinyEncoder::Gradients micro(cfg), full(cfg);
    const double micro_loss = cached_loss_and_grads(encoder, qs, ds, 0.05, 8, micro);
    const double full_loss = cached_loss_and_grads(encoder, qs, ds, 0.05, 32, full);
    require(std::abs(micro_loss - full_loss) < 1e-5,
            "loss " + fmt(micro_loss) + " vs " + fmt(full_loss));
    auto compare = [&](const std::vector<double>& a, const std::vector<double>& b,
                       const char* what) {
        for (std::size_t i = 0; i < a.size(); ++i)
            require(std::abs(a[i] - b[i]) < 1e-5,
                    std::string(what) + " gradient diverges at index " + std::to_string(i));
    };
    compare(micro.embed.data, full.embed.data, "embedding");
    compare(micro.proj.data, full.proj.data, "projection");
    compare(micro.bias, full.bias, "bias");
}

void check_ndcg_reference() {
    std::mt19937_64 rng(202);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 3 + rng() % 48;
        std::vector<std::pair<std::string, double>> scored;
        std::map<std::string, int> rel;
        std::vector<QrelEntry> qrels;
        bool any_positive = false;
        for (std::size_t i = 0; i < n; ++i) {
            const std::string id = "d" + std::to_string(i);
            scored.push_back({id, double(rng() % 90) / 9.0});
            if (rng() % 2) {
                const int grade = int(rng() % 3);
                rel[id] = grade;
                qrels.push_back({"q", id, grade});
                any_positive = any_positive || grade > 0;
            }
        }
        if (!any_positive) {
            if (rel.count("d0")) {
                for (auto it = qrels.begin(); it != qrels.end(); ++it)
                    if (it->doc_id == "d0") {
                        qrels.erase(it);
                        break;
                    }
            }
            rel["d0"] = 2;
            qrels.push_back({"q", "d0", 2});
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        RankedList ranking;
        ranking.query_id = "q";
        for (std::size_t i = 0; i < std::min<std::size_t>(10, scored.size()); ++i)
            ranking.entries.push_back({scored[i].first, scored[i].second});
        for (bool exponential : {false, true}) {
            const double expected = qftest::reference_ndcg(scored, rel, 10, exponential);
            const double got = ndcg_at_k(ranking, qrels, 10,
                                         exponential ? Gain::exponential : Gain::linear);
            require(std::abs(got - expected) < 1e-9,
                    "ndcg " + fmt(got) + " vs reference " + fmt(expected));
        }
    }

    // A perfect ranking scores exactly 1.
    std::vector<QrelEntry> qrels = {{"q", "a", 2}, {"q", "b", 1}};
    RankedList perfect;
    perfect.query_id = "q";
    perfect.entries = {{"a", 2.0}, {"b", 1.0}};
    require(std::abs(ndcg_at_k(perfect, qrels, 10) - 1.0) < 1e-12,
            "perfect ranking must score 1.0");
}

PipelineConfig smoke_config(const std::filesystem::path& dir) {
    demo::DemoSpec spec; // 200 documents
    auto data = demo::make_demo_dataset(spec);
    save_corpus(dir / "corpus.jsonl", data.corpus);
    save_queries(dir / "queries.jsonl", data.queries);
    save_qrels(dir / "qrels.tsv", data.qrels);

    PromptTemplate tmpl;
    tmpl.task_id = "demo";
    tmpl.system_text = "Generate one search query for the passage.";
    tmpl.user_prefix = "Passage: ";
    save_template(dir / "template.json", tmpl);

    PipelineConfig config;
    config.dataset_id = "demo";
    config.corpus_path = dir / "corpus.jsonl";
    config.queries_path = dir / "queries.jsonl";
    config.qrels_path = dir / "qrels.tsv";
    config.split = "test";
    config.template_path = dir / "template.json";
    config.endpoint_url = "mock://synth";
    config.model = "mock-qgen";
    config.few_shot_k = 4;
    config.seeds = {1, 2, 3};
    config.output_dir = dir / "out";
    config.train.learning_rate = 0.01;
    config.train.max_epochs = 12;
    config.train.encoder.vocab_size = 4096;
    config.train.encoder.dim = 48;
    config.train.encoder.max_len = 48;
    return config;
}

void check_end_to_end_smoke() {
    const auto start = std::chrono::steady_clock::now();
    qftest::TempDir dir("qf-smoke");
    auto config = smoke_config(dir.path());

    auto gen = run_generate(config);
    require(gen.pair_count == 196 * 8,
            "expected 1568 pairs, got " + std::to_string(gen.pair_count));

    auto trained = run_train(config);
    require(trained.train_losses.size() >= 2, "training ended after fewer than 2 epochs");
    const double first = trained.train_losses.front();
    const double last = trained.train_losses.back();
    require(last <= 0.5 * first, "train loss fell only from " + fmt(first) + " to " +
                                     fmt(last) + " (need >= 50%)");

    auto report = run_evaluate(config);

    // Same untrained encoder the trainer starts from (identical seed path).
    TinyEncoderConfig untrained_cfg = config.train.encoder;
    untrained_cfg.seed =
        mix_seed(mix_seed(config.seeds.training, config.seeds.split), 0xe2c0de);
    TinyEncoder untrained(untrained_cfg);
    auto corpus = load_corpus(config.corpus_path);
    auto queries = load_queries(config.queries_path);
    auto qrels = load_qrels(config.qrels_path);
    auto baseline = evaluate_run(untrained, corpus, queries, qrels, 10, Gain::linear, "demo");

    require(report.mean_ndcg_at_10 > baseline.mean_ndcg_at_10,
            "trained NDCG " + fmt(report.mean_ndcg_at_10) + " does not beat untrained " +
                fmt(baseline.mean_ndcg_at_10));

    const auto elapsed = std::chrono::duration_cast<std::chrono::seconds>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    require(elapsed < 600, "smoke run took " + std::to_string(elapsed) + "s (limit 600)");
}

/// Endpoint wrapper that starts failing permanently after a budget of
/// successful requests, simulating a crash mid-run.
class FlakyAfter : public ChatEndpoint {
public:
    FlakyAfter(ChatEndpoint& inner, int budget) : inner_(inner), budget_(budget) {}
    ChatResponse complete(const ChatRequest& request) override {
        if (served_.fetch_add(1) >= budget_)
            throw EndpointError("simulated outage", true);
        return inner_.complete(request);
    }

private:
    ChatEndpoint& inner_;
    int budget_;
    std::atomic<int> served_{0};
};

void check_interrupt_resume() {
    std::vector<Document> pool;
    for (int i = 0; i < 100; ++i)
        pool.push_back({"doc" + std::to_string(i), "",
                        "alpha" + std::to_string(i) + " beta" + std::to_string(i) +
                            " gamma" + std::to_string(i) + " delta shared words"});
    PromptTemplate tmpl;
    tmpl.task_id = "demo";
    tmpl.system_text = "Generate one query.";
    tmpl.user_prefix = "Passage: ";
    auto preset = default_preset();
    GenerationOptions options;
    options.retry.attempts = 2;
    options.retry.initial_backoff = std::chrono::milliseconds(1);
    options.concurrency_limit = 1;

    auto fresh_manifest = [] {
        GenerationManifest m;
        m.dataset_id = "demo";
        m.generator_id = "mock-qgen";
        m.preset_name = "default";
        return m;
    };

    // Uninterrupted reference run.
    qftest::TempDir ref_dir("qf-ref");
    auto reference_endpoint = make_mock_endpoint("mock://synth");
    auto reference =
        run_generation(pool, tmpl, {}, preset, *reference_endpoint, fresh_manifest(),
                       options, ref_dir / "manifest.json", ref_dir / "partial.jsonl");
    require(reference.pairs.size() == 800,
            "expected 800 pairs, got " + std::to_string(reference.pairs.size()));
    save_pairs(ref_dir / "pairs.jsonl", reference.pairs);
    const auto expected_bytes = qftest::read_file(ref_dir / "pairs.jsonl");

    // Interrupt at several document boundaries, then resume.
    for (int budget : {1, 37, 99}) {
        qftest::TempDir dir("qf-resume");
        auto inner = make_mock_endpoint("mock://synth");
        FlakyAfter flaky(*inner, budget);
        bool threw = false;
        try {
            run_generation(pool, tmpl, {}, preset, flaky, fresh_manifest(), options,
                           dir / "manifest.json", dir / "partial.jsonl");
        } catch (const EndpointError&) {
            threw = true;
        }
        require(threw, "interrupted run should have aborted (budget " +
                           std::to_string(budget) + ")");

        auto resumed_manifest = GenerationManifest::load(dir / "manifest.json");
        require(resumed_manifest.completed_doc_ids.size() == std::size_t(budget),
                "manifest should hold exactly the completed documents");
        auto healthy = make_mock_endpoint("mock://synth");
        auto resumed =
            run_generation(pool, tmpl, {}, preset, *healthy, std::move(resumed_manifest),
                           options, dir / "manifest.json", dir / "partial.jsonl");
        save_pairs(dir / "pairs.jsonl", resumed.pairs);
        require(qftest::read_file(dir / "pairs.jsonl") == expected_bytes,
                "resumed pairs file differs from the uninterrupted run (budget " +
                    std::to_string(budget) + ")");
    }
}

void check_early_stopping() {
    auto scripted = [](std::vector<double> losses) {
        return [losses = std::move(losses)](int epoch) { return losses.at(epoch - 1); };
    };
    {
        auto r = run_epoch_loop(30, 3, scripted({3.0, 2.5, 2.6, 2.6, 2.6, 0.1}));
        require(r.epochs_run == 5, "expected stop after epoch 5, got " +
                                       std::to_string(r.epochs_run));
        require(r.best_epoch == 2, "expected best epoch 2, got " +
                                       std::to_string(r.best_epoch));
    }
    {
        auto r = run_epoch_loop(30, 2, scripted({4.0, 3.0, 3.5, 2.0, 2.2, 2.2, 0.1}));
        require(r.epochs_run == 6, "patience reset on improvement failed");
        require(r.best_epoch == 4, "lowest-loss selection failed");
    }
    {
        auto r = run_epoch_loop(4, 3, scripted({4.0, 3.0, 2.0, 1.0}));
        require(r.epochs_run == 4 && r.best_epoch == 4,
                "monotone run must reach max_epochs and select the last epoch");
    }
    {
        // A dip below the best but within tolerance must still win selection.
        auto r = run_epoch_loop(30, 2, scripted({3.0, 2.0, 2.0 - 1e-9, 2.5, 2.5}));
        require(r.best_epoch == 3, "global minimum inside the tolerance band must win");
        require(r.epochs_run == 4, "tolerance-band epochs must still consume patience");
    }
}

void check_verbosity_fixtures() {
    {
        std::vector<Document> corpus = {{"d", "", "one two three four"}};
        std::vector<SyntheticPair> pairs;
        for (int i = 0; i < 4; ++i)
            pairs.push_back({"d", "word word", "m", "default", i});
        const double r = verbosity(pairs, corpus, 4).r_bar;
        require(std::abs(r - 2.0) < 1e-12, "expected r_bar 2.0, got " + fmt(r));
    }
    {
        std::vector<Document> corpus = {
            {"a", "", "w1 w2 w3 w4 w5 w6"},
            {"b", "", "x1 x2 x3 x4 x5 x6 x7 x8"},
        };
        std::vector<SyntheticPair> pairs = {
            {"a", "q1", "m", "default", 0},
            {"a", "q1 q2", "m", "default", 1},
            {"b", "r1 r2", "m", "default", 0},
            {"b", "r1 r2 r3 r4 r5 r6 r7 r8", "m", "default", 1},
        };
        const double r = verbosity(pairs, corpus, 2).r_bar;
        require(std::abs(r - 3.5) < 1e-12, "expected r_bar 3.5, got " + fmt(r));
    }
}

void check_token_accounting() {
    // Deterministic endpoint with exactly known usage per request.
    qftest::ScriptedEndpoint endpoint(qftest::counting_completion);
    PromptTemplate tmpl;
    tmpl.task_id = "demo";
    tmpl.system_text = "sys prompt"; // 2 words
    tmpl.user_prefix = "Passage: ";

    std::vector<Document> pool;
    long long expected_input = 0;
    for (int i = 0; i < 10; ++i) {
        const std::string text = "alpha beta gamma doc" + std::to_string(i); // 4 words
        pool.push_back({"d" + std::to_string(i), "", text});
        expected_input += 2 + (1 + 4); // system + (prefix word + doc words)
    }
    GenerationManifest manifest;
    manifest.generator_id = "m";
    manifest.preset_name = "default";
    GenerationOptions options;
    options.retry.initial_backoff = std::chrono::milliseconds(1);

    qftest::TempDir dir("qf-tokens");
    auto result = run_generation(pool, tmpl, {}, default_preset(), endpoint, manifest,
                                 options, dir / "manifest.json", dir / "partial.jsonl");
    require(result.manifest.usage.requests == 10,
            "expected 10 requests, got " + std::to_string(result.manifest.usage.requests));
    require(result.manifest.usage.input_tokens == expected_input,
            "input tokens " + std::to_string(result.manifest.usage.input_tokens) +
                " != " + std::to_string(expected_input));
    require(result.manifest.usage.output_tokens == 10 * 32,
            "output tokens " + std::to_string(result.manifest.usage.output_tokens) +
                " != 320");
}

} // namespace

int main() {
    criterion(1, "Spearman p-values match frozen reference values within 0.001",
              check_spearman_pvalues);
    criterion(2, "in-batch loss and gradients match independent references",
              check_loss_oracle);
    criterion(3, "gradient accumulation (4x8) equals the monolithic batch of 32",
              check_grad_cache_equivalence);
    criterion(4, "NDCG@10 matches an independent reference on 200 random instances",
              check_ndcg_reference);
    criterion(5, "end-to-end smoke run: loss halves and trained beats untrained NDCG",
              check_end_to_end_smoke);
    criterion(6, "100 documents yield exactly 800 pairs; interrupt/resume is byte-identical",
              check_interrupt_resume);
    criterion(7, "early stopping obeys patience and selects the lowest eval loss",
              check_early_stopping);
    criterion(8, "verbosity statistic reproduces hand-computed fixtures within 1e-12",
              check_verbosity_fixtures);
    criterion(9, "token accounting sums endpoint usage exactly", check_token_accounting);

    if (failures) {
        std::cout << failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}
