#include <random>

#include <benchmark/benchmark.h>

#include "queryforge/analysis.hpp"
#include "queryforge/evaluator.hpp"
#include "queryforge/trainer.hpp"

namespace {

qf::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    qf::Matrix m(rows, cols);
    for (auto& v : m.data) v = dist(rng);
    return m;
}

void BM_InBatchLoss(benchmark::State& state) {
    const auto batch = std::size_t(state.range(0));
    auto q = random_matrix(batch, 64, 1);
    auto d = random_matrix(batch, 64, 2);
    for (auto _ : state) benchmark::DoNotOptimize(qf::inbatch_loss(q, d, 0.05));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_InBatchLoss)->Range(8, 512)->Complexity();

void BM_InBatchLossGrad(benchmark::State& state) {
    const auto batch = std::size_t(state.range(0));
    auto q = random_matrix(batch, 64, 1);
    auto d = random_matrix(batch, 64, 2);
    qf::Matrix dq, dd;
    for (auto _ : state)
        benchmark::DoNotOptimize(qf::inbatch_loss_grad(q, d, 0.05, dq, dd));
}
BENCHMARK(BM_InBatchLossGrad)->Range(8, 256);

void BM_Search(benchmark::State& state) {
    const auto n = std::size_t(state.range(0));
    qf::DenseIndex index;
    index.vectors = random_matrix(n, 64, 3);
    for (std::size_t i = 0; i < n; ++i) index.doc_ids.push_back("d" + std::to_string(i));
    auto query = random_matrix(1, 64, 4);
    for (auto _ : state)
        benchmark::DoNotOptimize(qf::search(index, query.row_span(0), 10));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Search)->Range(1000, 100000)->Complexity();

void BM_NdcgAt10(benchmark::State& state) {
    const std::size_t n = 50;
    qf::RankedList ranking;
    ranking.query_id = "q";
    std::vector<qf::QrelEntry> qrels;
    std::mt19937_64 rng(5);
    for (std::size_t i = 0; i < n; ++i) {
        ranking.entries.push_back({"d" + std::to_string(i), double(n - i)});
        if (rng() % 2) qrels.push_back({"q", "d" + std::to_string(i), 1 + int(rng() % 2)});
    }
    for (auto _ : state)
        benchmark::DoNotOptimize(qf::ndcg_at_k(ranking, qrels, 10));
}
BENCHMARK(BM_NdcgAt10);

void BM_Spearman(benchmark::State& state) {
    const auto n = std::size_t(state.range(0));
    std::mt19937_64 rng(6);
    std::normal_distribution<double> dist;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = dist(rng);
        y[i] = 0.5 * x[i] + dist(rng);
    }
    for (auto _ : state) benchmark::DoNotOptimize(qf::spearman(x, y));
}
BENCHMARK(BM_Spearman)->Range(16, 4096);

void BM_TinyEncoderEncode(benchmark::State& state) {
    qf::TinyEncoderConfig cfg;
    cfg.seed = 7;
    qf::TinyEncoder encoder(cfg);
    std::vector<std::string> texts;
    for (int i = 0; i < 32; ++i)
        texts.push_back("some document text with a number of words in it " +
                        std::to_string(i));
    for (auto _ : state) benchmark::DoNotOptimize(encoder.encode(texts));
}
BENCHMARK(BM_TinyEncoderEncode);

} // namespace

BENCHMARK_MAIN();
