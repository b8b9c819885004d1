#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "queryforge/corpus.hpp"
#include "queryforge/encoder.hpp"
#include "queryforge/synthetic.hpp"

namespace qf {

struct TrainRunConfig {
    std::string backbone_id = "tiny-mean-encoder";
    double learning_rate = 2e-5;
    int small_corpus_batch = 128;
    int large_corpus_batch = 6000;
    int corpus_size_threshold = 50000;
    int max_epochs = 30;
    int patience = 3;
    double eval_fraction = 0.1;
    double similarity_temperature = 0.05;
    std::uint64_t seed = 0;

    // Non-canonical knobs the source protocol leaves open.
    int micro_batch = 32; // gradient-cache sub-batch
    double weight_decay = 0.01;
    double warmup_fraction = 0.05;
    bool cosine_similarity = false; // raw dot product by default
    TinyEncoderConfig encoder;

    void validate() const; // throws ValidationError
};

struct CheckpointRecord {
    int epoch = 0;
    double eval_loss = 0.0;
    std::filesystem::path artifact_path;
};

/// Softmax cross-entropy over in-batch negatives:
/// (1/B) sum_i -log softmax_i(<q_i, d_j>/tau)_j=i.
/// Throws on row-count mismatch or tau <= 0.
double inbatch_loss(const Matrix& queries, const Matrix& documents, double tau);

/// Loss plus gradients w.r.t. both embedding matrices.
double inbatch_loss_grad(const Matrix& queries, const Matrix& documents, double tau,
                         Matrix& dqueries, Matrix& ddocuments);

int choose_batch_size(std::size_t corpus_size, const TrainRunConfig& config);

/// Gradient-cache step: embeds the full effective batch micro_batch texts at
/// a time, computes the loss (negatives span the whole batch), then
/// re-forwards each micro-batch to accumulate parameter gradients. The loss
/// equals the monolithic-batch loss exactly up to fp rounding.
double cached_loss_and_grads(const TinyEncoder& encoder,
                             const std::vector<std::string>& query_texts,
                             const std::vector<std::string>& document_texts,
                             double tau, int micro_batch,
                             TinyEncoder::Gradients& grads, bool cosine = false);

/// Row-wise L2 normalization (rows with zero norm stay zero).
Matrix normalize_rows(const Matrix& m);

struct EpochLoopResult {
    int best_epoch = 0;  // 1-based
    int epochs_run = 0;
    double best_loss = 0.0;
};

/// Early-stopping shell around a per-epoch callable returning eval loss.
/// "Non-decreasing" means eval_loss >= best_so_far - tolerance; `patience`
/// consecutive such epochs stop the run. Selection is the global minimum.
EpochLoopResult run_epoch_loop(int max_epochs, int patience,
                               const std::function<double(int epoch)>& run_epoch,
                               double tolerance = 1e-6);

struct TrainResult {
    CheckpointRecord best;
    std::vector<double> train_losses; // per epoch
    std::vector<double> eval_losses;
    std::filesystem::path log_path;
};

/// Full fine-tuning run: document-level eval split, per-epoch checkpoints
/// under out_dir/epoch_NNN/, CSV loss log, lowest-eval-loss selection.
TrainResult train(const std::vector<SyntheticPair>& pairs,
                  const std::vector<Document>& corpus,
                  const TrainRunConfig& config,
                  const std::filesystem::path& out_dir);

} // namespace qf
