#include "queryforge/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace qf {

void TrainRunConfig::validate() const {
    if (small_corpus_batch < 2 || large_corpus_batch < 2)
        throw ValidationError("TrainRunConfig: batch sizes must be >= 2");
    if (patience < 1) throw ValidationError("TrainRunConfig: patience must be >= 1");
    if (eval_fraction <= 0.0 || eval_fraction >= 1.0)
        throw ValidationError("TrainRunConfig: eval_fraction must be in (0, 1)");
    if (similarity_temperature <= 0.0)
        throw ValidationError("TrainRunConfig: similarity_temperature must be > 0");
    if (max_epochs < 1) throw ValidationError("TrainRunConfig: max_epochs must be >= 1");
    if (micro_batch < 1) throw ValidationError("TrainRunConfig: micro_batch must be >= 1");
}

double inbatch_loss(const Matrix& queries, const Matrix& documents, double tau) {
    Matrix dq, dd;
    return inbatch_loss_grad(queries, documents, tau, dq, dd);
}

double inbatch_loss_grad(const Matrix& queries, const Matrix& documents, double tau,
                         Matrix& dqueries, Matrix& ddocuments) {
    if (queries.rows != documents.rows || queries.cols != documents.cols)
        throw ValidationError("inbatch_loss: query/document batch shapes differ");
    if (queries.rows == 0) throw ValidationError("inbatch_loss: empty batch");
    if (tau <= 0.0) throw ValidationError("inbatch_loss: tau must be > 0");

    const std::size_t batch = queries.rows;
    dqueries = Matrix(batch, queries.cols);
    ddocuments = Matrix(batch, queries.cols);

    double loss = 0.0;
    std::vector<double> logits(batch), probs(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        double max_logit = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < batch; ++j) {
            logits[j] = dot(queries.row_span(i), documents.row_span(j)) / tau;
            max_logit = std::max(max_logit, logits[j]);
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < batch; ++j) {
            probs[j] = std::exp(logits[j] - max_logit);
            denom += probs[j];
        }
        loss += -(logits[i] - max_logit - std::log(denom));
        // d(loss_i)/d(logit_ij) = (softmax_j - [j == i]) / B.
        for (std::size_t j = 0; j < batch; ++j) {
            const double g = (probs[j] / denom - (j == i ? 1.0 : 0.0)) / (double(batch) * tau);
            double* dq = dqueries.row(i);
            double* dd = ddocuments.row(j);
            const double* qrow = queries.row(i);
            const double* drow = documents.row(j);
            for (std::size_t c = 0; c < queries.cols; ++c) {
                dq[c] += g * drow[c];
                dd[c] += g * qrow[c];
            }
        }
    }
    return loss / double(batch);
}

int choose_batch_size(std::size_t corpus_size, const TrainRunConfig& config) {
    return corpus_size < static_cast<std::size_t>(config.corpus_size_threshold)
               ? config.small_corpus_batch
               : config.large_corpus_batch;
}

Matrix normalize_rows(const Matrix& m) {
    Matrix out = m;
    for (std::size_t i = 0; i < out.rows; ++i) {
        double* row = out.row(i);
        const double norm = std::sqrt(dot(out.row_span(i), out.row_span(i)));
        if (norm == 0.0) continue;
        for (std::size_t c = 0; c < out.cols; ++c) row[c] /= norm;
    }
    return out;
}

namespace {

/// Backprop through row-wise normalization: dL/dv = (dL/du - (dL/du . u) u) / |v|.
Matrix normalized_grad_to_raw(const Matrix& raw, const Matrix& unit, const Matrix& dunit) {
    Matrix draw(raw.rows, raw.cols);
    for (std::size_t i = 0; i < raw.rows; ++i) {
        const double norm = std::sqrt(dot(raw.row_span(i), raw.row_span(i)));
        if (norm == 0.0) continue;
        const double proj = dot(dunit.row_span(i), unit.row_span(i));
        double* out = draw.row(i);
        const double* du = dunit.row(i);
        const double* u = unit.row(i);
        for (std::size_t c = 0; c < raw.cols; ++c) out[c] = (du[c] - proj * u[c]) / norm;
    }
    return draw;
}

} // namespace

double cached_loss_and_grads(const TinyEncoder& encoder,
                             const std::vector<std::string>& query_texts,
                             const std::vector<std::string>& document_texts,
                             double tau, int micro_batch,
                             TinyEncoder::Gradients& grads, bool cosine) {
    if (query_texts.size() != document_texts.size())
        throw ValidationError("cached_loss_and_grads: pair count mismatch");
    const std::size_t batch = query_texts.size();
    const std::size_t micro = std::max<std::size_t>(1, std::size_t(micro_batch));

    // Pass 1: embed everything micro-batch at a time, gradient-free.
    Matrix q(batch, encoder.dim()), d(batch, encoder.dim());
    for (std::size_t start = 0; start < batch; start += micro) {
        const std::size_t end = std::min(batch, start + micro);
        std::vector<std::string> q_chunk(query_texts.begin() + start, query_texts.begin() + end);
        std::vector<std::string> d_chunk(document_texts.begin() + start,
                                         document_texts.begin() + end);
        Matrix qe = encoder.encode(q_chunk);
        Matrix de = encoder.encode(d_chunk);
        std::copy(qe.data.begin(), qe.data.end(), q.data.begin() + start * encoder.dim());
        std::copy(de.data.begin(), de.data.end(), d.data.begin() + start * encoder.dim());
    }

    // Loss and per-vector gradients over the full effective batch, so the
    // in-batch negatives span all rows, not just a micro-batch.
    Matrix dq, dd;
    double loss;
    if (cosine) {
        Matrix qn = normalize_rows(q), dn = normalize_rows(d);
        Matrix dqn, ddn;
        loss = inbatch_loss_grad(qn, dn, tau, dqn, ddn);
        dq = normalized_grad_to_raw(q, qn, dqn);
        dd = normalized_grad_to_raw(d, dn, ddn);
    } else {
        loss = inbatch_loss_grad(q, d, tau, dq, dd);
    }

    // Pass 2: re-forward each text and push its cached vector gradient
    // into the parameter gradients.
    for (std::size_t i = 0; i < batch; ++i) {
        encoder.backward(query_texts[i], dq.row_span(i), grads);
        encoder.backward(document_texts[i], dd.row_span(i), grads);
    }
    return loss;
}

EpochLoopResult run_epoch_loop(int max_epochs, int patience,
                               const std::function<double(int epoch)>& run_epoch,
                               double tolerance) {
    EpochLoopResult result;
    double best = std::numeric_limits<double>::infinity();
    int stale = 0;
    for (int epoch = 1; epoch <= max_epochs; ++epoch) {
        const double loss = run_epoch(epoch);
        result.epochs_run = epoch;
        if (loss < best - tolerance) {
            best = loss;
            result.best_epoch = epoch;
            result.best_loss = loss;
            stale = 0;
        } else {
            if (loss < best) {
                // Still the global minimum even inside the jitter band.
                best = loss;
                result.best_epoch = epoch;
                result.best_loss = loss;
            }
            if (++stale >= patience) break;
        }
    }
    return result;
}

namespace {

std::filesystem::path epoch_dir(const std::filesystem::path& out_dir, int epoch) {
    std::ostringstream name;
    name << "epoch_" << std::setw(3) << std::setfill('0') << epoch;
    return out_dir / name.str();
}

} // namespace

TrainResult train(const std::vector<SyntheticPair>& pairs,
                  const std::vector<Document>& corpus,
                  const TrainRunConfig& config,
                  const std::filesystem::path& out_dir) {
    config.validate();
    if (pairs.size() < 2) throw ValidationError("train: need at least 2 training pairs");

    std::unordered_map<std::string, const std::string*> doc_text;
    for (const auto& d : corpus) doc_text.emplace(d.id, &d.text);
    for (const auto& p : pairs)
        if (!doc_text.count(p.doc_id))
            throw ValidationError("train: pair references unknown document \"" + p.doc_id + "\"");

    auto split = split_eval(pairs, config.eval_fraction, mix_seed(config.seed, 0x5e7f));
    if (split.eval.empty()) throw ValidationError("train: eval split is empty");
    if (split.train.size() < 2)
        throw ValidationError("train: train split has fewer than 2 pairs");

    const int full_batch = choose_batch_size(corpus.size(), config);
    const std::size_t batch =
        std::min<std::size_t>(std::size_t(full_batch), split.train.size());
    const std::size_t micro = std::min<std::size_t>(std::size_t(config.micro_batch), batch);

    TinyEncoderConfig enc_config = config.encoder;
    enc_config.seed = mix_seed(config.seed, 0xe2c0de);
    TinyEncoder encoder(enc_config);

    const std::size_t param_count =
        encoder.embed().data.size() + encoder.proj().data.size() + encoder.bias().size();
    const long long steps_per_epoch =
        std::max<long long>(1, static_cast<long long>(split.train.size() / batch));
    AdamW optimizer(param_count, config.learning_rate, config.weight_decay,
                    config.warmup_fraction, steps_per_epoch * config.max_epochs);

    auto gather = [&](const std::vector<SyntheticPair>& batch_pairs, std::size_t start,
                      std::size_t end, std::vector<std::string>& qs,
                      std::vector<std::string>& ds) {
        qs.clear();
        ds.clear();
        for (std::size_t i = start; i < end; ++i) {
            qs.push_back(batch_pairs[i].query_text);
            ds.push_back(*doc_text.at(batch_pairs[i].doc_id));
        }
    };

    auto flat_params = [&](auto&& fn) {
        fn(std::span<double>(encoder.embed().data));
        fn(std::span<double>(encoder.proj().data));
        fn(std::span<double>(encoder.bias()));
    };
    std::vector<double> params_flat(param_count), grads_flat(param_count);

    auto eval_loss_fn = [&]() {
        std::vector<std::string> qs, ds;
        double total = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < split.eval.size(); start += batch) {
            const std::size_t end = std::min(split.eval.size(), start + batch);
            if (end - start < 2) break; // a single-pair tail has no negatives
            gather(split.eval, start, end, qs, ds);
            Matrix q = encoder.encode(qs), d = encoder.encode(ds);
            if (config.cosine_similarity) {
                q = normalize_rows(q);
                d = normalize_rows(d);
            }
            total += inbatch_loss(q, d, config.similarity_temperature);
            ++batches;
        }
        if (batches == 0) {
            // Whole eval split smaller than one batch: score it as one.
            gather(split.eval, 0, split.eval.size(), qs, ds);
            Matrix q = encoder.encode(qs), d = encoder.encode(ds);
            if (config.cosine_similarity) {
                q = normalize_rows(q);
                d = normalize_rows(d);
            }
            return inbatch_loss(q, d, config.similarity_temperature);
        }
        return total / double(batches);
    };

    std::filesystem::create_directories(out_dir);
    TrainResult result;
    result.log_path = out_dir / "log.csv";
    std::ofstream log(result.log_path, std::ios::binary);
    if (!log) throw ValidationError("cannot write training log: " + result.log_path.string());
    log << "epoch,train_loss,eval_loss\n";
    log << std::setprecision(17);

    std::vector<CheckpointRecord> checkpoints;
    auto order = split.train;
    std::mt19937_64 shuffle_rng(mix_seed(config.seed, 0x5affe));

    auto run_one_epoch = [&](int epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double train_total = 0.0;
        long long steps = 0;
        std::vector<std::string> qs, ds;
        for (std::size_t start = 0; start + batch <= order.size(); start += batch) {
            gather(order, start, start + batch, qs, ds);
            TinyEncoder::Gradients grads(encoder.config());
            const double loss = cached_loss_and_grads(encoder, qs, ds,
                                                      config.similarity_temperature,
                                                      int(micro), grads,
                                                      config.cosine_similarity);
            if (!std::isfinite(loss))
                throw ValidationError("train: non-finite loss at epoch " +
                                      std::to_string(epoch));
            std::size_t off = 0;
            auto pack = [&](std::span<const double> src, std::vector<double>& dst) {
                std::copy(src.begin(), src.end(), dst.begin() + off);
                off += src.size();
            };
            pack(encoder.embed().data, params_flat);
            pack(encoder.proj().data, params_flat);
            pack(encoder.bias(), params_flat);
            off = 0;
            pack(grads.embed.data, grads_flat);
            pack(grads.proj.data, grads_flat);
            pack(grads.bias, grads_flat);
            optimizer.step(params_flat, grads_flat);
            off = 0;
            flat_params([&](std::span<double> dst) {
                std::copy(params_flat.begin() + off, params_flat.begin() + off + dst.size(),
                          dst.begin());
                off += dst.size();
            });
            train_total += loss;
            ++steps;
        }
        const double train_loss = steps ? train_total / double(steps) : 0.0;
        const double eval_loss = eval_loss_fn();
        if (!std::isfinite(eval_loss))
            throw ValidationError("train: non-finite eval loss at epoch " +
                                  std::to_string(epoch));

        auto dir = epoch_dir(out_dir, epoch);
        std::filesystem::create_directories(dir);
        encoder.save(dir / "encoder.bin");
        checkpoints.push_back({epoch, eval_loss, dir / "encoder.bin"});

        result.train_losses.push_back(train_loss);
        result.eval_losses.push_back(eval_loss);
        log << epoch << "," << train_loss << "," << eval_loss << "\n";
        log.flush();
        return eval_loss;
    };

    auto loop = run_epoch_loop(config.max_epochs, config.patience, run_one_epoch);
    result.best = checkpoints.at(std::size_t(loop.best_epoch) - 1);

    nlohmann::ordered_json best_marker;
    best_marker["epoch"] = result.best.epoch;
    best_marker["eval_loss"] = result.best.eval_loss;
    best_marker["path"] = result.best.artifact_path.string();
    std::ofstream marker(out_dir / "best.json", std::ios::binary);
    marker << best_marker.dump(2) << "\n";
    return result;
}

} // namespace qf
