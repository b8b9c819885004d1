#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "queryforge/common.hpp"

namespace qf {

enum class EmbeddingSource { query, document };

struct EmbeddingBatch {
    Matrix vectors; // batch x dim
    EmbeddingSource source = EmbeddingSource::document;
};

/// Text-to-vector interface. encode() runs in inference mode and is
/// deterministic; safe for concurrent callers on a frozen encoder.
class Encoder {
public:
    virtual ~Encoder() = default;
    virtual std::size_t dim() const = 0;
    virtual Matrix encode(const std::vector<std::string>& texts) const = 0;
};

struct TinyEncoderConfig {
    std::size_t vocab_size = 2048;
    std::size_t dim = 64;
    std::size_t max_len = 64; // tokens; longer texts truncate tail-first
    std::uint64_t seed = 0;
};

/// Trainable toy dual-encoder backbone: hashed word embeddings, one tanh
/// layer, attention-masked mean pooling of final token states. Small enough
/// to fine-tune on a laptop yet shaped like the real thing.
class TinyEncoder : public Encoder {
public:
    explicit TinyEncoder(const TinyEncoderConfig& config);

    std::size_t dim() const override { return config_.dim; }
    const TinyEncoderConfig& config() const { return config_; }

    Matrix encode(const std::vector<std::string>& texts) const override;

    /// Final-layer per-token states for one text, exposed so tests can
    /// verify the mean-pooling contract against a reference forward pass.
    std::vector<std::vector<double>> token_states(const std::string& text) const;

    std::vector<std::uint32_t> tokenize(const std::string& text) const;

    struct Gradients {
        Matrix embed;  // vocab x dim
        Matrix proj;   // dim x dim
        std::vector<double> bias;
        explicit Gradients(const TinyEncoderConfig& c)
            : embed(c.vocab_size, c.dim), proj(c.dim, c.dim), bias(c.dim, 0.0) {}
        void add_scaled(const Gradients& o, double scale);
    };

    /// Recomputes the forward pass for `text` and accumulates parameter
    /// gradients given d(loss)/d(pooled vector).
    void backward(const std::string& text, std::span<const double> dvec,
                  Gradients& grads) const;

    // Parameter access for the optimizer.
    Matrix& embed() { return embed_; }
    Matrix& proj() { return proj_; }
    std::vector<double>& bias() { return bias_; }
    const Matrix& embed() const { return embed_; }

    void save(const std::filesystem::path& path) const;
    static TinyEncoder load(const std::filesystem::path& path);

private:
    TinyEncoderConfig config_;
    Matrix embed_; // vocab x dim
    Matrix proj_;  // dim x dim
    std::vector<double> bias_;
    mutable bool warned_truncation_ = false;
};

/// Decoupled-weight-decay Adam with linear warmup over the first
/// warmup_fraction of total_steps, constant afterwards.
class AdamW {
public:
    AdamW(std::size_t param_count, double learning_rate, double weight_decay,
          double warmup_fraction, long long total_steps);

    /// In-place update; params and grads are flat views over all tensors.
    void step(std::span<double> params, std::span<const double> grads);

    double current_lr() const;
    long long steps_taken() const { return t_; }

private:
    double lr_, weight_decay_, warmup_fraction_;
    long long total_steps_;
    long long t_ = 0;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    std::vector<double> m_, v_;
};

} // namespace qf
