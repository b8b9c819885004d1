#include "queryforge/encoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <random>

namespace qf {

TinyEncoder::TinyEncoder(const TinyEncoderConfig& config)
    : config_(config),
      embed_(config.vocab_size, config.dim),
      proj_(config.dim, config.dim),
      bias_(config.dim, 0.0) {
    if (config.vocab_size == 0 || config.dim == 0 || config.max_len == 0)
        throw ValidationError("TinyEncoder: vocab_size, dim, and max_len must be positive");
    std::mt19937_64 rng(mix_seed(config.seed, 0x7e11c0de));
    std::normal_distribution<double> embed_init(0.0, 0.1);
    for (auto& w : embed_.data) w = embed_init(rng);
    std::normal_distribution<double> proj_init(0.0, 1.0 / std::sqrt(double(config.dim)));
    for (auto& w : proj_.data) w = proj_init(rng);
}

std::vector<std::uint32_t> TinyEncoder::tokenize(const std::string& text) const {
    std::vector<std::uint32_t> ids;
    for (const auto& word : split_words(text)) {
        if (ids.size() >= config_.max_len) {
            if (!warned_truncation_) {
                warned_truncation_ = true;
                std::cerr << "[queryforge] warning: input exceeds encoder max length ("
                          << config_.max_len << " tokens); truncating\n";
            }
            break;
        }
        ids.push_back(static_cast<std::uint32_t>(fnv1a64(to_lower(word)) % config_.vocab_size));
    }
    return ids;
}

std::vector<std::vector<double>> TinyEncoder::token_states(const std::string& text) const {
    const std::size_t dim = config_.dim;
    std::vector<std::vector<double>> states;
    for (auto id : tokenize(text)) {
        const double* e = embed_.row(id);
        std::vector<double> s(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            double pre = bias_[i];
            const double* w = proj_.row(i);
            for (std::size_t j = 0; j < dim; ++j) pre += w[j] * e[j];
            s[i] = std::tanh(pre);
        }
        states.push_back(std::move(s));
    }
    return states;
}

Matrix TinyEncoder::encode(const std::vector<std::string>& texts) const {
    if (texts.empty()) throw ValidationError("encode: texts must be non-empty");
    Matrix out(texts.size(), config_.dim);
    for (std::size_t r = 0; r < texts.size(); ++r) {
        auto states = token_states(texts[r]);
        if (states.empty()) continue; // all-whitespace text pools to zero
        double* row = out.row(r);
        for (const auto& s : states)
            for (std::size_t i = 0; i < config_.dim; ++i) row[i] += s[i];
        for (std::size_t i = 0; i < config_.dim; ++i) row[i] /= double(states.size());
    }
    return out;
}

void TinyEncoder::Gradients::add_scaled(const Gradients& o, double scale) {
    for (std::size_t i = 0; i < embed.data.size(); ++i) embed.data[i] += scale * o.embed.data[i];
    for (std::size_t i = 0; i < proj.data.size(); ++i) proj.data[i] += scale * o.proj.data[i];
    for (std::size_t i = 0; i < bias.size(); ++i) bias[i] += scale * o.bias[i];
}

void TinyEncoder::backward(const std::string& text, std::span<const double> dvec,
                           Gradients& grads) const {
    const std::size_t dim = config_.dim;
    auto ids = tokenize(text);
    if (ids.empty()) return;
    const double inv_count = 1.0 / double(ids.size());

    std::vector<double> pre(dim), state(dim), dpre(dim);
    for (auto id : ids) {
        const double* e = embed_.row(id);
        for (std::size_t i = 0; i < dim; ++i) {
            double acc = bias_[i];
            const double* w = proj_.row(i);
            for (std::size_t j = 0; j < dim; ++j) acc += w[j] * e[j];
            pre[i] = acc;
            state[i] = std::tanh(acc);
        }
        // d(pooled)/d(state_t) = 1/T; tanh' = 1 - s^2.
        for (std::size_t i = 0; i < dim; ++i)
            dpre[i] = dvec[i] * inv_count * (1.0 - state[i] * state[i]);
        double* ge = grads.embed.row(id);
        for (std::size_t i = 0; i < dim; ++i) {
            grads.bias[i] += dpre[i];
            double* gw = grads.proj.row(i);
            const double* w = proj_.row(i);
            for (std::size_t j = 0; j < dim; ++j) {
                gw[j] += dpre[i] * e[j];
                ge[j] += dpre[i] * w[j];
            }
        }
    }
}

namespace {
constexpr char kMagic[8] = {'Q', 'F', 'E', 'N', 'C', '0', '0', '1'};
}

void TinyEncoder::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write encoder checkpoint: " + path.string());
    out.write(kMagic, sizeof(kMagic));
    std::uint64_t header[4] = {config_.vocab_size, config_.dim, config_.max_len, config_.seed};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.write(reinterpret_cast<const char*>(embed_.data.data()),
              std::streamsize(embed_.data.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(proj_.data.data()),
              std::streamsize(proj_.data.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(bias_.data()),
              std::streamsize(bias_.size() * sizeof(double)));
}

TinyEncoder TinyEncoder::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open encoder checkpoint: " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw ParseError("not an encoder checkpoint: " + path.string());
    std::uint64_t header[4];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    TinyEncoderConfig config{header[0], header[1], header[2], header[3]};
    TinyEncoder enc(config);
    in.read(reinterpret_cast<char*>(enc.embed_.data.data()),
            std::streamsize(enc.embed_.data.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(enc.proj_.data.data()),
            std::streamsize(enc.proj_.data.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(enc.bias_.data()),
            std::streamsize(enc.bias_.size() * sizeof(double)));
    if (!in) throw ParseError("truncated encoder checkpoint: " + path.string());
    return enc;
}

AdamW::AdamW(std::size_t param_count, double learning_rate, double weight_decay,
             double warmup_fraction, long long total_steps)
    : lr_(learning_rate),
      weight_decay_(weight_decay),
      warmup_fraction_(warmup_fraction),
      total_steps_(total_steps),
      m_(param_count, 0.0),
      v_(param_count, 0.0) {}

double AdamW::current_lr() const {
    const auto warmup_steps =
        static_cast<long long>(warmup_fraction_ * double(total_steps_));
    if (warmup_steps > 0 && t_ < warmup_steps)
        return lr_ * double(t_ + 1) / double(warmup_steps);
    return lr_;
}

void AdamW::step(std::span<double> params, std::span<const double> grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw ValidationError("AdamW: parameter count mismatch");
    const double lr = current_lr();
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, double(t_));
    const double bc2 = 1.0 - std::pow(beta2_, double(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
        const double m_hat = m_[i] / bc1;
        const double v_hat = v_[i] / bc2;
        params[i] -= lr * (m_hat / (std::sqrt(v_hat) + eps_) + weight_decay_ * params[i]);
    }
}

} // namespace qf
