#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qf {

/// Input could not be parsed (bad JSON line, malformed TSV row, ...).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input parsed but violates a contract (duplicate id, negative grade, ...).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool starts_with_icase(std::string_view s, std::string_view prefix);

/// Whitespace-token word count (Unicode whitespace treated as ASCII ws +
/// the usual C locale set; no punctuation stripping).
std::size_t word_count(std::string_view s);
std::vector<std::string> split_words(std::string_view s);

std::uint64_t fnv1a64(std::string_view s);

/// Deterministic splitmix64, used to derive sub-seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

/// Dense row-major matrix of doubles. Small on purpose; everything in this
/// project is desk-scale and exact.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double* row(std::size_t i) { return data.data() + i * cols; }
    const double* row(std::size_t i) const { return data.data() + i * cols; }
    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<const double> row_span(std::size_t i) const {
        return {data.data() + i * cols, cols};
    }
};

double dot(std::span<const double> a, std::span<const double> b);

} // namespace qf
