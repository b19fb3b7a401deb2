#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tensorm/tensor.hpp"

namespace tensorm {

inline double sigmoid(double z) noexcept { return 1.0 / (1.0 + std::exp(-z)); }

/// log(sigmoid(z)) without overflow for large |z|.
inline double log_sigmoid(double z) noexcept {
    return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

inline double logit(double p) noexcept { return std::log(p) - std::log1p(-p); }

/// Binary N_k x L matrix. Each row is packed into 64-bit words so that a
/// whole row of latent memberships can be combined with a single AND.
class FactorMatrix {
  public:
    FactorMatrix() = default;
    FactorMatrix(std::size_t rows, std::size_t rank);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t rank() const noexcept { return rank_; }
    /// 64-bit words per packed row.
    std::size_t words() const noexcept { return words_; }

    bool get(std::size_t row, std::size_t l) const noexcept {
        return (bits_[row * words_ + l / 64] >> (l % 64)) & 1u;
    }
    void set(std::size_t row, std::size_t l, bool value) noexcept {
        auto& word = bits_[row * words_ + l / 64];
        const auto bit = std::uint64_t{1} << (l % 64);
        word = value ? (word | bit) : (word & ~bit);
    }

    std::span<const std::uint64_t> row_mask(std::size_t row) const noexcept {
        return {bits_.data() + row * words_, words_};
    }
    std::span<std::uint64_t> row_mask(std::size_t row) noexcept {
        return {bits_.data() + row * words_, words_};
    }

    std::size_t count_ones() const noexcept;
    void clear_column(std::size_t l) noexcept;

    /// Copy with the listed columns dropped; remaining columns keep their order.
    FactorMatrix without_columns(std::span<const std::size_t> drop) const;

    friend bool operator==(const FactorMatrix&, const FactorMatrix&) = default;

  private:
    std::size_t rows_ = 0;
    std::size_t rank_ = 0;
    std::size_t words_ = 0;
    std::vector<std::uint64_t> bits_;
};

/// Row-major real matrix, used for posterior means.
struct RealMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    double operator()(std::size_t r, std::size_t c) const noexcept { return values[r * cols + c]; }
    double& operator()(std::size_t r, std::size_t c) noexcept { return values[r * cols + c]; }
};

/// Bernoulli noise over the Boolean product: an entry agrees with the
/// product with probability sigmoid(lambda). alpha/beta are Beta prior
/// pseudo-counts of correct/incorrect predictions on sigmoid(lambda).
struct NoiseModel {
    double lambda = 0.5;
    double alpha = 1.0;
    double beta = 1.0;

    double sigma() const noexcept { return sigmoid(lambda); }
    /// Throws ArgumentError when lambda < 0 or a pseudo-count is not positive.
    void validate() const;

    friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

/// K factor matrices sharing one rank, plus the noise model. Each latent
/// dimension carries a stable label that survives pruning.
struct ModelState {
    std::vector<FactorMatrix> factors;
    NoiseModel noise;
    std::vector<int> labels;

    /// All-zero factors of the given rank, labels 0..rank-1.
    static ModelState zeros(std::span<const std::size_t> dims, std::size_t rank, NoiseModel noise = {});

    std::size_t order() const noexcept { return factors.size(); }
    std::size_t rank() const noexcept { return labels.size(); }

    /// Throws ArgumentError when factor shapes disagree with `dims`.
    void check_dims(std::span<const std::size_t> dims) const;

    /// Drops latent dimensions (positions, not labels) from every mode.
    void remove_dimensions(std::span<const std::size_t> positions);

    friend bool operator==(const ModelState&, const ModelState&) = default;
};

/// Boolean CP product at one entry: true iff some latent dimension has all
/// K factors active at `idx`.
bool deterministic_product_entry(const ModelState& state, std::span<const std::size_t> idx);

/// Boolean product for every entry, row-major (1 byte per entry).
std::vector<std::uint8_t> boolean_product(const ModelState& state);

/// log p(x | factors, lambda) for one entry coded in {-1, 0, +1}. Missing
/// entries contribute exactly log(1/2).
double entry_log_likelihood(const ModelState& state, std::span<const std::size_t> idx, std::int8_t x);

/// Sum of entry_log_likelihood over all entries. Missing entries are not
/// visited; their log(1/2) contributions are added in closed form.
double total_log_likelihood(const ModelState& state, const ObservedTensor& t);

struct AgreementCount {
    std::size_t correct = 0;
    std::size_t observed = 0;
};

/// Observed entries reproduced by the deterministic Boolean product.
AgreementCount count_agreement(const ModelState& state, const ObservedTensor& t);

} // namespace tensorm
