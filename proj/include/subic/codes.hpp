#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "subic/error.hpp"

namespace subic {

// Absolute tolerance on per-block sums when validating relaxed codes.
inline constexpr double kSimplexTol = 1e-9;

// Code geometry: m one-hot blocks of dimension k, for an effective rate of
// m * ceil(log2 k) bits per record.
struct BlockShape {
    uint32_t m = 1;
    uint32_t k = 2;

    BlockShape() = default;
    BlockShape(uint32_t m_, uint32_t k_);

    uint32_t width() const { return m * k; }
    uint32_t bits_per_block() const { return static_cast<uint32_t>(std::bit_width(k - 1u)); }
    uint32_t bit_rate() const { return m * bits_per_block(); }
    size_t record_bytes() const { return (static_cast<size_t>(bit_rate()) + 7) / 8; }

    bool operator==(const BlockShape&) const = default;
};

// Relaxed code: m concatenated blocks, each a distribution on the k-simplex.
struct SoftCode {
    BlockShape shape;
    std::vector<double> values;  // width() entries, block-major

    std::span<const double> block(uint32_t block_index) const {
        return {values.data() + static_cast<size_t>(block_index) * shape.k, shape.k};
    }
    void validate() const;
};

// Quantized code: the active position of each block.
struct BinaryCode {
    BlockShape shape;
    std::vector<uint32_t> indices;  // m entries, each < k

    std::vector<double> dense() const;  // one-hot expansion of width() entries
    void validate() const;
};

// Per-block softmax over the m blocks of z. Subtracts the per-block max
// before exponentiation; the result is unchanged and cannot overflow.
SoftCode block_softmax(std::span<const double> z, BlockShape shape);

// Per-block argmax, ties broken toward the lowest index. Invariant under
// block_softmax of the same input.
BinaryCode block_one_hot(std::span<const double> z, BlockShape shape);

// Shannon entropy in bits of a distribution p; 0*log2(0) counts as 0.
// Validates p against the simplex invariants (non-negative entries, sum
// within kSimplexTol of 1).
double entropy(std::span<const double> p);

// Sum of per-block entropies, in [0, m*log2 k] bits.
double code_entropy(const SoftCode& c);

// Average per-block entropy over a batch of identically shaped codes,
// in [0, log2 k].
double mean_entropy(std::span<const SoftCode> batch);

// Per-block entropy of the batch-averaged code, averaged over blocks,
// in [0, log2 k]. Callers that want a penalty negate it.
double batch_entropy(std::span<const SoftCode> batch);

// Distance from each block to its nearest one-hot vertex (the argmax
// vertex); diagnostic only.
std::vector<double> projection_residual(const SoftCode& c);

// Fixed-width packing: each index occupies bits_per_block() bits, written
// MSB-first in block order; the record is zero-padded to whole bytes.
std::vector<uint8_t> pack(const BinaryCode& code);
BinaryCode unpack(std::span<const uint8_t> bytes, BlockShape shape);

// Decode a packed record into caller storage of shape.m entries.
void unpack_into(std::span<const uint8_t> bytes, BlockShape shape, uint32_t* indices);

}  // namespace subic
