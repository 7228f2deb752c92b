#include "subic/codes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace subic {

namespace {

void check_input(std::span<const double> z, BlockShape shape, const char* who) {
    if (z.size() != shape.width())
        throw dim_error(std::string(who) + ": input length " + std::to_string(z.size()) +
                        " does not match shape width " + std::to_string(shape.width()));
    for (double v : z)
        if (!std::isfinite(v)) throw numeric_error(std::string(who) + ": non-finite input");
}

uint32_t argmax_lowest(std::span<const double> block) {
    uint32_t best = 0;
    for (uint32_t j = 1; j < block.size(); ++j)
        if (block[j] > block[best]) best = j;
    return best;
}

}  // namespace

BlockShape::BlockShape(uint32_t m_, uint32_t k_) : m(m_), k(k_) {
    if (m < 1) throw dim_error("BlockShape: m must be at least 1");
    if (k < 2) throw dim_error("BlockShape: k must be at least 2");
}

void SoftCode::validate() const {
    if (values.size() != shape.width())
        throw dim_error("SoftCode: value count does not match shape");
    for (uint32_t b = 0; b < shape.m; ++b) {
        double sum = 0.0;
        for (double v : block(b)) {
            if (!(v >= 0.0 && v <= 1.0)) throw dim_error("SoftCode: entry outside [0, 1]");
            sum += v;
        }
        if (std::abs(sum - 1.0) > kSimplexTol)
            throw dim_error("SoftCode: block sum deviates from 1 beyond tolerance");
    }
}

std::vector<double> BinaryCode::dense() const {
    validate();
    std::vector<double> out(shape.width(), 0.0);
    for (uint32_t b = 0; b < shape.m; ++b)
        out[static_cast<size_t>(b) * shape.k + indices[b]] = 1.0;
    return out;
}

void BinaryCode::validate() const {
    if (indices.size() != shape.m)
        throw dim_error("BinaryCode: index count does not match shape");
    for (uint32_t idx : indices)
        if (idx >= shape.k) throw dim_error("BinaryCode: index out of range");
}

SoftCode block_softmax(std::span<const double> z, BlockShape shape) {
    check_input(z, shape, "block_softmax");
    SoftCode out{shape, std::vector<double>(shape.width())};
    for (uint32_t b = 0; b < shape.m; ++b) {
        const double* zb = z.data() + static_cast<size_t>(b) * shape.k;
        double* ob = out.values.data() + static_cast<size_t>(b) * shape.k;
        double zmax = zb[0];
        for (uint32_t j = 1; j < shape.k; ++j) zmax = std::max(zmax, zb[j]);
        double sum = 0.0;
        for (uint32_t j = 0; j < shape.k; ++j) {
            ob[j] = std::exp(zb[j] - zmax);
            sum += ob[j];
        }
        for (uint32_t j = 0; j < shape.k; ++j) ob[j] /= sum;
    }
    return out;
}

BinaryCode block_one_hot(std::span<const double> z, BlockShape shape) {
    check_input(z, shape, "block_one_hot");
    BinaryCode out{shape, std::vector<uint32_t>(shape.m)};
    for (uint32_t b = 0; b < shape.m; ++b)
        out.indices[b] = argmax_lowest(z.subspan(static_cast<size_t>(b) * shape.k, shape.k));
    return out;
}

double entropy(std::span<const double> p) {
    if (p.empty()) throw dim_error("entropy: empty distribution");
    double sum = 0.0;
    for (double v : p) {
        if (v < 0.0) throw dim_error("entropy: negative entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kSimplexTol)
        throw dim_error("entropy: sum deviates from 1 beyond tolerance");
    double bits = 0.0;
    for (double v : p)
        if (v > 0.0) bits -= v * std::log2(v);
    return bits;
}

double code_entropy(const SoftCode& c) {
    c.validate();
    double bits = 0.0;
    for (uint32_t b = 0; b < c.shape.m; ++b) bits += entropy(c.block(b));
    return bits;
}

double mean_entropy(std::span<const SoftCode> batch) {
    if (batch.empty()) throw dim_error("mean_entropy: empty batch");
    const BlockShape shape = batch[0].shape;
    double bits = 0.0;
    for (const SoftCode& c : batch) {
        if (c.shape != shape) throw dim_error("mean_entropy: shape mismatch within batch");
        bits += code_entropy(c);
    }
    return bits / (static_cast<double>(batch.size()) * shape.m);
}

double batch_entropy(std::span<const SoftCode> batch) {
    if (batch.empty()) throw dim_error("batch_entropy: empty batch");
    const BlockShape shape = batch[0].shape;
    std::vector<double> mean(shape.width(), 0.0);
    for (const SoftCode& c : batch) {
        if (c.shape != shape) throw dim_error("batch_entropy: shape mismatch within batch");
        c.validate();
        for (uint32_t j = 0; j < shape.width(); ++j) mean[j] += c.values[j];
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& v : mean) v *= inv;
    double bits = 0.0;
    for (uint32_t b = 0; b < shape.m; ++b)
        bits += entropy({mean.data() + static_cast<size_t>(b) * shape.k, shape.k});
    return bits / shape.m;
}

std::vector<double> projection_residual(const SoftCode& c) {
    c.validate();
    std::vector<double> out(c.shape.m);
    for (uint32_t b = 0; b < c.shape.m; ++b) {
        auto blk = c.block(b);
        const uint32_t a = argmax_lowest(blk);
        double sq = 0.0;
        for (uint32_t j = 0; j < c.shape.k; ++j) {
            const double d = (j == a ? 1.0 : 0.0) - blk[j];
            sq += d * d;
        }
        out[b] = std::sqrt(sq);
    }
    return out;
}

std::vector<uint8_t> pack(const BinaryCode& code) {
    code.validate();
    const uint32_t w = code.shape.bits_per_block();
    std::vector<uint8_t> bytes(code.shape.record_bytes(), 0);
    size_t bitpos = 0;
    for (uint32_t b = 0; b < code.shape.m; ++b) {
        const uint32_t idx = code.indices[b];
        for (int j = static_cast<int>(w) - 1; j >= 0; --j, ++bitpos) {
            const uint8_t bit = static_cast<uint8_t>((idx >> j) & 1u);
            bytes[bitpos >> 3] |= static_cast<uint8_t>(bit << (7 - (bitpos & 7)));
        }
    }
    return bytes;
}

void unpack_into(std::span<const uint8_t> bytes, BlockShape shape, uint32_t* indices) {
    if (bytes.size() != shape.record_bytes())
        throw format_error("unpack: byte length mismatch");
    const uint32_t w = shape.bits_per_block();
    if (w == 8) {  // one byte per block
        for (uint32_t b = 0; b < shape.m; ++b) {
            indices[b] = bytes[b];
            if (indices[b] >= shape.k) throw format_error("unpack: decoded index out of range");
        }
        return;
    }
    size_t bitpos = 0;
    for (uint32_t b = 0; b < shape.m; ++b) {
        uint32_t idx = 0;
        for (uint32_t j = 0; j < w; ++j, ++bitpos)
            idx = (idx << 1) | ((bytes[bitpos >> 3] >> (7 - (bitpos & 7))) & 1u);
        if (idx >= shape.k) throw format_error("unpack: decoded index out of range");
        indices[b] = idx;
    }
}

BinaryCode unpack(std::span<const uint8_t> bytes, BlockShape shape) {
    BinaryCode out{shape, std::vector<uint32_t>(shape.m)};
    unpack_into(bytes, shape, out.indices.data());
    return out;
}

}  // namespace subic
