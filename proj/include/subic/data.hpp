#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "subic/error.hpp"

namespace subic {

// Feature matrix with optional integer class labels. Features are held as
// doubles; the on-disk format is float32, so values loaded from disk are
// exactly float32-representable.
struct Dataset {
    size_t n = 0;
    uint32_t d = 0;
    uint32_t num_classes = 0;        // 0 when labels are absent
    std::vector<double> features;    // n*d, row-major
    std::vector<uint32_t> labels;    // size n, or empty

    bool has_labels() const { return !labels.empty(); }
    std::span<const double> row(size_t i) const {
        return {features.data() + i * d, d};
    }
    void validate() const;
};

struct LabelSet {
    std::vector<uint32_t> labels;
    uint32_t num_classes = 0;
};

// Draws num_classes isotropic Gaussian class centers scaled by class_spread,
// then samples each point as center + isotropic noise. Classes are balanced
// (n / num_classes each, remainder spread over the first classes) and laid
// out contiguously per class.
Dataset gen_synthetic(size_t n, uint32_t d, uint32_t num_classes, double class_spread,
                      double noise, uint64_t seed);

// Feature file: "SUBF", version u32, n u32, d u32, row-major float32 LE.
// Label file:   "SUBL", version u32, n u32, num_classes u32, labels u32 LE.
// Loaders also accept headered CSV for paths ending in .csv.
void save_features(const std::filesystem::path& path, const Dataset& ds);
Dataset load_features(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, const LabelSet& ls);
LabelSet load_labels(const std::filesystem::path& path);

void attach_labels(Dataset& ds, const LabelSet& ls);
LabelSet label_set(const Dataset& ds);

struct SplitFractions {
    double train = 0;
    double db = 0;
    double query = 0;
};

struct Splits {
    Dataset train, db, query;
};

// Seeded permutation, then contiguous slices. Per-split sizes are the
// floors of fraction*n with the leftover going to train; rows not covered
// when the fractions sum below 1 are dropped. Zero fractions are allowed,
// the sum must be positive and at most 1.
Splits split(const Dataset& ds, SplitFractions fractions, uint64_t seed);

// Mini-batch index stream: reshuffles each epoch with a seeded generator,
// yields fixed-size batches, drops each epoch's short remainder.
class BatchStream {
public:
    BatchStream(size_t n, size_t batch_size, uint64_t seed);
    std::span<const size_t> next();
    size_t batches_per_epoch() const { return order_.size() / batch_size_; }

private:
    std::vector<size_t> order_;
    size_t batch_size_;
    size_t pos_;
    std::mt19937_64 rng_;
};

}  // namespace subic
