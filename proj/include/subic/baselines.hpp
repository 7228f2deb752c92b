#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "subic/codes.hpp"
#include "subic/data.hpp"
#include "subic/error.hpp"
#include "subic/search.hpp"

namespace subic {

inline constexpr uint32_t kDefaultKMeansIters = 25;

// Product quantizer: shape.m sub-codebooks of shape.k centroids over
// contiguous d/m-dimensional sub-spaces. One record costs the same
// m*ceil(log2 k) bits as the learned codes, so comparisons run at equal
// rate per record.
struct PQCodebooks {
    BlockShape shape;
    uint32_t d = 0;                  // divisible by shape.m
    std::vector<double> centroids;   // m * k * (d/m), sub-codebook-major

    uint32_t sub_dim() const { return d / shape.m; }
    std::span<const double> centroid(uint32_t block, uint32_t index) const {
        const size_t sd = sub_dim();
        return {centroids.data() + (static_cast<size_t>(block) * shape.k + index) * sd, sd};
    }
    void validate() const;
};

struct KMeansResult {
    std::vector<double> centroids;  // k * dim
    std::vector<double> sse_log;    // objective after each Lloyd iteration
    bool padded = false;            // fewer points than clusters; centroids duplicated
};

// k-means++ seeding then a fixed number of Lloyd iterations; empty clusters
// take the farthest point of the largest cluster. Deterministic per seed.
KMeansResult kmeans(std::span<const double> points, size_t n, uint32_t dim, uint32_t k,
                    uint32_t iterations, uint64_t seed);

// Independent k-means per sub-space (sub-space b uses seed + b).
PQCodebooks pq_train(const Dataset& features, BlockShape shape, uint32_t iterations,
                     uint64_t seed);

// Nearest centroid per sub-space by squared Euclidean distance, ties to the
// lowest index.
BinaryCode pq_encode(std::span<const double> feature, const PQCodebooks& books);
CodeIndex pq_encode_database(const Dataset& features, const PQCodebooks& books);

// Per-query table of negated squared sub-distances, laid out like a score
// table of width m*k so the packed-index scan applies unchanged.
std::vector<double> adc_table(std::span<const double> query, const PQCodebooks& books);

// Negated squared distance between the query and the code's reconstruction;
// higher is better.
double pq_adc_score(std::span<const double> query, const BinaryCode& code,
                    const PQCodebooks& books);

// Codebook file: "SUBQ", version u32, d u32, m u32, k u32, centroids as
// float64 LE in sub-codebook-major order.
void save_codebooks(const std::filesystem::path& path, const PQCodebooks& books);
PQCodebooks load_codebooks(const std::filesystem::path& path);

}  // namespace subic
