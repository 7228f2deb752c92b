#include "subic/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "subic/io_util.hpp"
#include "subic/simd/kernels.hpp"

namespace subic {

namespace {

constexpr uint32_t kCodebookVersion = 1;

uint32_t nearest_centroid(const double* point, const double* centroids, uint32_t k, uint32_t dim) {
    uint32_t best = 0;
    double best_d = simd::l2sqr(point, centroids, dim);
    for (uint32_t c = 1; c < k; ++c) {
        const double d = simd::l2sqr(point, centroids + static_cast<size_t>(c) * dim, dim);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

// D^2-weighted seeding; deterministic walk of the prefix sums.
std::vector<double> kmeanspp_seed(std::span<const double> points, size_t n, uint32_t dim,
                                  uint32_t k, std::mt19937_64& rng) {
    std::vector<double> centroids(static_cast<size_t>(k) * dim);
    std::uniform_int_distribution<size_t> pick_first(0, n - 1);
    std::copy_n(points.data() + pick_first(rng) * dim, dim, centroids.data());

    std::vector<double> dist2(n);
    for (size_t i = 0; i < n; ++i)
        dist2[i] = simd::l2sqr(points.data() + i * dim, centroids.data(), dim);

    for (uint32_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double v : dist2) total += v;
        size_t chosen = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            const double target = u(rng);
            double acc = 0.0;
            chosen = n - 1;
            for (size_t i = 0; i < n; ++i) {
                acc += dist2[i];
                if (acc > target) {
                    chosen = i;
                    break;
                }
            }
        } else {
            std::uniform_int_distribution<size_t> any(0, n - 1);
            chosen = any(rng);
        }
        double* dst = centroids.data() + static_cast<size_t>(c) * dim;
        std::copy_n(points.data() + chosen * dim, dim, dst);
        for (size_t i = 0; i < n; ++i)
            dist2[i] = std::min(dist2[i], simd::l2sqr(points.data() + i * dim, dst, dim));
    }
    return centroids;
}

}  // namespace

void PQCodebooks::validate() const {
    if (d < 1 || d % shape.m != 0) throw dim_error("PQCodebooks: d not divisible by m");
    if (centroids.size() != static_cast<size_t>(shape.m) * shape.k * sub_dim())
        throw dim_error("PQCodebooks: centroid buffer size mismatch");
    for (double v : centroids)
        if (!std::isfinite(v)) throw numeric_error("PQCodebooks: non-finite centroid");
}

KMeansResult kmeans(std::span<const double> points, size_t n, uint32_t dim, uint32_t k,
                    uint32_t iterations, uint64_t seed) {
    if (dim < 1 || k < 1) throw dim_error("kmeans: bad dimensions");
    if (n < 1) throw dim_error("kmeans: no points");
    if (points.size() != n * dim) throw dim_error("kmeans: point buffer size mismatch");
    if (iterations < 1) throw dim_error("kmeans: need at least one iteration");

    std::mt19937_64 rng(seed);
    KMeansResult result;

    if (n < k) {
        // duplicate points cyclically to fill the codebook
        result.padded = true;
        result.centroids.resize(static_cast<size_t>(k) * dim);
        for (uint32_t c = 0; c < k; ++c)
            std::copy_n(points.data() + (c % n) * dim, dim,
                        result.centroids.data() + static_cast<size_t>(c) * dim);
    } else {
        result.centroids = kmeanspp_seed(points, n, dim, k, rng);
    }

    std::vector<uint32_t> assign(n);
    std::vector<size_t> counts(k);
    for (uint32_t it = 0; it < iterations; ++it) {
        for (size_t i = 0; i < n; ++i)
            assign[i] = nearest_centroid(points.data() + i * dim, result.centroids.data(), k, dim);

        std::fill(result.centroids.begin(), result.centroids.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (size_t i = 0; i < n; ++i) {
            simd::axpy(1.0, points.data() + i * dim,
                       result.centroids.data() + static_cast<size_t>(assign[i]) * dim, dim);
            ++counts[assign[i]];
        }
        for (uint32_t c = 0; c < k; ++c)
            if (counts[c] > 0) {
                const double inv = 1.0 / static_cast<double>(counts[c]);
                double* ctr = result.centroids.data() + static_cast<size_t>(c) * dim;
                for (uint32_t j = 0; j < dim; ++j) ctr[j] *= inv;
            }

        // empty clusters steal the farthest point of the largest cluster
        for (uint32_t c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            uint32_t donor = 0;
            for (uint32_t o = 1; o < k; ++o)
                if (counts[o] > counts[donor]) donor = o;
            if (counts[donor] == 0) {
                std::copy_n(points.data(), dim,
                            result.centroids.data() + static_cast<size_t>(c) * dim);
                counts[c] = 0;
                continue;
            }
            size_t far = 0;
            double far_d = -1.0;
            const double* dctr = result.centroids.data() + static_cast<size_t>(donor) * dim;
            for (size_t i = 0; i < n; ++i) {
                if (assign[i] != donor) continue;
                const double d = simd::l2sqr(points.data() + i * dim, dctr, dim);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            std::copy_n(points.data() + far * dim, dim,
                        result.centroids.data() + static_cast<size_t>(c) * dim);
            assign[far] = c;
            counts[c] = 1;
            --counts[donor];
            // recompute the donor mean without the stolen point
            double* donor_ctr = result.centroids.data() + static_cast<size_t>(donor) * dim;
            std::fill_n(donor_ctr, dim, 0.0);
            for (size_t i = 0; i < n; ++i)
                if (assign[i] == donor) simd::axpy(1.0, points.data() + i * dim, donor_ctr, dim);
            if (counts[donor] > 0) {
                const double inv = 1.0 / static_cast<double>(counts[donor]);
                for (uint32_t j = 0; j < dim; ++j) donor_ctr[j] *= inv;
            }
        }

        double sse = 0.0;
        for (size_t i = 0; i < n; ++i)
            sse += simd::l2sqr(points.data() + i * dim,
                               result.centroids.data() + static_cast<size_t>(assign[i]) * dim, dim);
        result.sse_log.push_back(sse);
    }
    return result;
}

PQCodebooks pq_train(const Dataset& features, BlockShape shape, uint32_t iterations,
                     uint64_t seed) {
    features.validate();
    if (features.n == 0) throw dim_error("pq_train: empty dataset");
    if (features.d % shape.m != 0) throw dim_error("pq_train: d not divisible by m");

    PQCodebooks books;
    books.shape = shape;
    books.d = features.d;
    const uint32_t sd = books.sub_dim();
    books.centroids.resize(static_cast<size_t>(shape.m) * shape.k * sd);

    std::vector<double> sub(features.n * sd);
    for (uint32_t b = 0; b < shape.m; ++b) {
        for (size_t i = 0; i < features.n; ++i)
            std::copy_n(features.features.data() + i * features.d + static_cast<size_t>(b) * sd,
                        sd, sub.data() + i * sd);
        const KMeansResult km = kmeans(sub, features.n, sd, shape.k, iterations, seed + b);
        std::copy(km.centroids.begin(), km.centroids.end(),
                  books.centroids.begin() + static_cast<size_t>(b) * shape.k * sd);
    }
    books.validate();
    return books;
}

BinaryCode pq_encode(std::span<const double> feature, const PQCodebooks& books) {
    books.validate();
    if (feature.size() != books.d) throw dim_error("pq_encode: feature dimension mismatch");
    const uint32_t sd = books.sub_dim();
    BinaryCode code{books.shape, std::vector<uint32_t>(books.shape.m)};
    for (uint32_t b = 0; b < books.shape.m; ++b)
        code.indices[b] =
            nearest_centroid(feature.data() + static_cast<size_t>(b) * sd,
                             books.centroids.data() + static_cast<size_t>(b) * books.shape.k * sd,
                             books.shape.k, sd);
    return code;
}

CodeIndex pq_encode_database(const Dataset& features, const PQCodebooks& books) {
    features.validate();
    CodeIndex index;
    index.shape = books.shape;
    index.packed.reserve(features.n * books.shape.record_bytes());
    for (size_t i = 0; i < features.n; ++i)
        index.append(pq_encode(features.row(i), books), static_cast<uint32_t>(i));
    if (features.has_labels()) index.labels = features.labels;
    return index;
}

std::vector<double> adc_table(std::span<const double> query, const PQCodebooks& books) {
    books.validate();
    if (query.size() != books.d) throw dim_error("adc_table: query dimension mismatch");
    const uint32_t sd = books.sub_dim();
    std::vector<double> table(books.shape.width());
    for (uint32_t b = 0; b < books.shape.m; ++b)
        for (uint32_t c = 0; c < books.shape.k; ++c)
            table[static_cast<size_t>(b) * books.shape.k + c] =
                -simd::l2sqr(query.data() + static_cast<size_t>(b) * sd,
                             books.centroid(b, c).data(), sd);
    return table;
}

double pq_adc_score(std::span<const double> query, const BinaryCode& code,
                    const PQCodebooks& books) {
    books.validate();
    if (query.size() != books.d) throw dim_error("pq_adc_score: query dimension mismatch");
    if (code.shape != books.shape) throw dim_error("pq_adc_score: code shape mismatch");
    const uint32_t sd = books.sub_dim();
    double sum = -simd::l2sqr(query.data(), books.centroid(0, code.indices[0]).data(), sd);
    for (uint32_t b = 1; b < books.shape.m; ++b)
        sum += -simd::l2sqr(query.data() + static_cast<size_t>(b) * sd,
                            books.centroid(b, code.indices[b]).data(), sd);
    return sum;
}

void save_codebooks(const std::filesystem::path& path, const PQCodebooks& books) {
    books.validate();
    io::ByteWriter w;
    w.magic("SUBQ");
    w.u32(kCodebookVersion);
    w.u32(books.d);
    w.u32(books.shape.m);
    w.u32(books.shape.k);
    for (double v : books.centroids) w.f64(v);
    io::write_file(path, w.bytes());
}

PQCodebooks load_codebooks(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    io::ByteReader r(bytes);
    r.magic("SUBQ");
    if (r.u32() != kCodebookVersion) throw format_error("SUBQ: unsupported version");
    PQCodebooks books;
    books.d = r.u32();
    const uint32_t m = r.u32();
    const uint32_t k = r.u32();
    if (m < 1 || k < 2 || books.d < 1 || books.d % m != 0)
        throw format_error("SUBQ: bad dimensions");
    books.shape = BlockShape(m, k);
    const size_t expect = static_cast<size_t>(m) * k * (books.d / m) * 8;
    if (r.remaining() != expect) throw format_error("SUBQ: payload size does not match header");
    books.centroids.resize(expect / 8);
    for (double& v : books.centroids) v = r.f64();
    r.expect_end();
    books.validate();
    return books;
}

}  // namespace subic
