#include "subic/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "subic/io_util.hpp"
#include "subic/simd/kernels.hpp"

namespace subic {

namespace {

constexpr uint32_t kIndexVersion = 1;
constexpr size_t kScanTile = 256;  // records decoded per kernel call

}  // namespace

void CodeIndex::append(const BinaryCode& code, uint32_t id) {
    if (code.shape != shape) throw dim_error("CodeIndex: code shape mismatch");
    const auto bytes = pack(code);
    packed.insert(packed.end(), bytes.begin(), bytes.end());
    ids.push_back(id);
}

void CodeIndex::validate() const {
    if (packed.size() != count() * shape.record_bytes())
        throw dim_error("CodeIndex: packed buffer size mismatch");
    if (!labels.empty() && labels.size() != count())
        throw dim_error("CodeIndex: label count mismatch");
    std::unordered_set<uint32_t> seen(ids.begin(), ids.end());
    if (seen.size() != ids.size()) throw dim_error("CodeIndex: duplicate record ids");
}

void QueryEmbedding::validate() const {
    if (z.size() != shape.width()) throw dim_error("QueryEmbedding: width mismatch");
    for (double v : z) {
        if (!std::isfinite(v)) throw numeric_error("QueryEmbedding: non-finite entry");
        if (v < 0) throw dim_error("QueryEmbedding: negative entry");
    }
}

CodeIndex encode_database(const Dataset& features, const ModelParams& params) {
    features.validate();
    params.validate();
    if (features.n > 0 && features.d != params.d)
        throw dim_error("encode_database: feature dimension mismatch");
    CodeIndex index;
    index.shape = params.shape;
    index.packed.reserve(features.n * params.shape.record_bytes());
    index.ids.reserve(features.n);
    for (size_t i = 0; i < features.n; ++i) {
        const auto z = relu_embedding(features.row(i), params);
        index.append(block_one_hot(z, params.shape), static_cast<uint32_t>(i));
    }
    if (features.has_labels()) index.labels = features.labels;
    return index;
}

QueryEmbedding embed_query(std::span<const double> x, const ModelParams& params) {
    params.validate();
    return {params.shape, relu_embedding(x, params)};
}

double asymmetric_score(const QueryEmbedding& q, const BinaryCode& code) {
    if (q.shape != code.shape) throw dim_error("asymmetric_score: shape mismatch");
    const uint32_t k = q.shape.k;
    double sum = q.z[code.indices[0]];
    for (uint32_t b = 1; b < q.shape.m; ++b)
        sum += q.z[static_cast<size_t>(b) * k + code.indices[b]];
    return sum;
}

double asymmetric_score_instrumented(const QueryEmbedding& q, const BinaryCode& code,
                                     ScoreCounters& counters) {
    if (q.shape != code.shape) throw dim_error("asymmetric_score: shape mismatch");
    const uint32_t k = q.shape.k;
    double sum = q.z[code.indices[0]];
    counters.gathers += 1;
    for (uint32_t b = 1; b < q.shape.m; ++b) {
        sum += q.z[static_cast<size_t>(b) * k + code.indices[b]];
        counters.gathers += 1;
        counters.adds += 1;
    }
    return sum;
}

RankedList scan_table(std::span<const double> table, const CodeIndex& index, size_t top_k) {
    if (table.size() != index.shape.width()) throw dim_error("scan_table: table width mismatch");
    if (top_k < 1) throw dim_error("scan_table: top_k must be at least 1");
    const size_t n = index.count();
    if (n == 0) throw dim_error("scan_table: empty index");

    const size_t rb = index.shape.record_bytes();
    const uint32_t m = index.shape.m;
    std::vector<double> scores(n);
    std::vector<uint32_t> idx_tile(kScanTile * m);
    for (size_t start = 0; start < n; start += kScanTile) {
        const size_t tile = std::min(kScanTile, n - start);
        for (size_t r = 0; r < tile; ++r)
            unpack_into({index.packed.data() + (start + r) * rb, rb}, index.shape,
                        idx_tile.data() + r * m);
        simd::gather_accumulate(table.data(), m, index.shape.k, idx_tile.data(), tile,
                                scores.data() + start);
    }

    std::vector<uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    const size_t kept = std::min(top_k, n);
    const auto better = [&](uint32_t a, uint32_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return index.ids[a] < index.ids[b];
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<ptrdiff_t>(kept), order.end(),
                      better);

    RankedList out;
    out.items.reserve(kept);
    for (size_t i = 0; i < kept; ++i)
        out.items.push_back({index.ids[order[i]], scores[order[i]]});
    return out;
}

RankedList search(const QueryEmbedding& q, const CodeIndex& index, size_t top_k) {
    q.validate();
    if (q.shape != index.shape) throw dim_error("search: shape mismatch");
    return scan_table(q.z, index, top_k);
}

uint32_t symmetric_score(const BinaryCode& a, const BinaryCode& b) {
    if (a.shape != b.shape) throw dim_error("symmetric_score: shape mismatch");
    uint32_t agree = 0;
    for (uint32_t i = 0; i < a.shape.m; ++i) agree += a.indices[i] == b.indices[i] ? 1u : 0u;
    return agree;
}

RankedList search_symmetric(const BinaryCode& q, const CodeIndex& index, size_t top_k) {
    q.validate();
    if (q.shape != index.shape) throw dim_error("search_symmetric: shape mismatch");
    // block-agreement count as a score table: 1 at the query's active
    // position of each block, 0 elsewhere
    std::vector<double> table(index.shape.width(), 0.0);
    for (uint32_t b = 0; b < q.shape.m; ++b)
        table[static_cast<size_t>(b) * q.shape.k + q.indices[b]] = 1.0;
    return scan_table(table, index, top_k);
}

double expected_hamming_adds(uint32_t bits) {
    if (bits < 1) throw dim_error("expected_hamming_adds: need at least one bit");
    return bits / 2.0;
}

double average_precision(const RankedList& ranking,
                         const std::unordered_set<uint32_t>& relevant) {
    if (relevant.empty()) throw dim_error("average_precision: empty relevant set");
    size_t hits = 0;
    double precision_sum = 0.0;
    for (size_t rank = 0; rank < ranking.items.size(); ++rank) {
        if (relevant.count(ranking.items[rank].id)) {
            ++hits;
            precision_sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
        }
    }
    return precision_sum / static_cast<double>(relevant.size());
}

MapResult mean_average_precision(std::span<const RankedList> rankings,
                                 std::span<const std::unordered_set<uint32_t>> relevant) {
    if (rankings.size() != relevant.size())
        throw dim_error("mean_average_precision: query count mismatch");
    if (rankings.empty()) throw dim_error("mean_average_precision: no queries");
    MapResult out;
    double sum = 0.0;
    for (size_t i = 0; i < rankings.size(); ++i) {
        if (relevant[i].empty()) {
            ++out.skipped;
            continue;
        }
        sum += average_precision(rankings[i], relevant[i]);
        ++out.evaluated;
    }
    if (out.evaluated == 0) throw dim_error("mean_average_precision: every query was skipped");
    out.map = sum / static_cast<double>(out.evaluated);
    return out;
}

void save_index(const std::filesystem::path& path, const CodeIndex& index) {
    index.validate();
    if (index.count() > 0xffffffffu) throw dim_error("save_index: too many records for format");
    if (index.shape.m > 0xffff || index.shape.k > 0xffff)
        throw format_error("save_index: shape exceeds the u16 fields of the format");
    io::ByteWriter w;
    w.magic("SUBC");
    w.u32(kIndexVersion);
    w.u32(static_cast<uint32_t>(index.count()));
    w.u16(static_cast<uint16_t>(index.shape.m));
    w.u16(static_cast<uint16_t>(index.shape.k));
    w.u8(index.has_labels() ? 1 : 0);
    for (uint32_t id : index.ids) w.u32(id);
    for (uint32_t label : index.labels) w.u32(label);
    w.raw(index.packed);
    io::write_file(path, w.bytes());
}

CodeIndex load_index(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    io::ByteReader r(bytes);
    r.magic("SUBC");
    if (r.u32() != kIndexVersion) throw format_error("SUBC: unsupported version");
    const uint32_t count = r.u32();
    const uint16_t m = r.u16();
    const uint16_t k = r.u16();
    const uint8_t labeled = r.u8();
    if (m < 1 || k < 2) throw format_error("SUBC: bad shape");
    if (labeled > 1) throw format_error("SUBC: bad label flag");

    CodeIndex index;
    index.shape = BlockShape(m, k);
    const size_t expect = static_cast<size_t>(count) * (4 + (labeled ? 4 : 0)) +
                          static_cast<size_t>(count) * index.shape.record_bytes();
    if (r.remaining() != expect) throw format_error("SUBC: payload size does not match header");

    index.ids.resize(count);
    for (uint32_t& id : index.ids) id = r.u32();
    if (labeled) {
        index.labels.resize(count);
        for (uint32_t& label : index.labels) label = r.u32();
    }
    const auto payload = r.raw(static_cast<size_t>(count) * index.shape.record_bytes());
    index.packed.assign(payload.begin(), payload.end());
    r.expect_end();
    index.validate();
    // decode every record once so malformed indices are rejected at load time
    std::vector<uint32_t> probe(index.shape.m);
    for (size_t i = 0; i < index.count(); ++i)
        unpack_into(index.record(i), index.shape, probe.data());
    return index;
}

}  // namespace subic
