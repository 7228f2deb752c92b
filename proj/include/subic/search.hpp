#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_set>
#include <vector>

#include "subic/codes.hpp"
#include "subic/data.hpp"
#include "subic/error.hpp"
#include "subic/network.hpp"

namespace subic {

// Immutable packed-code database: one record per id, laid out with the
// pack() bit format so a record is O(m log k) bits on disk and in memory.
struct CodeIndex {
    BlockShape shape;
    std::vector<uint8_t> packed;    // count * shape.record_bytes()
    std::vector<uint32_t> ids;      // unique record identifiers
    std::vector<uint32_t> labels;   // empty, or one class per record

    size_t count() const { return ids.size(); }
    bool has_labels() const { return !labels.empty(); }
    std::span<const uint8_t> record(size_t i) const {
        const size_t rb = shape.record_bytes();
        return {packed.data() + i * rb, rb};
    }
    BinaryCode code_at(size_t i) const { return unpack(record(i), shape); }
    void append(const BinaryCode& code, uint32_t id);
    void validate() const;
};

// Real-valued query-side representation; the database side stays binary.
struct QueryEmbedding {
    BlockShape shape;
    std::vector<double> z;  // width entries, entrywise >= 0

    void validate() const;
};

struct ScoredId {
    uint32_t id = 0;
    double score = 0;
};

// Scores non-increasing; ids ascending within equal scores.
struct RankedList {
    std::vector<ScoredId> items;
};

// relu embeddings binarized per block and packed in input order; labels
// carried over when the dataset has them.
CodeIndex encode_database(const Dataset& features, const ModelParams& params);

QueryEmbedding embed_query(std::span<const double> x, const ModelParams& params);

// Inner product of the embedding with the code's one-hot expansion: one
// gather per block, m-1 additions.
double asymmetric_score(const QueryEmbedding& q, const BinaryCode& code);

struct ScoreCounters {
    uint64_t gathers = 0;
    uint64_t adds = 0;
};

double asymmetric_score_instrumented(const QueryEmbedding& q, const BinaryCode& code,
                                     ScoreCounters& counters);

// Exhaustive scan of the index against any width-sized score table; returns
// the top_k records by descending score, ties by ascending id.
RankedList scan_table(std::span<const double> table, const CodeIndex& index, size_t top_k);
RankedList search(const QueryEmbedding& q, const CodeIndex& index, size_t top_k);

// Number of blocks whose active index agrees; the symmetric ablation of the
// asymmetric scorer.
uint32_t symmetric_score(const BinaryCode& a, const BinaryCode& b);
RankedList search_symmetric(const BinaryCode& q, const CodeIndex& index, size_t top_k);

// Expected additions of a Hamming-distance scan over codes of `bits` bits
// with i.i.d. uniform bits: bits / 2.
double expected_hamming_adds(uint32_t bits);

// Non-interpolated average precision: mean of precision at each relevant
// hit, normalized by the total relevant count.
double average_precision(const RankedList& ranking, const std::unordered_set<uint32_t>& relevant);

struct MapResult {
    double map = 0;
    size_t evaluated = 0;
    size_t skipped = 0;  // queries with an empty relevant set
};

MapResult mean_average_precision(std::span<const RankedList> rankings,
                                 std::span<const std::unordered_set<uint32_t>> relevant);

// Index file: "SUBC", version u32, count u32, m u16, k u16, labels-present
// u8, ids u32 each, labels u32 each when present, then the packed records.
void save_index(const std::filesystem::path& path, const CodeIndex& index);
CodeIndex load_index(const std::filesystem::path& path);

}  // namespace subic
