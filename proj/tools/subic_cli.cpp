// Command-line front end: generation, training, encoding, search, PQ
// baseline, evaluation, diagnostics and the scoring benchmark.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "subic/baselines.hpp"
#include "subic/codes.hpp"
#include "subic/data.hpp"
#include "subic/io_util.hpp"
#include "subic/network.hpp"
#include "subic/search.hpp"
#include "subic/simd/kernels.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace subic;

namespace {

constexpr const char* kToolVersion = "1.0.0";

// Every command leaves a <out>.manifest.json recording its configuration and
// the digests of everything it read and wrote.
struct Manifest {
    std::string command;
    json config = json::object();
    json results = json::object();
    json inputs = json::object();
    json outputs = json::object();

    void input(const fs::path& p) { inputs[p.string()] = io::file_digest(p); }
    void output(const fs::path& p) { outputs[p.string()] = io::file_digest(p); }

    void write(const fs::path& primary_out) const {
        json doc;
        doc["tool"] = {{"name", "subic"},
                       {"version", kToolVersion},
                       {"isa", simd::isa_name(simd::active_isa())}};
        doc["command"] = command;
        doc["config"] = config;
        doc["format_versions"] = {{"SUBF", 1}, {"SUBL", 1}, {"SUBM", 1}, {"SUBC", 1}, {"SUBQ", 1}};
        doc["inputs"] = inputs;
        doc["outputs"] = outputs;
        if (!results.empty()) doc["results"] = results;
        const std::string text = doc.dump(2) + "\n";
        io::write_file(primary_out.string() + ".manifest.json",
                       {reinterpret_cast<const uint8_t*>(text.data()), text.size()});
    }
};

void write_text(const fs::path& path, const std::string& text) {
    io::write_file(path, {reinterpret_cast<const uint8_t*>(text.data()), text.size()});
}

Dataset load_labeled(const fs::path& features, const fs::path& labels) {
    Dataset ds = load_features(features);
    attach_labels(ds, load_labels(labels));
    return ds;
}

// ---------------------------------------------------------------------------
// gen-data

struct GenOpts {
    size_t n = 1000;
    uint32_t d = 32;
    uint32_t c = 10;
    double spread = 10.0;
    double noise = 1.0;
    uint64_t seed = 0;
    std::string out;
    std::string labels;
};

int cmd_gen_data(const GenOpts& o) {
    const Dataset ds = gen_synthetic(o.n, o.d, o.c, o.spread, o.noise, o.seed);
    const fs::path labels_path = o.labels.empty() ? fs::path(o.out + ".labels") : fs::path(o.labels);
    save_features(o.out, ds);
    save_labels(labels_path, label_set(ds));

    Manifest m;
    m.command = "gen-data";
    m.config = {{"n", o.n},         {"d", o.d},       {"c", o.c},     {"spread", o.spread},
                {"noise", o.noise}, {"seed", o.seed}, {"out", o.out}, {"labels", labels_path.string()}};
    m.output(o.out);
    m.output(labels_path);
    m.write(o.out);
    std::printf("wrote %zu x %u features to %s\n", ds.n, ds.d, o.out.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
    std::string in, labels, out, log;
    uint32_t m = 8, k = 256;
    Hyperparams hyper;
};

int cmd_train(const TrainOpts& o) {
    const Dataset ds = load_labeled(o.in, o.labels);
    const TrainResult r = train(ds, BlockShape(o.m, o.k), o.hyper);
    const fs::path log_path = o.log.empty() ? fs::path(o.out + ".log.csv") : fs::path(o.log);
    save_model(o.out, r.params);
    write_training_log(log_path, r.log);

    Manifest man;
    man.command = "train";
    man.config = {{"in", o.in},
                  {"labels", o.labels},
                  {"out", o.out},
                  {"log", log_path.string()},
                  {"m", o.m},
                  {"k", o.k},
                  {"gamma", o.hyper.gamma},
                  {"mu", o.hyper.mu},
                  {"lr", o.hyper.learning_rate},
                  {"momentum", o.hyper.momentum},
                  {"batch_size", o.hyper.batch_size},
                  {"num_batches", o.hyper.num_batches},
                  {"seed", o.hyper.seed}};
    if (!r.log.empty()) {
        man.results["final_total"] = r.log.back().total;
        man.results["final_cls"] = r.log.back().cls;
    }
    man.input(o.in);
    man.input(o.labels);
    man.output(o.out);
    man.output(log_path);
    man.write(o.out);
    if (!r.log.empty())
        std::printf("trained %zu batches, final loss %.6f\n", r.log.size(), r.log.back().total);
    return 0;
}

// ---------------------------------------------------------------------------
// encode / embed / index

struct EncodeOpts {
    std::string in, model, labels, out;
};

int cmd_encode(const EncodeOpts& o) {
    Dataset ds = load_features(o.in);
    if (!o.labels.empty()) attach_labels(ds, load_labels(o.labels));
    const ModelParams params = load_model(o.model);
    const CodeIndex index = encode_database(ds, params);
    save_index(o.out, index);

    Manifest m;
    m.command = "encode";
    m.config = {{"in", o.in}, {"model", o.model}, {"labels", o.labels}, {"out", o.out}};
    m.input(o.in);
    m.input(o.model);
    if (!o.labels.empty()) m.input(o.labels);
    m.output(o.out);
    m.results = {{"records", index.count()},
                 {"record_bytes", index.shape.record_bytes()},
                 {"bit_rate", index.shape.bit_rate()}};
    m.write(o.out);
    std::printf("encoded %zu records at %u bits each\n", index.count(), index.shape.bit_rate());
    return 0;
}

int cmd_embed(const EncodeOpts& o) {
    const Dataset ds = load_features(o.in);
    const ModelParams params = load_model(o.model);
    Dataset emb;
    emb.n = ds.n;
    emb.d = params.shape.width();
    emb.features.reserve(emb.n * emb.d);
    for (size_t i = 0; i < ds.n; ++i) {
        const auto z = relu_embedding(ds.row(i), params);
        emb.features.insert(emb.features.end(), z.begin(), z.end());
    }
    save_features(o.out, emb);

    Manifest m;
    m.command = "embed";
    m.config = {{"in", o.in}, {"model", o.model}, {"out", o.out}};
    m.input(o.in);
    m.input(o.model);
    m.output(o.out);
    m.write(o.out);
    std::printf("embedded %zu queries to width %u\n", emb.n, emb.d);
    return 0;
}

struct IndexOpts {
    std::string in, labels, out;
};

int cmd_index(const IndexOpts& o) {
    CodeIndex index = load_index(o.in);
    const LabelSet ls = load_labels(o.labels);
    if (ls.labels.size() != index.count())
        throw dim_error("index: label count does not match records");
    index.labels = ls.labels;
    save_index(o.out, index);

    Manifest m;
    m.command = "index";
    m.config = {{"in", o.in}, {"labels", o.labels}, {"out", o.out}};
    m.input(o.in);
    m.input(o.labels);
    m.output(o.out);
    m.write(o.out);
    std::printf("attached %zu labels\n", index.count());
    return 0;
}

// ---------------------------------------------------------------------------
// search

struct SearchOpts {
    std::string index, in, model, codebooks, out;
    std::string scorer = "asym";
    size_t top_k = 10;
};

int cmd_search(const SearchOpts& o) {
    const CodeIndex index = load_index(o.index);
    const Dataset queries = load_features(o.in);

    ModelParams params;
    PQCodebooks books;
    if (o.scorer == "pq") {
        if (o.codebooks.empty()) throw dim_error("search: --scorer pq needs --codebooks");
        books = load_codebooks(o.codebooks);
    } else if (o.scorer == "asym" || o.scorer == "sym") {
        if (o.model.empty()) throw dim_error("search: --scorer " + o.scorer + " needs --model");
        params = load_model(o.model);
    } else {
        throw dim_error("search: unknown scorer " + o.scorer);
    }

    std::string csv = "query_id,rank,db_id,score\n";
    for (size_t qi = 0; qi < queries.n; ++qi) {
        RankedList ranked;
        if (o.scorer == "asym") {
            ranked = search(embed_query(queries.row(qi), params), index, o.top_k);
        } else if (o.scorer == "sym") {
            const auto z = relu_embedding(queries.row(qi), params);
            ranked = search_symmetric(block_one_hot(z, params.shape), index, o.top_k);
        } else {
            ranked = scan_table(adc_table(queries.row(qi), books), index, o.top_k);
        }
        for (size_t r = 0; r < ranked.items.size(); ++r) {
            csv += std::to_string(qi) + ',' + std::to_string(r + 1) + ',' +
                   std::to_string(ranked.items[r].id) + ',' +
                   io::format_double(ranked.items[r].score) + '\n';
        }
    }
    write_text(o.out, csv);

    Manifest m;
    m.command = "search";
    m.config = {{"index", o.index},         {"in", o.in},         {"model", o.model},
                {"codebooks", o.codebooks}, {"scorer", o.scorer}, {"top_k", o.top_k},
                {"out", o.out}};
    m.input(o.index);
    m.input(o.in);
    if (!o.model.empty()) m.input(o.model);
    if (!o.codebooks.empty()) m.input(o.codebooks);
    m.output(o.out);
    m.results = {{"queries", queries.n}, {"records", index.count()}};
    m.write(o.out);
    std::printf("ranked %zu records for %zu queries\n", index.count(), queries.n);
    return 0;
}

// ---------------------------------------------------------------------------
// eval-map

struct EvalOpts {
    std::string in, index, labels, out;
};

int cmd_eval_map(const EvalOpts& o) {
    const CodeIndex index = load_index(o.index);
    if (!index.has_labels()) throw dim_error("eval-map: index carries no labels");
    const LabelSet query_labels = load_labels(o.labels);

    // results csv -> per-query rankings, rows already rank-ordered
    const auto bytes = io::read_file(o.in);
    std::string text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    std::vector<RankedList> rankings(query_labels.labels.size());
    size_t pos = 0;
    auto next_line = [&](std::string& line) {
        if (pos >= text.size()) return false;
        size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        pos = end + 1;
        return true;
    };
    std::string line;
    if (!next_line(line) || line != "query_id,rank,db_id,score")
        throw format_error("eval-map: unexpected results header");
    while (next_line(line)) {
        if (line.empty()) continue;
        unsigned long qid = 0, rank = 0, db = 0;
        double score = 0;
        if (std::sscanf(line.c_str(), "%lu,%lu,%lu,%lf", &qid, &rank, &db, &score) != 4)
            throw format_error("eval-map: bad results row: " + line);
        if (qid >= rankings.size()) throw format_error("eval-map: query id exceeds label count");
        rankings[qid].items.push_back({static_cast<uint32_t>(db), score});
    }

    std::vector<std::unordered_set<uint32_t>> relevant(rankings.size());
    for (size_t q = 0; q < rankings.size(); ++q)
        for (size_t j = 0; j < index.count(); ++j)
            if (index.labels[j] == query_labels.labels[q]) relevant[q].insert(index.ids[j]);

    std::string csv = "query_id,ap,relevant_count\n";
    double sum = 0;
    size_t evaluated = 0, skipped = 0;
    for (size_t q = 0; q < rankings.size(); ++q) {
        if (relevant[q].empty()) {
            ++skipped;
            csv += std::to_string(q) + ",,0\n";
            continue;
        }
        const double ap = average_precision(rankings[q], relevant[q]);
        sum += ap;
        ++evaluated;
        csv += std::to_string(q) + ',' + io::format_double(ap) + ',' +
               std::to_string(relevant[q].size()) + '\n';
    }
    if (evaluated == 0) throw dim_error("eval-map: no query has relevant records");
    const double map = sum / static_cast<double>(evaluated);
    write_text(o.out, csv);

    json summary = {{"map", map}, {"evaluated", evaluated}, {"skipped", skipped}};
    std::printf("%s\n", summary.dump().c_str());

    Manifest m;
    m.command = "eval-map";
    m.config = {{"in", o.in}, {"index", o.index}, {"labels", o.labels}, {"out", o.out}};
    m.input(o.in);
    m.input(o.index);
    m.input(o.labels);
    m.output(o.out);
    m.results = summary;
    m.write(o.out);
    return 0;
}

// ---------------------------------------------------------------------------
// classify

struct ClassifyOpts {
    std::string index, model, out;
};

int cmd_classify(const ClassifyOpts& o) {
    const CodeIndex index = load_index(o.index);
    const ModelParams params = load_model(o.model);
    if (params.shape != index.shape) throw dim_error("classify: model and index shapes differ");

    std::string csv = index.has_labels() ? "id,predicted,label\n" : "id,predicted\n";
    size_t correct = 0;
    for (size_t i = 0; i < index.count(); ++i) {
        const Classification c = classify_code(index.code_at(i), params.w1, params.b1);
        csv += std::to_string(index.ids[i]) + ',' + std::to_string(c.label);
        if (index.has_labels()) {
            csv += ',' + std::to_string(index.labels[i]);
            correct += c.label == index.labels[i] ? 1 : 0;
        }
        csv += '\n';
    }
    write_text(o.out, csv);

    Manifest m;
    m.command = "classify";
    m.config = {{"index", o.index}, {"model", o.model}, {"out", o.out}};
    m.input(o.index);
    m.input(o.model);
    m.output(o.out);
    m.results["records"] = index.count();
    if (index.has_labels() && index.count() > 0) {
        const double acc = static_cast<double>(correct) / static_cast<double>(index.count());
        m.results["accuracy"] = acc;
        std::printf("accuracy %.4f over %zu records\n", acc, index.count());
    }
    m.write(o.out);
    return 0;
}

// ---------------------------------------------------------------------------
// pq-train / pq-encode

struct PqTrainOpts {
    std::string in, out;
    uint32_t m = 8, k = 256;
    uint32_t iters = kDefaultKMeansIters;
    uint64_t seed = 0;
};

int cmd_pq_train(const PqTrainOpts& o) {
    const Dataset ds = load_features(o.in);
    const PQCodebooks books = pq_train(ds, BlockShape(o.m, o.k), o.iters, o.seed);
    save_codebooks(o.out, books);

    Manifest m;
    m.command = "pq-train";
    m.config = {{"in", o.in},       {"m", o.m},       {"k", o.k},
                {"iters", o.iters}, {"seed", o.seed}, {"out", o.out}};
    m.input(o.in);
    m.output(o.out);
    m.write(o.out);
    std::printf("trained %u codebooks of %u centroids (dim %u)\n", o.m, o.k, books.sub_dim());
    return 0;
}

struct PqEncodeOpts {
    std::string in, codebooks, labels, out;
};

int cmd_pq_encode(const PqEncodeOpts& o) {
    Dataset ds = load_features(o.in);
    if (!o.labels.empty()) attach_labels(ds, load_labels(o.labels));
    const PQCodebooks books = load_codebooks(o.codebooks);
    const CodeIndex index = pq_encode_database(ds, books);
    save_index(o.out, index);

    Manifest m;
    m.command = "pq-encode";
    m.config = {{"in", o.in}, {"codebooks", o.codebooks}, {"labels", o.labels}, {"out", o.out}};
    m.input(o.in);
    m.input(o.codebooks);
    if (!o.labels.empty()) m.input(o.labels);
    m.output(o.out);
    m.results = {{"records", index.count()}, {"bit_rate", index.shape.bit_rate()}};
    m.write(o.out);
    std::printf("pq-encoded %zu records at %u bits each\n", index.count(), index.shape.bit_rate());
    return 0;
}

// ---------------------------------------------------------------------------
// diagnostics

struct DiagOpts {
    std::string in, model, out;
};

int cmd_diagnostics(const DiagOpts& o) {
    const Dataset ds = load_features(o.in);
    const ModelParams params = load_model(o.model);
    if (ds.n == 0) throw dim_error("diagnostics: empty feature set");
    const uint32_t k = params.shape.k;

    // first-block statistics across the encoded set: the per-rank mean of the
    // sorted relaxed block, and the sorted support histogram of the argmax
    std::vector<double> sorted_mean(k, 0.0);
    std::vector<size_t> hist(k, 0);
    for (size_t i = 0; i < ds.n; ++i) {
        const auto z = relu_embedding(ds.row(i), params);
        const SoftCode soft = block_softmax(z, params.shape);
        std::vector<double> block(soft.values.begin(), soft.values.begin() + k);
        std::sort(block.rbegin(), block.rend());
        for (uint32_t j = 0; j < k; ++j) sorted_mean[j] += block[j];
        ++hist[block_one_hot(z, params.shape).indices[0]];
    }
    for (double& v : sorted_mean) v /= static_cast<double>(ds.n);
    std::sort(hist.rbegin(), hist.rend());

    double support_bits = 0.0;
    for (size_t c : hist) {
        if (c == 0) continue;
        const double f = static_cast<double>(c) / static_cast<double>(ds.n);
        support_bits -= f * std::log2(f);
    }

    const fs::path onehot_path = o.out + "_onehot.csv";
    const fs::path support_path = o.out + "_support.csv";
    std::string csv = "rank,mean_value\n";
    for (uint32_t j = 0; j < k; ++j)
        csv += std::to_string(j + 1) + ',' + io::format_double(sorted_mean[j]) + '\n';
    write_text(onehot_path, csv);

    csv = "rank,count,fraction\n";
    for (uint32_t j = 0; j < k; ++j)
        csv += std::to_string(j + 1) + ',' + std::to_string(hist[j]) + ',' +
               io::format_double(static_cast<double>(hist[j]) / static_cast<double>(ds.n)) + '\n';
    write_text(support_path, csv);

    json summary = {{"n", ds.n},
                    {"mean_top1", sorted_mean[0]},
                    {"support_entropy_bits", support_bits},
                    {"support_entropy_max_bits", std::log2(static_cast<double>(k))}};
    std::printf("%s\n", summary.dump().c_str());

    Manifest m;
    m.command = "diagnostics";
    m.config = {{"in", o.in}, {"model", o.model}, {"out", o.out}};
    m.input(o.in);
    m.input(o.model);
    m.output(onehot_path);
    m.output(support_path);
    m.results = summary;
    m.write(o.out);
    return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchOpts {
    uint32_t m = 8, k = 256;
    size_t count = 100000;
    size_t repeats = 5;
    size_t top_k = 10;
    uint64_t seed = 0;
    std::string isa = "auto";
    std::string out = "bench.json";
};

int cmd_bench(const BenchOpts& o) {
    if (o.isa == "scalar") simd::force_isa(simd::Isa::scalar);
    else if (o.isa == "avx2") simd::force_isa(simd::Isa::avx2);
    else if (o.isa != "auto") throw dim_error("bench: unknown isa " + o.isa);

    const BlockShape shape(o.m, o.k);
    std::mt19937_64 rng(o.seed);
    CodeIndex index;
    index.shape = shape;
    std::uniform_int_distribution<uint32_t> ui(0, shape.k - 1);
    BinaryCode code{shape, std::vector<uint32_t>(shape.m)};
    for (size_t i = 0; i < o.count; ++i) {
        for (auto& v : code.indices) v = ui(rng);
        index.append(code, static_cast<uint32_t>(i));
    }
    QueryEmbedding q{shape, std::vector<double>(shape.width())};
    std::uniform_real_distribution<double> uz(0.0, 1.0);
    for (double& v : q.z) v = uz(rng);

    double best_seconds = HUGE_VAL;
    for (size_t rep = 0; rep < o.repeats; ++rep) {
        const auto t0 = std::chrono::steady_clock::now();
        const RankedList ranked = search(q, index, o.top_k);
        const auto t1 = std::chrono::steady_clock::now();
        if (ranked.items.empty()) throw numeric_error("bench: empty ranking");
        best_seconds = std::min(best_seconds, std::chrono::duration<double>(t1 - t0).count());
    }

    ScoreCounters counters;
    asymmetric_score_instrumented(q, index.code_at(0), counters);

    json doc;
    doc["m"] = shape.m;
    doc["k"] = shape.k;
    doc["bit_rate"] = shape.bit_rate();
    doc["records"] = o.count;
    doc["isa"] = simd::isa_name(simd::active_isa());
    doc["subic_adds_per_score"] = shape.m;
    doc["instrumented"] = {{"gathers", counters.gathers}, {"adds", counters.adds}};
    doc["hamming_expected_adds"] = expected_hamming_adds(shape.bit_rate());
    doc["hamming_lut_note"] =
        "a constant-time Hamming lookup table needs 2^bit_rate entries; splitting the code "
        "into m' sub-tables costs O(m') adds, comparable to the m additions used here";
    doc["scan_seconds"] = best_seconds;
    doc["records_per_second"] = static_cast<double>(o.count) / best_seconds;
    const std::string text = doc.dump(2) + "\n";
    write_text(o.out, text);
    std::printf("%s", text.c_str());

    Manifest m;
    m.command = "bench";
    m.config = {{"m", o.m},         {"k", o.k},       {"count", o.count}, {"repeats", o.repeats},
                {"top_k", o.top_k}, {"seed", o.seed}, {"isa", o.isa},     {"out", o.out}};
    m.results = doc;
    m.output(o.out);
    m.write(o.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"supervised structured binary codes: training, indexing and search"};
    app.require_subcommand(1);

    GenOpts gen;
    auto* cgen = app.add_subcommand("gen-data", "generate a synthetic labeled feature set");
    cgen->add_option("--n", gen.n, "number of samples");
    cgen->add_option("--d", gen.d, "feature dimension");
    cgen->add_option("--c", gen.c, "number of classes");
    cgen->add_option("--spread", gen.spread, "class center scale");
    cgen->add_option("--noise", gen.noise, "within-class noise scale");
    cgen->add_option("--seed", gen.seed, "generator seed");
    cgen->add_option("--out", gen.out, "output feature file")->required();
    cgen->add_option("--labels", gen.labels, "output label file (default <out>.labels)");

    TrainOpts tr;
    auto* ctr = app.add_subcommand("train", "train the encoder and classifier");
    ctr->add_option("--in", tr.in, "feature file")->required();
    ctr->add_option("--labels", tr.labels, "label file")->required();
    ctr->add_option("--m", tr.m, "blocks per code")->required();
    ctr->add_option("--k", tr.k, "block dimension")->required();
    ctr->add_option("--gamma", tr.hyper.gamma, "code entropy weight");
    ctr->add_option("--mu", tr.hyper.mu, "support entropy weight");
    ctr->add_option("--lr", tr.hyper.learning_rate, "learning rate");
    ctr->add_option("--momentum", tr.hyper.momentum, "momentum");
    ctr->add_option("--batch-size", tr.hyper.batch_size, "mini-batch size");
    ctr->add_option("--num-batches", tr.hyper.num_batches, "number of mini-batches");
    ctr->add_option("--seed", tr.hyper.seed, "training seed");
    ctr->add_option("--out", tr.out, "output model file")->required();
    ctr->add_option("--log", tr.log, "training log csv (default <out>.log.csv)");

    EncodeOpts enc;
    auto* cenc = app.add_subcommand("encode", "binarize a feature set into a packed index");
    cenc->add_option("--in", enc.in, "feature file")->required();
    cenc->add_option("--model", enc.model, "model file")->required();
    cenc->add_option("--labels", enc.labels, "label file to attach");
    cenc->add_option("--out", enc.out, "output index file")->required();

    EncodeOpts emb;
    auto* cemb = app.add_subcommand("embed", "compute real-valued query embeddings");
    cemb->add_option("--in", emb.in, "feature file")->required();
    cemb->add_option("--model", emb.model, "model file")->required();
    cemb->add_option("--out", emb.out, "output embedding file")->required();

    IndexOpts idx;
    auto* cidx = app.add_subcommand("index", "attach labels to an existing index");
    cidx->add_option("--in", idx.in, "input index file")->required();
    cidx->add_option("--labels", idx.labels, "label file")->required();
    cidx->add_option("--out", idx.out, "output index file")->required();

    SearchOpts se;
    auto* cse = app.add_subcommand("search", "rank database records for each query");
    cse->add_option("--index", se.index, "index file")->required();
    cse->add_option("--in", se.in, "query feature file")->required();
    cse->add_option("--model", se.model, "model file (asym/sym scorers)");
    cse->add_option("--codebooks", se.codebooks, "codebook file (pq scorer)");
    cse->add_option("--scorer", se.scorer, "asym | sym | pq");
    cse->add_option("--top-k", se.top_k, "results per query");
    cse->add_option("--out", se.out, "output results csv")->required();

    EvalOpts ev;
    auto* cev = app.add_subcommand("eval-map", "average precision of search results");
    cev->add_option("--in", ev.in, "results csv from search")->required();
    cev->add_option("--index", ev.index, "labeled index file")->required();
    cev->add_option("--labels", ev.labels, "query label file")->required();
    cev->add_option("--out", ev.out, "per-query ap csv")->required();

    ClassifyOpts cl;
    auto* ccl = app.add_subcommand("classify", "classify binary codes with the model classifier");
    ccl->add_option("--index", cl.index, "index file")->required();
    ccl->add_option("--model", cl.model, "model file")->required();
    ccl->add_option("--out", cl.out, "output csv")->required();

    PqTrainOpts pqt;
    auto* cpqt = app.add_subcommand("pq-train", "train product-quantization codebooks");
    cpqt->add_option("--in", pqt.in, "feature file")->required();
    cpqt->add_option("--m", pqt.m, "sub-spaces")->required();
    cpqt->add_option("--k", pqt.k, "centroids per sub-space")->required();
    cpqt->add_option("--iters", pqt.iters, "lloyd iterations");
    cpqt->add_option("--seed", pqt.seed, "seed");
    cpqt->add_option("--out", pqt.out, "output codebook file")->required();

    PqEncodeOpts pqe;
    auto* cpqe = app.add_subcommand("pq-encode", "quantize a feature set into a packed index");
    cpqe->add_option("--in", pqe.in, "feature file")->required();
    cpqe->add_option("--codebooks", pqe.codebooks, "codebook file")->required();
    cpqe->add_option("--labels", pqe.labels, "label file to attach");
    cpqe->add_option("--out", pqe.out, "output index file")->required();

    DiagOpts dg;
    auto* cdg = app.add_subcommand("diagnostics", "first-block structuring curves of an encoded set");
    cdg->add_option("--in", dg.in, "feature file")->required();
    cdg->add_option("--model", dg.model, "model file")->required();
    cdg->add_option("--out", dg.out, "output path prefix")->required();

    BenchOpts be;
    auto* cbe = app.add_subcommand("bench", "scoring throughput and complexity accounting");
    cbe->add_option("--m", be.m, "blocks per code");
    cbe->add_option("--k", be.k, "block dimension");
    cbe->add_option("--count", be.count, "database records");
    cbe->add_option("--repeats", be.repeats, "timing repeats");
    cbe->add_option("--top-k", be.top_k, "results to keep");
    cbe->add_option("--seed", be.seed, "seed");
    cbe->add_option("--isa", be.isa, "auto | scalar | avx2");
    cbe->add_option("--out", be.out, "output json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::cerr << "error: " << e.what() << "\n\n" << app.help() << std::flush;
        return 1;
    }

    try {
        if (*cgen) return cmd_gen_data(gen);
        if (*ctr) return cmd_train(tr);
        if (*cenc) return cmd_encode(enc);
        if (*cemb) return cmd_embed(emb);
        if (*cidx) return cmd_index(idx);
        if (*cse) return cmd_search(se);
        if (*cev) return cmd_eval_map(ev);
        if (*ccl) return cmd_classify(cl);
        if (*cpqt) return cmd_pq_train(pqt);
        if (*cpqe) return cmd_pq_encode(pqe);
        if (*cdg) return cmd_diagnostics(dg);
        if (*cbe) return cmd_bench(be);
    } catch (const numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
