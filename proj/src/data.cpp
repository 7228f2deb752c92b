#include "subic/data.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstring>
#include <string>
#include <string_view>

#include "subic/io_util.hpp"

namespace subic {

namespace {

constexpr uint32_t kFormatVersion = 1;

bool is_csv_path(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext == ".csv";
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    size_t start = 0;
    while (start < text.size()) {
        size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    size_t start = 0;
    while (true) {
        size_t end = line.find(',', start);
        if (end == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, end - start));
        start = end + 1;
    }
    return fields;
}

double parse_value(std::string_view field, const char* what) {
    // strtod needs a terminated buffer; fields are short
    char buf[64];
    if (field.empty() || field.size() >= sizeof(buf))
        throw format_error(std::string("csv: bad ") + what + " field");
    std::memcpy(buf, field.data(), field.size());
    buf[field.size()] = '\0';
    char* end = nullptr;
    const double v = std::strtod(buf, &end);
    if (end != buf + field.size())
        throw format_error(std::string("csv: bad ") + what + " field: " + buf);
    return v;
}

Dataset features_from_csv(std::span<const uint8_t> bytes) {
    std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    const auto lines = split_lines(text);
    if (lines.empty()) throw format_error("csv: missing header");
    const size_t d = split_fields(lines[0]).size();
    if (d == 0 || d > 1u << 24) throw format_error("csv: bad feature dimension");
    Dataset ds;
    ds.d = static_cast<uint32_t>(d);
    ds.n = lines.size() - 1;
    ds.features.reserve(ds.n * d);
    for (size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_fields(lines[i]);
        if (fields.size() != d) throw format_error("csv: inconsistent column count");
        for (const auto f : fields)
            ds.features.push_back(static_cast<double>(static_cast<float>(parse_value(f, "feature"))));
    }
    return ds;
}

LabelSet labels_from_csv(std::span<const uint8_t> bytes) {
    std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    const auto lines = split_lines(text);
    if (lines.empty()) throw format_error("csv: missing header");
    if (split_fields(lines[0]).size() != 1) throw format_error("csv: label file must have one column");
    LabelSet ls;
    ls.labels.reserve(lines.size() - 1);
    uint32_t max_label = 0;
    for (size_t i = 1; i < lines.size(); ++i) {
        const double v = parse_value(lines[i], "label");
        if (v < 0 || v != std::floor(v) || v > 0xffffffffu)
            throw format_error("csv: label is not a small non-negative integer");
        const auto label = static_cast<uint32_t>(v);
        ls.labels.push_back(label);
        max_label = std::max(max_label, label);
    }
    ls.num_classes = ls.labels.empty() ? 0 : max_label + 1;
    return ls;
}

}  // namespace

void Dataset::validate() const {
    if (features.size() != n * d) throw dim_error("Dataset: feature buffer size mismatch");
    if (!labels.empty()) {
        if (labels.size() != n) throw dim_error("Dataset: label count mismatch");
        for (uint32_t y : labels)
            if (y >= num_classes) throw dim_error("Dataset: label out of range");
    }
}

Dataset gen_synthetic(size_t n, uint32_t d, uint32_t num_classes, double class_spread,
                      double noise, uint64_t seed) {
    if (num_classes < 2 || n < num_classes) throw dim_error("gen_synthetic: need n >= classes >= 2");
    if (d < 1) throw dim_error("gen_synthetic: need d >= 1");
    if (!(class_spread > 0) || !(noise > 0))
        throw dim_error("gen_synthetic: spread and noise must be positive");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<double> centers(static_cast<size_t>(num_classes) * d);
    for (double& v : centers) v = class_spread * gauss(rng);

    Dataset ds;
    ds.n = n;
    ds.d = d;
    ds.num_classes = num_classes;
    ds.features.resize(n * d);
    ds.labels.resize(n);

    const size_t base = n / num_classes;
    const size_t rem = n % num_classes;
    size_t row = 0;
    for (uint32_t c = 0; c < num_classes; ++c) {
        const size_t count = base + (c < rem ? 1 : 0);
        for (size_t s = 0; s < count; ++s, ++row) {
            ds.labels[row] = c;
            for (uint32_t j = 0; j < d; ++j) {
                const double v = centers[static_cast<size_t>(c) * d + j] + noise * gauss(rng);
                // keep values exactly float32-representable, matching the file format
                ds.features[row * d + j] = static_cast<double>(static_cast<float>(v));
            }
        }
    }
    return ds;
}

void save_features(const std::filesystem::path& path, const Dataset& ds) {
    ds.validate();
    if (ds.n > 0xffffffffu) throw dim_error("save_features: too many rows for format");
    io::ByteWriter w;
    w.magic("SUBF");
    w.u32(kFormatVersion);
    w.u32(static_cast<uint32_t>(ds.n));
    w.u32(ds.d);
    for (double v : ds.features) w.f32(static_cast<float>(v));
    io::write_file(path, w.bytes());
}

Dataset load_features(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    if (is_csv_path(path)) return features_from_csv(bytes);
    io::ByteReader r(bytes);
    r.magic("SUBF");
    const uint32_t version = r.u32();
    if (version != kFormatVersion) throw format_error("SUBF: unsupported version");
    Dataset ds;
    ds.n = r.u32();
    ds.d = r.u32();
    if (r.remaining() != ds.n * static_cast<size_t>(ds.d) * 4)
        throw format_error("SUBF: payload size does not match dimensions");
    ds.features.resize(ds.n * ds.d);
    for (double& v : ds.features) v = static_cast<double>(r.f32());
    r.expect_end();
    return ds;
}

void save_labels(const std::filesystem::path& path, const LabelSet& ls) {
    if (ls.labels.size() > 0xffffffffu) throw dim_error("save_labels: too many rows for format");
    for (uint32_t y : ls.labels)
        if (y >= ls.num_classes) throw dim_error("save_labels: label out of range");
    io::ByteWriter w;
    w.magic("SUBL");
    w.u32(kFormatVersion);
    w.u32(static_cast<uint32_t>(ls.labels.size()));
    w.u32(ls.num_classes);
    for (uint32_t y : ls.labels) w.u32(y);
    io::write_file(path, w.bytes());
}

LabelSet load_labels(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    if (is_csv_path(path)) return labels_from_csv(bytes);
    io::ByteReader r(bytes);
    r.magic("SUBL");
    const uint32_t version = r.u32();
    if (version != kFormatVersion) throw format_error("SUBL: unsupported version");
    LabelSet ls;
    const uint32_t n = r.u32();
    ls.num_classes = r.u32();
    if (r.remaining() != static_cast<size_t>(n) * 4)
        throw format_error("SUBL: payload size does not match count");
    ls.labels.resize(n);
    for (uint32_t& y : ls.labels) {
        y = r.u32();
        if (y >= ls.num_classes) throw format_error("SUBL: label out of range");
    }
    r.expect_end();
    return ls;
}

void attach_labels(Dataset& ds, const LabelSet& ls) {
    if (ls.labels.size() != ds.n) throw dim_error("attach_labels: label count does not match rows");
    ds.labels = ls.labels;
    ds.num_classes = ls.num_classes;
    ds.validate();
}

LabelSet label_set(const Dataset& ds) {
    if (!ds.has_labels()) throw dim_error("label_set: dataset has no labels");
    return {ds.labels, ds.num_classes};
}

Splits split(const Dataset& ds, SplitFractions fr, uint64_t seed) {
    ds.validate();
    if (fr.train < 0 || fr.db < 0 || fr.query < 0)
        throw dim_error("split: fractions must be non-negative");
    const double total = fr.train + fr.db + fr.query;
    if (!(total > 0)) throw dim_error("split: fractions select nothing");
    if (total > 1.0 + 1e-9) throw dim_error("split: fractions sum above 1");

    // floors, with floating-point noise absorbed; leftover rows go to train
    const double eps = 1e-9;
    const auto n = static_cast<double>(ds.n);
    const size_t n_db = static_cast<size_t>(std::floor(fr.db * n + eps));
    const size_t n_query = static_cast<size_t>(std::floor(fr.query * n + eps));
    const size_t covered = static_cast<size_t>(std::floor(total * n + eps));
    const size_t n_train = covered - n_db - n_query;

    std::vector<size_t> perm(ds.n);
    for (size_t i = 0; i < ds.n; ++i) perm[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    auto slice = [&](size_t begin, size_t count) {
        Dataset out;
        out.n = count;
        out.d = ds.d;
        out.num_classes = ds.num_classes;
        out.features.resize(count * ds.d);
        if (ds.has_labels()) out.labels.resize(count);
        for (size_t i = 0; i < count; ++i) {
            const size_t src = perm[begin + i];
            std::copy_n(ds.features.data() + src * ds.d, ds.d, out.features.data() + i * ds.d);
            if (ds.has_labels()) out.labels[i] = ds.labels[src];
        }
        return out;
    };

    Splits s;
    s.train = slice(0, n_train);
    s.db = slice(n_train, n_db);
    s.query = slice(n_train + n_db, n_query);
    return s;
}

BatchStream::BatchStream(size_t n, size_t batch_size, uint64_t seed)
    : batch_size_(batch_size), rng_(seed) {
    if (batch_size < 1 || batch_size > n) throw dim_error("BatchStream: batch size out of range");
    order_.resize(n);
    for (size_t i = 0; i < n; ++i) order_[i] = i;
    pos_ = order_.size();  // force a shuffle on the first batch
}

std::span<const size_t> BatchStream::next() {
    const size_t usable = batches_per_epoch() * batch_size_;
    if (pos_ + batch_size_ > usable) {
        std::shuffle(order_.begin(), order_.end(), rng_);
        pos_ = 0;
    }
    std::span<const size_t> batch{order_.data() + pos_, batch_size_};
    pos_ += batch_size_;
    return batch;
}

}  // namespace subic
