#include "subic/io_util.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace subic::io {

std::vector<uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("cannot open file: " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (in.bad()) throw format_error("read failure: " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw format_error("cannot open file for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw format_error("write failure: " + path.string());
}

std::string file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("cannot open file: " + path.string());
    uint64_t hash = 0xcbf29ce484222325ull;
    char chunk[65536];
    while (in) {
        in.read(chunk, sizeof(chunk));
        const auto got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<uint8_t>(chunk[i]);
            hash *= 0x100000001b3ull;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
    return hex;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void ByteWriter::magic(const char* tag4) {
    buf_.insert(buf_.end(), tag4, tag4 + 4);
}

void ByteWriter::u16(uint16_t v) {
    buf_.push_back(static_cast<uint8_t>(v));
    buf_.push_back(static_cast<uint8_t>(v >> 8));
}

void ByteWriter::u32(uint32_t v) {
    for (int s = 0; s < 32; s += 8) buf_.push_back(static_cast<uint8_t>(v >> s));
}

void ByteWriter::u64(uint64_t v) {
    for (int s = 0; s < 64; s += 8) buf_.push_back(static_cast<uint8_t>(v >> s));
}

void ByteWriter::f32(float v) {
    u32(std::bit_cast<uint32_t>(v));
}

void ByteWriter::f64(double v) {
    u64(std::bit_cast<uint64_t>(v));
}

void ByteWriter::raw(std::span<const uint8_t> bytes) {
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

void ByteReader::need(size_t n) const {
    if (pos_ + n > data_.size()) throw format_error("truncated record");
}

void ByteReader::magic(const char* tag4) {
    need(4);
    if (std::memcmp(data_.data() + pos_, tag4, 4) != 0)
        throw format_error(std::string("bad magic, expected \"") + tag4 + "\"");
    pos_ += 4;
}

uint8_t ByteReader::u8() {
    need(1);
    return data_[pos_++];
}

uint16_t ByteReader::u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
}

uint32_t ByteReader::u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
}

uint64_t ByteReader::u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
}

float ByteReader::f32() {
    return std::bit_cast<float>(u32());
}

double ByteReader::f64() {
    return std::bit_cast<double>(u64());
}

std::span<const uint8_t> ByteReader::raw(size_t n) {
    need(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

void ByteReader::expect_end() const {
    if (pos_ != data_.size()) throw format_error("trailing bytes after record");
}

}  // namespace subic::io
