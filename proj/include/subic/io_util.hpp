#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "subic/error.hpp"

namespace subic::io {

std::vector<uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const uint8_t> bytes);

// 64-bit FNV-1a over the file's bytes, rendered as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

// Round-trippable decimal rendering ("%.17g").
std::string format_double(double v);

// Little-endian record writer for the binary file formats.
class ByteWriter {
public:
    void magic(const char* tag4);
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v);
    void u32(uint32_t v);
    void u64(uint64_t v);
    void f32(float v);
    void f64(double v);
    void raw(std::span<const uint8_t> bytes);

    std::span<const uint8_t> bytes() const { return buf_; }
    std::vector<uint8_t> take() { return std::move(buf_); }

private:
    std::vector<uint8_t> buf_;
};

// Little-endian cursor with bounds checking; throws format_error on
// truncation or a magic mismatch.
class ByteReader {
public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    void magic(const char* tag4);
    uint8_t u8();
    uint16_t u16();
    uint32_t u32();
    uint64_t u64();
    float f32();
    double f64();
    std::span<const uint8_t> raw(size_t n);

    size_t remaining() const { return data_.size() - pos_; }
    void expect_end() const;

private:
    void need(size_t n) const;

    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

}  // namespace subic::io
