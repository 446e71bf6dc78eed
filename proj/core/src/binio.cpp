#include "sdrnet/binio.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "sdrnet/errors.hpp"

namespace sdrnet {

BinaryWriter::BinaryWriter(std::filesystem::path path)
    : path_(std::move(path)) {}

void BinaryWriter::u32(std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) {
        buffer_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
}

void BinaryWriter::u64(std::uint64_t v) {
    for (int shift = 0; shift < 64; shift += 8) {
        buffer_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
}

void BinaryWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void BinaryWriter::f32_array(std::span<const float> values) {
    u64(values.size());
    buffer_.reserve(buffer_.size() + values.size() * 4);
    for (float v : values) f32(v);
}

void BinaryWriter::str(std::string_view s) {
    u64(s.size());
    buffer_.insert(buffer_.end(), s.begin(), s.end());
}

void BinaryWriter::commit() {
    if (committed_) return;
    const std::filesystem::path tmp = path_.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(buffer_.data()),
                  static_cast<std::streamsize>(buffer_.size()));
        if (!out) throw DataError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path_);
    committed_ = true;
}

BinaryReader::BinaryReader(const std::filesystem::path& path)
    : name_(path.string()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + name_);
    bytes_.assign((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
}

void BinaryReader::need(std::size_t count, const char* what) const {
    if (offset_ + count > bytes_.size()) {
        throw DataError(name_ + ": truncated reading " + what + " at byte " +
                        std::to_string(offset_) + " (file is " +
                        std::to_string(bytes_.size()) + " bytes)");
    }
}

std::uint32_t BinaryReader::u32() {
    need(4, "u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(bytes_[offset_ + static_cast<std::size_t>(i)])
             << (8 * i);
    }
    offset_ += 4;
    return v;
}

std::uint64_t BinaryReader::u64() {
    need(8, "u64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(bytes_[offset_ + static_cast<std::size_t>(i)])
             << (8 * i);
    }
    offset_ += 8;
    return v;
}

float BinaryReader::f32() { return std::bit_cast<float>(u32()); }

std::vector<float> BinaryReader::f32_array() {
    const std::uint64_t count = u64();
    if (count > (bytes_.size() - offset_) / 4) {
        throw DataError(name_ + ": array length " + std::to_string(count) +
                        " at byte " + std::to_string(offset_ - 8) +
                        " exceeds remaining file");
    }
    std::vector<float> out(count);
    for (std::uint64_t i = 0; i < count; ++i) out[i] = f32();
    return out;
}

std::string BinaryReader::str() {
    const std::uint64_t count = u64();
    if (count > bytes_.size() - offset_) {
        throw DataError(name_ + ": string length " + std::to_string(count) +
                        " at byte " + std::to_string(offset_ - 8) +
                        " exceeds remaining file");
    }
    std::string out(reinterpret_cast<const char*>(bytes_.data() + offset_),
                    count);
    offset_ += count;
    return out;
}

void BinaryReader::expect_eof() const {
    if (offset_ != bytes_.size()) {
        throw DataError(name_ + ": " + std::to_string(bytes_.size() - offset_) +
                        " unexpected trailing bytes at byte " +
                        std::to_string(offset_));
    }
}

}  // namespace sdrnet
