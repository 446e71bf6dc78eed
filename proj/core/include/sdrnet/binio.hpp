#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sdrnet {

/// Little-endian binary writer. Bytes accumulate in memory and reach disk
/// only on commit(), which writes a sibling temp file and renames it over
/// the target, so readers never observe a half-written file.
class BinaryWriter {
public:
    explicit BinaryWriter(std::filesystem::path path);

    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f32(float v);
    // u64 element count followed by the raw little-endian floats.
    void f32_array(std::span<const float> values);
    // u64 byte count followed by the bytes.
    void str(std::string_view s);

    void commit();

private:
    std::filesystem::path path_;
    std::vector<std::uint8_t> buffer_;
    bool committed_ = false;
};

/// Little-endian binary reader over a whole file. Every decode failure
/// raises DataError naming the byte offset where the requirement broke.
class BinaryReader {
public:
    explicit BinaryReader(const std::filesystem::path& path);

    std::uint32_t u32();
    std::uint64_t u64();
    float f32();
    std::vector<float> f32_array();
    std::string str();

    std::size_t offset() const { return offset_; }
    // Raises DataError when bytes remain past the last expected field.
    void expect_eof() const;

private:
    void need(std::size_t count, const char* what) const;

    std::string name_;
    std::vector<std::uint8_t> bytes_;
    std::size_t offset_ = 0;
};

}  // namespace sdrnet
