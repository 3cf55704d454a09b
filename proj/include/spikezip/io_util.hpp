#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace spikezip::io {

/// CRC-32 (reflected, polynomial 0xEDB88320, init/final 0xFFFFFFFF), the
/// common zlib/PNG variant: crc32 of "123456789" is 0xCBF43926.
uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed = 0);
inline uint32_t crc32(const std::vector<uint8_t>& data, uint32_t seed = 0) {
    return crc32(data.data(), data.size(), seed);
}

/// Growable little-endian byte sink.
class ByteWriter {
public:
    std::vector<uint8_t> bytes;

    void raw(const void* p, size_t n) {
        const auto* b = static_cast<const uint8_t*>(p);
        bytes.insert(bytes.end(), b, b + n);
    }
    template <typename T>
    void scalar(T value) {
        static_assert(std::is_arithmetic_v<T>);
        raw(&value, sizeof(T));  // little-endian host assumed (checked in tests)
    }
    void u8(uint8_t v) { scalar(v); }
    void u16(uint16_t v) { scalar(v); }
    void u32(uint32_t v) { scalar(v); }
    void u64(uint64_t v) { scalar(v); }
    void f32(float v) { scalar(v); }
    void f64(double v) { scalar(v); }
    void magic(const char m[4]) { raw(m, 4); }
};

/// Bounds-checked reader over a byte buffer.
class ByteReader {
public:
    explicit ByteReader(std::vector<uint8_t> data) : bytes_(std::move(data)) {}

    size_t pos() const { return pos_; }
    size_t size() const { return bytes_.size(); }
    const std::vector<uint8_t>& bytes() const { return bytes_; }

    void raw(void* p, size_t n) {
        if (pos_ + n > bytes_.size()) throw std::runtime_error("truncated file");
        std::memcpy(p, bytes_.data() + pos_, n);
        pos_ += n;
    }
    template <typename T>
    T scalar() {
        T v{};
        raw(&v, sizeof(T));
        return v;
    }
    uint8_t u8() { return scalar<uint8_t>(); }
    uint16_t u16() { return scalar<uint16_t>(); }
    uint32_t u32() { return scalar<uint32_t>(); }
    uint64_t u64() { return scalar<uint64_t>(); }
    float f32() { return scalar<float>(); }
    double f64() { return scalar<double>(); }
    void expect_magic(const char m[4], const std::string& what) {
        char got[4];
        raw(got, 4);
        if (std::memcmp(got, m, 4) != 0)
            throw std::runtime_error(what + ": bad magic");
    }

private:
    std::vector<uint8_t> bytes_;
    size_t pos_ = 0;
};

/// Appends a CRC32 of everything currently in `w`, then writes to `path`.
void write_file_with_crc(const std::string& path, ByteWriter& w);

/// Reads `path`, verifies the trailing CRC32, returns a reader positioned at
/// the start with the CRC stripped.
ByteReader read_file_with_crc(const std::string& path, const std::string& what);

}  // namespace spikezip::io
