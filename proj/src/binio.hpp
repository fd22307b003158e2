#pragma once

// Little-endian binary file helpers shared by the matrix and model formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "gowid/error.hpp"

namespace gowid::binio {

inline void put_bytes(std::ostream& out, const void* data, size_t n) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

inline void put_u16(std::ostream& out, uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>(v >> 8)};
    put_bytes(out, b, 2);
}

inline void put_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    put_bytes(out, b, 4);
}

inline void put_u64(std::ostream& out, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    put_bytes(out, b, 8);
}

inline void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<uint32_t>(v)); }
inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<uint64_t>(v)); }

inline void get_bytes(std::istream& in, void* data, size_t n, const std::string& what) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n)
        fail(ErrorCode::format, what + ": truncated file");
}

inline uint16_t get_u16(std::istream& in, const std::string& what) {
    unsigned char b[2];
    get_bytes(in, b, 2, what);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

inline uint32_t get_u32(std::istream& in, const std::string& what) {
    unsigned char b[4];
    get_bytes(in, b, 4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

inline uint64_t get_u64(std::istream& in, const std::string& what) {
    unsigned char b[8];
    get_bytes(in, b, 8, what);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

inline float get_f32(std::istream& in, const std::string& what) {
    return std::bit_cast<float>(get_u32(in, what));
}

inline double get_f64(std::istream& in, const std::string& what) {
    return std::bit_cast<double>(get_u64(in, what));
}

inline void expect_magic(std::istream& in, const char* magic, const std::string& what) {
    char buf[4];
    get_bytes(in, buf, 4, what);
    if (std::memcmp(buf, magic, 4) != 0)
        fail(ErrorCode::format, what + ": bad magic, expected \"" + std::string(magic, 4) + "\"");
}

// Bulk float32 transfer. On little-endian hosts the in-memory layout already
// matches the file layout.
inline void put_f32_array(std::ostream& out, const float* data, size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
        put_bytes(out, data, count * sizeof(float));
    } else {
        for (size_t i = 0; i < count; ++i) put_f32(out, data[i]);
    }
}

inline void get_f32_array(std::istream& in, float* data, size_t count, const std::string& what) {
    if constexpr (std::endian::native == std::endian::little) {
        get_bytes(in, data, count * sizeof(float), what);
    } else {
        for (size_t i = 0; i < count; ++i) data[i] = get_f32(in, what);
    }
}

inline void expect_eof(std::istream& in, const std::string& what) {
    char c;
    if (in.read(&c, 1) && in.gcount() == 1)
        fail(ErrorCode::format, what + ": trailing bytes after payload");
}

}  // namespace gowid::binio
