#pragma once

// Little-endian primitives for the FAES and FWIN formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "fedae/common.hpp"

namespace fedae::binary {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                           static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(bytes, 4);
}

inline void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

inline void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

inline void put_string(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void get_bytes(std::istream& in, char* dst, std::size_t n, const char* what) {
    in.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) throw DataError(std::string("truncated input while reading ") + what);
}

inline std::uint32_t get_u32(std::istream& in, const char* what) {
    unsigned char b[4];
    get_bytes(in, reinterpret_cast<char*>(b), 4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint8_t get_u8(std::istream& in, const char* what) {
    char c;
    get_bytes(in, &c, 1, what);
    return static_cast<std::uint8_t>(c);
}

inline float get_f32(std::istream& in, const char* what) { return std::bit_cast<float>(get_u32(in, what)); }

inline std::string get_string(std::istream& in, std::size_t max_len, const char* what) {
    const std::uint32_t n = get_u32(in, what);
    if (n > max_len) throw DataError(std::string("implausible length for ") + what);
    std::string s(n, '\0');
    get_bytes(in, s.data(), n, what);
    return s;
}

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
    char got[4];
    get_bytes(in, got, 4, "magic");
    if (std::memcmp(got, magic, 4) != 0) throw DataError(std::string("bad magic, expected \"") + magic + "\"");
}

}  // namespace fedae::binary
