// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#include "mufno/io_util.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace mufno {

namespace {

std::array<std::uint64_t, 256> make_crc64_table() {
    // ECMA-182 polynomial, reflected.
    constexpr std::uint64_t poly = 0xC96C5795D7870F42ull;
    std::array<std::uint64_t, 256> table{};
    for (std::uint64_t i = 0; i < 256; ++i) {
        std::uint64_t c = i;
        for (int b = 0; b < 8; ++b) c = (c & 1) ? (c >> 1) ^ poly : c >> 1;
        table[i] = c;
    }
    return table;
}

const std::array<std::uint64_t, 256>& crc64_table() {
    static const auto table = make_crc64_table();
    return table;
}

}  // namespace

std::uint64_t crc64_update(std::uint64_t crc, std::span<const unsigned char> data) {
    const auto& table = crc64_table();
    for (unsigned char byte : data) crc = table[(crc ^ byte) & 0xFF] ^ (crc >> 8);
    return crc;
}

std::uint64_t crc64(std::span<const unsigned char> data) { return ~crc64_update(~0ull, data); }

std::uint64_t fnv1a64(std::span<const unsigned char> data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char b : data) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

void ByteWriter::write_file(const std::string& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
    if (!f) throw FormatError("write failed: " + path);
}

ByteReader ByteReader::from_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw FormatError("cannot open: " + path);
    const auto size = static_cast<std::size_t>(f.tellg());
    f.seekg(0);
    std::vector<unsigned char> buf(size);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size));
    if (!f) throw FormatError("read failed: " + path);
    return ByteReader(std::move(buf), path);
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    // Shortest representation that round-trips.
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

}  // namespace mufno
