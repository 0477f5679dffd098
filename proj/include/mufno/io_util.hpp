// Copyright (c) 2026 The mufno authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "mufno/errors.hpp"

namespace mufno {

/// CRC-64/XZ (ECMA-182 polynomial, reflected, init and xorout ~0).
std::uint64_t crc64(std::span<const unsigned char> data);
std::uint64_t crc64_update(std::uint64_t crc, std::span<const unsigned char> data);

/// FNV-1a 64-bit. Used for artifact fingerprints in manifests: a file that
/// ends with its own CRC64 trailer (FNOD) has a constant whole-file CRC64,
/// so the fingerprint must be an unrelated hash.
std::uint64_t fnv1a64(std::span<const unsigned char> data);

/// Little-endian binary accumulator. The host is assumed little-endian
/// (checked at startup by the writers).
class ByteWriter {
  public:
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void f64_array(std::span<const double> v) { raw(v.data(), v.size() * sizeof(double)); }
    void bytes(std::span<const unsigned char> v) { raw(v.data(), v.size()); }

    const std::vector<unsigned char>& data() const { return buf_; }
    std::size_t size() const { return buf_.size(); }
    void write_file(const std::string& path) const;

  private:
    void raw(const void* p, std::size_t len) {
        const auto* b = static_cast<const unsigned char*>(p);
        buf_.insert(buf_.end(), b, b + len);
    }
    std::vector<unsigned char> buf_;
};

/// Bounds-checked reader over an in-memory file image; errors carry the
/// offending byte offset.
class ByteReader {
  public:
    explicit ByteReader(std::vector<unsigned char> data, std::string name) : buf_(std::move(data)), name_(std::move(name)) {}
    static ByteReader from_file(const std::string& path);

    std::uint32_t u32() { return read<std::uint32_t>(); }
    std::uint64_t u64() { return read<std::uint64_t>(); }
    double f64() { return read<double>(); }
    void f64_array(std::span<double> out) {
        need(out.size() * sizeof(double));
        std::memcpy(out.data(), buf_.data() + pos_, out.size() * sizeof(double));
        pos_ += out.size() * sizeof(double);
    }
    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return buf_.size() - pos_; }
    std::span<const unsigned char> all() const { return buf_; }
    const std::string& name() const { return name_; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw FormatError(name_ + ": " + msg + " (offset " + std::to_string(pos_) + ")");
    }

  private:
    template <class T>
    T read() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    void need(std::size_t len) const {
        if (pos_ + len > buf_.size()) throw FormatError(name_ + ": truncated file (offset " + std::to_string(pos_) + ")");
    }

    std::vector<unsigned char> buf_;
    std::string name_;
    std::size_t pos_ = 0;
};

/// Deterministic shortest-roundtrip text form for doubles in CSV/JSON
/// artifacts ("inf"/"-inf"/"nan" literals for non-finite values).
std::string format_double(double v);

}  // namespace mufno
