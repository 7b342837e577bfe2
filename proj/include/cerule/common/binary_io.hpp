// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

// Little-endian primitive encoding used by the .gat trace and .cedm model
// formats.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>

#include "cerule/common/error.hpp"

namespace cerule::io {

template <typename T>
  requires std::is_integral_v<T>
T byteswap_if_big(T value) {
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    T out{};
    auto* src = reinterpret_cast<const unsigned char*>(&value);
    auto* dst = reinterpret_cast<unsigned char*>(&out);
    for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = src[sizeof(T) - 1 - i];
    return out;
  } else {
    return value;
  }
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
    requires std::is_integral_v<T>
  void put(T value) {
    value = byteswap_if_big(value);
    raw(&value, sizeof(T));
  }

  void put_f32(float value) { put(std::bit_cast<std::uint32_t>(value)); }
  void put_f64(double value) { put(std::bit_cast<std::uint64_t>(value)); }

  void put_f32s(std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
      raw(values.data(), values.size_bytes());
    } else {
      for (float v : values) put_f32(v);
    }
  }

  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }

  void raw(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out_) throw Error(Errc::kIo, "write failed");
    offset_ += n;
  }

  std::uint64_t offset() const { return offset_; }

 private:
  std::ostream& out_;
  std::uint64_t offset_ = 0;
};

/// Reader that tracks the absolute byte offset so truncation errors can name
/// where the stream ended.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename T>
    requires std::is_integral_v<T>
  T get(const char* what) {
    T value{};
    raw(&value, sizeof(T), what);
    return byteswap_if_big(value);
  }

  float get_f32(const char* what) {
    return std::bit_cast<float>(get<std::uint32_t>(what));
  }

  void get_f32s(std::span<float> out, const char* what) {
    if constexpr (std::endian::native == std::endian::little) {
      raw(out.data(), out.size_bytes(), what);
    } else {
      for (float& v : out) v = get_f32(what);
    }
  }

  std::string get_string(const char* what, std::uint32_t max_len = 1u << 24) {
    auto n = get<std::uint32_t>(what);
    if (n > max_len) {
      throw Error(Errc::kTruncatedFrame, std::string("implausible string length for ") +
                                             what + " at byte offset " +
                                             std::to_string(offset_ - 4));
    }
    std::string s(n, '\0');
    raw(s.data(), n, what);
    return s;
  }

  void raw(void* data, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    auto got = static_cast<std::size_t>(in_.gcount());
    if (got != n) {
      throw Error(Errc::kTruncatedFrame,
                  std::string("stream truncated while reading ") + what +
                      " at byte offset " + std::to_string(offset_ + got));
    }
    offset_ += n;
  }

  /// True when no more bytes are available.
  bool at_end() {
    return in_.peek() == std::char_traits<char>::eof();
  }

  std::uint64_t offset() const { return offset_; }

 private:
  std::istream& in_;
  std::uint64_t offset_ = 0;
};

}  // namespace cerule::io
