/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 dwinr contributors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#pragma once

// Little-endian primitives and the key=value text header shared by the file formats.

#include <charconv>
#include <cstdint>
#include <cstring>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dwinr/io.hpp"

namespace dwinr::io::detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline void put_f32(std::vector<std::uint8_t>& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof bits);
  put_u32(out, bits);
}

inline void put_f64(std::vector<std::uint8_t>& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  put_u64(out, bits);
}

inline float get_f32(const std::uint8_t* p) {
  const std::uint32_t bits = get_u32(p);
  float f;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}

inline double get_f64(const std::uint8_t* p) {
  const std::uint64_t bits = get_u64(p);
  double d;
  std::memcpy(&d, &bits, sizeof d);
  return d;
}

inline constexpr std::size_t kPreambleSize = 4 + 4 + 8;

/// Magic, version and header text; the payload follows.
inline std::vector<std::uint8_t> preamble(std::string_view magic, std::uint32_t version, const std::string& text) {
  std::vector<std::uint8_t> out(magic.begin(), magic.end());
  put_u32(out, version);
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  return out;
}

class Header {
 public:
  void set(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
  void set(const std::string& key, double v) { set(key, format_double(v)); }
  void set(const std::string& key, std::uint64_t v) { set(key, std::to_string(v)); }
  void set(const std::string& key, std::span<const double> values);
  void set(const std::string& key, std::span<const std::uint64_t> values);
  void set(const std::string& key, const std::vector<double>& values) { set(key, std::span<const double>(values)); }

  std::string text() const;

  /// Parses `text` located at byte `base` of the file; duplicate or malformed lines are rejected.
  static Header parse(std::string_view text, std::uint64_t base);

  const std::string& raw(const std::string& key) const;
  double number(const std::string& key) const;
  std::uint64_t integer(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::uint64_t> integers(const std::string& key) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::string> lookup_;
  std::uint64_t base_{0};
};

/// Magic, version and header checks; returns the header and the payload offset.
struct Opened {
  Header header;
  std::uint64_t payload_offset{0};
};

Opened open(std::span<const std::uint8_t> bytes, std::string_view magic, std::uint32_t version);

}  // namespace dwinr::io::detail
