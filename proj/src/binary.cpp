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


#include "binary.hpp"

#include <algorithm>
#include <cstdio>
#include <type_traits>

namespace dwinr::io {

FormatError::FormatError(const std::string& what, std::uint64_t offset, std::uint64_t expected,
                         std::uint64_t actual)
    : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"),
      offset_(offset),
      expected_(expected),
      actual_(actual) {}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for reading");
  std::vector<std::uint8_t> bytes;
  std::uint8_t buf[1 << 16];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) bytes.insert(bytes.end(), buf, buf + n);
  const bool failed = std::ferror(f) != 0;
  std::fclose(f);
  if (failed) throw std::runtime_error("read error on " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::size_t n = std::fwrite(bytes.data(), 1, bytes.size(), f);
  const bool closed = std::fclose(f) == 0;
  if (n != bytes.size() || !closed) throw std::runtime_error("write error on " + path.string());
}

namespace detail {

namespace {

template <typename T>
std::string join(std::span<const T> values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>) s += format_double(values[i]);
    else s += std::to_string(values[i]);
  }
  return s;
}

template <typename T>
bool parse_value(std::string_view s, T& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

void Header::set(const std::string& key, std::span<const double> values) { set(key, join(values)); }
void Header::set(const std::string& key, std::span<const std::uint64_t> values) { set(key, join(values)); }

std::string Header::text() const {
  std::string s;
  for (const auto& [k, v] : entries_) s += k + "=" + v + "\n";
  return s;
}

Header Header::parse(std::string_view text, std::uint64_t base) {
  Header h;
  h.base_ = base;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) throw FormatError("header line is not newline-terminated", base + pos);
    const std::string_view line = text.substr(pos, end - pos);
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0) throw FormatError("malformed header line", base + pos);
    std::string key(line.substr(0, eq));
    if (h.lookup_.count(key)) throw FormatError("duplicate header key '" + key + "'", base + pos);
    h.lookup_.emplace(key, std::string(line.substr(eq + 1)));
    h.entries_.emplace_back(key, std::string(line.substr(eq + 1)));
    pos = end + 1;
  }
  return h;
}

const std::string& Header::raw(const std::string& key) const {
  auto it = lookup_.find(key);
  if (it == lookup_.end()) throw FormatError("missing header key '" + key + "'", base_);
  return it->second;
}

double Header::number(const std::string& key) const {
  double v;
  if (!parse_value(raw(key), v)) throw FormatError("bad number for header key '" + key + "'", base_);
  return v;
}

std::uint64_t Header::integer(const std::string& key) const {
  std::uint64_t v;
  if (!parse_value(raw(key), v)) throw FormatError("bad integer for header key '" + key + "'", base_);
  return v;
}

namespace {

template <typename T>
std::vector<T> parse_list(const std::string& s, const std::string& key, std::uint64_t base) {
  std::vector<T> out;
  if (s.empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = s.find(',', pos);
    const std::string_view item = std::string_view(s).substr(pos, comma == std::string::npos ? s.npos : comma - pos);
    T v;
    if (!parse_value(item, v)) throw FormatError("bad list entry for header key '" + key + "'", base);
    out.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

std::vector<double> Header::numbers(const std::string& key) const {
  return parse_list<double>(raw(key), key, base_);
}

std::vector<std::uint64_t> Header::integers(const std::string& key) const {
  return parse_list<std::uint64_t>(raw(key), key, base_);
}

Opened open(std::span<const std::uint8_t> bytes, std::string_view magic, std::uint32_t version) {
  if (bytes.size() < kPreambleSize)
    throw FormatError("file too short for the preamble: expected at least " + std::to_string(kPreambleSize) +
                          " bytes, got " + std::to_string(bytes.size()),
                      bytes.size(), kPreambleSize, bytes.size());
  if (!std::equal(magic.begin(), magic.end(), bytes.begin()))
    throw FormatError("bad magic, expected \"" + std::string(magic) + "\"", 0);
  const std::uint32_t v = get_u32(bytes.data() + 4);
  if (v != version)
    throw FormatError("unsupported version " + std::to_string(v) + ", expected " + std::to_string(version), 4,
                      version, v);
  const std::uint64_t len = get_u64(bytes.data() + 8);
  if (len > bytes.size() - kPreambleSize)
    throw FormatError("header length " + std::to_string(len) + " exceeds the remaining " +
                          std::to_string(bytes.size() - kPreambleSize) + " bytes",
                      8, len, bytes.size() - kPreambleSize);
  const std::string_view text(reinterpret_cast<const char*>(bytes.data() + kPreambleSize), len);
  return {Header::parse(text, kPreambleSize), kPreambleSize + len};
}

}  // namespace detail
}  // namespace dwinr::io
