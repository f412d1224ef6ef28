// SPDX-License-Identifier: Apache-2.0
//
// Binary formats.
//
//   SLT1 tensor:   "SLT1" | dtype u8 (0=f32, 1=i32, 2=bool) | rank u8 |
//                  rank x u64 LE extents | row-major payload (bool as u8)
//   SLS1 sequence: "SLS1" | values SLT1 | mask SLT1
//   archive:       repeated (u16 LE name length | utf8 name | SLT1)

#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "seqlayers/sequence.hpp"

namespace seqlayers {

namespace detail {

inline void write_le(std::ostream& os, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t read_le(std::istream& is, int bytes, const char* what) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw Error(std::string("truncated ") + what);
    v |= static_cast<std::uint64_t>(c & 0xff) << (8 * i);
  }
  return v;
}

inline void expect_magic(std::istream& is, const char* magic) {
  char buf[4] = {};
  is.read(buf, 4);
  if (is.gcount() != 4 || std::string(buf, 4) != magic)
    throw Error(std::string("bad magic, expected ") + magic);
}

}  // namespace detail

inline void write_tensor(std::ostream& os, const Tensor& t) {
  os.write("SLT1", 4);
  detail::write_le(os, static_cast<std::uint8_t>(t.dtype()), 1);
  detail::write_le(os, static_cast<std::uint64_t>(t.rank()), 1);
  for (auto d : t.shape()) detail::write_le(os, static_cast<std::uint64_t>(d), 8);
  // Payload elements are written little-endian one by one.
  const int eb = static_cast<int>(t.element_bytes());
  const auto* bytes = static_cast<const unsigned char*>(t.raw());
  for (std::int64_t i = 0; i < t.size(); ++i) {
    std::uint64_t v = 0;
    for (int b = 0; b < eb; ++b) v |= static_cast<std::uint64_t>(bytes[i * eb + b]) << (8 * b);
    detail::write_le(os, v, eb);
  }
  if (!os) throw Error("failed writing tensor");
}

inline Tensor read_tensor(std::istream& is) {
  detail::expect_magic(is, "SLT1");
  const auto code = detail::read_le(is, 1, "tensor header");
  if (code > 2) throw Error("unknown dtype code " + std::to_string(code));
  const auto rank = detail::read_le(is, 1, "tensor header");
  Shape shape;
  for (std::uint64_t i = 0; i < rank; ++i)
    shape.push_back(static_cast<std::int64_t>(detail::read_le(is, 8, "tensor extents")));
  Tensor t(static_cast<DType>(code), shape);
  const int eb = static_cast<int>(t.element_bytes());
  auto* bytes = static_cast<unsigned char*>(t.raw_mut());
  for (std::int64_t i = 0; i < t.size(); ++i) {
    const auto v = detail::read_le(is, eb, "tensor payload");
    for (int b = 0; b < eb; ++b) bytes[i * eb + b] = static_cast<unsigned char>((v >> (8 * b)) & 0xff);
  }
  if (t.dtype() == DType::kBool)
    for (auto b : t.bools())
      if (b > 1) throw Error("bool payload byte out of range");
  return t;
}

inline void write_sequence(std::ostream& os, const Sequence& s) {
  os.write("SLS1", 4);
  write_tensor(os, s.values());
  write_tensor(os, s.mask());
}

inline Sequence read_sequence(std::istream& is) {
  detail::expect_magic(is, "SLS1");
  Tensor values = read_tensor(is);
  Tensor mask = read_tensor(is);
  return Sequence(std::move(values), std::move(mask));
}

inline void write_archive(std::ostream& os, const std::map<std::string, Tensor>& tensors) {
  for (const auto& [name, t] : tensors) {
    if (name.size() > 0xffff) throw Error("parameter name too long: " + name);
    detail::write_le(os, name.size(), 2);
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_tensor(os, t);
  }
}

inline std::map<std::string, Tensor> read_archive(std::istream& is) {
  std::map<std::string, Tensor> out;
  while (is.peek() != std::char_traits<char>::eof()) {
    const auto len = detail::read_le(is, 2, "archive name length");
    std::string name(len, '\0');
    is.read(name.data(), static_cast<std::streamsize>(len));
    if (static_cast<std::uint64_t>(is.gcount()) != len) throw Error("truncated archive name");
    if (out.count(name)) throw Error("duplicate archive entry '" + name + "'");
    out.emplace(std::move(name), read_tensor(is));
  }
  return out;
}

template <class T, class Fn>
T read_file(const std::string& path, Fn fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return fn(in);
}

inline Sequence load_sequence(const std::string& path) {
  return read_file<Sequence>(path, [](std::istream& is) { return read_sequence(is); });
}

inline Tensor load_tensor(const std::string& path) {
  return read_file<Tensor>(path, [](std::istream& is) { return read_tensor(is); });
}

inline std::map<std::string, Tensor> load_archive(const std::string& path) {
  return read_file<std::map<std::string, Tensor>>(path, [](std::istream& is) { return read_archive(is); });
}

inline void save_sequence(const std::string& path, const Sequence& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  write_sequence(out, s);
}

inline void save_archive(const std::string& path, const std::map<std::string, Tensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  write_archive(out, tensors);
}

}  // namespace seqlayers
