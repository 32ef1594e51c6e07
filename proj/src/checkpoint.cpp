/*
 * Copyright 2026 The ReliFusion Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "relifusion/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "relifusion/errors.hpp"

namespace relifusion::train {

namespace {

void put_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  f.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ofstream& f, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  f.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::ifstream& f, const std::string& path) {
  unsigned char b[4];
  if (!f.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated checkpoint: " + path);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::ifstream& f, const std::string& path) {
  unsigned char b[8];
  if (!f.read(reinterpret_cast<char*>(b), 8)) throw IoError("truncated checkpoint: " + path);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const ad::Tensor*>>& params) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for write: " + path);
  f.write("RFCK", 4);
  put_u32(f, 1);
  put_u32(f, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, tensor] : params) {
    put_u32(f, static_cast<std::uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(f, static_cast<std::uint32_t>(tensor->shape.size()));
    for (int e : tensor->shape) put_u32(f, static_cast<std::uint32_t>(e));
    for (double v : tensor->v) put_f64(f, v);
  }
  if (!f) throw IoError("write failed: " + path);
}

std::map<std::string, ad::Tensor> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, "RFCK", 4) != 0) {
    throw IoError("bad checkpoint magic in " + path);
  }
  const std::uint32_t version = get_u32(f, path);
  if (version != 1) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = get_u32(f, path);
  std::map<std::string, ad::Tensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = get_u32(f, path);
    std::string name(name_len, '\0');
    if (!f.read(name.data(), name_len)) throw IoError("truncated checkpoint: " + path);
    const std::uint32_t rank = get_u32(f, path);
    std::vector<int> shape;
    int n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      shape.push_back(static_cast<int>(get_u32(f, path)));
      n *= shape.back();
    }
    std::vector<double> values(static_cast<std::size_t>(n));
    for (double& v : values) v = get_f64(f, path);
    out.emplace(std::move(name), ad::Tensor(std::move(shape), std::move(values)));
  }
  return out;
}

}  // namespace relifusion::train
