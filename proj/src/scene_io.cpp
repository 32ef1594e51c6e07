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

#include "relifusion/scene_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "relifusion/errors.hpp"

namespace relifusion::scene {

namespace {
void append_double(std::ostringstream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}
}  // namespace

std::string boxes_to_string(const std::vector<Box3D>& boxes) {
  std::ostringstream os;
  for (const Box3D& b : boxes) {
    os << b.class_id;
    for (double v : {b.x, b.y, b.z, b.w, b.l, b.h, b.yaw, b.vx, b.vy}) {
      os << ' ';
      append_double(os, v);
    }
    os << '\n';
  }
  return os.str();
}

std::vector<Box3D> boxes_from_string(const std::string& text) {
  std::vector<Box3D> boxes;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Box3D b;
    if (!(ls >> b.class_id >> b.x >> b.y >> b.z >> b.w >> b.l >> b.h >> b.yaw >>
          b.vx >> b.vy)) {
      throw IoError("boxes: malformed line " + std::to_string(lineno));
    }
    boxes.push_back(b);
  }
  return boxes;
}

void save_boxes(const std::string& path, const std::vector<Box3D>& boxes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for write: " + path);
  f << boxes_to_string(boxes);
  if (!f) throw IoError("write failed: " + path);
}

std::vector<Box3D> load_boxes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return boxes_from_string(ss.str());
}

namespace {
void put_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& f, const std::string& path) {
  unsigned char b[4];
  if (!f.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated file: " + path);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ofstream& f, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(f, bits);
}

float get_f32(std::ifstream& f, const std::string& path) {
  const std::uint32_t bits = get_u32(f, path);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}
}  // namespace

void save_cloud(const std::string& path, const PointCloud& cloud) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for write: " + path);
  f.write("RFPC", 4);
  put_u32(f, static_cast<std::uint32_t>(cloud.size()));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    put_f32(f, static_cast<float>(cloud.xs[i]));
    put_f32(f, static_cast<float>(cloud.ys[i]));
    put_f32(f, static_cast<float>(cloud.zs[i]));
    put_f32(f, static_cast<float>(cloud.intensity[i]));
  }
  if (!f) throw IoError("write failed: " + path);
}

PointCloud load_cloud(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, "RFPC", 4) != 0) {
    throw IoError("bad point-cloud magic in " + path);
  }
  const std::uint32_t count = get_u32(f, path);
  PointCloud cloud;
  for (std::uint32_t i = 0; i < count; ++i) {
    const float x = get_f32(f, path);
    const float y = get_f32(f, path);
    const float z = get_f32(f, path);
    const float inten = get_f32(f, path);
    cloud.push(x, y, z, inten, -1);
  }
  return cloud;
}

}  // namespace relifusion::scene
