// Copyright 2026 The dyngrow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dyngrow/model_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "dyngrow/errors.hpp"

namespace dyngrow {

std::string export_dot(const LayerGraph& g) {
  std::ostringstream out;
  out << "digraph model {\n  rankdir=TB;\n";
  for (const auto& [id, l] : g.layers()) {
    out << "  " << to_string(id) << " [label=\"" << id.value << '/' << to_string(l.kind.type);
    if (l.kind.type == LayerType::DenseRes) out << '_' << to_string(l.kind.init);
    out << '/' << l.neurons() << "\"";
    if (l.kind.is_input() || l.kind.is_output()) out << ", shape=box";
    out << "];\n";
  }
  for (const auto& [id, l] : g.layers()) {
    std::vector<LayerId> targets = l.outgoing;
    std::sort(targets.begin(), targets.end());
    for (LayerId to : targets) out << "  " << to_string(id) << " -> " << to_string(to) << ";\n";
  }
  out << "}\n";
  return out.str();
}

namespace {

constexpr char kMagic[8] = {'D', 'Y', 'N', 'G', 'R', 'O', 'W', '\0'};

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void shape(const Shape& s) {
    u64(s.channels);
    u64(s.height);
    u64(s.width);
  }
  void matrix(const Matrix& m) {
    u64(m.rows());
    u64(m.cols());
    for (double v : m.values()) f64(v);
  }
  void ids(const std::vector<LayerId>& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (LayerId id : v) u32(id.value);
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return need(1)[0]; }
  std::uint32_t u32() {
    auto p = need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{p[i]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto p = need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{p[i]} << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  Shape shape() {
    Shape s;
    s.channels = u64();
    s.height = u64();
    s.width = u64();
    return s;
  }
  Matrix matrix() {
    const std::uint64_t rows = u64();
    const std::uint64_t cols = u64();
    if (rows == 0 || cols == 0 || rows * cols > (bytes_.size() - pos_) / 8) {
      throw FormatError("model: bad matrix header at offset " + std::to_string(pos_));
    }
    std::vector<double> values(rows * cols);
    for (double& v : values) v = f64();
    return Matrix(rows, cols, std::move(values));
  }
  std::vector<LayerId> ids() {
    const std::uint32_t n = u32();
    if (n > (bytes_.size() - pos_) / 4) throw FormatError("model: bad id list at offset " + std::to_string(pos_));
    std::vector<LayerId> out(n);
    for (auto& id : out) id.value = u32();
    return out;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> need(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw FormatError("model: truncated at offset " + std::to_string(pos_));
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::uint8_t> save_model(const LayerGraph& g) {
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u8(kModelFormatVersion);
  w.u64(g.def_neu());
  w.u64(g.conv_channels());
  w.u32(g.next_id());
  w.u32(g.output().value);
  w.ids(g.inputs());
  w.u32(static_cast<std::uint32_t>(g.size()));
  for (const auto& [id, l] : g.layers()) {
    w.u32(id.value);
    w.u8(static_cast<std::uint8_t>(l.kind.type));
    w.u8(static_cast<std::uint8_t>(l.kind.init));
    w.u8(static_cast<std::uint8_t>(l.activation));
    w.shape(l.in_shape);
    w.shape(l.out_shape);
    w.matrix(l.weights);
    w.matrix(l.bias);
    w.ids(l.incoming);
    w.ids(l.outgoing);
  }
  const std::uint64_t sum = fnv1a64(w.bytes());
  w.u64(sum);
  return std::move(w.bytes());
}

LayerGraph load_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kMagic + 1 + 8) throw FormatError("model: file too short");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) throw FormatError("model: bad magic");
  const std::uint8_t version = bytes[sizeof kMagic];
  if (version != kModelFormatVersion) {
    throw FormatError("model: unsupported format version " + std::to_string(version));
  }
  const auto body = bytes.first(bytes.size() - 8);
  Reader trailer(bytes.subspan(bytes.size() - 8));
  if (trailer.u64() != fnv1a64(body)) throw FormatError("model: checksum mismatch");

  Reader r(body.subspan(sizeof kMagic + 1));
  const std::uint64_t def_neu = r.u64();
  const std::uint64_t conv_channels = r.u64();
  if (def_neu == 0 || conv_channels == 0) throw FormatError("model: bad header");
  const std::uint32_t next_id = r.u32();
  const LayerId output{r.u32()};
  std::vector<LayerId> inputs = r.ids();
  const std::uint32_t count = r.u32();
  std::map<LayerId, Layer> layers;
  for (std::uint32_t i = 0; i < count; ++i) {
    Layer l;
    l.id.value = r.u32();
    const std::uint8_t type = r.u8();
    const std::uint8_t init = r.u8();
    const std::uint8_t act = r.u8();
    if (type > static_cast<std::uint8_t>(LayerType::ConvRes) ||
        init > static_cast<std::uint8_t>(InitScheme::Identity) ||
        act > static_cast<std::uint8_t>(Activation::Linear)) {
      throw FormatError("model: bad layer tag at offset " + std::to_string(r.pos()));
    }
    l.kind = {static_cast<LayerType>(type), static_cast<InitScheme>(init)};
    l.activation = static_cast<Activation>(act);
    l.in_shape = r.shape();
    l.out_shape = r.shape();
    l.weights = r.matrix();
    l.bias = r.matrix();
    l.incoming = r.ids();
    l.outgoing = r.ids();
    if (l.id.value >= next_id) throw FormatError("model: layer id beyond allocator state");
    layers.emplace(l.id, std::move(l));
  }
  if (r.pos() != body.size() - sizeof kMagic - 1) throw FormatError("model: trailing bytes");

  LayerGraph g(def_neu, conv_channels);
  g.restore(std::move(layers), std::move(inputs), output, next_id);
  if (auto v = validate(g); !v.empty()) throw FormatError("model: invalid graph: " + v.front().message);
  return g;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

LayerGraph load_model_file(const std::filesystem::path& path) { return load_model(read_file(path)); }

void save_model_file(const LayerGraph& g, const std::filesystem::path& path) {
  const auto bytes = save_model(g);
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace dyngrow
