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

#include "dyngrow/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include "dyngrow/errors.hpp"

namespace dyngrow {

void Dataset::check() const {
  if (class_count < 1) throw InvalidDatasetError("dataset has no classes");
  if (inputs.empty()) throw InvalidDatasetError("dataset has no inputs");
  for (const auto& in : inputs) {
    if (in.batch() != labels.size()) {
      throw InvalidDatasetError("input sample count " + std::to_string(in.batch()) +
                                " differs from label count " + std::to_string(labels.size()));
    }
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= class_count) {
      throw InvalidDatasetError("label " + std::to_string(y) + " outside [0, " +
                                std::to_string(class_count) + ")");
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.class_count = class_count;
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels.at(i));
  for (const auto& in : inputs) {
    std::vector<double> values;
    values.reserve(indices.size() * in.shape().size());
    for (std::size_t i : indices) {
      auto s = in.sample(i);
      values.insert(values.end(), s.begin(), s.end());
    }
    out.inputs.emplace_back(indices.size(), in.shape(), std::move(values));
  }
  return out;
}

std::vector<Matrix> Dataset::batch(std::span<const std::size_t> indices) const {
  std::vector<Matrix> out;
  out.reserve(inputs.size());
  for (const auto& in : inputs) out.push_back(in.gather_columns(indices));
  return out;
}

std::vector<Matrix> Dataset::all() const {
  std::vector<std::size_t> idx(size());
  std::iota(idx.begin(), idx.end(), 0);
  return batch(idx);
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(class_count, 0);
  for (int y : labels) ++counts.at(static_cast<std::size_t>(y));
  return counts;
}

void MtsDataset::check() const {
  if (dims == 0 || length == 0) throw InvalidDatasetError("series need dims >= 1 and length >= 1");
  if (series.size() != labels.size()) throw InvalidDatasetError("series/label count mismatch");
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].size() != dims) throw InvalidDatasetError("sample " + std::to_string(i) + " has wrong dims");
    for (const auto& s : series[i]) {
      if (s.size() != length) throw InvalidDatasetError("sample " + std::to_string(i) + " has wrong length");
    }
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= class_count) {
      throw InvalidDatasetError("sample " + std::to_string(i) + " label out of range");
    }
  }
}

namespace {

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw FormatError("file not found: " + path.string());
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (f == nullptr) throw FormatError("cannot open " + path.string());
  std::vector<unsigned char> out;
  unsigned char buf[1 << 16];
  int n = 0;
  while ((n = gzread(f, buf, sizeof buf)) > 0) out.insert(out.end(), buf, buf + n);
  int err = 0;
  const char* msg = gzerror(f, &err);
  gzclose(f);
  if (n < 0 || (err != Z_OK && err != Z_STREAM_END)) {
    throw FormatError("read error in " + path.string() + ": " + msg);
  }
  return out;
}

std::uint32_t read_be32(const std::vector<unsigned char>& b, std::size_t offset,
                        const std::filesystem::path& path) {
  if (offset + 4 > b.size()) {
    throw FormatError(path.string() + ": truncated header at offset " + std::to_string(offset));
  }
  return (std::uint32_t{b[offset]} << 24) | (std::uint32_t{b[offset + 1]} << 16) |
         (std::uint32_t{b[offset + 2]} << 8) | std::uint32_t{b[offset + 3]};
}

void put_be32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                         static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(bytes, 4);
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = read_all(images);
  const auto lab = read_all(labels);

  const std::uint32_t img_magic = read_be32(img, 0, images);
  if (img_magic != 2051) {
    throw FormatError(images.string() + ": bad magic " + std::to_string(img_magic) +
                      " at offset 0 (expected 2051)");
  }
  const std::uint32_t count = read_be32(img, 4, images);
  const std::uint32_t rows = read_be32(img, 8, images);
  const std::uint32_t cols = read_be32(img, 12, images);
  const std::size_t pixels = std::size_t{rows} * cols;
  const std::size_t expected = 16 + std::size_t{count} * pixels;
  if (img.size() < expected) {
    throw FormatError(images.string() + ": truncated at offset " + std::to_string(img.size()) +
                      " (expected " + std::to_string(expected) + " bytes)");
  }

  const std::uint32_t lab_magic = read_be32(lab, 0, labels);
  if (lab_magic != 2049) {
    throw FormatError(labels.string() + ": bad magic " + std::to_string(lab_magic) +
                      " at offset 0 (expected 2049)");
  }
  const std::uint32_t lab_count = read_be32(lab, 4, labels);
  if (lab_count != count) {
    throw FormatError(labels.string() + ": label count " + std::to_string(lab_count) +
                      " at offset 4 does not match image count " + std::to_string(count));
  }
  if (lab.size() < 8 + std::size_t{count}) {
    throw FormatError(labels.string() + ": truncated at offset " + std::to_string(lab.size()));
  }

  Dataset ds;
  std::vector<double> values(std::size_t{count} * pixels);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = img[16 + i] / 255.0;
  ds.inputs.emplace_back(count, Shape{1, rows, cols}, std::move(values));
  ds.labels.resize(count);
  int max_label = -1;
  for (std::size_t i = 0; i < count; ++i) {
    ds.labels[i] = lab[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.class_count = static_cast<std::size_t>(std::max(max_label + 1, 2));
  return ds;
}

void save_idx(const Dataset& ds, const std::filesystem::path& images,
              const std::filesystem::path& labels) {
  ds.check();
  if (ds.inputs.size() != 1 || ds.inputs[0].channels() != 1) {
    throw std::invalid_argument("save_idx needs a single-input, single-channel dataset");
  }
  const ImageBatch& in = ds.inputs[0];
  std::ofstream img(images, std::ios::binary);
  std::ofstream lab(labels, std::ios::binary);
  if (!img || !lab) throw FormatError("cannot write IDX files at " + images.string());
  put_be32(img, 2051);
  put_be32(img, static_cast<std::uint32_t>(in.batch()));
  put_be32(img, static_cast<std::uint32_t>(in.height()));
  put_be32(img, static_cast<std::uint32_t>(in.width()));
  for (double v : in.values()) {
    img.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
  }
  put_be32(lab, 2049);
  put_be32(lab, static_cast<std::uint32_t>(ds.size()));
  for (int y : ds.labels) lab.put(static_cast<char>(y));
}

Matrix recurrence_plot(std::span<const double> x, double eps) {
  if (x.empty()) throw std::invalid_argument("recurrence_plot: empty series");
  if (!(eps >= 0.0)) throw std::invalid_argument("recurrence_plot: eps must be >= 0");
  const std::size_t n = x.size();
  Matrix r(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    r(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::abs(x[i] - x[j]) <= eps ? 1.0 : 0.0;
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return r;
}

double pairwise_distance_quantile(std::span<const double> x, double q) {
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile must lie in [0, 1]");
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  std::vector<double> d;
  d.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d.push_back(std::abs(x[i] - x[j]));
  }
  const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(d.size() - 1)));
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  return d[k];
}

std::vector<double> z_normalize(std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  if (out.empty()) return out;
  const double n = static_cast<double>(out.size());
  const double mean = std::accumulate(out.begin(), out.end(), 0.0) / n;
  double var = 0.0;
  for (double v : out) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  for (double& v : out) v = sd > 1e-12 ? (v - mean) / sd : 0.0;
  return out;
}

Matrix downsample_plot(const Matrix& plot, std::size_t max_side) {
  if (max_side == 0 || (plot.rows() <= max_side && plot.cols() <= max_side)) return plot;
  const std::size_t factor = (std::max(plot.rows(), plot.cols()) + max_side - 1) / max_side;
  const std::size_t rows = (plot.rows() + factor - 1) / factor;
  const std::size_t cols = (plot.cols() + factor - 1) / factor;
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double sum = 0.0;
      std::size_t cells = 0;
      for (std::size_t i = r * factor; i < std::min(plot.rows(), (r + 1) * factor); ++i) {
        for (std::size_t j = c * factor; j < std::min(plot.cols(), (c + 1) * factor); ++j) {
          sum += plot(i, j);
          ++cells;
        }
      }
      out(r, c) = sum / static_cast<double>(cells) >= 0.5 ? 1.0 : 0.0;
    }
  }
  return out;
}

std::vector<Dataset> mts_to_images(const MtsDataset& ds, const RecurrenceOptions& options) {
  ds.check();
  std::vector<Dataset> out;
  for (std::size_t d = 0; d < ds.dims; ++d) {
    std::vector<double> values;
    Shape shape;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      std::vector<double> x = options.normalize ? z_normalize(ds.series[i][d]) : ds.series[i][d];
      const double eps = options.eps.kind == EpsRule::Kind::Fixed
                             ? options.eps.value
                             : pairwise_distance_quantile(x, options.eps.value);
      const Matrix plot = downsample_plot(recurrence_plot(x, eps), options.max_side);
      shape = {1, plot.rows(), plot.cols()};
      values.insert(values.end(), plot.values().begin(), plot.values().end());
    }
    Dataset img;
    img.class_count = ds.class_count;
    img.labels = ds.labels;
    img.inputs.emplace_back(ds.size(), shape, std::move(values));
    out.push_back(std::move(img));
  }
  return out;
}

Dataset stack_as_channels(const std::vector<Dataset>& per_dim) {
  if (per_dim.empty()) throw std::invalid_argument("stack_as_channels: nothing to stack");
  const Dataset& first = per_dim.front();
  const std::size_t n = first.size();
  const Shape plane = first.inputs.at(0).shape();
  std::vector<double> values;
  values.reserve(n * plane.size() * per_dim.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (const Dataset& d : per_dim) {
      if (d.size() != n || !(d.inputs.at(0).shape() == plane) || d.labels != first.labels) {
        throw InvalidDatasetError("stack_as_channels: per-dimension datasets are not aligned");
      }
      auto s = d.inputs[0].sample(i);
      values.insert(values.end(), s.begin(), s.end());
    }
  }
  Dataset out;
  out.class_count = first.class_count;
  out.labels = first.labels;
  out.inputs.emplace_back(n, Shape{per_dim.size() * plane.channels, plane.height, plane.width},
                          std::move(values));
  return out;
}

Dataset stack_as_inputs(const std::vector<Dataset>& per_dim) {
  if (per_dim.empty()) throw std::invalid_argument("stack_as_inputs: nothing to stack");
  Dataset out;
  out.class_count = per_dim.front().class_count;
  out.labels = per_dim.front().labels;
  for (const Dataset& d : per_dim) {
    if (d.labels != out.labels) {
      throw InvalidDatasetError("stack_as_inputs: per-dimension datasets are not aligned");
    }
    out.inputs.insert(out.inputs.end(), d.inputs.begin(), d.inputs.end());
  }
  return out;
}

namespace {

std::size_t header_value(const std::string& header, const std::string& key) {
  const auto pos = header.find(key + "=");
  if (pos == std::string::npos) throw FormatError("time-series header lacks '" + key + "='");
  try {
    return std::stoul(header.substr(pos + key.size() + 1));
  } catch (const std::exception&) {
    throw FormatError("time-series header has a bad '" + key + "' value");
  }
}

}  // namespace

MtsDataset load_timeseries_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open time-series file: " + path.string());
  std::string line;
  std::size_t row = 0;
  bool have_header = false;
  MtsDataset ds;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!have_header) {
      ds.dims = header_value(line, "dims");
      ds.length = header_value(line, "length");
      ds.class_count = header_value(line, "classes");
      if (ds.dims == 0 || ds.length == 0 || ds.class_count == 0) {
        throw FormatError(path.string() + ": header row " + std::to_string(row) + " has a zero field");
      }
      have_header = true;
      continue;
    }
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        fields.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw FormatError(path.string() + ": row " + std::to_string(row) + " has a non-numeric field '" + cell + "'");
      }
    }
    const std::size_t want = 1 + ds.dims * ds.length;
    if (fields.size() != want) {
      throw FormatError(path.string() + ": row " + std::to_string(row) + " has " +
                        std::to_string(fields.size()) + " fields, expected " + std::to_string(want));
    }
    const double label = fields[0];
    if (label != std::floor(label) || label < 0 || label >= static_cast<double>(ds.class_count)) {
      throw FormatError(path.string() + ": row " + std::to_string(row) + " label out of range");
    }
    std::vector<std::vector<double>> sample(ds.dims);
    for (std::size_t d = 0; d < ds.dims; ++d) {
      sample[d].assign(fields.begin() + 1 + static_cast<std::ptrdiff_t>(d * ds.length),
                       fields.begin() + 1 + static_cast<std::ptrdiff_t>((d + 1) * ds.length));
    }
    ds.series.push_back(std::move(sample));
    ds.labels.push_back(static_cast<int>(label));
  }
  if (!have_header) throw FormatError(path.string() + ": empty time-series file");
  if (ds.series.empty()) throw FormatError(path.string() + ": no samples after the header");
  return ds;
}

void save_timeseries_csv(const MtsDataset& ds, const std::filesystem::path& path) {
  ds.check();
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out.precision(17);
  out << "dims=" << ds.dims << ",length=" << ds.length << ",classes=" << ds.class_count << "\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.labels[i];
    for (const auto& s : ds.series[i]) {
      for (double v : s) out << ',' << v;
    }
    out << "\n";
  }
}

LayerGraph build_mts_model(std::size_t dims, std::size_t image_side, std::size_t classes,
                           bool shared_input, std::size_t def_neu, Rng& rng,
                           std::size_t conv_channels) {
  if (dims == 0) throw std::invalid_argument("build_mts_model: dims must be >= 1");
  LayerGraph g(def_neu, conv_channels);
  std::vector<LayerId> inputs;
  if (shared_input) {
    inputs.push_back(g.add_input(InputSpec::image(dims, image_side, image_side), rng));
  } else {
    for (std::size_t d = 0; d < dims; ++d) {
      inputs.push_back(g.add_input(InputSpec::image(1, image_side, image_side), rng));
    }
  }
  const LayerId hidden =
      g.add_hidden(LayerKind::dense_seq(), Shape{g.layer(inputs[0]).neurons(), 1, 1}, rng);
  const LayerId out = g.add_output(classes, rng);
  for (LayerId in : inputs) g.connect(in, hidden);
  g.connect(hidden, out);
  return g;
}

}  // namespace dyngrow
