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

#ifndef DYNGROW_MODEL_IO_HPP_
#define DYNGROW_MODEL_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dyngrow/graph.hpp"

namespace dyngrow {

// Graphviz digraph: one node per layer labelled "id/kind/neurons", one edge per
// connection, both in ascending id order.
std::string export_dot(const LayerGraph& g);

inline constexpr std::uint8_t kModelFormatVersion = 1;

// Little-endian binary: "DYNGROW\0", a version byte, the graph, and a trailing
// FNV-1a checksum of everything before it.
std::vector<std::uint8_t> save_model(const LayerGraph& g);
// Throws FormatError on a bad magic, unknown version, truncation or a checksum
// mismatch.
LayerGraph load_model(std::span<const std::uint8_t> bytes);

LayerGraph load_model_file(const std::filesystem::path& path);
void save_model_file(const LayerGraph& g, const std::filesystem::path& path);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed = 14695981039346656037ull);
std::string hex64(std::uint64_t v);

// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace dyngrow

#endif  // DYNGROW_MODEL_IO_HPP_
