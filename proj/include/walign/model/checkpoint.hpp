// Copyright 2026 The walign Authors. All Rights Reserved.
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

// Binary container: magic "WALIGNCK", format version, a free-form text
// header, then named arrays (name, dtype, shape, raw little-endian data).
// Files are written to a temporary path and renamed into place.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "walign/model/model.hpp"
#include "walign/numerics/tensor.hpp"

namespace walign {

class CheckpointWriter {
 public:
  explicit CheckpointWriter(std::string header) : header_(std::move(header)) {}

  template <typename T>
  void add(const std::string& name, const Tensor<T>& t);

  void write(const std::string& path) const;

 private:
  struct Entry {
    std::string name;
    uint8_t dtype;
    Shape shape;
    std::string bytes;
  };
  std::string header_;
  std::vector<Entry> entries_;
};

class CheckpointReader {
 public:
  explicit CheckpointReader(const std::string& path);

  const std::string& header() const { return header_; }
  bool contains(const std::string& name) const { return entries_.count(name) > 0; }
  std::vector<std::string> names() const;

  // Converts to T if the array was stored in the other precision. Throws
  // ParseError for unknown names.
  template <typename T>
  Tensor<T> get(const std::string& name) const;

 private:
  struct Entry {
    uint8_t dtype;
    Shape shape;
    std::string bytes;
  };
  std::string header_;
  std::map<std::string, Entry> entries_;
};

// Model parameters under their own names, with the model config as header.
template <typename T>
void save_model(const std::string& path, Model<T>& model, const std::string& extra_header = "");

// Reads the model config stored by save_model.
ModelConfig read_model_config(const std::string& path);

// Copies every parameter of `model` from the checkpoint. Shapes must match.
template <typename T>
void load_model_params(const CheckpointReader& reader, Model<T>& model);

}  // namespace walign
