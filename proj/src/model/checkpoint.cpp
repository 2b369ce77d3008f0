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

#include "walign/model/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "walign/util/config_values.hpp"
#include "walign/util/error.hpp"
#include "walign/util/text.hpp"

namespace walign {

namespace {

constexpr char kMagic[8] = {'W', 'A', 'L', 'I', 'G', 'N', 'C', 'K'};
constexpr uint32_t kVersion = 1;
constexpr const char* kModelPrefix = "model.";

template <typename T>
constexpr uint8_t dtype_code() {
  return sizeof(T) == 4 ? 4 : 8;
}

template <typename V>
void put(std::string& out, V v) {
  char buf[sizeof(V)];
  std::memcpy(buf, &v, sizeof(V));
  out.append(buf, sizeof(V));
}

void put_string(std::string& out, const std::string& s) {
  put<uint64_t>(out, s.size());
  out += s;
}

class Cursor {
 public:
  Cursor(const std::string& data, const std::string& path) : data_(data), path_(path) {}

  template <typename V>
  V get() {
    need(sizeof(V));
    V v;
    std::memcpy(&v, data_.data() + pos_, sizeof(V));
    pos_ += sizeof(V);
    return v;
  }

  std::string bytes(uint64_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::string string() { return bytes(get<uint64_t>()); }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(uint64_t n) const {
    if (n > data_.size() - pos_) throw ParseError("checkpoint '" + path_ + "' is truncated");
  }

  const std::string& data_;
  const std::string& path_;
  size_t pos_ = 0;
};

}  // namespace

template <typename T>
void CheckpointWriter::add(const std::string& name, const Tensor<T>& t) {
  Entry e{name, dtype_code<T>(), t.shape(), std::string()};
  e.bytes.assign(reinterpret_cast<const char*>(t.data()), static_cast<size_t>(t.size()) * sizeof(T));
  entries_.push_back(std::move(e));
}

void CheckpointWriter::write(const std::string& path) const {
  std::string out(kMagic, sizeof(kMagic));
  put<uint32_t>(out, kVersion);
  put_string(out, header_);
  put<uint64_t>(out, entries_.size());
  for (const auto& e : entries_) {
    put_string(out, e.name);
    put<uint8_t>(out, e.dtype);
    put<uint32_t>(out, static_cast<uint32_t>(e.shape.size()));
    for (int64_t d : e.shape) put<int64_t>(out, d);
    put_string(out, e.bytes);
  }
  write_file_atomic(path, out);
}

CheckpointReader::CheckpointReader(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open checkpoint '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string data = buf.str();
  if (data.size() < sizeof(kMagic) || std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("'" + path + "' is not a checkpoint file");
  }
  Cursor c(data, path);
  c.bytes(sizeof(kMagic));
  const auto version = c.get<uint32_t>();
  if (version != kVersion) {
    throw ParseError("checkpoint '" + path + "' has unsupported version " + std::to_string(version));
  }
  header_ = c.string();
  const auto count = c.get<uint64_t>();
  for (uint64_t i = 0; i < count; ++i) {
    std::string name = c.string();
    Entry e;
    e.dtype = c.get<uint8_t>();
    if (e.dtype != 4 && e.dtype != 8) throw ParseError("array '" + name + "' has unknown dtype");
    const auto rank = c.get<uint32_t>();
    for (uint32_t k = 0; k < rank; ++k) e.shape.push_back(c.get<int64_t>());
    e.bytes = c.string();
    if (e.bytes.size() != static_cast<size_t>(shape_size(e.shape)) * e.dtype) {
      throw ParseError("array '" + name + "' size does not match its shape " + shape_str(e.shape));
    }
    entries_.emplace(std::move(name), std::move(e));
  }
  if (!c.done()) throw ParseError("checkpoint '" + path + "' has trailing data");
}

std::vector<std::string> CheckpointReader::names() const {
  std::vector<std::string> out;
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

template <typename T>
Tensor<T> CheckpointReader::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ParseError("checkpoint has no array '" + name + "'");
  const Entry& e = it->second;
  Tensor<T> t(e.shape);
  if (e.dtype == dtype_code<T>()) {
    std::memcpy(t.data(), e.bytes.data(), e.bytes.size());
  } else if (e.dtype == 4) {
    const auto* src = reinterpret_cast<const float*>(e.bytes.data());
    for (int64_t i = 0; i < t.size(); ++i) t[i] = T(src[i]);
  } else {
    const auto* src = reinterpret_cast<const double*>(e.bytes.data());
    for (int64_t i = 0; i < t.size(); ++i) t[i] = T(src[i]);
  }
  return t;
}

template <typename T>
void save_model(const std::string& path, Model<T>& model, const std::string& extra_header) {
  std::string header;
  for (const auto& [key, value] : parse_key_values(model.config().to_text())) {
    header += kModelPrefix + key + " = " + value + "\n";
  }
  header += extra_header;
  CheckpointWriter w(header);
  for (Parameter<T>* p : model.parameters()) w.add(p->name, p->value);
  w.write(path);
}

ModelConfig read_model_config(const std::string& path) {
  CheckpointReader reader(path);
  ModelConfig c;
  const std::string prefix = kModelPrefix;
  for (const auto& [key, value] : parse_key_values(reader.header())) {
    if (key.compare(0, prefix.size(), prefix) == 0) c.set(key.substr(prefix.size()), value);
  }
  c.validate();
  return c;
}

template <typename T>
void load_model_params(const CheckpointReader& reader, Model<T>& model) {
  for (Parameter<T>* p : model.parameters()) {
    Tensor<T> t = reader.get<T>(p->name);
    if (t.shape() != p->value.shape()) {
      throw ParseError("parameter '" + p->name + "' has shape " + shape_str(t.shape()) + " in checkpoint, model expects " +
                       shape_str(p->value.shape()));
    }
    p->value = std::move(t);
  }
}

template void CheckpointWriter::add(const std::string&, const Tensor<float>&);
template void CheckpointWriter::add(const std::string&, const Tensor<double>&);
template Tensor<float> CheckpointReader::get(const std::string&) const;
template Tensor<double> CheckpointReader::get(const std::string&) const;
template void save_model(const std::string&, Model<float>&, const std::string&);
template void save_model(const std::string&, Model<double>&, const std::string&);
template void load_model_params(const CheckpointReader&, Model<float>&);
template void load_model_params(const CheckpointReader&, Model<double>&);

}  // namespace walign
