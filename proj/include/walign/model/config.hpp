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

#pragma once

#include <map>
#include <string>

namespace walign {

enum class Variant {
  kMaskAlign,   // static-KV masked decoder, predicts every target token in parallel
  kVanillaNmt,  // causal decoder with BOS/EOS, the attention baseline
};

enum class CrossLayers { kLast, kAll };

struct ModelConfig {
  int encoder_layers = 6;
  int decoder_layers = 6;
  int d_model = 512;
  int d_ffn = 1024;
  int heads = 4;
  bool share_decoder_embeddings = true;
  CrossLayers cross_layers = CrossLayers::kLast;
  bool leaky = true;
  Variant variant = Variant::kMaskAlign;
  int vocab_size = 0;
  double dropout = 0.1;

  // dModel 64, dFfn 128, 2+2 layers, 2 heads.
  static ModelConfig desk();

  bool has_cross(int layer) const {
    return cross_layers == CrossLayers::kAll || layer == decoder_layers - 1;
  }

  // Throws ConfigError on an inconsistent configuration.
  void validate() const;

  // Flat "key = value" lines, the same keys accepted by `set`.
  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);
  // Applies one setting; throws ConfigError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);

  bool operator==(const ModelConfig&) const = default;
};

std::string variant_name(Variant v);
std::string cross_layers_name(CrossLayers c);

}  // namespace walign
