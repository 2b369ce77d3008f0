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

#include "walign/model/config.hpp"

#include <sstream>

#include "walign/util/config_values.hpp"
#include "walign/util/error.hpp"

namespace walign {

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.encoder_layers = 2;
  c.decoder_layers = 2;
  c.d_model = 64;
  c.d_ffn = 128;
  c.heads = 2;
  return c;
}

void ModelConfig::validate() const {
  if (encoder_layers < 1 || decoder_layers < 1) throw ConfigError("model needs at least one encoder and decoder layer");
  if (d_model < 1 || d_ffn < 1 || heads < 1) throw ConfigError("model dimensions must be positive");
  if (d_model % heads != 0) {
    throw ConfigError("d_model=" + std::to_string(d_model) + " is not divisible by heads=" + std::to_string(heads));
  }
  if (vocab_size < 1) throw ConfigError("vocab_size must be positive");
  if (dropout < 0 || dropout >= 1) throw ConfigError("dropout must lie in [0, 1)");
}

std::string variant_name(Variant v) { return v == Variant::kMaskAlign ? "mask-align" : "vanilla-nmt"; }

std::string cross_layers_name(CrossLayers c) { return c == CrossLayers::kLast ? "last" : "all"; }

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  os << "encoder_layers = " << encoder_layers << "\n"
     << "decoder_layers = " << decoder_layers << "\n"
     << "d_model = " << d_model << "\n"
     << "d_ffn = " << d_ffn << "\n"
     << "heads = " << heads << "\n"
     << "share_decoder_embeddings = " << (share_decoder_embeddings ? "true" : "false") << "\n"
     << "cross_layers = " << cross_layers_name(cross_layers) << "\n"
     << "leaky = " << (leaky ? "true" : "false") << "\n"
     << "variant = " << variant_name(variant) << "\n"
     << "vocab_size = " << vocab_size << "\n"
     << "dropout = " << format_double(dropout) << "\n";
  return os.str();
}

void ModelConfig::set(const std::string& key, const std::string& value) {
  if (key == "encoder_layers") {
    encoder_layers = parse_int(key, value);
  } else if (key == "decoder_layers") {
    decoder_layers = parse_int(key, value);
  } else if (key == "d_model") {
    d_model = parse_int(key, value);
  } else if (key == "d_ffn") {
    d_ffn = parse_int(key, value);
  } else if (key == "heads") {
    heads = parse_int(key, value);
  } else if (key == "share_decoder_embeddings") {
    share_decoder_embeddings = parse_bool(key, value);
  } else if (key == "cross_layers") {
    if (value == "last") {
      cross_layers = CrossLayers::kLast;
    } else if (value == "all") {
      cross_layers = CrossLayers::kAll;
    } else {
      throw ConfigError("cross_layers must be 'last' or 'all', got '" + value + "'");
    }
  } else if (key == "leaky") {
    leaky = parse_bool(key, value);
  } else if (key == "variant") {
    if (value == "mask-align") {
      variant = Variant::kMaskAlign;
    } else if (value == "vanilla-nmt") {
      variant = Variant::kVanillaNmt;
    } else {
      throw ConfigError("variant must be 'mask-align' or 'vanilla-nmt', got '" + value + "'");
    }
  } else if (key == "vocab_size") {
    vocab_size = parse_int(key, value);
  } else if (key == "dropout") {
    dropout = parse_double(key, value);
  } else {
    throw ConfigError("unknown model setting '" + key + "'");
  }
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  ModelConfig c;
  for (const auto& [key, value] : parse_key_values(text)) c.set(key, value);
  return c;
}

}  // namespace walign
