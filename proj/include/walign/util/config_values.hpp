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

// Helpers for the flat "key = value" configuration format shared by model
// configs, training configs and checkpoint headers.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace walign {

// Parses "key = value" lines. Blank lines and lines starting with '#' are
// skipped. Throws ConfigError naming the line on malformed input.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text);

int parse_int(const std::string& key, const std::string& value);
int64_t parse_int64(const std::string& key, const std::string& value);
double parse_double(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);

// Shortest text that parses back to the same double.
std::string format_double(double v);

}  // namespace walign
