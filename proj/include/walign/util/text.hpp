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

#include <string>
#include <string_view>
#include <vector>

namespace walign {

// Splits on runs of ASCII whitespace. Leading/trailing whitespace is ignored.
std::vector<std::string> split_whitespace(std::string_view line);

// Splits a UTF-8 string into code points. Invalid lead bytes are returned as
// single-byte symbols so that splitting never fails.
std::vector<std::string> split_codepoints(std::string_view word);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Reads all lines of a file, stripping a trailing '\r'. Throws IngestionError
// when the file cannot be opened.
std::vector<std::string> read_lines(const std::string& path);

// Writes `content` to `path` via a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace walign
