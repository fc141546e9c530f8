/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: include/articulate/io.hpp
 *
 * Copyright 2026 The articulate authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "articulate/tensor.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace articulate {

using Json = nlohmann::ordered_json;

std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place, so readers never see partial output.
void write_text_file(const std::filesystem::path& path, const std::string& contents);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& json);

/// Rows of a matrix as nested arrays, and back. Throws ParseError on ragged input.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::string& what);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j, const std::string& what);

} // namespace articulate
