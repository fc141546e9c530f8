/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: include/articulate/errors.hpp
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

#include <stdexcept>
#include <string>

namespace articulate {

/// Broad failure categories. The numeric values double as CLI exit codes.
enum class ErrorCategory : int {
    usage = 2,
    data = 3,
    numeric = 4,
    io = 5,
};

class Error : public std::runtime_error
{
public:
    Error(ErrorCategory category, const std::string& what) : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }
    int exit_code() const noexcept { return static_cast<int>(category_); }

private:
    ErrorCategory category_;
};

struct UsageError : Error
{
    explicit UsageError(const std::string& what) : Error(ErrorCategory::usage, what) {}
};

/// Inconsistent or invalid input data (missing coils, bad corpus, label problems).
struct DataError : Error
{
    explicit DataError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

/// Dimension mismatch between arrays, tensors, or parameter vectors.
struct ShapeError : Error
{
    explicit ShapeError(const std::string& what) : Error(ErrorCategory::data, "shape error: " + what) {}
};

/// Malformed text input. Carries the 1-based line number when known (0 otherwise).
struct ParseError : Error
{
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(ErrorCategory::data,
                line > 0 ? "parse error at line " + std::to_string(line) + ": " + what : "parse error: " + what),
          line_(line)
    {
    }
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct NumericError : Error
{
    explicit NumericError(const std::string& what) : Error(ErrorCategory::numeric, what) {}
};

struct IoError : Error
{
    explicit IoError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

/// Unrecognised binary layout (bad magic or version).
struct FormatError : Error
{
    explicit FormatError(const std::string& what) : Error(ErrorCategory::io, "format error: " + what) {}
};

} // namespace articulate
