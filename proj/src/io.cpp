/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: src/io.cpp
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

#include "articulate/io.hpp"
#include "articulate/errors.hpp"

#include <fstream>
#include <sstream>

namespace articulate {

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& contents)
{
    if (path.has_parent_path())
    {
        std::filesystem::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
        {
            throw IoError("cannot write " + path.string());
        }
        out << contents;
        out.flush();
        if (!out)
        {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw IoError("failed writing " + path.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

Json read_json_file(const std::filesystem::path& path)
{
    const std::string text = read_text_file(path);
    try
    {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e)
    {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& json)
{
    write_text_file(path, json.dump(1) + "\n");
}

Json matrix_to_json(const Matrix& m)
{
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
    {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
        {
            row.push_back(m(r, c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& what)
{
    if (!j.is_array())
    {
        throw ParseError(what + ": expected an array of rows");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows > 0 && j[0].is_array() ? static_cast<Eigen::Index>(j[0].size()) : Eigen::Index{0};
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
    {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
        {
            throw ParseError(what + ": row " + std::to_string(r) + " has the wrong length");
        }
        for (Eigen::Index c = 0; c < cols; ++c)
        {
            const auto& value = row[static_cast<std::size_t>(c)];
            if (!value.is_number())
            {
                throw ParseError(what + ": non-numeric entry in row " + std::to_string(r));
            }
            m(r, c) = value.get<double>();
        }
    }
    return m;
}

Json vector_to_json(const Vector& v)
{
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
    {
        out.push_back(v(i));
    }
    return out;
}

Vector vector_from_json(const Json& j, const std::string& what)
{
    if (!j.is_array())
    {
        throw ParseError(what + ": expected an array");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
    {
        if (!j[i].is_number())
        {
            throw ParseError(what + ": non-numeric entry at index " + std::to_string(i));
        }
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

} // namespace articulate
