/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: src/mesh.cpp
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

#include "articulate/mesh.hpp"
#include "articulate/errors.hpp"
#include "articulate/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace articulate {

void validate(const Mesh& mesh)
{
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    {
        if (!mesh.vertices[i].allFinite())
        {
            throw DataError("mesh vertex " + std::to_string(i) + " has a non-finite coordinate");
        }
    }
    for (std::size_t f = 0; f < mesh.faces.size(); ++f)
    {
        for (std::size_t idx : mesh.faces[f])
        {
            if (idx >= mesh.vertices.size())
            {
                throw DataError("face " + std::to_string(f) + " references vertex " + std::to_string(idx) +
                                " but the mesh has " + std::to_string(mesh.vertices.size()) + " vertices");
            }
        }
    }
}

namespace {

std::size_t parse_face_index(const std::string& token, std::size_t line)
{
    const std::string head = token.substr(0, token.find('/'));
    std::size_t consumed = 0;
    long long value = 0;
    try
    {
        value = std::stoll(head, &consumed);
    } catch (const std::exception&)
    {
        throw ParseError("bad face index '" + token + "'", line);
    }
    if (consumed != head.size() || value < 1)
    {
        throw ParseError("bad face index '" + token + "' (indices are 1-based and positive)", line);
    }
    return static_cast<std::size_t>(value - 1);
}

} // namespace

Mesh read_obj(std::istream& in)
{
    Mesh mesh;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw))
    {
        ++line_no;
        const auto hash = raw.find('#');
        if (hash != std::string::npos)
        {
            raw.erase(hash);
        }
        std::istringstream line(raw);
        std::string tag;
        if (!(line >> tag))
        {
            continue;
        }
        if (tag == "v")
        {
            double x, y, z;
            if (!(line >> x >> y >> z))
            {
                throw ParseError("vertex record needs three coordinates", line_no);
            }
            mesh.vertices.emplace_back(x, y, z);
        }
        else if (tag == "f")
        {
            std::vector<std::size_t> idx;
            std::string token;
            while (line >> token)
            {
                idx.push_back(parse_face_index(token, line_no));
            }
            if (idx.size() < 3)
            {
                throw ParseError("face record needs three indices", line_no);
            }
            if (idx.size() != 3)
            {
                throw ParseError("unsupported face with " + std::to_string(idx.size()) +
                                     " vertices (only triangles are supported)",
                                 line_no);
            }
            for (std::size_t i : idx)
            {
                if (i >= mesh.vertices.size())
                {
                    throw ParseError("face index " + std::to_string(i + 1) + " out of range (" +
                                         std::to_string(mesh.vertices.size()) + " vertices defined)",
                                     line_no);
                }
            }
            mesh.faces.push_back({idx[0], idx[1], idx[2]});
        }
    }
    validate(mesh);
    return mesh;
}

Mesh load_obj(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw IoError("cannot open OBJ file " + path.string());
    }
    try
    {
        return read_obj(in);
    } catch (const ParseError& e)
    {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_obj(const Mesh& mesh, std::ostream& out)
{
    char buffer[128];
    for (const auto& v : mesh.vertices)
    {
        std::snprintf(buffer, sizeof(buffer), "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
        out << buffer;
    }
    for (const auto& f : mesh.faces)
    {
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    }
}

void save_obj(const Mesh& mesh, const std::filesystem::path& path)
{
    std::ostringstream out;
    write_obj(mesh, out);
    write_text_file(path, out.str());
}

std::pair<Mesh, Point3> center(const Mesh& mesh)
{
    Point3 centroid = Point3::Zero();
    if (mesh.vertices.empty())
    {
        return {mesh, centroid};
    }
    for (const auto& v : mesh.vertices)
    {
        centroid += v;
    }
    centroid /= static_cast<double>(mesh.vertices.size());
    Mesh out = mesh;
    for (auto& v : out.vertices)
    {
        v -= centroid;
    }
    return {std::move(out), centroid};
}

Vector to_feature_vector(const Mesh& mesh)
{
    Vector f(static_cast<Eigen::Index>(3 * mesh.vertices.size()));
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    {
        f.segment<3>(static_cast<Eigen::Index>(3 * i)) = mesh.vertices[i];
    }
    return f;
}

Mesh from_feature_vector(const Vector& features, std::vector<Face> faces)
{
    if (features.size() % 3 != 0)
    {
        throw ShapeError("feature vector length " + std::to_string(features.size()) + " is not a multiple of 3");
    }
    Mesh mesh;
    mesh.vertices.resize(static_cast<std::size_t>(features.size() / 3));
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    {
        mesh.vertices[i] = features.segment<3>(static_cast<Eigen::Index>(3 * i));
    }
    mesh.faces = std::move(faces);
    for (const auto& f : mesh.faces)
    {
        for (std::size_t idx : f)
        {
            if (idx >= mesh.vertices.size())
            {
                throw ShapeError("face index " + std::to_string(idx) + " exceeds vertex count " +
                                 std::to_string(mesh.vertices.size()));
            }
        }
    }
    return mesh;
}

NearestVertex nearest_vertex(const Mesh& mesh, const Point3& point)
{
    if (mesh.vertices.empty())
    {
        throw DataError("nearest_vertex: mesh has no vertices");
    }
    NearestVertex best{0, std::numeric_limits<double>::infinity()};
    double best_sq = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    {
        const double d = (mesh.vertices[i] - point).squaredNorm();
        if (d < best_sq)
        {
            best_sq = d;
            best.index = i;
        }
    }
    best.distance = std::sqrt(best_sq);
    return best;
}

void validate(const MeshCorpus& corpus)
{
    if (corpus.speakers.empty() || corpus.poses.empty())
    {
        throw DataError("corpus needs at least one speaker and one pose");
    }
    if (corpus.meshes.size() != corpus.speakers.size() * corpus.poses.size())
    {
        throw DataError("corpus grid has " + std::to_string(corpus.meshes.size()) + " meshes, expected " +
                        std::to_string(corpus.speakers.size() * corpus.poses.size()));
    }
    const Mesh& first = corpus.meshes.front();
    for (std::size_t m = 0; m < corpus.meshes.size(); ++m)
    {
        const Mesh& mesh = corpus.meshes[m];
        const std::string where = corpus.speakers[m / corpus.poses.size()] + "/" + corpus.poses[m % corpus.poses.size()];
        if (mesh.vertices.size() != first.vertices.size())
        {
            throw DataError("corpus mesh " + where + " has " + std::to_string(mesh.vertices.size()) +
                            " vertices, expected " + std::to_string(first.vertices.size()));
        }
        if (mesh.faces != first.faces)
        {
            throw DataError("corpus mesh " + where + " does not share the corpus face set");
        }
        validate(mesh);
    }
}

namespace {

std::string expand_pattern(std::string pattern, const std::string& speaker, const std::string& pose)
{
    auto replace = [&pattern](const std::string& key, const std::string& value) {
        for (auto pos = pattern.find(key); pos != std::string::npos; pos = pattern.find(key, pos + value.size()))
        {
            pattern.replace(pos, key.size(), value);
        }
    };
    replace("{speaker}", speaker);
    replace("{pose}", pose);
    return pattern;
}

constexpr const char* default_pattern = "{speaker}_{pose}.obj";

} // namespace

MeshCorpus load_corpus(const std::filesystem::path& directory)
{
    const auto manifest = read_json_file(directory / "corpus.json");
    MeshCorpus corpus;
    try
    {
        corpus.speakers = manifest.at("speakers").get<std::vector<std::string>>();
        corpus.poses = manifest.at("poses").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e)
    {
        throw ParseError("corpus.json: " + std::string(e.what()));
    }
    const std::string pattern = manifest.value("pattern", std::string(default_pattern));
    for (const auto& speaker : corpus.speakers)
    {
        for (const auto& pose : corpus.poses)
        {
            corpus.meshes.push_back(load_obj(directory / expand_pattern(pattern, speaker, pose)));
        }
    }
    validate(corpus);
    return corpus;
}

void save_corpus(const MeshCorpus& corpus, const std::filesystem::path& directory)
{
    validate(corpus);
    std::filesystem::create_directories(directory);
    nlohmann::ordered_json manifest;
    manifest["speakers"] = corpus.speakers;
    manifest["poses"] = corpus.poses;
    manifest["pattern"] = default_pattern;
    write_json_file(directory / "corpus.json", manifest);
    for (std::size_t i = 0; i < corpus.speakers.size(); ++i)
    {
        for (std::size_t j = 0; j < corpus.poses.size(); ++j)
        {
            save_obj(corpus.at(i, j), directory / expand_pattern(default_pattern, corpus.speakers[i], corpus.poses[j]));
        }
    }
}

} // namespace articulate
