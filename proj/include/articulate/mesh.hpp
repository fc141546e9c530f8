/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: include/articulate/mesh.hpp
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

#include "Eigen/Core"

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace articulate {

using Point3 = Eigen::Vector3d;
using Face = std::array<std::size_t, 3>;

/// Triangle surface mesh, coordinates in millimetres, 0-based face indices.
struct Mesh
{
    std::vector<Point3> vertices;
    std::vector<Face> faces;
};

/// Throws DataError if a face index is out of range or a coordinate is not finite.
void validate(const Mesh& mesh);

/**
 * Reads the `v` / `f` subset of Wavefront OBJ. `#` comments and other record types
 * (vn, vt, o, g, s, ...) are ignored. Face entries may carry `/vt/vn` suffixes.
 * Only triangles are accepted.
 */
Mesh read_obj(std::istream& in);
Mesh load_obj(const std::filesystem::path& path);

/// Writes coordinates with 9 significant digits and 1-based face indices.
void write_obj(const Mesh& mesh, std::ostream& out);
void save_obj(const Mesh& mesh, const std::filesystem::path& path);

/// Translates the mesh so its vertex centroid is the origin. Returns the mesh and the removed centroid.
std::pair<Mesh, Point3> center(const Mesh& mesh);

/// (x0, y0, z0, x1, y1, z1, ...)
Vector to_feature_vector(const Mesh& mesh);
Mesh from_feature_vector(const Vector& features, std::vector<Face> faces);

struct NearestVertex
{
    std::size_t index;
    double distance;
};

/// Exact linear scan; ties go to the lowest index.
NearestVertex nearest_vertex(const Mesh& mesh, const Point3& point);

/**
 * Grid of registered meshes: one mesh per (speaker, pose) pair, all sharing a face set.
 * Meshes are stored speaker-major: meshes[speaker * poses.size() + pose].
 */
struct MeshCorpus
{
    std::vector<std::string> speakers;
    std::vector<std::string> poses;
    std::vector<Mesh> meshes;

    const Mesh& at(std::size_t speaker, std::size_t pose) const { return meshes.at(speaker * poses.size() + pose); }
};

/// Throws DataError unless the grid is fully populated with meshes sharing one face set.
void validate(const MeshCorpus& corpus);

/**
 * Loads a corpus directory. The directory holds `corpus.json`:
 *
 *   {"speakers": [...], "poses": [...], "pattern": "{speaker}/{pose}.obj"}
 *
 * `pattern` is optional and defaults to "{speaker}_{pose}.obj".
 */
MeshCorpus load_corpus(const std::filesystem::path& directory);
void save_corpus(const MeshCorpus& corpus, const std::filesystem::path& directory);

} // namespace articulate
