/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: include/articulate/model.hpp
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

#include "articulate/mesh.hpp"
#include "articulate/tensor.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace articulate {

/// Per-dimension mean and population standard deviation of a parameter subspace.
struct ParamStats
{
    Vector mean;
    Vector stddev;

    Eigen::Index size() const noexcept { return mean.size(); }
    /// Box [mean - c * stddev, mean + c * stddev].
    Vector lower(double c) const { return mean - c * stddev; }
    Vector upper(double c) const { return mean + c * stddev; }

    friend bool operator==(const ParamStats& a, const ParamStats& b)
    {
        return a.mean.size() == b.mean.size() && a.stddev.size() == b.stddev.size() && a.mean == b.mean &&
               a.stddev == b.stddev;
    }
};

/// Assignment of an EMA coil to a model vertex.
struct CoilVertex
{
    std::string coil;
    std::size_t vertex = 0;

    friend bool operator==(const CoilVertex&, const CoilVertex&) = default;
};

struct ModelParams
{
    Vector speaker;
    Vector pose;
};

/**
 * Multilinear shape model: positions(s, p) = mean + core x1 s x2 p.
 *
 * The core tensor is speakers x poses x 3V. Statistics are taken over the rows
 * of the HOSVD factor matrices and define the box constraints used when fitting.
 */
struct MultilinearModel
{
    Tensor3 core;
    Vector mean;
    std::vector<Face> faces;
    ParamStats speaker_stats;
    ParamStats pose_stats;
    std::vector<CoilVertex> correspondence;
    std::vector<std::string> speaker_ids;
    std::vector<std::string> phone_labels;

    std::size_t speaker_dims() const { return core.dims()[0]; }
    std::size_t pose_dims() const { return core.dims()[1]; }
    std::size_t vertex_count() const { return core.dims()[2] / 3; }

    /// Parameters at the centre of both boxes.
    ModelParams mean_params() const { return {speaker_stats.mean, pose_stats.mean}; }

    /// Vertex index assigned to a coil; throws DataError if the coil has no correspondence.
    std::size_t vertex_for(const std::string& coil) const;

    friend bool operator==(const MultilinearModel& a, const MultilinearModel& b);
};

/// Throws ShapeError if dims, mean, faces and statistics disagree.
void validate(const MultilinearModel& model);

struct BuiltModel
{
    MultilinearModel model;
    Matrix u1; ///< speakers x speakers; row i is the parameter of training speaker i
    Matrix u2; ///< poses x poses; row j is the parameter of training pose j
};

/**
 * Builds the model from a fully populated corpus: meshes are centred, the mean feature
 * vector is subtracted, the resulting speakers x poses x 3V tensor is decomposed by HOSVD.
 */
BuiltModel build_model(const MeshCorpus& corpus);

/// Stacked positions (3V) for the given parameters.
Vector generate_positions(const MultilinearModel& model, const Vector& speaker, const Vector& pose);
Mesh generate(const MultilinearModel& model, const ModelParams& params);

/// Keeps the leading speaker_dims x pose_dims block of the core and the matching statistics.
MultilinearModel truncate(const MultilinearModel& model, std::size_t speaker_dims, std::size_t pose_dims);

/**
 * Binary model file, little-endian throughout:
 *
 *   "MLTM0001" | u64 version | u64[3] core dims | f64 core[...] | u64 n, f64 mean[n]
 *   | u64 faces, u64[3] per face | speaker stats | pose stats | u64 pairs, (string, u64) per pair
 *   | u64 count, string[] speaker ids | u64 count, string[] phone labels
 *
 * Stats are u64 n followed by n means and n standard deviations. Strings are u64 length + bytes.
 */
void save_model(const MultilinearModel& model, const std::filesystem::path& path);
MultilinearModel load_model(const std::filesystem::path& path);

std::string serialize_model(const MultilinearModel& model);
MultilinearModel deserialize_model(const std::string& bytes);

} // namespace articulate
