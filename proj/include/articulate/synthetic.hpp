/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: include/articulate/synthetic.hpp
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

#include "articulate/ema.hpp"
#include "articulate/io.hpp"
#include "articulate/mesh.hpp"
#include "articulate/model.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace articulate {

/// Parameters of the seeded desk-scale corpus generator.
struct SyntheticConfig
{
    std::uint64_t seed = 1;
    std::size_t speakers = 3;
    std::size_t poses = 4;
    std::size_t rings = 10;    ///< latitude rings of the tongue mesh (poles excluded)
    std::size_t segments = 16; ///< vertices per ring
    std::size_t utterances = 40;
    std::vector<std::string> phones{"a", "i", "t", "k", "s"};
    std::vector<std::string> voiced_phones{"a", "i"};
    double frame_rate = 200.0;
    std::size_t min_phone_frames = 8;
    std::size_t max_phone_frames = 24;
    std::size_t min_phones = 4;
    std::size_t max_phones = 8;
    double target_spread = 1.5;  ///< phone pose targets drawn within this many stddevs of the mean
    double pose_noise = 0.1;     ///< filtered pose noise, in pose stddevs
    double smoothing_frames = 4; ///< Gaussian smoothing width of pose trajectories
    double jitter_mm = 0.0;      ///< white noise added to tongue coil samples
    double missing_rate = 0.01;  ///< fraction of lip samples dropped (NaN)
    std::size_t mgc_order = 8;
    double test_fraction = 0.2;
};

SyntheticConfig synthetic_config_from_json(const Json& json, SyntheticConfig defaults = {});
Json synthetic_config_to_json(const SyntheticConfig& config);

struct SyntheticUtterance
{
    std::string id;
    Segmentation labels;
    EmaRecording ema;                      ///< raw coordinates, reference coil offset included
    std::map<std::string, Matrix> streams; ///< "f0" (T x 1) and "mgc" (T x order)
    std::vector<Vector> poses;             ///< true pose trajectory
    double oracle_error_mm = 0.0;          ///< phone-target predictor vs recorded tongue coils
};

struct SyntheticCorpus
{
    MeshCorpus meshes;
    MultilinearModel model; ///< model built from `meshes`
    Vector speaker;         ///< true speaker vector of every utterance
    std::vector<CoilVertex> correspondence;
    std::map<std::string, Vector> phone_targets;
    Point3 reference_offset = Point3::Zero();
    std::vector<SyntheticUtterance> utterances;

    /// Unweighted mean of the per-utterance oracle errors.
    double oracle_error_mm() const;
};

inline const std::vector<std::string>& tongue_coils()
{
    static const std::vector<std::string> coils{"T1", "T2", "T3"};
    return coils;
}

/// Tongue-like ellipsoid mesh with (rings * segments + 2) vertices, in mm.
Mesh tongue_mesh(std::size_t rings, std::size_t segments);

SyntheticCorpus make_synthetic_corpus(const SyntheticConfig& config);

/**
 * Writes the corpus layout under `directory`: corpus/ (OBJ grid), ema/, labels/, streams/,
 * truth.json (ground truth and oracle errors) and config.json (pipeline configuration).
 */
void write_synthetic_corpus(const SyntheticCorpus& corpus, const SyntheticConfig& config,
                            const std::filesystem::path& directory);

} // namespace articulate
