/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: include/articulate/synthesis.hpp
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
#include "articulate/tensor.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace articulate {

/// Regression window centred on the current frame: coefficients for offsets -reach..+reach.
struct Window
{
    std::vector<double> coefficients;

    int reach() const { return static_cast<int>(coefficients.size() / 2); }

    static Window identity() { return {{1.0}}; }
    static Window delta() { return {{-0.5, 0.0, 0.5}}; }
    static Window delta_delta() { return {{1.0, -2.0, 1.0}}; }

    friend bool operator==(const Window&, const Window&) = default;
};

/**
 * Description of one parameter stream. Voiced-aware streams (F0-like) treat values <= 0 as
 * unvoiced, are modelled in the log domain over voiced frames only, and carry a voiced probability.
 */
struct StreamSpec
{
    std::string name;
    std::size_t dim = 1;
    std::vector<Window> windows{Window::identity(), Window::delta()};
    bool voiced_aware = false;
};

/// Throws UsageError unless dim >= 1, windows have odd length, and the first window is the identity.
void validate(const StreamSpec& spec);
Json stream_spec_to_json(const StreamSpec& spec);
StreamSpec stream_spec_from_json(const Json& json);

/**
 * Stacks [static, window_1 * static, ...] per frame. Window taps that fall outside [0, T) use the
 * nearest edge frame. Output is T x (dim * windows.size()).
 */
Matrix apply_windows(const Matrix& trajectory, const std::vector<Window>& windows);

/// Static features plus the (c[t+1] - c[t-1]) / 2 delta with edge replication: T x 2d.
Matrix compute_deltas(const Matrix& trajectory);

struct PhoneInstance
{
    std::string phone;
    std::size_t begin = 0;                    ///< first frame
    std::vector<std::size_t> state_durations; ///< frames per state
};

struct StateAlignment
{
    std::vector<PhoneInstance> instances;
    std::size_t frame_count = 0;
    std::size_t warnings = 0; ///< phones shorter than one frame that were widened to one frame
};

/**
 * Uniform state alignment: phone i covers frames round(start * rate) .. round(end * rate) and is
 * split into `states` contiguous runs as equal as possible, earlier states taking the remainder.
 * Phones shorter than one frame become one frame assigned to their first state.
 */
StateAlignment align_states(const Segmentation& seg, double frame_rate, std::size_t states);

struct Gaussian
{
    Vector mean;
    Vector variance;
};

struct StreamCell
{
    Gaussian gaussian;
    double voiced_probability = 1.0;
};

struct StateModel
{
    std::vector<StreamCell> streams; ///< parallel to StatModel::streams
    double duration_mean = 1.0;      ///< frames
    double duration_variance = 0.0;
};

struct Backoff
{
    std::string phone;
    std::size_t state = 0;
    std::string stream; ///< stream name, or "duration"
    std::string level;  ///< "phone" or "global"
};

/**
 * Monophone state model: one diagonal Gaussian per (phone, state, stream) over stacked window
 * features, a duration Gaussian per (phone, state), and a voiced probability for voiced-aware
 * streams. `global` pools every phone and serves unknown phones at synthesis time.
 */
struct StatModel
{
    double frame_rate = 200.0;
    std::size_t states = 5;
    double variance_floor = 1e-6;
    std::vector<StreamSpec> streams;
    std::map<std::string, std::vector<StateModel>> phones;
    std::vector<StateModel> global;
    std::vector<Backoff> backoffs;

    std::size_t stream_index(const std::string& name) const;
    /// States for a phone, falling back to the global pool; throws DataError if unknown and !allow_unknown.
    const std::vector<StateModel>& phone_states(const std::string& phone, bool allow_unknown = true) const;
};

Json stat_model_to_json(const StatModel& model);
StatModel stat_model_from_json(const Json& json);
void save_stat_model(const StatModel& model, const std::filesystem::path& path);
StatModel load_stat_model(const std::filesystem::path& path);

struct TrainingUtterance
{
    std::string id;
    Segmentation segmentation;
    std::map<std::string, Matrix> streams; ///< T x dim per stream name
};

struct TrainOptions
{
    std::size_t states = 5;
    double variance_floor = 1e-6;
};

/**
 * Accumulates per-(phone, state, stream) Gaussians over uniformly aligned frames. Frames past the
 * shorter of the label span and the stream length are ignored. Cells without data back off to
 * the phone pool, then to the global pool, and are listed in StatModel::backoffs.
 */
StatModel train(const std::vector<TrainingUtterance>& corpus, const std::vector<StreamSpec>& specs,
                double frame_rate, const TrainOptions& options = {});

enum class DurationMode { free, imposed };

/**
 * Frames per (phone, state). Free: max(1, round(mean)) per state. Imposed: each phone's frame span
 * round(end * rate) - round(start * rate) is split across states in proportion to the state means by
 * largest remainder, at least one frame per state; a span shorter than the state count is an error.
 */
std::vector<std::vector<std::size_t>> predict_durations(const StatModel& model, const Segmentation& seg,
                                                        DurationMode mode, bool allow_unknown = true);

/// Per-frame stacked means/variances for one stream plus voicing flags.
struct StreamSequence
{
    std::string name;
    Matrix mean;     ///< T x (dim * windows)
    Matrix variance; ///< T x (dim * windows)
    std::vector<bool> voiced;
};

struct GaussianSequence
{
    std::vector<StreamSequence> streams;
    std::size_t frame_count() const { return streams.empty() ? 0 : static_cast<std::size_t>(streams[0].mean.rows()); }
};

GaussianSequence build_gaussian_sequence(const StatModel& model, const std::vector<std::string>& phones,
                                         const std::vector<std::vector<std::size_t>>& durations,
                                         bool allow_unknown = true);

/**
 * Maximum-likelihood parameter generation for one stream: per dimension solves
 * (W^T S^-1 W) c = W^T S^-1 mu with a banded Cholesky factorisation. Voiced-aware streams are
 * solved per maximal voiced run, emit 0 on unvoiced frames, and are exponentiated.
 */
Matrix mlpg(const GaussianSequence& sequence, const StreamSpec& spec);

/**
 * Solves (W^T diag(1/variance) W) c = W^T diag(1/variance) mean for a single dimension.
 * mean/variance are T x windows. Exposed for testing.
 */
Vector mlpg_solve(const Matrix& mean, const Matrix& variance, const std::vector<Window>& windows);

struct Synthesis
{
    Segmentation timing; ///< predicted (free) or imposed phone boundaries
    std::vector<std::vector<std::size_t>> durations;
    std::map<std::string, Matrix> streams;
};

/// Durations, Gaussian sequence, and MLPG for every stream.
Synthesis synthesize(const StatModel& model, const Segmentation& seg, DurationMode mode, bool allow_unknown = true);

/// Stream file: {"frameRate": r, "streams": {"name": [[...], ...], ...}}
Json streams_to_json(double frame_rate, const std::map<std::string, Matrix>& streams);
std::map<std::string, Matrix> streams_from_json(const Json& json, double* frame_rate = nullptr);

} // namespace articulate
