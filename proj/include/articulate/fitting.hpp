/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: include/articulate/fitting.hpp
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
#include "articulate/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace articulate {

/**
 * Weights and limits of the per-frame fitting energy
 *
 *   E(s, p) = sum_coils |v_i(s, p) - x_i|^2 + alpha |s - s_prev|^2 + beta |p - p_prev|^2
 *
 * with every parameter entry limited to [m_i - c sigma_i, m_i + c sigma_i].
 */
struct FitOptions
{
    double alpha = 0.0; ///< speaker consistency weight
    double beta = 0.0;  ///< pose smoothness weight
    double c = 3.0;     ///< box radius in standard deviations
    std::optional<Vector> fix_speaker;
    double gradient_tolerance = 1e-6;
    int max_iterations = 200;

    /// First pass of speaker estimation: alpha 20, beta 10, c 3.
    static FitOptions anatomy_pass();
    /// Second pass with the speaker fixed: beta 1, c 2 (fix_speaker is filled in by the caller).
    static FitOptions pose_pass();
};

/// Throws UsageError for negative weights or a non-positive box radius.
void validate(const FitOptions& options);
Json fit_options_to_json(const FitOptions& options);
FitOptions fit_options_from_json(const Json& json, FitOptions defaults = {});

struct CoilTarget
{
    std::size_t vertex;
    Point3 target;
};

struct EnergyTerms
{
    double data = 0.0;                ///< mm^2
    double speaker_consistency = 0.0; ///< unweighted |s - s_prev|^2
    double pose_smoothness = 0.0;     ///< unweighted |p - p_prev|^2
};

struct EnergyEvaluation
{
    double value = 0.0;
    EnergyTerms terms;
    Vector grad_speaker;
    Vector grad_pose;
};

/**
 * Evaluates the fitting energy and its analytic gradient. Without `previous` the temporal
 * terms are zero regardless of alpha and beta.
 */
EnergyEvaluation eval_energy(const MultilinearModel& model, std::span<const CoilTarget> coils, const Vector& speaker,
                             const Vector& pose, const ModelParams* previous, double alpha, double beta);

struct FrameFit
{
    ModelParams params;
    EnergyTerms energy;
    std::vector<double> residuals; ///< per coil, mm
    int iterations = 0;
    bool converged = false;
};

/**
 * Box-constrained minimisation of the fitting energy for one frame. Starts from `previous`
 * when given, otherwise from the centre of the box. With fix_speaker only the pose is optimised
 * and the speaker vector is returned unchanged.
 */
FrameFit fit_frame(const MultilinearModel& model, std::span<const CoilTarget> coils, const FitOptions& options,
                   const ModelParams* previous = nullptr);

struct FitResult
{
    std::string utterance;
    double frame_rate = 0.0;
    std::vector<std::string> coils;
    std::vector<FrameFit> frames;
    FitOptions options;

    double mean_residual() const;
};

Json fit_result_to_json(const FitResult& result);

/**
 * Fits every frame in temporal order. When alpha or beta is positive each frame is warm-started
 * from and coupled to the previous frame's parameters; with both zero, frames are fitted
 * independently from the box centre. NumericError messages carry the frame index.
 */
FitResult fit_sequence(const MultilinearModel& model, const EmaRecording& rec,
                       const std::vector<CoilVertex>& correspondence, const FitOptions& options);

struct CorrespondenceOptions
{
    double c = 0.25;
    int restarts = 10;
    std::uint64_t seed = 1;
    int max_rounds = 20;
    std::size_t frames = 10; ///< evenly spaced frames used for the search
    double gradient_tolerance = 1e-6;
    int max_iterations = 200;
};

CorrespondenceOptions correspondence_options_from_json(const Json& json, CorrespondenceOptions defaults = {});
Json correspondence_options_to_json(const CorrespondenceOptions& options);

struct Correspondence
{
    std::vector<CoilVertex> pairs;
    double mean_distance_mm = 0.0;
    int restart = 0; ///< index of the winning restart
};

/**
 * Semi-supervised coil-to-vertex assignment. Each restart draws parameters uniformly in the
 * c-box, assigns each coil its nearest free vertex, then alternates fitting and reassignment
 * until the assignment is stable. The restart with the smallest mean residual wins; earlier
 * restarts win ties.
 */
Correspondence estimate_correspondence(const MultilinearModel& model, const EmaRecording& rec,
                                       const std::vector<std::string>& coil_labels,
                                       const CorrespondenceOptions& options);

/// Pose parameters per frame plus the speaker vector they were fitted with.
struct PoseTrajectory
{
    std::string utterance;
    double frame_rate = 0.0;
    Vector speaker;
    std::vector<Vector> frames;
};

Json pose_trajectory_to_json(const PoseTrajectory& trajectory);
PoseTrajectory pose_trajectory_from_json(const Json& json);

struct SpeakerEstimate
{
    Vector speaker;
    std::vector<FitResult> anatomy_pass;
    std::vector<FitResult> pose_pass;
    std::vector<PoseTrajectory> trajectories;
};

/**
 * Two-pass anatomy estimation: fit all recordings with `first`, average every per-frame
 * speaker vector, then refit all recordings with the speaker fixed to that average using
 * `second`. Recordings are processed on up to `jobs` threads.
 */
SpeakerEstimate estimate_speaker(const MultilinearModel& model, const std::vector<EmaRecording>& recordings,
                                 const std::vector<CoilVertex>& correspondence, const FitOptions& first,
                                 FitOptions second, std::size_t jobs = 1);

/// Reads the corresponded vertices off the generated mesh of every trajectory frame.
EmaRecording virtual_ema(const MultilinearModel& model, const std::vector<CoilVertex>& correspondence,
                         const PoseTrajectory& trajectory, const Vector& speaker);

} // namespace articulate
