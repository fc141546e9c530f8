/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: include/articulate/pipeline.hpp
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
#include "articulate/fitting.hpp"
#include "articulate/io.hpp"
#include "articulate/metrics.hpp"
#include "articulate/synthesis.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace articulate {

struct PipelinePaths
{
    std::filesystem::path corpus;
    std::filesystem::path model;
    std::filesystem::path ema;
    std::filesystem::path labels;
    std::filesystem::path streams;
    std::filesystem::path output;
};

/**
 * Pipeline configuration. Relative paths are resolved against the directory of the config
 * file. Seeds for the split and the correspondence search default to `seed`.
 */
struct PipelineConfig
{
    PipelinePaths paths;
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
    std::vector<std::string> utterances;
    double test_fraction = 0.2;
    std::optional<std::uint64_t> split_seed;
    std::string reference_coil = "ref";
    std::optional<RigidTransform> transform;
    std::vector<std::string> coils{"T1", "T2", "T3"};
    std::size_t speaker_dims = 0; ///< 0 keeps every dimension
    std::size_t pose_dims = 0;
    CorrespondenceOptions correspondence;
    bool correspondence_seed_set = false;
    std::string correspondence_utterance; ///< empty: first training utterance
    FitOptions fit;
    FitOptions anatomy_pass = FitOptions::anatomy_pass();
    FitOptions pose_pass = FitOptions::pose_pass();
    TrainOptions train;
    double frame_rate = 200.0;
    std::vector<StreamSpec> streams;   ///< acoustic streams read from the stream files
    bool pose_delta_delta = false;     ///< add the second-order window to the pose stream
    std::vector<std::string> conditions{"imposed", "free"};
    std::string f0_stream = "f0";
    std::string mgc_stream = "mgc";
    PhoneClassTable phone_classes = PhoneClassTable::defaults();
    std::string pause_symbol = "pau";
    Json source; ///< config as read, after overrides

    std::uint64_t effective_split_seed() const { return split_seed.value_or(seed); }
};

PipelineConfig pipeline_config_from_json(const Json& json, const std::filesystem::path& base_directory);
PipelineConfig load_pipeline_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/**
 * Applies `key.path=value` overrides to a config document. The value is parsed as JSON when
 * possible and taken as a string otherwise.
 */
void apply_override(Json& json, const std::string& assignment);

struct Split
{
    std::vector<std::string> train;
    std::vector<std::string> test;
};

/**
 * Seeded shuffle; the test set is the first round(fraction * N) shuffled items. Both sets keep
 * the input order. Throws UsageError when N * fraction < 1 or the training set would be empty.
 */
Split split_corpus(const std::vector<std::string>& utterances, double fraction, std::uint64_t seed);

/// Files written by a stage, removed again by the caller when the stage fails.
class OutputLog
{
public:
    void record(const std::filesystem::path& path) { paths_.push_back(path); }
    const std::vector<std::filesystem::path>& paths() const { return paths_; }
    void remove_all() const;

private:
    std::vector<std::filesystem::path> paths_;
};

/// Reads, interpolates and aligns one recording as configured.
EmaRecording load_preprocessed_recording(const PipelineConfig& config, const std::string& utterance);

void run_build_model(const PipelineConfig& config, OutputLog& log);
void run_correspond(const PipelineConfig& config, OutputLog& log);
void run_fit(const PipelineConfig& config, OutputLog& log);
void run_estimate_speaker(const PipelineConfig& config, OutputLog& log);
void run_train(const PipelineConfig& config, OutputLog& log);
void run_synth(const PipelineConfig& config, DurationMode mode, OutputLog& log);
/// Returns the text table that was also written next to the JSON report.
std::string run_evaluate(const PipelineConfig& config, OutputLog& log);
/// source: "synth" (imposed-duration synthesis output) or "fit" (pass-2 trajectories).
void run_export_anim(const PipelineConfig& config, const std::string& utterance, const std::string& source,
                     const std::filesystem::path& directory, OutputLog& log);

/// Output locations shared by the stages.
std::filesystem::path correspondence_path(const PipelineConfig& config);
std::filesystem::path speaker_path(const PipelineConfig& config);
std::filesystem::path pose_path(const PipelineConfig& config, const std::string& utterance);
std::filesystem::path stat_model_path(const PipelineConfig& config);
std::filesystem::path synth_directory(const PipelineConfig& config, DurationMode mode);
std::filesystem::path report_path(const PipelineConfig& config);

std::vector<CoilVertex> load_correspondence(const std::filesystem::path& path);

} // namespace articulate
