/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: src/pipeline.cpp
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

#include "articulate/pipeline.hpp"
#include "articulate/errors.hpp"
#include "articulate/model.hpp"
#include "articulate/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace articulate {

namespace fs = std::filesystem;

namespace {

class StageTimer
{
public:
    explicit StageTimer(std::string stage) : stage_(std::move(stage)), start_(std::chrono::steady_clock::now())
    {
        std::fprintf(stderr, "[%s] start\n", stage_.c_str());
    }
    ~StageTimer()
    {
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        std::fprintf(stderr, "[%s] done in %.2f s\n", stage_.c_str(), s);
    }
    StageTimer(const StageTimer&) = delete;
    StageTimer& operator=(const StageTimer&) = delete;

private:
    std::string stage_;
    std::chrono::steady_clock::time_point start_;
};

fs::path resolve(const fs::path& base, const Json& json, const char* key, const char* fallback)
{
    fs::path p = json.contains(key) ? fs::path(json[key].get<std::string>()) : fs::path(fallback);
    return p.is_absolute() ? p : base / p;
}

void make_parent(const fs::path& path)
{
    std::error_code ec;
    if (path.has_parent_path())
    {
        fs::create_directories(path.parent_path(), ec);
        if (ec)
        {
            throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
        }
    }
}

void write_json_output(const fs::path& path, const Json& json, OutputLog& log)
{
    make_parent(path);
    log.record(path);
    write_json_file(path, json);
}

void write_text_output(const fs::path& path, const std::string& text, OutputLog& log)
{
    make_parent(path);
    log.record(path);
    write_text_file(path, text);
}

const char* mode_name(DurationMode mode)
{
    return mode == DurationMode::imposed ? "imposed" : "free";
}

Matrix pose_matrix(const std::vector<Vector>& frames, Eigen::Index dims)
{
    Matrix m(static_cast<Eigen::Index>(frames.size()), dims);
    for (std::size_t t = 0; t < frames.size(); ++t)
    {
        if (frames[t].size() != dims)
        {
            throw ShapeError("pose frame " + std::to_string(t) + " has the wrong dimension");
        }
        m.row(static_cast<Eigen::Index>(t)) = frames[t].transpose();
    }
    return m;
}

StreamSpec pose_stream_spec(const PipelineConfig& config, std::size_t dims)
{
    StreamSpec spec;
    spec.name = "pose";
    spec.dim = dims;
    if (config.pose_delta_delta)
    {
        spec.windows.push_back(Window::delta_delta());
    }
    return spec;
}

MultilinearModel load_configured_model(const PipelineConfig& config)
{
    return load_model(config.paths.model);
}

Split configured_split(const PipelineConfig& config)
{
    return split_corpus(config.utterances, config.test_fraction, config.effective_split_seed());
}

Segmentation load_utterance_labels(const PipelineConfig& config, const std::string& utterance)
{
    return parse_labels(config.paths.labels / (utterance + ".lab"), config.pause_symbol);
}

std::map<std::string, Matrix> load_utterance_streams(const PipelineConfig& config, const std::string& utterance)
{
    const fs::path path = config.paths.streams / (utterance + ".json");
    try
    {
        return streams_from_json(read_json_file(path));
    } catch (const ParseError& e)
    {
        throw ParseError(path.string() + ": " + e.what());
    }
}

} // namespace

void OutputLog::remove_all() const
{
    for (const auto& p : paths_)
    {
        std::error_code ec;
        fs::remove_all(p, ec);
        fs::path partial = p;
        partial += ".partial";
        fs::remove(partial, ec);
    }
}

void apply_override(Json& json, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
    {
        throw UsageError("override '" + assignment + "' must look like key.path=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded())
    {
        value = text;
    }
    Json* node = &json;
    std::size_t start = 0;
    while (true)
    {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty())
        {
            throw UsageError("override '" + assignment + "' has an empty key component");
        }
        if (!node->is_object())
        {
            *node = Json::object();
        }
        node = &(*node)[part];
        if (dot == std::string::npos)
        {
            break;
        }
        start = dot + 1;
    }
    *node = std::move(value);
}

PipelineConfig pipeline_config_from_json(const Json& json, const fs::path& base)
{
    if (!json.is_object())
    {
        throw ParseError("pipeline config must be a JSON object");
    }
    PipelineConfig c;
    c.source = json;
    try
    {
        const Json paths = json.value("paths", Json::object());
        c.paths.corpus = resolve(base, paths, "corpus", "corpus");
        c.paths.model = resolve(base, paths, "model", "work/model.mltm");
        c.paths.ema = resolve(base, paths, "ema", "ema");
        c.paths.labels = resolve(base, paths, "labels", "labels");
        c.paths.streams = resolve(base, paths, "streams", "streams");
        c.paths.output = resolve(base, paths, "output", "work");

        c.seed = json.value("seed", c.seed);
        c.jobs = json.value("jobs", c.jobs);
        c.utterances = json.value("utterances", c.utterances);
        if (json.contains("split"))
        {
            c.test_fraction = json["split"].value("testFraction", c.test_fraction);
            if (json["split"].contains("seed"))
            {
                c.split_seed = json["split"]["seed"].get<std::uint64_t>();
            }
        }
        if (json.contains("preprocess"))
        {
            const Json& pre = json["preprocess"];
            c.reference_coil = pre.value("referenceCoil", c.reference_coil);
            if (pre.contains("transform") && !pre["transform"].is_null())
            {
                c.transform = transform_from_json(pre["transform"]);
            }
        }
        c.coils = json.value("coils", c.coils);
        if (json.contains("model"))
        {
            c.speaker_dims = json["model"].value("speakerDims", c.speaker_dims);
            c.pose_dims = json["model"].value("poseDims", c.pose_dims);
        }
        if (json.contains("correspondence"))
        {
            c.correspondence = correspondence_options_from_json(json["correspondence"]);
            c.correspondence_seed_set = json["correspondence"].contains("seed");
            c.correspondence_utterance = json["correspondence"].value("utterance", std::string());
        }
        if (json.contains("fitting"))
        {
            const Json& f = json["fitting"];
            if (f.contains("fit"))
            {
                c.fit = fit_options_from_json(f["fit"], c.fit);
            }
            if (f.contains("anatomyPass"))
            {
                c.anatomy_pass = fit_options_from_json(f["anatomyPass"], c.anatomy_pass);
            }
            if (f.contains("posePass"))
            {
                c.pose_pass = fit_options_from_json(f["posePass"], c.pose_pass);
            }
        }
        if (json.contains("synthesis"))
        {
            const Json& s = json["synthesis"];
            c.train.states = s.value("states", c.train.states);
            c.train.variance_floor = s.value("varianceFloor", c.train.variance_floor);
            c.frame_rate = s.value("frameRate", c.frame_rate);
            c.pose_delta_delta = s.value("poseDeltaDelta", c.pose_delta_delta);
            for (const auto& spec : s.value("streams", Json::array()))
            {
                c.streams.push_back(stream_spec_from_json(spec));
            }
        }
        if (json.contains("evaluate"))
        {
            const Json& e = json["evaluate"];
            c.conditions = e.value("conditions", c.conditions);
            c.f0_stream = e.value("f0Stream", c.f0_stream);
            c.mgc_stream = e.value("mgcStream", c.mgc_stream);
            if (e.contains("phoneClasses"))
            {
                c.phone_classes = PhoneClassTable::from_json(e["phoneClasses"]);
            }
        }
        c.pause_symbol = json.value("pauseSymbol", c.pause_symbol);
    } catch (const nlohmann::json::exception& e)
    {
        throw ParseError(std::string("pipeline config: ") + e.what());
    }
    if (!c.correspondence_seed_set)
    {
        c.correspondence.seed = c.seed;
    }
    if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0))
    {
        throw UsageError("split.testFraction must lie in (0, 1)");
    }
    if (c.jobs == 0)
    {
        throw UsageError("jobs must be at least 1");
    }
    if (!(c.frame_rate > 0.0))
    {
        throw UsageError("synthesis.frameRate must be positive");
    }
    for (const auto& cond : c.conditions)
    {
        if (cond != "imposed" && cond != "free")
        {
            throw UsageError("unknown evaluation condition '" + cond + "' (expected imposed or free)");
        }
    }
    for (const auto& spec : c.streams)
    {
        if (spec.name == "pose")
        {
            throw UsageError("stream name 'pose' is reserved for the articulatory stream");
        }
    }
    return c;
}

PipelineConfig load_pipeline_config(const fs::path& path, const std::vector<std::string>& overrides)
{
    if (!fs::exists(path))
    {
        throw IoError("config file not found: " + path.string());
    }
    Json json = read_json_file(path);
    for (const auto& o : overrides)
    {
        apply_override(json, o);
    }
    return pipeline_config_from_json(json, path.parent_path());
}

Split split_corpus(const std::vector<std::string>& utterances, double fraction, std::uint64_t seed)
{
    if (utterances.empty())
    {
        throw UsageError("cannot split an empty utterance list");
    }
    if (!(fraction > 0.0 && fraction < 1.0))
    {
        throw UsageError("split fraction must lie in (0, 1)");
    }
    const double expected = fraction * static_cast<double>(utterances.size());
    if (expected < 1.0)
    {
        throw UsageError("split fraction " + std::to_string(fraction) + " of " + std::to_string(utterances.size()) +
                         " utterances leaves an empty test set");
    }
    const auto test_count = static_cast<std::size_t>(std::llround(expected));
    if (test_count >= utterances.size())
    {
        throw UsageError("split fraction leaves an empty training set");
    }
    std::vector<std::size_t> order(utterances.size());
    for (std::size_t i = 0; i < order.size(); ++i)
    {
        order[i] = i;
    }
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32)};
    std::mt19937_64 rng(seq);
    for (std::size_t i = order.size() - 1; i > 0; --i)
    {
        const auto j = static_cast<std::size_t>(static_cast<double>(rng() >> 11) * 0x1.0p-53 * static_cast<double>(i + 1));
        std::swap(order[i], order[j]);
    }
    std::vector<bool> is_test(utterances.size(), false);
    for (std::size_t k = 0; k < test_count; ++k)
    {
        is_test[order[k]] = true;
    }
    Split split;
    for (std::size_t i = 0; i < utterances.size(); ++i)
    {
        (is_test[i] ? split.test : split.train).push_back(utterances[i]);
    }
    return split;
}

fs::path correspondence_path(const PipelineConfig& config)
{
    return config.paths.output / "correspondence.json";
}

fs::path speaker_path(const PipelineConfig& config)
{
    return config.paths.output / "speaker.json";
}

fs::path pose_path(const PipelineConfig& config, const std::string& utterance)
{
    return config.paths.output / "poses" / (utterance + ".json");
}

fs::path stat_model_path(const PipelineConfig& config)
{
    return config.paths.output / "statmodel.json";
}

fs::path synth_directory(const PipelineConfig& config, DurationMode mode)
{
    return config.paths.output / (std::string("synth-") + mode_name(mode));
}

fs::path report_path(const PipelineConfig& config)
{
    return config.paths.output / "report.json";
}

std::vector<CoilVertex> load_correspondence(const fs::path& path)
{
    if (!fs::exists(path))
    {
        throw IoError("correspondence file not found: " + path.string());
    }
    const Json j = read_json_file(path);
    std::vector<CoilVertex> pairs;
    try
    {
        for (const auto& p : j.at("pairs"))
        {
            pairs.push_back({p.at("coil").get<std::string>(), p.at("vertex").get<std::size_t>()});
        }
    } catch (const nlohmann::json::exception& e)
    {
        throw ParseError(path.string() + ": " + e.what());
    }
    return pairs;
}

EmaRecording load_preprocessed_recording(const PipelineConfig& config, const std::string& utterance)
{
    EmaRecording rec = load_recording(config.paths.ema / (utterance + ".json"));
    if (rec.utterance.empty())
    {
        rec.utterance = utterance;
    }
    rec = interpolate_invalid(rec);
    return align_to_reference(rec, config.reference_coil, config.transform);
}

void run_build_model(const PipelineConfig& config, OutputLog& log)
{
    StageTimer timer("build-model");
    const MeshCorpus corpus = load_corpus(config.paths.corpus);
    MultilinearModel model = build_model(corpus).model;
    if (config.speaker_dims > 0 || config.pose_dims > 0)
    {
        model = truncate(model, config.speaker_dims > 0 ? config.speaker_dims : model.speaker_dims(),
                         config.pose_dims > 0 ? config.pose_dims : model.pose_dims());
    }
    make_parent(config.paths.model);
    log.record(config.paths.model);
    save_model(model, config.paths.model);
    std::fprintf(stderr, "[build-model] %zu speakers x %zu poses, %zu vertices\n", model.speaker_dims(),
                 model.pose_dims(), model.vertex_count());
}

void run_correspond(const PipelineConfig& config, OutputLog& log)
{
    StageTimer timer("correspond");
    const MultilinearModel model = load_configured_model(config);
    std::string utterance = config.correspondence_utterance;
    if (utterance.empty())
    {
        utterance = configured_split(config).train.front();
    }
    const EmaRecording rec = load_preprocessed_recording(config, utterance);
    const Correspondence corr = estimate_correspondence(model, rec, config.coils, config.correspondence);
    Json j;
    j["utterance"] = utterance;
    Json pairs = Json::array();
    for (const auto& p : corr.pairs)
    {
        pairs.push_back({{"coil", p.coil}, {"vertex", p.vertex}});
    }
    j["pairs"] = std::move(pairs);
    j["meanDistanceMm"] = corr.mean_distance_mm;
    j["restart"] = corr.restart;
    j["options"] = correspondence_options_to_json(config.correspondence);
    write_json_output(correspondence_path(config), j, log);
    std::fprintf(stderr, "[correspond] mean distance %.4f mm (restart %d)\n", corr.mean_distance_mm, corr.restart);
}

void run_fit(const PipelineConfig& config, OutputLog& log)
{
    StageTimer timer("fit");
    const MultilinearModel model = load_configured_model(config);
    const auto corr = load_correspondence(correspondence_path(config));
    std::vector<Json> results(config.utterances.size());
    parallel_for(config.utterances.size(), config.jobs, [&](std::size_t i) {
        const EmaRecording rec = load_preprocessed_recording(config, config.utterances[i]);
        results[i] = fit_result_to_json(fit_sequence(model, rec, corr, config.fit));
    });
    for (std::size_t i = 0; i < results.size(); ++i)
    {
        write_json_output(config.paths.output / "fit" / (config.utterances[i] + ".json"), results[i], log);
    }
}

void run_estimate_speaker(const PipelineConfig& config, OutputLog& log)
{
    StageTimer timer("estimate-speaker");
    const MultilinearModel model = load_configured_model(config);
    const auto corr = load_correspondence(correspondence_path(config));
    std::vector<EmaRecording> recordings(config.utterances.size());
    parallel_for(config.utterances.size(), config.jobs,
                 [&](std::size_t i) { recordings[i] = load_preprocessed_recording(config, config.utterances[i]); });
    const SpeakerEstimate est =
        estimate_speaker(model, recordings, corr, config.anatomy_pass, config.pose_pass, config.jobs);

    Json per_utt = Json::object();
    std::vector<double> first;
    std::vector<double> second;
    for (std::size_t i = 0; i < recordings.size(); ++i)
    {
        first.push_back(est.anatomy_pass[i].mean_residual());
        second.push_back(est.pose_pass[i].mean_residual());
        per_utt[config.utterances[i]] = {{"anatomyPassMm", first.back()}, {"posePassMm", second.back()}};
    }
    Json j;
    j["speaker"] = vector_to_json(est.speaker);
    j["anatomyPass"] = {{"options", fit_options_to_json(config.anatomy_pass)},
                        {"meanResidualMm", aggregate(first).mean}};
    FitOptions second_options = config.pose_pass;
    second_options.fix_speaker = est.speaker;
    j["posePass"] = {{"options", fit_options_to_json(second_options)}, {"meanResidualMm", aggregate(second).mean}};
    j["perUtterance"] = std::move(per_utt);
    write_json_output(speaker_path(config), j, log);
    for (std::size_t i = 0; i < recordings.size(); ++i)
    {
        write_json_output(pose_path(config, config.utterances[i]), pose_trajectory_to_json(est.trajectories[i]), log);
    }
    std::fprintf(stderr, "[estimate-speaker] pass 1 residual %.4f mm, pass 2 residual %.4f mm\n", aggregate(first).mean,
                 aggregate(second).mean);
}

void run_train(const PipelineConfig& config, OutputLog& log)
{
    StageTimer timer("train");
    const Split split = configured_split(config);
    std::vector<TrainingUtterance> corpus(split.train.size());
    std::vector<std::size_t> pose_dims(split.train.size(), 0);
    parallel_for(split.train.size(), config.jobs, [&](std::size_t i) {
        const std::string& id = split.train[i];
        TrainingUtterance& u = corpus[i];
        u.id = id;
        u.segmentation = load_utterance_labels(config, id);
        auto streams = load_utterance_streams(config, id);
        for (const auto& spec : config.streams)
        {
            const auto it = streams.find(spec.name);
            if (it == streams.end())
            {
                throw DataError("utterance '" + id + "' has no stream '" + spec.name + "'");
            }
            u.streams[spec.name] = it->second;
        }
        const PoseTrajectory traj = pose_trajectory_from_json(read_json_file(pose_path(config, id)));
        pose_dims[i] = traj.frames.empty() ? 0 : static_cast<std::size_t>(traj.frames.front().size());
        u.streams["pose"] = pose_matrix(traj.frames, static_cast<Eigen::Index>(pose_dims[i]));
    });
    if (corpus.empty() || pose_dims.front() == 0)
    {
        throw DataError("training set has no pose frames");
    }
    std::vector<StreamSpec> specs{pose_stream_spec(config, pose_dims.front())};
    specs.insert(specs.end(), config.streams.begin(), config.streams.end());
    const StatModel model = train(corpus, specs, config.frame_rate, config.train);
    write_json_output(stat_model_path(config), stat_model_to_json(model), log);
    write_json_output(config.paths.output / "split.json",
                      {{"seed", config.effective_split_seed()},
                       {"testFraction", config.test_fraction},
                       {"train", split.train},
                       {"test", split.test}},
                      log);
    std::fprintf(stderr, "[train] %zu utterances, %zu phones, %zu backoffs\n", corpus.size(), model.phones.size(),
                 model.backoffs.size());
}

void run_synth(const PipelineConfig& config, DurationMode mode, OutputLog& log)
{
    StageTimer timer(std::string("synth ") + mode_name(mode));
    const MultilinearModel model = load_configured_model(config);
    if (!fs::exists(stat_model_path(config)))
    {
        throw IoError("statistical model not found: " + stat_model_path(config).string());
    }
    const StatModel stat = load_stat_model(stat_model_path(config));
    const auto corr = load_correspondence(correspondence_path(config));
    if (!fs::exists(speaker_path(config)))
    {
        throw IoError("speaker estimate not found: " + speaker_path(config).string());
    }
    const Vector speaker = vector_from_json(read_json_file(speaker_path(config)).at("speaker"), "speaker");
    const Split split = configured_split(config);

    struct Output
    {
        Json streams;
        std::string labels;
        Json ema;
    };
    std::vector<Output> outputs(split.test.size());
    parallel_for(split.test.size(), config.jobs, [&](std::size_t i) {
        const std::string& id = split.test[i];
        const Segmentation seg = load_utterance_labels(config, id);
        const Synthesis syn = synthesize(stat, seg, mode, true);
        PoseTrajectory traj;
        traj.utterance = id;
        traj.frame_rate = stat.frame_rate;
        traj.speaker = speaker;
        const Matrix& pose = syn.streams.at("pose");
        for (Eigen::Index t = 0; t < pose.rows(); ++t)
        {
            traj.frames.push_back(pose.row(t).transpose());
        }
        outputs[i].streams = streams_to_json(stat.frame_rate, syn.streams);
        std::ostringstream lab;
        write_labels(syn.timing, lab);
        outputs[i].labels = lab.str();
        outputs[i].ema = recording_to_json(virtual_ema(model, corr, traj, speaker));
    });
    const fs::path dir = synth_directory(config, mode);
    for (std::size_t i = 0; i < outputs.size(); ++i)
    {
        const std::string& id = split.test[i];
        write_json_output(dir / (id + ".json"), outputs[i].streams, log);
        write_text_output(dir / (id + ".lab"), outputs[i].labels, log);
        write_json_output(dir / (id + ".ema.json"), outputs[i].ema, log);
    }
}

namespace {

struct UtteranceMetrics
{
    std::vector<std::pair<std::string, std::optional<double>>> values;
    std::optional<PhoneClassReport> classes;
    std::size_t frames = 0;
    std::size_t trimmed = 0;
};

Matrix leading_rows(const Matrix& m, Eigen::Index rows)
{
    return m.topRows(rows);
}

UtteranceMetrics evaluate_utterance(const PipelineConfig& config, const std::string& id, DurationMode mode)
{
    UtteranceMetrics out;
    const Segmentation ref_labels = load_utterance_labels(config, id);
    const fs::path dir = synth_directory(config, mode);
    const Segmentation hyp_labels = parse_labels(dir / (id + ".lab"), config.pause_symbol);
    out.values.emplace_back("duration.rmse.ms", duration_rmse(ref_labels, hyp_labels));
    if (mode == DurationMode::free)
    {
        return out;
    }

    EmaRecording ref = select_channels(load_preprocessed_recording(config, id), config.coils);
    EmaRecording hyp = select_channels(load_recording(dir / (id + ".ema.json")), config.coils);
    const std::size_t frames = std::min(ref.frame_count(), hyp.frame_count());
    out.trimmed = std::max(ref.frame_count(), hyp.frame_count()) - frames;
    for (auto* rec : {&ref, &hyp})
    {
        for (auto& ch : rec->channels)
        {
            ch.positions.resize(frames);
            if (!ch.rms.empty())
            {
                ch.rms.resize(frames);
            }
        }
    }
    out.frames = frames;
    const auto stats = euclidean_stats(ref, hyp, config.coils);
    double tongue = 0.0;
    for (const auto& s : stats)
    {
        tongue += s.mean;
    }
    out.values.emplace_back("euclidean.mean.mm", tongue / static_cast<double>(stats.size()));
    for (const auto& s : stats)
    {
        out.values.emplace_back("euclidean." + s.coil + ".mm", s.mean);
        out.values.emplace_back("euclidean." + s.coil + ".std.mm", s.stddev);
    }
    const auto dyn = dynamics_rmse(ref, hyp, config.coils);
    for (std::size_t c = 0; c < config.coils.size(); ++c)
    {
        out.values.emplace_back("dynamics." + config.coils[c] + ".mm_per_frame", dyn[c]);
    }

    const auto ref_streams = load_utterance_streams(config, id);
    const auto hyp_streams = streams_from_json(read_json_file(dir / (id + ".json")));
    const auto ref_f0 = ref_streams.find(config.f0_stream);
    const auto hyp_f0 = hyp_streams.find(config.f0_stream);
    if (ref_f0 != ref_streams.end() && hyp_f0 != hyp_streams.end())
    {
        const Eigen::Index n = std::min(ref_f0->second.rows(), hyp_f0->second.rows());
        const Vector r = leading_rows(ref_f0->second, n).col(0);
        const Vector s = leading_rows(hyp_f0->second, n).col(0);
        out.values.emplace_back("vuv.percent", vuv_rate(r, s));
        out.values.emplace_back("f0.rmse.hz", rmse_hz(r, s));
        out.values.emplace_back("f0.rmse_voiced.hz", rmse_hz_voiced(r, s));
        out.values.emplace_back("f0.rmse.cent", rmse_cent(r, s));
    }
    const auto ref_mgc = ref_streams.find(config.mgc_stream);
    const auto hyp_mgc = hyp_streams.find(config.mgc_stream);
    if (ref_mgc != ref_streams.end() && hyp_mgc != hyp_streams.end())
    {
        const Eigen::Index n = std::min(ref_mgc->second.rows(), hyp_mgc->second.rows());
        out.values.emplace_back("mcd.db", mcd(leading_rows(ref_mgc->second, n), leading_rows(hyp_mgc->second, n)));
    }

    std::map<std::string, std::vector<double>> distances;
    for (const auto& coil : config.coils)
    {
        distances[coil] = coil_distances(ref, hyp, coil);
    }
    out.classes = phone_class_report(distances, ref_labels, ref.frame_rate, config.phone_classes);
    return out;
}

} // namespace

std::string run_evaluate(const PipelineConfig& config, OutputLog& log)
{
    StageTimer timer("evaluate");
    const Split split = configured_split(config);
    Json report;
    report["seed"] = config.seed;
    report["testUtterances"] = split.test;
    Json conditions = Json::array();
    std::string table;
    for (const auto& cond : config.conditions)
    {
        const DurationMode mode = cond == "imposed" ? DurationMode::imposed : DurationMode::free;
        std::vector<UtteranceMetrics> per(split.test.size());
        parallel_for(split.test.size(), config.jobs,
                     [&](std::size_t i) { per[i] = evaluate_utterance(config, split.test[i], mode); });
        MetricsAccumulator acc;
        PhoneClassReport classes;
        std::size_t frames = 0;
        std::size_t trimmed = 0;
        for (const auto& u : per)
        {
            for (const auto& [name, v] : u.values)
            {
                acc.add(name, v);
            }
            if (u.classes)
            {
                merge(classes, *u.classes);
            }
            frames += u.frames;
            trimmed += u.trimmed;
        }
        MetricsReport r = acc.finish(cond);
        r.frame_counts["utterances"] = per.size();
        if (mode == DurationMode::imposed)
        {
            r.phone_classes = std::move(classes);
            r.frame_counts["frames"] = frames;
            r.frame_counts["trimmedFrames"] = trimmed;
            if (trimmed > 0)
            {
                std::fprintf(stderr, "[evaluate] warning: %zu frames trimmed to equalise lengths\n", trimmed);
            }
        }
        conditions.push_back(metrics_report_to_json(r));
        table += metrics_report_to_table(r);
        table += '\n';
    }
    report["conditions"] = std::move(conditions);
    write_json_output(report_path(config), report, log);
    write_text_output(config.paths.output / "report.txt", table, log);
    return table;
}

void run_export_anim(const PipelineConfig& config, const std::string& utterance, const std::string& source,
                     const fs::path& directory, OutputLog& log)
{
    StageTimer timer("export-anim");
    const MultilinearModel model = load_configured_model(config);
    PoseTrajectory traj;
    if (source == "fit")
    {
        traj = pose_trajectory_from_json(read_json_file(pose_path(config, utterance)));
    }
    else if (source == "synth")
    {
        const fs::path path = synth_directory(config, DurationMode::imposed) / (utterance + ".json");
        double rate = 0.0;
        const auto streams = streams_from_json(read_json_file(path), &rate);
        const auto it = streams.find("pose");
        if (it == streams.end())
        {
            throw DataError(path.string() + " has no pose stream");
        }
        traj.utterance = utterance;
        traj.frame_rate = rate;
        traj.speaker = vector_from_json(read_json_file(speaker_path(config)).at("speaker"), "speaker");
        for (Eigen::Index t = 0; t < it->second.rows(); ++t)
        {
            traj.frames.push_back(it->second.row(t).transpose());
        }
    }
    else
    {
        throw UsageError("export-anim source must be 'fit' or 'synth'");
    }
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec)
    {
        throw IoError("cannot create directory " + directory.string() + ": " + ec.message());
    }
    for (std::size_t t = 0; t < traj.frames.size(); ++t)
    {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%06zu.obj", t);
        const Mesh mesh = generate(model, {traj.speaker, traj.frames[t]});
        std::ostringstream obj;
        write_obj(mesh, obj);
        write_text_output(directory / name, obj.str(), log);
    }
    write_json_output(directory / "trajectory.json", pose_trajectory_to_json(traj), log);
}

} // namespace articulate
