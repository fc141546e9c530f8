/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: src/fitting.cpp
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

#include "articulate/fitting.hpp"
#include "articulate/errors.hpp"
#include "articulate/optimize.hpp"
#include "articulate/parallel.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <random>

namespace articulate {

FitOptions FitOptions::anatomy_pass()
{
    FitOptions o;
    o.alpha = 20.0;
    o.beta = 10.0;
    o.c = 3.0;
    return o;
}

FitOptions FitOptions::pose_pass()
{
    FitOptions o;
    o.alpha = 0.0;
    o.beta = 1.0;
    o.c = 2.0;
    return o;
}

void validate(const FitOptions& options)
{
    if (!(options.alpha >= 0.0) || !(options.beta >= 0.0))
    {
        throw UsageError("fit options: alpha and beta must be non-negative");
    }
    if (!(options.c > 0.0))
    {
        throw UsageError("fit options: box radius c must be positive");
    }
    if (options.max_iterations < 1 || !(options.gradient_tolerance > 0.0))
    {
        throw UsageError("fit options: need max_iterations >= 1 and a positive gradient tolerance");
    }
}

Json fit_options_to_json(const FitOptions& options)
{
    Json j;
    j["alpha"] = options.alpha;
    j["beta"] = options.beta;
    j["c"] = options.c;
    j["gradientTolerance"] = options.gradient_tolerance;
    j["maxIterations"] = options.max_iterations;
    if (options.fix_speaker)
    {
        j["fixSpeaker"] = vector_to_json(*options.fix_speaker);
    }
    return j;
}

FitOptions fit_options_from_json(const Json& json, FitOptions defaults)
{
    try
    {
        defaults.alpha = json.value("alpha", defaults.alpha);
        defaults.beta = json.value("beta", defaults.beta);
        defaults.c = json.value("c", defaults.c);
        defaults.gradient_tolerance = json.value("gradientTolerance", defaults.gradient_tolerance);
        defaults.max_iterations = json.value("maxIterations", defaults.max_iterations);
    } catch (const nlohmann::json::exception& e)
    {
        throw ParseError(std::string("fit options: ") + e.what());
    }
    if (json.contains("fixSpeaker"))
    {
        defaults.fix_speaker = vector_from_json(json["fixSpeaker"], "fixSpeaker");
    }
    validate(defaults);
    return defaults;
}

namespace {

/// Slices of the core tensor at the selected vertices: vertex = mean + (s^T B_x p, s^T B_y p, s^T B_z p).
class CoilBasis
{
public:
    CoilBasis(const MultilinearModel& model, std::span<const CoilTarget> coils)
    {
        const auto& d = model.core.dims();
        const auto ms = static_cast<Eigen::Index>(d[0]);
        const auto np = static_cast<Eigen::Index>(d[1]);
        for (const auto& coil : coils)
        {
            if (coil.vertex >= model.vertex_count())
            {
                throw ShapeError("coil vertex " + std::to_string(coil.vertex) + " outside model with " +
                                 std::to_string(model.vertex_count()) + " vertices");
            }
            Entry e;
            e.target = coil.target;
            for (int axis = 0; axis < 3; ++axis)
            {
                const std::size_t k = 3 * coil.vertex + static_cast<std::size_t>(axis);
                e.mean(axis) = model.mean(static_cast<Eigen::Index>(k));
                e.basis[static_cast<std::size_t>(axis)].resize(ms, np);
                for (Eigen::Index a = 0; a < ms; ++a)
                {
                    for (Eigen::Index b = 0; b < np; ++b)
                    {
                        e.basis[static_cast<std::size_t>(axis)](a, b) =
                            model.core(static_cast<std::size_t>(a), static_cast<std::size_t>(b), k);
                    }
                }
            }
            entries_.push_back(std::move(e));
        }
    }

    Point3 vertex(std::size_t coil, const Vector& s, const Vector& p) const
    {
        const Entry& e = entries_[coil];
        Point3 v = e.mean;
        for (std::size_t axis = 0; axis < 3; ++axis)
        {
            v(static_cast<Eigen::Index>(axis)) += s.dot(e.basis[axis] * p);
        }
        return v;
    }

    /// Data term with gradients added into gs / gp (either may be null).
    double data_term(const Vector& s, const Vector& p, Vector* gs, Vector* gp) const
    {
        double energy = 0.0;
        for (const Entry& e : entries_)
        {
            for (std::size_t axis = 0; axis < 3; ++axis)
            {
                const Vector bp = e.basis[axis] * p;
                const double r = e.mean(static_cast<Eigen::Index>(axis)) + s.dot(bp) -
                                 e.target(static_cast<Eigen::Index>(axis));
                energy += r * r;
                if (gs)
                {
                    *gs += 2.0 * r * bp;
                }
                if (gp)
                {
                    *gp += 2.0 * r * (e.basis[axis].transpose() * s);
                }
            }
        }
        return energy;
    }

    std::vector<double> residuals(const Vector& s, const Vector& p) const
    {
        std::vector<double> out;
        out.reserve(entries_.size());
        for (std::size_t c = 0; c < entries_.size(); ++c)
        {
            out.push_back((vertex(c, s, p) - entries_[c].target).norm());
        }
        return out;
    }

private:
    struct Entry
    {
        Point3 mean;
        Point3 target;
        std::array<Matrix, 3> basis;
    };
    std::vector<Entry> entries_;
};

void check_params(const MultilinearModel& model, const Vector& s, const Vector& p)
{
    if (static_cast<std::size_t>(s.size()) != model.speaker_dims() ||
        static_cast<std::size_t>(p.size()) != model.pose_dims())
    {
        throw ShapeError("parameters (" + std::to_string(s.size()) + ", " + std::to_string(p.size()) +
                         ") do not match model dims (" + std::to_string(model.speaker_dims()) + ", " +
                         std::to_string(model.pose_dims()) + ")");
    }
}

} // namespace

EnergyEvaluation eval_energy(const MultilinearModel& model, std::span<const CoilTarget> coils, const Vector& speaker,
                             const Vector& pose, const ModelParams* previous, double alpha, double beta)
{
    check_params(model, speaker, pose);
    if (previous)
    {
        check_params(model, previous->speaker, previous->pose);
    }
    const CoilBasis basis(model, coils);
    EnergyEvaluation out;
    out.grad_speaker = Vector::Zero(speaker.size());
    out.grad_pose = Vector::Zero(pose.size());
    out.terms.data = basis.data_term(speaker, pose, &out.grad_speaker, &out.grad_pose);
    out.value = out.terms.data;
    if (previous)
    {
        const Vector ds = speaker - previous->speaker;
        const Vector dp = pose - previous->pose;
        out.terms.speaker_consistency = ds.squaredNorm();
        out.terms.pose_smoothness = dp.squaredNorm();
        out.value += alpha * out.terms.speaker_consistency + beta * out.terms.pose_smoothness;
        out.grad_speaker += 2.0 * alpha * ds;
        out.grad_pose += 2.0 * beta * dp;
    }
    return out;
}

FrameFit fit_frame(const MultilinearModel& model, std::span<const CoilTarget> coils, const FitOptions& options,
                   const ModelParams* previous)
{
    validate(options);
    if (previous)
    {
        check_params(model, previous->speaker, previous->pose);
    }
    const CoilBasis basis(model, coils);
    const auto ms = static_cast<Eigen::Index>(model.speaker_dims());
    const auto np = static_cast<Eigen::Index>(model.pose_dims());
    const bool fixed = options.fix_speaker.has_value();
    if (fixed && options.fix_speaker->size() != ms)
    {
        throw ShapeError("fixed speaker vector has length " + std::to_string(options.fix_speaker->size()) +
                         ", model expects " + std::to_string(ms));
    }

    const Vector p_lower = model.pose_stats.lower(options.c);
    const Vector p_upper = model.pose_stats.upper(options.c);
    const Vector s_lower = model.speaker_stats.lower(options.c);
    const Vector s_upper = model.speaker_stats.upper(options.c);

    const double alpha = previous ? options.alpha : 0.0;
    const double beta = previous ? options.beta : 0.0;

    BoxOptions box;
    box.gradient_tolerance = options.gradient_tolerance;
    box.max_iterations = options.max_iterations;

    FrameFit fit;
    if (fixed)
    {
        const Vector& s = *options.fix_speaker;
        const Objective objective = [&](const Vector& p, Vector& g) {
            double e = basis.data_term(s, p, nullptr, &g);
            if (previous)
            {
                const Vector dp = p - previous->pose;
                e += beta * dp.squaredNorm();
                g += 2.0 * beta * dp;
            }
            return e;
        };
        const Vector start = previous ? previous->pose : model.pose_stats.mean;
        const BoxResult r = minimize_box(objective, start, p_lower, p_upper, box);
        fit.params.speaker = s;
        fit.params.pose = r.x;
        fit.iterations = r.iterations;
        fit.converged = r.converged;
    }
    else
    {
        Vector lower(ms + np), upper(ms + np), start(ms + np);
        lower << s_lower, p_lower;
        upper << s_upper, p_upper;
        if (previous)
        {
            start << previous->speaker, previous->pose;
        }
        else
        {
            start << model.speaker_stats.mean, model.pose_stats.mean;
        }
        const Objective objective = [&](const Vector& x, Vector& g) {
            const Vector s = x.head(ms);
            const Vector p = x.tail(np);
            Vector gs = Vector::Zero(ms);
            Vector gp = Vector::Zero(np);
            double e = basis.data_term(s, p, &gs, &gp);
            if (previous)
            {
                const Vector ds = s - previous->speaker;
                const Vector dp = p - previous->pose;
                e += alpha * ds.squaredNorm() + beta * dp.squaredNorm();
                gs += 2.0 * alpha * ds;
                gp += 2.0 * beta * dp;
            }
            g << gs, gp;
            return e;
        };
        const BoxResult r = minimize_box(objective, start, lower, upper, box);
        fit.params.speaker = r.x.head(ms);
        fit.params.pose = r.x.tail(np);
        fit.iterations = r.iterations;
        fit.converged = r.converged;
    }

    fit.energy.data = basis.data_term(fit.params.speaker, fit.params.pose, nullptr, nullptr);
    if (previous)
    {
        fit.energy.speaker_consistency = (fit.params.speaker - previous->speaker).squaredNorm();
        fit.energy.pose_smoothness = (fit.params.pose - previous->pose).squaredNorm();
    }
    fit.residuals = basis.residuals(fit.params.speaker, fit.params.pose);
    return fit;
}

double FitResult::mean_residual() const
{
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& f : frames)
    {
        for (double r : f.residuals)
        {
            sum += r;
            ++count;
        }
    }
    return count ? sum / static_cast<double>(count) : 0.0;
}

Json fit_result_to_json(const FitResult& result)
{
    Json j;
    j["utterance"] = result.utterance;
    j["frameRate"] = result.frame_rate;
    j["coils"] = result.coils;
    j["options"] = fit_options_to_json(result.options);
    j["meanResidual"] = result.mean_residual();
    Json frames = Json::array();
    for (const auto& f : result.frames)
    {
        Json frame;
        frame["s"] = vector_to_json(f.params.speaker);
        frame["p"] = vector_to_json(f.params.pose);
        frame["energy"] = {{"data", f.energy.data},
                           {"speakerConsistency", f.energy.speaker_consistency},
                           {"poseSmoothness", f.energy.pose_smoothness}};
        frame["residuals"] = f.residuals;
        frame["iterations"] = f.iterations;
        frame["converged"] = f.converged;
        frames.push_back(std::move(frame));
    }
    j["frames"] = std::move(frames);
    return j;
}

namespace {

std::vector<CoilTarget> frame_targets(const std::vector<const EmaChannel*>& channels,
                                      const std::vector<std::size_t>& vertices, std::size_t t)
{
    std::vector<CoilTarget> targets;
    targets.reserve(channels.size());
    for (std::size_t c = 0; c < channels.size(); ++c)
    {
        targets.push_back({vertices[c], channels[c]->positions[t]});
    }
    return targets;
}

} // namespace

FitResult fit_sequence(const MultilinearModel& model, const EmaRecording& rec,
                       const std::vector<CoilVertex>& correspondence, const FitOptions& options)
{
    validate(options);
    validate(rec);
    if (correspondence.empty())
    {
        throw DataError("fit_sequence: empty correspondence");
    }
    FitResult result;
    result.utterance = rec.utterance;
    result.frame_rate = rec.frame_rate;
    result.options = options;
    std::vector<const EmaChannel*> channels;
    std::vector<std::size_t> vertices;
    for (const auto& cv : correspondence)
    {
        channels.push_back(&rec.channel(cv.coil));
        vertices.push_back(cv.vertex);
        result.coils.push_back(cv.coil);
    }
    const bool coupled = options.alpha > 0.0 || options.beta > 0.0;
    result.frames.reserve(rec.frame_count());
    for (std::size_t t = 0; t < rec.frame_count(); ++t)
    {
        const auto targets = frame_targets(channels, vertices, t);
        for (const auto& target : targets)
        {
            if (!target.target.allFinite())
            {
                throw DataError("recording '" + rec.utterance + "' frame " + std::to_string(t) +
                                " has missing coil samples; interpolate first");
            }
        }
        const ModelParams* previous = coupled && t > 0 ? &result.frames.back().params : nullptr;
        try
        {
            result.frames.push_back(fit_frame(model, targets, options, previous));
        } catch (const NumericError& e)
        {
            throw NumericError("recording '" + rec.utterance + "' frame " + std::to_string(t) + ": " + e.what());
        }
    }
    return result;
}

CorrespondenceOptions correspondence_options_from_json(const Json& json, CorrespondenceOptions defaults)
{
    try
    {
        defaults.c = json.value("c", defaults.c);
        defaults.restarts = json.value("restarts", defaults.restarts);
        defaults.seed = json.value("seed", defaults.seed);
        defaults.max_rounds = json.value("maxRounds", defaults.max_rounds);
        defaults.frames = json.value("frames", defaults.frames);
        defaults.gradient_tolerance = json.value("gradientTolerance", defaults.gradient_tolerance);
        defaults.max_iterations = json.value("maxIterations", defaults.max_iterations);
    } catch (const nlohmann::json::exception& e)
    {
        throw ParseError(std::string("correspondence options: ") + e.what());
    }
    if (!(defaults.c > 0.0) || defaults.restarts < 1 || defaults.max_rounds < 1 || defaults.frames < 1)
    {
        throw UsageError("correspondence options: need c > 0 and positive restarts, rounds and frames");
    }
    return defaults;
}

Json correspondence_options_to_json(const CorrespondenceOptions& options)
{
    Json j;
    j["c"] = options.c;
    j["restarts"] = options.restarts;
    j["seed"] = options.seed;
    j["maxRounds"] = options.max_rounds;
    j["frames"] = options.frames;
    j["gradientTolerance"] = options.gradient_tolerance;
    j["maxIterations"] = options.max_iterations;
    return j;
}

namespace {

double uniform01(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Assigns each coil (in order) the free vertex with the smallest summed squared distance to
// its targets over the sampled frames. meshes[f] holds stacked positions for frame f.
std::vector<std::size_t> assign_vertices(const std::vector<Vector>& meshes,
                                         const std::vector<std::vector<Point3>>& targets, std::size_t vertex_count)
{
    const std::size_t coils = targets.empty() ? 0 : targets.front().size();
    std::vector<bool> taken(vertex_count, false);
    std::vector<std::size_t> out(coils, 0);
    for (std::size_t c = 0; c < coils; ++c)
    {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_vertex = vertex_count;
        for (std::size_t v = 0; v < vertex_count; ++v)
        {
            if (taken[v])
            {
                continue;
            }
            double cost = 0.0;
            for (std::size_t f = 0; f < meshes.size(); ++f)
            {
                cost += (meshes[f].segment<3>(static_cast<Eigen::Index>(3 * v)) - targets[f][c]).squaredNorm();
            }
            if (cost < best)
            {
                best = cost;
                best_vertex = v;
            }
        }
        out[c] = best_vertex;
        taken[best_vertex] = true;
    }
    return out;
}

} // namespace

Correspondence estimate_correspondence(const MultilinearModel& model, const EmaRecording& rec,
                                       const std::vector<std::string>& coil_labels,
                                       const CorrespondenceOptions& options)
{
    validate(rec);
    if (rec.frame_count() == 0)
    {
        throw DataError("correspondence search needs at least one frame");
    }
    if (coil_labels.empty())
    {
        throw DataError("correspondence search needs at least one coil");
    }
    if (model.vertex_count() < coil_labels.size())
    {
        throw DataError("model has fewer vertices (" + std::to_string(model.vertex_count()) + ") than coils (" +
                        std::to_string(coil_labels.size()) + ")");
    }
    const std::size_t total = rec.frame_count();
    const std::size_t used = std::min(options.frames, total);
    std::vector<std::size_t> frame_index(used);
    for (std::size_t i = 0; i < used; ++i)
    {
        frame_index[i] = used == 1 ? 0 : i * (total - 1) / (used - 1);
    }
    std::vector<std::vector<Point3>> targets(used);
    for (std::size_t i = 0; i < used; ++i)
    {
        for (const auto& label : coil_labels)
        {
            const Point3& x = rec.channel(label).positions[frame_index[i]];
            if (!x.allFinite())
            {
                throw DataError("coil '" + label + "' has missing samples; interpolate first");
            }
            targets[i].push_back(x);
        }
    }

    FitOptions fit_options;
    fit_options.c = options.c;
    fit_options.gradient_tolerance = options.gradient_tolerance;
    fit_options.max_iterations = options.max_iterations;

    const Vector s_lower = model.speaker_stats.lower(options.c);
    const Vector s_upper = model.speaker_stats.upper(options.c);
    const Vector p_lower = model.pose_stats.lower(options.c);
    const Vector p_upper = model.pose_stats.upper(options.c);

    Correspondence best;
    best.mean_distance_mm = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < options.restarts; ++restart)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(options.seed & 0xffffffffu),
                          static_cast<std::uint32_t>(options.seed >> 32), static_cast<std::uint32_t>(restart)};
        std::mt19937_64 rng(seq);
        ModelParams start;
        start.speaker.resize(s_lower.size());
        start.pose.resize(p_lower.size());
        for (Eigen::Index i = 0; i < s_lower.size(); ++i)
        {
            start.speaker(i) = s_lower(i) + uniform01(rng) * (s_upper(i) - s_lower(i));
        }
        for (Eigen::Index i = 0; i < p_lower.size(); ++i)
        {
            start.pose(i) = p_lower(i) + uniform01(rng) * (p_upper(i) - p_lower(i));
        }

        const Vector initial = generate_positions(model, start.speaker, start.pose);
        std::vector<std::size_t> assignment =
            assign_vertices(std::vector<Vector>(used, initial), targets, model.vertex_count());
        std::vector<ModelParams> params(used, start);
        double residual = std::numeric_limits<double>::infinity();
        for (int round = 0; round < options.max_rounds; ++round)
        {
            std::vector<Vector> meshes(used);
            double sum = 0.0;
            for (std::size_t f = 0; f < used; ++f)
            {
                std::vector<CoilTarget> coil_targets;
                for (std::size_t c = 0; c < coil_labels.size(); ++c)
                {
                    coil_targets.push_back({assignment[c], targets[f][c]});
                }
                // Warm start from the previous round; no temporal coupling (alpha = beta = 0).
                const FrameFit fit = fit_frame(model, coil_targets, fit_options, &params[f]);
                params[f] = fit.params;
                for (double r : fit.residuals)
                {
                    sum += r;
                }
                meshes[f] = generate_positions(model, fit.params.speaker, fit.params.pose);
            }
            residual = sum / static_cast<double>(used * coil_labels.size());
            const auto next = assign_vertices(meshes, targets, model.vertex_count());
            if (next == assignment)
            {
                break;
            }
            if (round + 1 < options.max_rounds)
            {
                assignment = next;
            }
        }
        if (residual < best.mean_distance_mm)
        {
            best.mean_distance_mm = residual;
            best.restart = restart;
            best.pairs.clear();
            for (std::size_t c = 0; c < coil_labels.size(); ++c)
            {
                best.pairs.push_back({coil_labels[c], assignment[c]});
            }
        }
    }
    return best;
}

Json pose_trajectory_to_json(const PoseTrajectory& trajectory)
{
    Json j;
    if (!trajectory.utterance.empty())
    {
        j["utterance"] = trajectory.utterance;
    }
    j["frameRate"] = trajectory.frame_rate;
    j["speaker"] = vector_to_json(trajectory.speaker);
    Json frames = Json::array();
    for (const auto& p : trajectory.frames)
    {
        frames.push_back(vector_to_json(p));
    }
    j["frames"] = std::move(frames);
    return j;
}

PoseTrajectory pose_trajectory_from_json(const Json& json)
{
    PoseTrajectory t;
    if (!json.is_object() || !json.contains("frameRate") || !json["frameRate"].is_number())
    {
        throw ParseError("pose trajectory: field 'frameRate' missing or not a number");
    }
    t.utterance = json.value("utterance", std::string());
    t.frame_rate = json["frameRate"].get<double>();
    if (!json.contains("speaker") || !json.contains("frames") || !json["frames"].is_array())
    {
        throw ParseError("pose trajectory: fields 'speaker' and 'frames' are required");
    }
    t.speaker = vector_from_json(json["speaker"], "pose trajectory speaker");
    for (const auto& f : json["frames"])
    {
        t.frames.push_back(vector_from_json(f, "pose trajectory frame"));
    }
    return t;
}

SpeakerEstimate estimate_speaker(const MultilinearModel& model, const std::vector<EmaRecording>& recordings,
                                 const std::vector<CoilVertex>& correspondence, const FitOptions& first,
                                 FitOptions second, std::size_t jobs)
{
    if (recordings.empty())
    {
        throw UsageError("speaker estimation needs at least one recording");
    }
    SpeakerEstimate estimate;
    estimate.anatomy_pass.resize(recordings.size());
    parallel_for(recordings.size(), jobs, [&](std::size_t i) {
        estimate.anatomy_pass[i] = fit_sequence(model, recordings[i], correspondence, first);
    });

    // Neumaier-compensated running sum over all frames in recording order.
    const auto ms = static_cast<Eigen::Index>(model.speaker_dims());
    Vector sum = Vector::Zero(ms);
    Vector compensation = Vector::Zero(ms);
    std::size_t count = 0;
    for (const auto& fit : estimate.anatomy_pass)
    {
        for (const auto& frame : fit.frames)
        {
            for (Eigen::Index i = 0; i < ms; ++i)
            {
                const double x = frame.params.speaker(i);
                const double t = sum(i) + x;
                compensation(i) += std::abs(sum(i)) >= std::abs(x) ? (sum(i) - t) + x : (x - t) + sum(i);
                sum(i) = t;
            }
            ++count;
        }
    }
    if (count == 0)
    {
        throw DataError("speaker estimation: recordings contain no frames");
    }
    estimate.speaker = (sum + compensation) / static_cast<double>(count);

    second.fix_speaker = estimate.speaker;
    estimate.pose_pass.resize(recordings.size());
    estimate.trajectories.resize(recordings.size());
    parallel_for(recordings.size(), jobs, [&](std::size_t i) {
        estimate.pose_pass[i] = fit_sequence(model, recordings[i], correspondence, second);
        PoseTrajectory& traj = estimate.trajectories[i];
        traj.utterance = recordings[i].utterance;
        traj.frame_rate = recordings[i].frame_rate;
        traj.speaker = estimate.speaker;
        for (const auto& frame : estimate.pose_pass[i].frames)
        {
            traj.frames.push_back(frame.params.pose);
        }
    });
    return estimate;
}

EmaRecording virtual_ema(const MultilinearModel& model, const std::vector<CoilVertex>& correspondence,
                         const PoseTrajectory& trajectory, const Vector& speaker)
{
    if (static_cast<std::size_t>(speaker.size()) != model.speaker_dims())
    {
        throw ShapeError("speaker vector has length " + std::to_string(speaker.size()) + ", model expects " +
                         std::to_string(model.speaker_dims()));
    }
    std::vector<CoilTarget> coils;
    for (const auto& cv : correspondence)
    {
        coils.push_back({cv.vertex, Point3::Zero()});
    }
    const CoilBasis basis(model, coils);
    EmaRecording rec;
    rec.utterance = trajectory.utterance;
    rec.frame_rate = trajectory.frame_rate;
    for (const auto& cv : correspondence)
    {
        rec.channels.push_back({cv.coil, {}, {}});
    }
    for (const auto& pose : trajectory.frames)
    {
        check_params(model, speaker, pose);
        for (std::size_t c = 0; c < correspondence.size(); ++c)
        {
            rec.channels[c].positions.push_back(basis.vertex(c, speaker, pose));
        }
    }
    return rec;
}

} // namespace articulate
