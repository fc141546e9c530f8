/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: tests/test_fitting.cpp
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "articulate/errors.hpp"
#include "articulate/fitting.hpp"
#include "articulate/synthetic.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <numeric>

using namespace articulate;

namespace {

SyntheticCorpus small_corpus(std::uint64_t seed = 1, double jitter = 0.0)
{
    SyntheticConfig config;
    config.seed = seed;
    config.utterances = 3;
    config.jitter_mm = jitter;
    return make_synthetic_corpus(config);
}

const SyntheticCorpus& shared_corpus()
{
    static const SyntheticCorpus corpus = small_corpus();
    return corpus;
}

EmaRecording tongue_recording(const SyntheticCorpus& corpus, std::size_t utterance)
{
    const EmaRecording aligned = align_to_reference(interpolate_invalid(corpus.utterances[utterance].ema), "ref");
    return select_channels(aligned, tongue_coils());
}

Vector uniform_in_box(std::mt19937_64& rng, const ParamStats& stats, double c)
{
    Vector v(stats.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
    {
        v(i) = oracle::uniform(rng, stats.mean(i) - c * stats.stddev(i), stats.mean(i) + c * stats.stddev(i));
    }
    return v;
}

std::vector<CoilTarget> planted_targets(const MultilinearModel& model, const std::vector<std::size_t>& vertices,
                                        const Vector& s, const Vector& p)
{
    const Vector x = generate_positions(model, s, p);
    std::vector<CoilTarget> out;
    for (std::size_t v : vertices)
    {
        out.push_back({v, x.segment(static_cast<Eigen::Index>(3 * v), 3)});
    }
    return out;
}

double pose_roughness(const FitResult& r)
{
    double sum = 0.0;
    for (std::size_t t = 1; t < r.frames.size(); ++t)
    {
        sum += (r.frames[t].params.pose - r.frames[t - 1].params.pose).squaredNorm();
    }
    return sum;
}

double speaker_roughness(const FitResult& r)
{
    double sum = 0.0;
    for (std::size_t t = 1; t < r.frames.size(); ++t)
    {
        sum += (r.frames[t].params.speaker - r.frames[t - 1].params.speaker).squaredNorm();
    }
    return sum;
}

} // namespace

TEST_CASE("analytic gradients agree with central differences")
{
    const MultilinearModel& model = shared_corpus().model;
    auto rng = oracle::make_rng(31);
    const auto ms = static_cast<Eigen::Index>(model.speaker_dims());
    const auto np = static_cast<Eigen::Index>(model.pose_dims());
    int checked = 0;
    for (int trial = 0; trial < 120; ++trial)
    {
        // Every fourth configuration sits on a corner of the box, where the bounds are active.
        const double c = trial % 4 == 0 ? 3.0 : oracle::uniform(rng, 0.5, 3.0);
        Vector s = uniform_in_box(rng, model.speaker_stats, c);
        Vector p = uniform_in_box(rng, model.pose_stats, c);
        if (trial % 4 == 0)
        {
            s = model.speaker_stats.upper(c);
            p = model.pose_stats.lower(c);
        }
        std::vector<CoilTarget> coils;
        for (int k = 0; k < 3; ++k)
        {
            coils.push_back({static_cast<std::size_t>(rng() % model.vertex_count()),
                             oracle::random_vector(rng, 3, -30, 30)});
        }
        const ModelParams previous{uniform_in_box(rng, model.speaker_stats, 2.0),
                                   uniform_in_box(rng, model.pose_stats, 2.0)};
        const bool with_previous = trial % 3 != 0;
        const double alpha = oracle::uniform(rng, 0, 20);
        const double beta = oracle::uniform(rng, 0, 10);
        const ModelParams* prev = with_previous ? &previous : nullptr;

        const EnergyEvaluation e = eval_energy(model, coils, s, p, prev, alpha, beta);
        Vector x(ms + np);
        x << s, p;
        const auto value = [&](const Vector& y) {
            return eval_energy(model, coils, y.head(ms), y.tail(np), prev, alpha, beta).value;
        };
        const Vector numeric = oracle::numeric_gradient(value, x);
        Vector analytic(ms + np);
        analytic << e.grad_speaker, e.grad_pose;
        const double scale = std::max(1.0, numeric.lpNorm<Eigen::Infinity>());
        CHECK((analytic - numeric).lpNorm<Eigen::Infinity>() <= 1e-6 * scale);
        CHECK(e.value == doctest::Approx(e.terms.data + (prev ? alpha * e.terms.speaker_consistency +
                                                                    beta * e.terms.pose_smoothness
                                                              : 0.0)));
        ++checked;
    }
    CHECK(checked >= 100);
}

TEST_CASE("energy terms")
{
    const MultilinearModel& model = shared_corpus().model;
    const Vector s = model.speaker_stats.mean;
    const Vector p = model.pose_stats.mean;
    const std::vector<CoilTarget> at_mean = planted_targets(model, {0, 7, 42}, s, p);
    const EnergyEvaluation zero = eval_energy(model, at_mean, s, p, nullptr, 5.0, 5.0);
    CHECK(zero.value <= 1e-20);
    CHECK(zero.terms.speaker_consistency == 0.0);

    std::vector<CoilTarget> shifted = at_mean;
    shifted[0].target += Point3(1, 2, 2); // one coil 3 mm away
    CHECK(eval_energy(model, shifted, s, p, nullptr, 0, 0).terms.data == doctest::Approx(9.0));

    const ModelParams previous{s + Vector::Ones(s.size()), p};
    const EnergyEvaluation coupled = eval_energy(model, at_mean, s, p, &previous, 2.0, 7.0);
    CHECK(coupled.terms.speaker_consistency == doctest::Approx(static_cast<double>(s.size())));
    CHECK(coupled.value == doctest::Approx(2.0 * static_cast<double>(s.size())));
    CHECK_THROWS_AS(eval_energy(model, at_mean, Vector::Zero(1), p, nullptr, 0, 0), ShapeError);
}

TEST_CASE("planted parameters are recovered to a vanishing data term")
{
    const MultilinearModel& model = shared_corpus().model;
    auto rng = oracle::make_rng(32);
    int recovered = 0;
    for (int trial = 0; trial < 40; ++trial)
    {
        const Vector s = uniform_in_box(rng, model.speaker_stats, 2.5);
        const Vector p = uniform_in_box(rng, model.pose_stats, 2.5);
        std::vector<std::size_t> vertices;
        for (int k = 0; k < 4; ++k)
        {
            vertices.push_back(static_cast<std::size_t>(rng() % model.vertex_count()));
        }
        FitOptions opts;
        opts.gradient_tolerance = 1e-9;
        opts.max_iterations = 500;
        const FrameFit fit = fit_frame(model, planted_targets(model, vertices, s, p), opts);
        if (fit.energy.data <= 1e-6)
        {
            ++recovered;
        }
    }
    CHECK(recovered >= 38);
}

TEST_CASE("a tiny box pins the parameters to the mean")
{
    const MultilinearModel& model = shared_corpus().model;
    auto rng = oracle::make_rng(33);
    const std::vector<CoilTarget> targets = planted_targets(model, {3, 60, 120}, uniform_in_box(rng, model.speaker_stats, 2),
                                                            uniform_in_box(rng, model.pose_stats, 2));
    FitOptions opts;
    opts.c = 1e-9;
    const FrameFit fit = fit_frame(model, targets, opts);
    CHECK((fit.params.speaker - model.speaker_stats.mean).lpNorm<Eigen::Infinity>() <=
          2e-9 * model.speaker_stats.stddev.maxCoeff());
    CHECK((fit.params.pose - model.pose_stats.mean).lpNorm<Eigen::Infinity>() <=
          2e-9 * model.pose_stats.stddev.maxCoeff());
}

TEST_CASE("a fixed speaker is returned unchanged and results stay inside the box")
{
    const MultilinearModel& model = shared_corpus().model;
    auto rng = oracle::make_rng(34);
    for (int trial = 0; trial < 10; ++trial)
    {
        const Vector fixed = uniform_in_box(rng, model.speaker_stats, 1.0);
        const std::vector<CoilTarget> targets = planted_targets(
            model, {10, 50, 90}, uniform_in_box(rng, model.speaker_stats, 2), uniform_in_box(rng, model.pose_stats, 2));
        FitOptions opts = FitOptions::pose_pass();
        opts.fix_speaker = fixed;
        const FrameFit fit = fit_frame(model, targets, opts);
        CHECK(fit.params.speaker == fixed);
        CHECK((fit.params.pose.array() >= model.pose_stats.lower(opts.c).array()).all());
        CHECK((fit.params.pose.array() <= model.pose_stats.upper(opts.c).array()).all());
    }
    FitOptions bad;
    bad.fix_speaker = Vector::Zero(1);
    CHECK_THROWS_AS(fit_frame(model, planted_targets(model, {0}, model.speaker_stats.mean, model.pose_stats.mean), bad),
                    ShapeError);
    FitOptions negative;
    negative.alpha = -1;
    CHECK_THROWS_AS(validate(negative), UsageError);
}

TEST_CASE("without temporal terms the frame order does not matter")
{
    const SyntheticCorpus& corpus = shared_corpus();
    const EmaRecording rec = tongue_recording(corpus, 0);
    const std::size_t frames = std::min<std::size_t>(rec.frame_count(), 30);
    EmaRecording head = rec;
    for (auto& c : head.channels)
    {
        c.positions.resize(frames);
    }
    std::vector<std::size_t> order(frames);
    std::iota(order.begin(), order.end(), 0);
    auto rng = oracle::make_rng(35);
    std::shuffle(order.begin(), order.end(), rng);
    EmaRecording permuted = head;
    for (std::size_t ch = 0; ch < head.channels.size(); ++ch)
    {
        for (std::size_t t = 0; t < frames; ++t)
        {
            permuted.channels[ch].positions[t] = head.channels[ch].positions[order[t]];
        }
    }
    FitOptions opts;
    const FitResult a = fit_sequence(corpus.model, head, corpus.correspondence, opts);
    const FitResult b = fit_sequence(corpus.model, permuted, corpus.correspondence, opts);
    for (std::size_t t = 0; t < frames; ++t)
    {
        CHECK(b.frames[t].params.pose == a.frames[order[t]].params.pose);
        CHECK(b.frames[t].params.speaker == a.frames[order[t]].params.speaker);
    }
}

TEST_CASE("temporal weights smooth the trajectories")
{
    const SyntheticCorpus corpus = small_corpus(2, 0.5);
    const EmaRecording rec = tongue_recording(corpus, 0);
    FitOptions loose;
    FitOptions smooth;
    smooth.beta = 10.0;
    const FitResult a = fit_sequence(corpus.model, rec, corpus.correspondence, loose);
    const FitResult b = fit_sequence(corpus.model, rec, corpus.correspondence, smooth);
    CHECK(pose_roughness(b) < pose_roughness(a));

    FitOptions anchored;
    anchored.alpha = 100.0;
    const FitResult c = fit_sequence(corpus.model, rec, corpus.correspondence, anchored);
    CHECK(speaker_roughness(c) < speaker_roughness(a));
}

TEST_CASE("fit results serialize with per-frame parameters")
{
    const SyntheticCorpus& corpus = shared_corpus();
    EmaRecording rec = tongue_recording(corpus, 1);
    for (auto& c : rec.channels)
    {
        c.positions.resize(3);
    }
    const FitResult r = fit_sequence(corpus.model, rec, corpus.correspondence, FitOptions{});
    const Json j = fit_result_to_json(r);
    REQUIRE(j["frames"].size() == 3);
    CHECK(j["frames"][2]["s"].size() == r.frames[2].params.speaker.size());
    CHECK(j["frames"][2]["p"].size() == r.frames[2].params.pose.size());
    CHECK(r.frames.size() == 3);
    CHECK(r.mean_residual() >= 0.0);

    const PoseTrajectory t{"u", 200.0, r.frames[0].params.speaker,
                           {r.frames[0].params.pose, r.frames[1].params.pose}};
    const PoseTrajectory back = pose_trajectory_from_json(pose_trajectory_to_json(t));
    CHECK(back.speaker == t.speaker);
    CHECK(back.frames[1] == t.frames[1]);
}

TEST_CASE("correspondence search")
{
    const MultilinearModel& model = shared_corpus().model;
    const std::vector<std::size_t> planted{20, 75, 130};
    const Vector x = generate_positions(model, model.speaker_stats.mean, model.pose_stats.mean);
    EmaRecording rec;
    rec.utterance = "mean";
    for (std::size_t k = 0; k < planted.size(); ++k)
    {
        EmaChannel c;
        c.label = tongue_coils()[k];
        c.positions.assign(5, x.segment(static_cast<Eigen::Index>(3 * planted[k]), 3));
        rec.channels.push_back(c);
    }
    CorrespondenceOptions opts;
    opts.restarts = 4;
    const Correspondence a = estimate_correspondence(model, rec, tongue_coils(), opts);
    REQUIRE(a.pairs.size() == 3);
    for (std::size_t k = 0; k < 3; ++k)
    {
        CHECK(a.pairs[k].coil == tongue_coils()[k]);
        CHECK(a.pairs[k].vertex == planted[k]);
    }
    CHECK(a.mean_distance_mm <= 1e-3);

    const Correspondence b = estimate_correspondence(model, rec, tongue_coils(), opts);
    CHECK(b.pairs == a.pairs);
    CHECK(b.restart == a.restart);
    CHECK(b.mean_distance_mm == a.mean_distance_mm);
    CHECK_THROWS_AS(estimate_correspondence(model, rec, {"T1", "missing"}, opts), DataError);
}

TEST_CASE("two-pass speaker estimation")
{
    const SyntheticCorpus& corpus = shared_corpus();
    EmaRecording rec = tongue_recording(corpus, 0);
    for (auto& c : rec.channels)
    {
        c.positions.resize(20);
    }
    const SpeakerEstimate single = estimate_speaker(corpus.model, {rec}, corpus.correspondence,
                                                    FitOptions::anatomy_pass(), FitOptions::pose_pass());
    const SpeakerEstimate twice = estimate_speaker(corpus.model, {rec, rec}, corpus.correspondence,
                                                   FitOptions::anatomy_pass(), FitOptions::pose_pass(), 2);
    CHECK((twice.speaker - single.speaker).lpNorm<Eigen::Infinity>() <= 1e-12);
    REQUIRE(twice.pose_pass.size() == 2);
    for (const auto& result : twice.pose_pass)
    {
        for (const auto& frame : result.frames)
        {
            CHECK(frame.params.speaker == twice.speaker);
        }
    }
    for (const auto& trajectory : twice.trajectories)
    {
        CHECK(trajectory.speaker == twice.speaker);
        CHECK(trajectory.frames.size() == 20);
    }

    // The estimate is the plain average of every pass-one speaker vector.
    Vector mean = Vector::Zero(single.speaker.size());
    std::size_t count = 0;
    for (const auto& frame : single.anatomy_pass[0].frames)
    {
        mean += frame.params.speaker;
        ++count;
    }
    CHECK((mean / static_cast<double>(count) - single.speaker).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("virtual EMA reads the corresponded vertices")
{
    const SyntheticCorpus& corpus = shared_corpus();
    const MultilinearModel& model = corpus.model;
    PoseTrajectory t;
    t.utterance = "still";
    t.frame_rate = 200.0;
    t.speaker = corpus.speaker;
    t.frames.assign(4, model.pose_stats.mean);
    const EmaRecording ema = virtual_ema(model, corpus.correspondence, t, corpus.speaker);
    const Vector x = generate_positions(model, corpus.speaker, model.pose_stats.mean);
    REQUIRE(ema.channels.size() == corpus.correspondence.size());
    for (std::size_t k = 0; k < ema.channels.size(); ++k)
    {
        const Point3 expected = x.segment(static_cast<Eigen::Index>(3 * corpus.correspondence[k].vertex), 3);
        CHECK(ema.channels[k].label == corpus.correspondence[k].coil);
        for (const auto& p : ema.channels[k].positions)
        {
            CHECK((p - expected).norm() <= 1e-12);
        }
    }
    t.frames.resize(1);
    CHECK(virtual_ema(model, corpus.correspondence, t, corpus.speaker).frame_count() == 1);
}
