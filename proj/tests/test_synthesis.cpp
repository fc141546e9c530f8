/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: tests/test_synthesis.cpp
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
#include "articulate/synthesis.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <filesystem>

using namespace articulate;

namespace {

Segmentation segments(std::initializer_list<Segment> entries)
{
    Segmentation s;
    s.entries = entries;
    return s;
}

Matrix column(std::initializer_list<double> values)
{
    Matrix m(static_cast<Eigen::Index>(values.size()), 1);
    Eigen::Index i = 0;
    for (double v : values)
    {
        m(i++, 0) = v;
    }
    return m;
}

// Dense W: one row per (frame, window), edge taps clamped onto the first or last frame.
Matrix dense_window_matrix(Eigen::Index frames, const std::vector<Window>& windows)
{
    const auto nw = static_cast<Eigen::Index>(windows.size());
    Matrix w = Matrix::Zero(frames * nw, frames);
    for (Eigen::Index t = 0; t < frames; ++t)
    {
        for (Eigen::Index k = 0; k < nw; ++k)
        {
            const auto& coef = windows[static_cast<std::size_t>(k)].coefficients;
            const auto reach = static_cast<Eigen::Index>(coef.size() / 2);
            for (Eigen::Index o = -reach; o <= reach; ++o)
            {
                const Eigen::Index col = std::clamp<Eigen::Index>(t + o, 0, frames - 1);
                w(t * nw + k, col) += coef[static_cast<std::size_t>(o + reach)];
            }
        }
    }
    return w;
}

Vector dense_mlpg(const Matrix& mean, const Matrix& variance, const std::vector<Window>& windows)
{
    const Eigen::Index frames = mean.rows();
    const auto nw = static_cast<Eigen::Index>(windows.size());
    const Matrix w = dense_window_matrix(frames, windows);
    Vector mu(frames * nw);
    Vector precision(frames * nw);
    for (Eigen::Index t = 0; t < frames; ++t)
    {
        for (Eigen::Index k = 0; k < nw; ++k)
        {
            mu(t * nw + k) = mean(t, k);
            precision(t * nw + k) = 1.0 / variance(t, k);
        }
    }
    const Matrix a = w.transpose() * precision.asDiagonal() * w;
    const Vector b = w.transpose() * precision.asDiagonal() * mu;
    return oracle::dense_solve(a, b);
}

double second_difference_energy(const Vector& c)
{
    double sum = 0.0;
    for (Eigen::Index t = 1; t + 1 < c.size(); ++t)
    {
        const double d = c(t + 1) - 2.0 * c(t) + c(t - 1);
        sum += d * d;
    }
    return sum;
}

StreamSpec plain(const std::string& name, std::size_t dim = 1)
{
    StreamSpec s;
    s.name = name;
    s.dim = dim;
    return s;
}

StreamSpec voiced(const std::string& name)
{
    StreamSpec s = plain(name);
    s.voiced_aware = true;
    return s;
}

// A model with hand-set state duration means, enough for predict_durations.
StatModel duration_model(const std::string& phone, std::vector<double> means)
{
    StatModel m;
    m.states = means.size();
    m.streams = {plain("x")};
    std::vector<StateModel> states(means.size());
    for (std::size_t i = 0; i < means.size(); ++i)
    {
        states[i].duration_mean = means[i];
        states[i].streams = {StreamCell{{Vector::Zero(2), Vector::Ones(2)}, 1.0}};
    }
    m.phones[phone] = states;
    m.global = states;
    return m;
}

// Utterances alternating phones with a constant value per phone.
std::vector<TrainingUtterance> constant_per_phone_corpus(const std::map<std::string, double>& values,
                                                         std::size_t utterances)
{
    std::vector<TrainingUtterance> corpus;
    std::vector<std::string> phones;
    for (const auto& [p, v] : values)
    {
        phones.push_back(p);
    }
    for (std::size_t u = 0; u < utterances; ++u)
    {
        TrainingUtterance utt;
        utt.id = "u" + std::to_string(u);
        std::vector<double> frames;
        double t = 0.0;
        for (std::size_t k = 0; k < 4; ++k)
        {
            const std::string& p = phones[(u + k) % phones.size()];
            const std::size_t n = 10 + 5 * ((u + k) % 3);
            utt.segmentation.entries.push_back({p, t, t + static_cast<double>(n) / 100.0});
            t += static_cast<double>(n) / 100.0;
            frames.insert(frames.end(), n, values.at(p));
        }
        utt.streams["x"] = Eigen::Map<Matrix>(frames.data(), static_cast<Eigen::Index>(frames.size()), 1);
        corpus.push_back(std::move(utt));
    }
    return corpus;
}

} // namespace

TEST_CASE("deltas")
{
    const Matrix ramp = column({0, 1, 2, 3, 4});
    const Matrix d = compute_deltas(ramp);
    REQUIRE(d.cols() == 2);
    CHECK(d.col(0) == ramp.col(0));
    CHECK(d(0, 1) == 0.5);
    CHECK(d(1, 1) == 1.0);
    CHECK(d(2, 1) == 1.0);
    CHECK(d(3, 1) == 1.0);
    CHECK(d(4, 1) == 0.5);

    const Matrix constant = Matrix::Constant(6, 3, 2.5);
    CHECK(compute_deltas(constant).rightCols(3).cwiseAbs().maxCoeff() == 0.0);
    CHECK(compute_deltas(column({7})) == (Matrix(1, 2) << 7, 0).finished());

    const Matrix dd = apply_windows(ramp, {Window::identity(), Window::delta(), Window::delta_delta()});
    CHECK(dd.cols() == 3);
    CHECK(dd(2, 2) == 0.0);
    CHECK(dd(0, 2) == 1.0); // 1 - 2*0 + 0 with the edge tap clamped
}

TEST_CASE("stream specs")
{
    StreamSpec s = plain("mgc", 3);
    validate(s);
    CHECK(stream_spec_from_json(stream_spec_to_json(s)).windows == s.windows);
    StreamSpec no_identity = s;
    no_identity.windows = {Window::delta()};
    CHECK_THROWS_AS(validate(no_identity), UsageError);
    StreamSpec even = s;
    even.windows = {Window::identity(), Window{{0.5, 0.5}}};
    CHECK_THROWS_AS(validate(even), UsageError);
    StreamSpec wide_f0 = voiced("f0");
    wide_f0.dim = 2;
    CHECK_THROWS_AS(validate(wide_f0), UsageError);
}

TEST_CASE("uniform state alignment")
{
    SUBCASE("10 frames over 5 states")
    {
        const auto a = align_states(segments({{"a", 0.0, 0.1}}), 100.0, 5);
        CHECK(a.instances[0].state_durations == std::vector<std::size_t>{2, 2, 2, 2, 2});
        CHECK(a.frame_count == 10);
    }
    SUBCASE("7 frames over 5 states, earlier states take the remainder")
    {
        const auto a = align_states(segments({{"a", 0.0, 0.07}}), 100.0, 5);
        CHECK(a.instances[0].state_durations == std::vector<std::size_t>{2, 2, 1, 1, 1});
    }
    SUBCASE("one state covers the phone")
    {
        const auto a = align_states(segments({{"a", 0.0, 0.05}, {"b", 0.05, 0.12}}), 100.0, 1);
        CHECK(a.instances[0].state_durations == std::vector<std::size_t>{5});
        CHECK(a.instances[1].state_durations == std::vector<std::size_t>{7});
        CHECK(a.instances[1].begin == 5);
    }
    SUBCASE("a phone shorter than a frame is widened to one frame with a warning")
    {
        const auto a = align_states(segments({{"a", 0.0, 0.05}, {"b", 0.05, 0.052}, {"c", 0.052, 0.1}}), 100.0, 3);
        CHECK(a.warnings == 1);
        CHECK(a.instances[1].state_durations == std::vector<std::size_t>{1, 0, 0});
    }
}

TEST_CASE("duration prediction")
{
    const StatModel m = duration_model("a", {2.4, 2.6});
    CHECK(predict_durations(m, segments({{"a", 0.0, 0.05}}), DurationMode::free)[0] == std::vector<std::size_t>{2, 3});

    const StatModel five = duration_model("a", {1, 1, 1, 1, 1});
    const auto imposed = predict_durations(five, segments({{"a", 0.0, 0.05}}), DurationMode::imposed);
    CHECK(imposed[0] == std::vector<std::size_t>{2, 2, 2, 2, 2}); // 10 frames at 200 Hz
    CHECK_THROWS_AS(predict_durations(five, segments({{"a", 0.0, 0.015}}), DurationMode::imposed), DataError);

    SUBCASE("imposed spans are split proportionally and always sum to the span")
    {
        auto rng = oracle::make_rng(41);
        for (int trial = 0; trial < 50; ++trial)
        {
            std::vector<double> means;
            for (int k = 0; k < 5; ++k)
            {
                means.push_back(oracle::uniform(rng, 1.0, 8.0));
            }
            const StatModel model = duration_model("a", means);
            const auto span = static_cast<std::size_t>(5 + rng() % 60);
            const auto d = predict_durations(model, segments({{"a", 0.0, static_cast<double>(span) / 200.0}}),
                                             DurationMode::imposed)[0];
            std::size_t sum = 0;
            const double total = means[0] + means[1] + means[2] + means[3] + means[4];
            for (std::size_t k = 0; k < 5; ++k)
            {
                CHECK(d[k] >= 1);
                CHECK(std::abs(static_cast<double>(d[k]) - static_cast<double>(span) * means[k] / total) < 2.0);
                sum += d[k];
            }
            CHECK(sum == span);
        }
    }
}

TEST_CASE("Gaussian sequences and voicing flags")
{
    StatModel m;
    m.states = 2;
    m.streams = {voiced("f0")};
    StateModel below;
    below.streams = {StreamCell{{Vector::Constant(2, 4.0), Vector::Ones(2)}, 0.49}};
    StateModel at;
    at.streams = {StreamCell{{(Vector(2) << 5.0, 0.0).finished(), Vector::Ones(2)}, 0.5}};
    m.phones["a"] = {below, at};
    m.global = m.phones["a"];
    const GaussianSequence seq = build_gaussian_sequence(m, {"a"}, {{3, 2}});
    REQUIRE(seq.frame_count() == 5);
    CHECK(seq.streams[0].voiced == std::vector<bool>{false, false, false, true, true});
    CHECK(seq.streams[0].mean(0, 0) == 4.0);
    CHECK(seq.streams[0].mean(2, 0) == 4.0);
    CHECK(seq.streams[0].mean(3, 0) == 5.0);
    CHECK(seq.streams[0].mean(3, 1) == 0.0);
    CHECK_THROWS_AS(build_gaussian_sequence(m, {"a", "a"}, {{3, 2}}), ShapeError);
    CHECK_THROWS_AS(build_gaussian_sequence(m, {"zz"}, {{1, 1}}, false), DataError);

    const Matrix out = mlpg(seq, m.streams[0]);
    CHECK(out(0, 0) == 0.0);
    CHECK(out(3, 0) == doctest::Approx(std::exp(5.0)));
}

TEST_CASE("MLPG")
{
    const std::vector<Window> windows{Window::identity(), Window::delta()};
    SUBCASE("matches the dense solve on random sequences")
    {
        auto rng = oracle::make_rng(42);
        for (int trial = 0; trial < 20; ++trial)
        {
            const Eigen::Index frames = 1 + static_cast<Eigen::Index>(rng() % 50);
            const std::vector<Window> w = trial % 2 ? windows
                                                    : std::vector<Window>{Window::identity(), Window::delta(),
                                                                          Window::delta_delta()};
            Matrix mean = oracle::random_matrix(rng, frames, static_cast<Eigen::Index>(w.size())) * 3.0;
            Matrix variance(frames, static_cast<Eigen::Index>(w.size()));
            for (Eigen::Index i = 0; i < variance.size(); ++i)
            {
                variance(i) = oracle::uniform(rng, 0.05, 2.0);
            }
            const Vector fast = mlpg_solve(mean, variance, w);
            const Vector dense = dense_mlpg(mean, variance, w);
            CHECK((fast - dense).lpNorm<Eigen::Infinity>() <= 1e-8);
        }
    }
    SUBCASE("a 20-frame two-dimensional stream matches per dimension")
    {
        auto rng = oracle::make_rng(43);
        StreamSpec spec = plain("x", 2);
        GaussianSequence seq;
        StreamSequence s;
        s.name = "x";
        s.mean = oracle::random_matrix(rng, 20, 4);
        s.variance = Matrix::Constant(20, 4, 0.3) + oracle::random_matrix(rng, 20, 4).cwiseAbs();
        s.voiced.assign(20, true);
        seq.streams.push_back(s);
        const Matrix out = mlpg(seq, spec);
        for (Eigen::Index d = 0; d < 2; ++d)
        {
            Matrix m(20, 2), v(20, 2);
            m << s.mean.col(d), s.mean.col(2 + d);
            v << s.variance.col(d), s.variance.col(2 + d);
            CHECK((out.col(d) - dense_mlpg(m, v, windows)).lpNorm<Eigen::Infinity>() <= 1e-8);
        }
    }
    SUBCASE("a static-only window returns the means exactly")
    {
        const Matrix mean = column({1.5, -2, 7, 0.25});
        const Vector c = mlpg_solve(mean, Matrix::Constant(4, 1, 0.7), {Window::identity()});
        CHECK(c == mean.col(0));
    }
    SUBCASE("constant means with zero delta means give the constant")
    {
        Matrix mean(12, 2);
        mean.col(0).setConstant(3.25);
        mean.col(1).setZero();
        const Vector c = mlpg_solve(mean, Matrix::Ones(12, 2), windows);
        CHECK((c.array() - 3.25).abs().maxCoeff() <= 1e-12);
    }
    SUBCASE("tighter delta variances give smoother trajectories")
    {
        // Delta means of a slope-0.5 ramp under the edge convention: 0.5 inside, 0.25 at both ends.
        const Matrix ramp_deltas = compute_deltas(column({0, 0.5})).col(1); // (0.25, 0.25)
        auto rng = oracle::make_rng(44);
        for (int trial = 0; trial < 5; ++trial)
        {
            Matrix mean(40, 2);
            for (Eigen::Index t = 0; t < 40; ++t)
            {
                mean(t, 0) = 0.5 * static_cast<double>(t) + oracle::uniform(rng, -3, 3);
                mean(t, 1) = 0.5;
            }
            mean(0, 1) = ramp_deltas(0);
            mean(39, 1) = ramp_deltas(1);
            double previous = std::numeric_limits<double>::infinity();
            Vector tightest;
            for (double dv : {1e2, 1.0, 1e-2, 1e-4, 1e-6})
            {
                Matrix variance(40, 2);
                variance.col(0).setOnes();
                variance.col(1).setConstant(dv);
                tightest = mlpg_solve(mean, variance, windows);
                const double rough = second_difference_energy(tightest);
                CHECK(rough <= previous + 1e-12);
                previous = rough;
            }
            CHECK(previous <= 1e-4);
            for (Eigen::Index t = 1; t < 40; ++t)
            {
                CHECK(tightest(t) - tightest(t - 1) == doctest::Approx(0.5).epsilon(1e-4));
            }
        }
    }
    SUBCASE("a literally constant delta mean drives the edge-replicated window to a staircase")
    {
        Matrix mean(40, 2);
        for (Eigen::Index t = 0; t < 40; ++t)
        {
            mean(t, 0) = 0.5 * static_cast<double>(t);
            mean(t, 1) = 0.5;
        }
        Matrix variance(40, 2);
        variance.col(0).setOnes();
        variance.col(1).setConstant(1e-8);
        const Vector c = mlpg_solve(mean, variance, windows);
        CHECK(c(1) - c(0) == doctest::Approx(1.0).epsilon(1e-5)); // (c1 - c0) / 2 = 0.5 at the edge
        CHECK(c(2) - c(0) == doctest::Approx(1.0).epsilon(1e-5));
    }
    CHECK_THROWS_AS(mlpg_solve(Matrix::Zero(3, 1), Matrix::Ones(3, 2), windows), ShapeError);
}

TEST_CASE("training")
{
    SUBCASE("a constant single-phone stream")
    {
        TrainingUtterance utt{"u", segments({{"a", 0.0, 0.1}}), {{"x", Matrix::Constant(20, 1, 4.0)}}};
        const StatModel m = train({utt}, {plain("x")}, 200.0);
        REQUIRE(m.phones.count("a"));
        for (const auto& st : m.phones.at("a"))
        {
            CHECK(st.streams[0].gaussian.mean(0) == 4.0);
            CHECK(st.streams[0].gaussian.mean(1) == 0.0);
            CHECK(st.streams[0].gaussian.variance(0) == m.variance_floor);
            CHECK(st.streams[0].gaussian.variance(1) == m.variance_floor);
            CHECK(st.duration_mean == 4.0);
        }
        CHECK(m.variance_floor == 1e-6);
    }
    SUBCASE("two phones with distinct constants")
    {
        const auto corpus = constant_per_phone_corpus({{"a", 2.0}, {"b", -3.0}}, 4);
        const StatModel m = train(corpus, {plain("x")}, 100.0);
        for (const auto& st : m.phones.at("a"))
        {
            CHECK(st.streams[0].gaussian.mean(0) == doctest::Approx(2.0).epsilon(1e-12));
        }
        for (const auto& st : m.phones.at("b"))
        {
            CHECK(st.streams[0].gaussian.mean(0) == doctest::Approx(-3.0).epsilon(1e-12));
        }
    }
    SUBCASE("voiced probability is the voiced fraction")
    {
        Matrix f0 = Matrix::Zero(40, 1);
        f0.topRows(20).setConstant(120.0);
        TrainingUtterance utt{"u", segments({{"a", 0.0, 0.1}, {"a", 0.1, 0.2}}), {{"f0", f0}}};
        const StatModel m = train({utt}, {voiced("f0")}, 200.0);
        for (const auto& st : m.phones.at("a"))
        {
            CHECK(st.streams[0].voiced_probability == 0.5);
            CHECK(st.streams[0].gaussian.mean(0) == doctest::Approx(std::log(120.0)));
        }
    }
    SUBCASE("invariants hold on a random corpus")
    {
        auto rng = oracle::make_rng(45);
        std::vector<TrainingUtterance> corpus;
        for (int u = 0; u < 5; ++u)
        {
            TrainingUtterance utt;
            utt.id = "r" + std::to_string(u);
            double t = 0.0;
            for (int k = 0; k < 6; ++k)
            {
                const double len = oracle::uniform(rng, 0.02, 0.12);
                utt.segmentation.entries.push_back({std::string(1, static_cast<char>('a' + rng() % 4)), t, t + len});
                t += len;
            }
            const auto frames = static_cast<Eigen::Index>(std::llround(t * 200.0));
            utt.streams["x"] = oracle::random_matrix(rng, frames, 3);
            Matrix f0 = oracle::random_matrix(rng, frames, 1);
            utt.streams["f0"] = (f0.array() > 0).select(100.0 + 50.0 * f0.array(), 0.0);
            corpus.push_back(utt);
        }
        const StatModel m = train(corpus, {plain("x", 3), voiced("f0")}, 200.0);
        for (const auto& [phone, states] : m.phones)
        {
            for (const auto& st : states)
            {
                CHECK(st.duration_mean >= 1.0);
                for (const auto& cell : st.streams)
                {
                    CHECK(cell.gaussian.variance.minCoeff() >= 1e-6);
                    CHECK(cell.voiced_probability >= 0.0);
                    CHECK(cell.voiced_probability <= 1.0);
                }
            }
        }
        // Accumulation order does not matter beyond rounding.
        std::vector<TrainingUtterance> reversed(corpus.rbegin(), corpus.rend());
        const StatModel r = train(reversed, {plain("x", 3), voiced("f0")}, 200.0);
        for (const auto& [phone, states] : m.phones)
        {
            for (std::size_t s = 0; s < states.size(); ++s)
            {
                for (std::size_t k = 0; k < states[s].streams.size(); ++k)
                {
                    const auto& a = states[s].streams[k].gaussian;
                    const auto& b = r.phones.at(phone)[s].streams[k].gaussian;
                    CHECK((a.mean - b.mean).lpNorm<Eigen::Infinity>() <= 1e-12);
                    CHECK((a.variance - b.variance).lpNorm<Eigen::Infinity>() <= 1e-12);
                }
            }
        }
        const StatModel back = stat_model_from_json(stat_model_to_json(m));
        CHECK(stat_model_to_json(back) == stat_model_to_json(m));
    }
    CHECK_THROWS_AS(train({}, {plain("x")}, 200.0), UsageError);
    TrainingUtterance wide{"w", segments({{"a", 0.0, 0.1}}), {{"x", Matrix::Zero(20, 2)}}};
    CHECK_THROWS_AS(train({wide}, {plain("x")}, 200.0), ShapeError);
}

TEST_CASE("constant-per-phone corpus is reproduced with imposed durations")
{
    // Phone-boundary deltas pull the static track by about floor x jump / delta variance, so the
    // error is a fixed multiple of the floor (about 9x on this corpus) and vanishes with it.
    const std::map<std::string, double> values{{"a", 1.0}, {"b", 0.25}, {"c", -0.5}};
    const auto corpus = constant_per_phone_corpus(values, 6);
    for (double floor : {1e-6, 1e-9})
    {
        TrainOptions opts;
        opts.variance_floor = floor;
        const StatModel m = train(corpus, {plain("x")}, 100.0, opts);
        double worst = 0.0;
        for (const auto& utt : corpus)
        {
            const Synthesis s = synthesize(m, utt.segmentation, DurationMode::imposed);
            const Matrix& x = s.streams.at("x");
            REQUIRE(x.rows() == utt.streams.at("x").rows());
            worst = std::max(worst, (x - utt.streams.at("x")).lpNorm<Eigen::Infinity>());
        }
        INFO("floor ", floor, " worst ", worst);
        CHECK(worst <= 10.0 * floor);
    }
}

TEST_CASE("synthesis")
{
    auto rng = oracle::make_rng(46);
    std::vector<TrainingUtterance> corpus;
    for (int u = 0; u < 4; ++u)
    {
        TrainingUtterance utt;
        utt.id = "s" + std::to_string(u);
        utt.segmentation = segments({{"a", 0.0, 0.1}, {"b", 0.1, 0.25}, {"a", 0.25, 0.3}});
        Matrix x(60, 2);
        for (Eigen::Index t = 0; t < 60; ++t)
        {
            x(t, 0) = std::sin(0.1 * static_cast<double>(t)) + 0.05 * oracle::uniform(rng);
            x(t, 1) = t < 20 ? 1.0 : -1.0;
        }
        utt.streams["x"] = x;
        corpus.push_back(utt);
    }
    const StatModel m = train(corpus, {plain("x", 2)}, 200.0);

    const Synthesis a = synthesize(m, corpus[0].segmentation, DurationMode::imposed);
    const Synthesis b = synthesize(m, corpus[0].segmentation, DurationMode::imposed);
    CHECK(a.streams.at("x") == b.streams.at("x"));
    CHECK(a.streams.at("x").rows() == 60);

    const Synthesis one = synthesize(m, segments({{"b", 0.0, 0.1}}), DurationMode::free);
    std::size_t expected = 0;
    for (const auto& st : m.phones.at("b"))
    {
        expected += static_cast<std::size_t>(std::max<long long>(1, std::llround(st.duration_mean)));
    }
    CHECK(static_cast<std::size_t>(one.streams.at("x").rows()) == expected);
    CHECK(one.timing.entries.size() == 1);
    CHECK(one.timing.end_time() == doctest::Approx(static_cast<double>(expected) / 200.0));

    const auto decoded = streams_from_json(streams_to_json(200.0, a.streams));
    CHECK((decoded.at("x") - a.streams.at("x")).lpNorm<Eigen::Infinity>() == 0.0);

    const auto dir = std::filesystem::temp_directory_path() / "articulate_test_synthesis";
    std::filesystem::create_directories(dir);
    save_stat_model(m, dir / "m.json");
    CHECK(stat_model_to_json(load_stat_model(dir / "m.json")) == stat_model_to_json(m));
    CHECK_THROWS_AS(load_stat_model(dir / "missing.json"), IoError);
    std::filesystem::remove_all(dir);
}
