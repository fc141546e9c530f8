/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: tests/test_ema.cpp
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

#include "articulate/ema.hpp"
#include "articulate/errors.hpp"
#include "oracles.hpp"

#include "Eigen/Geometry"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace articulate;

namespace {

constexpr double NaN = std::numeric_limits<double>::quiet_NaN();

EmaRecording one_axis(const std::vector<double>& xs)
{
    EmaRecording rec;
    rec.utterance = "u";
    EmaChannel c;
    c.label = "T1";
    for (double x : xs)
    {
        c.positions.emplace_back(x, 0.0, 0.0);
    }
    rec.channels.push_back(c);
    return rec;
}

std::vector<double> xs_of(const EmaRecording& rec)
{
    std::vector<double> out;
    for (const auto& p : rec.channels.front().positions)
    {
        out.push_back(p.x());
    }
    return out;
}

Segmentation labels(const std::string& text)
{
    std::istringstream in(text);
    return parse_labels(in);
}

} // namespace

TEST_CASE("recording JSON with missing samples")
{
    const Json j = Json::parse(R"({"utterance": "u1", "frameRate": 100,
        "channels": {"T2": {"position": [[1, 2, 3], null, [4, null, 6]]},
                     "T1": {"position": [[0, 0, 0], [1, 1, 1], [2, 2, 2]]}},
        "rms": {"T1": [0.1, 0.2, null]}})");
    const EmaRecording rec = recording_from_json(j);
    CHECK(rec.utterance == "u1");
    CHECK(rec.frame_rate == 100.0);
    CHECK(rec.frame_count() == 3);
    REQUIRE(rec.has_channel("T2"));
    const auto& t2 = rec.channel("T2");
    CHECK(t2.positions[0] == Point3(1, 2, 3));
    CHECK(std::isnan(t2.positions[1].x()));
    CHECK(t2.positions[2].x() == 4.0);
    CHECK(std::isnan(t2.positions[2].y()));
    CHECK(rec.channel("T1").rms.size() == 3);
    CHECK_THROWS_AS(rec.channel("T9"), DataError);

    const EmaRecording back = recording_from_json(recording_to_json(rec));
    CHECK(back.channels.size() == rec.channels.size());
    CHECK(back.channel("T1").positions[2] == Point3(2, 2, 2));
    CHECK(std::isnan(back.channel("T2").positions[1].z()));
}

TEST_CASE("malformed recordings")
{
    CHECK_THROWS_AS(recording_from_json(Json::parse(R"({"channels": {}})")), ParseError);
    CHECK_THROWS_AS(recording_from_json(Json::parse(R"({"frameRate": 200, "channels": {"T1": {"position": [[1, 2]]}}})")),
                    ParseError);
    CHECK_THROWS_AS(recording_from_json(Json::parse(
        R"({"frameRate": 200, "channels": {"T1": {"position": [[1, 2, 3]]}, "T2": {"position": [[1, 2, 3], [4, 5, 6]]}}})")),
                    DataError);
    CHECK_THROWS_AS(load_recording("/nonexistent/rec.json"), IoError);
}

TEST_CASE("CSV import")
{
    const auto dir = std::filesystem::temp_directory_path() / "articulate_test_ema_csv";
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "r.csv");
        out << "T1_x,T1_y,T1_z,ref_x,ref_y,ref_z\n1,2,3,0,0,0\n4,,6,0,0,1\n";
    }
    const EmaRecording rec = load_recording_csv(dir / "r.csv", 250.0, "csv");
    CHECK(rec.frame_rate == 250.0);
    CHECK(rec.frame_count() == 2);
    CHECK(rec.channel("T1").positions[0] == Point3(1, 2, 3));
    CHECK(std::isnan(rec.channel("T1").positions[1].y()));
    CHECK(rec.channel("ref").positions[1].z() == 1.0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("interpolation of missing samples")
{
    CHECK(xs_of(interpolate_invalid(one_axis({1, NaN, 3}))) == std::vector<double>{1, 2, 3});
    CHECK(xs_of(interpolate_invalid(one_axis({NaN, NaN, 5}))) == std::vector<double>{5, 5, 5});
    CHECK(xs_of(interpolate_invalid(one_axis({2, NaN, NaN}))) == std::vector<double>{2, 2, 2});
    CHECK(xs_of(interpolate_invalid(one_axis({0, NaN, NaN, NaN, 8}))) == std::vector<double>{0, 2, 4, 6, 8});
    CHECK_THROWS_AS(interpolate_invalid(one_axis({NaN, NaN})), DataError);

    SUBCASE("a sampled ramp with random holes is reconstructed")
    {
        auto rng = oracle::make_rng(11);
        std::vector<double> xs(200);
        for (std::size_t t = 0; t < xs.size(); ++t)
        {
            xs[t] = 0.5 * static_cast<double>(t) - 7.0;
        }
        std::vector<double> holes = xs;
        for (std::size_t t = 1; t + 1 < holes.size(); ++t)
        {
            if (oracle::uniform(rng, 0, 1) < 0.3)
            {
                holes[t] = NaN;
            }
        }
        const auto filled = xs_of(interpolate_invalid(one_axis(holes)));
        for (std::size_t t = 0; t < xs.size(); ++t)
        {
            CHECK(filled[t] == doctest::Approx(xs[t]).epsilon(1e-12));
        }
    }
    SUBCASE("valid samples are untouched and axes are independent")
    {
        EmaRecording rec = one_axis({1, 2, 3});
        rec.channels[0].positions[1].y() = NaN;
        rec.channels[0].positions[0].y() = 4;
        rec.channels[0].positions[2].y() = 8;
        const auto out = interpolate_invalid(rec);
        CHECK(out.channels[0].positions[1] == Point3(2, 6, 0));
    }
}

TEST_CASE("alignment to the reference coil")
{
    EmaRecording rec;
    rec.utterance = "u";
    EmaChannel ref{"ref", {{10, 0, 0}, {10, 0, 0}, {10, 0, 0}}, {}};
    EmaChannel t1{"T1", {{11, 1, 0}, {12, 2, 0}, {13, 3, 0}}, {}};
    rec.channels = {t1, ref};
    const EmaRecording out = align_to_reference(rec, "ref");
    for (const auto& p : out.channel("ref").positions)
    {
        CHECK(p.norm() == 0.0);
    }
    CHECK(out.channel("T1").positions[1] == Point3(2, 2, 0));

    SUBCASE("the reference mean becomes the origin for a moving reference")
    {
        EmaRecording moving = rec;
        moving.channels[1].positions = {{0, 0, 0}, {3, 3, 3}, {6, -3, 0}};
        const auto aligned = align_to_reference(moving, "ref");
        Point3 mean = Point3::Zero();
        for (const auto& p : aligned.channel("ref").positions)
        {
            mean += p / 3.0;
        }
        CHECK(mean.norm() <= 1e-12);
    }
    SUBCASE("an optional transform is applied after centring and inverts cleanly")
    {
        RigidTransform t;
        t.rotation = Eigen::AngleAxisd(0.3, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
        t.scale = 1.5;
        t.translation = Point3(1, -2, 3);
        const auto moved = align_to_reference(rec, "ref", t);
        const RigidTransform inv = t.inverse();
        for (std::size_t f = 0; f < 3; ++f)
        {
            CHECK((inv.apply(moved.channel("T1").positions[f]) - out.channel("T1").positions[f]).norm() <= 1e-12);
        }
        const RigidTransform parsed = transform_from_json(transform_to_json(t));
        CHECK((parsed.rotation - t.rotation).norm() <= 1e-15);
        CHECK(parsed.scale == t.scale);
    }
    CHECK_THROWS_AS(align_to_reference(rec, "missing"), DataError);
}

TEST_CASE("channel selection keeps the requested order")
{
    EmaRecording rec = one_axis({1, 2});
    rec.channels.push_back({"T2", {{0, 0, 0}, {0, 0, 1}}, {}});
    rec.channels.push_back({"T3", {{0, 1, 0}, {0, 0, 2}}, {}});
    const auto out = select_channels(rec, {"T3", "T1"});
    REQUIRE(out.channels.size() == 2);
    CHECK(out.channels[0].label == "T3");
    CHECK(out.channels[1].label == "T1");
    CHECK_THROWS_AS(select_channels(rec, {"T4"}), DataError);
}

TEST_CASE("label files")
{
    SUBCASE("contiguous segments with comments and blank lines")
    {
        const auto seg = labels("# header\n0.0\t0.1\tpau\n\n0.1 0.25 a\n0.25\t0.3\tt\n");
        CHECK(seg.entries == std::vector<Segment>{{"pau", 0.0, 0.1}, {"a", 0.1, 0.25}, {"t", 0.25, 0.3}});
        CHECK(seg.end_time() == 0.3);
        CHECK(seg.phones() == std::vector<std::string>{"pau", "a", "t"});
    }
    SUBCASE("gaps, including one at time zero, become pauses")
    {
        const auto seg = labels("0.1\t0.2\ta\n0.3\t0.4\tk\n");
        CHECK(seg.entries ==
              std::vector<Segment>{{"pau", 0.0, 0.1}, {"a", 0.1, 0.2}, {"pau", 0.2, 0.3}, {"k", 0.3, 0.4}});
    }
    SUBCASE("overlaps and malformed lines report the line number")
    {
        CHECK_THROWS_WITH_AS(labels("0 0.2 a\n0.1 0.3 b\n"), doctest::Contains("line 2"), ParseError);
        CHECK_THROWS_WITH_AS(labels("0 0.2 a\n0.2 x b\n"), doctest::Contains("line 2"), ParseError);
        CHECK_THROWS_AS(labels("0.2 0.1 a\n"), ParseError);
    }
    SUBCASE("write then parse round trips")
    {
        const auto seg = labels("0 0.125 a\n0.125 0.5 s\n");
        std::ostringstream out;
        write_labels(seg, out);
        CHECK(labels(out.str()).entries == seg.entries);
    }
}

TEST_CASE("phone classes")
{
    CHECK(phone_class("t") == PhoneClass::coronal);
    CHECK(phone_class("k") == PhoneClass::dorsal);
    CHECK(phone_class("a") == PhoneClass::other);
    CHECK(phone_class("pau") == PhoneClass::silence);
    CHECK(phone_class("sil") == PhoneClass::silence);
    const auto table = PhoneClassTable::from_json(Json::parse(R"({"dorsal": ["x"]})"));
    CHECK(table.classify("x") == PhoneClass::dorsal);
    CHECK(table.classify("k") == PhoneClass::other);
    CHECK(table.classify("t") == PhoneClass::coronal);
    CHECK(std::string(to_string(PhoneClass::coronal)) == "coronal");
}
