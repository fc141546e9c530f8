/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: include/articulate/ema.hpp
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

#include "articulate/io.hpp"
#include "articulate/mesh.hpp"

#include "Eigen/Core"

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace articulate {

/// One EMA coil: T positions in millimetres. Missing samples are NaN until interpolated.
struct EmaChannel
{
    std::string label;
    std::vector<Point3> positions;
    std::vector<double> rms; ///< empty when the recording carries no rms values
};

struct EmaRecording
{
    std::string utterance;
    double frame_rate = 200.0;
    std::vector<EmaChannel> channels;

    std::size_t frame_count() const { return channels.empty() ? 0 : channels.front().positions.size(); }
    bool has_channel(const std::string& label) const;
    /// Throws DataError naming the coil if it is absent.
    const EmaChannel& channel(const std::string& label) const;
};

/// Checks frame rate and equal channel lengths; throws DataError.
void validate(const EmaRecording& rec);

/**
 * Recording JSON:
 *
 *   {"utterance": "u1", "frameRate": 200,
 *    "channels": {"T1": {"position": [[x, y, z], null, [x, null, z], ...]}, ...},
 *    "rms": {"T1": [...], ...}}
 *
 * A null frame or null coordinate marks a missing sample. Channel order follows the file.
 */
EmaRecording recording_from_json(const Json& json);
Json recording_to_json(const EmaRecording& rec);
EmaRecording load_recording(const std::filesystem::path& path);
void save_recording(const EmaRecording& rec, const std::filesystem::path& path);

/// CSV import: header row of `<coil>_x,<coil>_y,<coil>_z` columns, one row per frame, empty cell = missing.
EmaRecording load_recording_csv(const std::filesystem::path& path, double frame_rate, std::string utterance);

/**
 * Fills missing samples per coil and axis by linear interpolation between the nearest valid
 * neighbours; leading and trailing gaps take the nearest valid value. No other filtering.
 * Throws DataError naming the coil if an axis has no valid sample.
 */
EmaRecording interpolate_invalid(const EmaRecording& rec);

/// x' = scale * rotation * x + translation
struct RigidTransform
{
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    double scale = 1.0;
    Point3 translation = Point3::Zero();

    Point3 apply(const Point3& x) const { return scale * (rotation * x) + translation; }
    RigidTransform inverse() const;
};

RigidTransform transform_from_json(const Json& json);
Json transform_to_json(const RigidTransform& t);

/**
 * Moves every channel so the time-mean of the reference coil is the origin, then applies
 * the optional transform.
 */
EmaRecording align_to_reference(const EmaRecording& rec, const std::string& reference_coil,
                                const std::optional<RigidTransform>& transform = std::nullopt);

/// Keeps the requested channels in the requested order.
EmaRecording select_channels(const EmaRecording& rec, const std::vector<std::string>& labels);

struct Segment
{
    std::string phone;
    double start = 0.0; ///< seconds
    double end = 0.0;

    friend bool operator==(const Segment&, const Segment&) = default;
};

/// Time-aligned phone labels; entries are sorted and tile [0, end of last entry].
struct Segmentation
{
    std::vector<Segment> entries;

    std::vector<std::string> phones() const;
    double end_time() const { return entries.empty() ? 0.0 : entries.back().end; }
};

/**
 * Parses `start<TAB>end<TAB>phone` lines (any whitespace accepted, empty lines and `#`
 * comments skipped). Gaps between segments, including one at time zero, are filled with
 * `pause_symbol`. Overlapping or unsorted segments raise ParseError with the line number.
 */
Segmentation parse_labels(std::istream& in, const std::string& pause_symbol = "pau");
Segmentation parse_labels(const std::filesystem::path& path, const std::string& pause_symbol = "pau");
void write_labels(const Segmentation& seg, std::ostream& out);
void save_labels(const Segmentation& seg, const std::filesystem::path& path);

enum class PhoneClass { silence, coronal, dorsal, other };

const char* to_string(PhoneClass c);

/// Label tables used to classify phones.
struct PhoneClassTable
{
    std::set<std::string> silence;
    std::set<std::string> coronal;
    std::set<std::string> dorsal;

    /// Pause symbols {pau, sil, #}; coronal and dorsal sets in IPA plus common ASCII spellings.
    static PhoneClassTable defaults();
    /// JSON override `{"silence": [...], "coronal": [...], "dorsal": [...]}`; absent keys keep defaults.
    static PhoneClassTable from_json(const Json& json);

    PhoneClass classify(const std::string& phone) const;
};

PhoneClass phone_class(const std::string& phone, const PhoneClassTable& table = PhoneClassTable::defaults());

} // namespace articulate
