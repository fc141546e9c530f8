/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: src/ema.cpp
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

#include "articulate/ema.hpp"
#include "articulate/errors.hpp"

#include "Eigen/LU"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace articulate {

namespace {

constexpr double missing = std::numeric_limits<double>::quiet_NaN();
constexpr double time_epsilon = 1e-9;

double coordinate_from_json(const Json& value, const std::string& where)
{
    if (value.is_null())
    {
        return missing;
    }
    if (!value.is_number())
    {
        throw ParseError(where + ": coordinate must be a number or null");
    }
    return value.get<double>();
}

} // namespace

bool EmaRecording::has_channel(const std::string& label) const
{
    for (const auto& c : channels)
    {
        if (c.label == label)
        {
            return true;
        }
    }
    return false;
}

const EmaChannel& EmaRecording::channel(const std::string& label) const
{
    for (const auto& c : channels)
    {
        if (c.label == label)
        {
            return c;
        }
    }
    throw DataError("recording '" + utterance + "' has no coil '" + label + "'");
}

void validate(const EmaRecording& rec)
{
    if (!(rec.frame_rate > 0.0) || !std::isfinite(rec.frame_rate))
    {
        throw DataError("recording '" + rec.utterance + "': frame rate must be positive");
    }
    for (const auto& c : rec.channels)
    {
        if (c.positions.size() != rec.frame_count())
        {
            throw DataError("recording '" + rec.utterance + "': channel '" + c.label + "' has " +
                            std::to_string(c.positions.size()) + " frames, expected " +
                            std::to_string(rec.frame_count()));
        }
        if (!c.rms.empty() && c.rms.size() != c.positions.size())
        {
            throw DataError("recording '" + rec.utterance + "': rms of channel '" + c.label + "' has " +
                            std::to_string(c.rms.size()) + " frames, expected " + std::to_string(c.positions.size()));
        }
    }
}

EmaRecording recording_from_json(const Json& json)
{
    if (!json.is_object())
    {
        throw ParseError("recording: top level must be an object");
    }
    EmaRecording rec;
    if (json.contains("utterance"))
    {
        if (!json["utterance"].is_string())
        {
            throw ParseError("recording: field 'utterance' must be a string");
        }
        rec.utterance = json["utterance"].get<std::string>();
    }
    if (!json.contains("frameRate") || !json["frameRate"].is_number())
    {
        throw ParseError("recording: field 'frameRate' missing or not a number");
    }
    rec.frame_rate = json["frameRate"].get<double>();
    if (!json.contains("channels") || !json["channels"].is_object())
    {
        throw ParseError("recording: field 'channels' missing or not an object");
    }
    for (const auto& [label, channel] : json["channels"].items())
    {
        const std::string where = "recording: field 'channels." + label + ".position'";
        if (!channel.is_object() || !channel.contains("position") || !channel["position"].is_array())
        {
            throw ParseError(where + " missing or not an array");
        }
        EmaChannel c;
        c.label = label;
        for (const auto& frame : channel["position"])
        {
            if (frame.is_null())
            {
                c.positions.emplace_back(missing, missing, missing);
                continue;
            }
            if (!frame.is_array() || frame.size() != 3)
            {
                throw ParseError(where + ": each frame must be [x, y, z] or null");
            }
            c.positions.emplace_back(coordinate_from_json(frame[0], where), coordinate_from_json(frame[1], where),
                                     coordinate_from_json(frame[2], where));
        }
        rec.channels.push_back(std::move(c));
    }
    if (json.contains("rms"))
    {
        if (!json["rms"].is_object())
        {
            throw ParseError("recording: field 'rms' must be an object");
        }
        for (const auto& [label, values] : json["rms"].items())
        {
            bool found = false;
            for (auto& c : rec.channels)
            {
                if (c.label != label)
                {
                    continue;
                }
                found = true;
                if (!values.is_array())
                {
                    throw ParseError("recording: field 'rms." + label + "' must be an array");
                }
                for (const auto& v : values)
                {
                    c.rms.push_back(coordinate_from_json(v, "recording: field 'rms." + label + "'"));
                }
            }
            if (!found)
            {
                throw ParseError("recording: field 'rms." + label + "' names an unknown channel");
            }
        }
    }
    validate(rec);
    return rec;
}

Json recording_to_json(const EmaRecording& rec)
{
    auto number = [](double v) { return std::isnan(v) ? Json(nullptr) : Json(v); };
    Json out;
    out["utterance"] = rec.utterance;
    out["frameRate"] = rec.frame_rate;
    Json channels = Json::object();
    Json rms = Json::object();
    for (const auto& c : rec.channels)
    {
        Json frames = Json::array();
        for (const auto& p : c.positions)
        {
            frames.push_back(Json::array({number(p.x()), number(p.y()), number(p.z())}));
        }
        channels[c.label]["position"] = std::move(frames);
        if (!c.rms.empty())
        {
            Json values = Json::array();
            for (double v : c.rms)
            {
                values.push_back(number(v));
            }
            rms[c.label] = std::move(values);
        }
    }
    out["channels"] = std::move(channels);
    if (!rms.empty())
    {
        out["rms"] = std::move(rms);
    }
    return out;
}

EmaRecording load_recording(const std::filesystem::path& path)
{
    try
    {
        return recording_from_json(read_json_file(path));
    } catch (const ParseError& e)
    {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_recording(const EmaRecording& rec, const std::filesystem::path& path)
{
    write_json_file(path, recording_to_json(rec));
}

EmaRecording load_recording_csv(const std::filesystem::path& path, double frame_rate, std::string utterance)
{
    std::istringstream in(read_text_file(path));
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line))
    {
        throw ParseError(path.string() + ": empty CSV file");
    }
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss(s);
        while (std::getline(ss, cell, ','))
        {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' '))
            {
                cell.pop_back();
            }
            cells.push_back(cell);
        }
        if (!s.empty() && s.back() == ',')
        {
            cells.emplace_back();
        }
        return cells;
    };
    const auto header = split(line);
    EmaRecording rec;
    rec.utterance = std::move(utterance);
    rec.frame_rate = frame_rate;
    // column -> (channel, axis)
    std::vector<std::pair<std::size_t, int>> columns;
    for (const auto& name : header)
    {
        const auto us = name.rfind('_');
        const std::string axis = us == std::string::npos ? "" : name.substr(us + 1);
        if (axis != "x" && axis != "y" && axis != "z")
        {
            throw ParseError(path.string() + ": column '" + name + "' is not <coil>_x|y|z", 1);
        }
        const std::string coil = name.substr(0, us);
        std::size_t idx = rec.channels.size();
        for (std::size_t c = 0; c < rec.channels.size(); ++c)
        {
            if (rec.channels[c].label == coil)
            {
                idx = c;
            }
        }
        if (idx == rec.channels.size())
        {
            rec.channels.push_back({coil, {}, {}});
        }
        columns.emplace_back(idx, axis[0] - 'x');
    }
    while (std::getline(in, line))
    {
        ++line_no;
        if (line.empty() || line == "\r")
        {
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != columns.size())
        {
            throw ParseError(path.string() + ": expected " + std::to_string(columns.size()) + " cells", line_no);
        }
        for (auto& c : rec.channels)
        {
            c.positions.emplace_back(missing, missing, missing);
        }
        for (std::size_t i = 0; i < cells.size(); ++i)
        {
            if (cells[i].empty())
            {
                continue;
            }
            try
            {
                std::size_t used = 0;
                const double v = std::stod(cells[i], &used);
                if (used != cells[i].size())
                {
                    throw std::invalid_argument(cells[i]);
                }
                rec.channels[columns[i].first].positions.back()(columns[i].second) = v;
            } catch (const std::exception&)
            {
                throw ParseError(path.string() + ": bad number '" + cells[i] + "'", line_no);
            }
        }
    }
    validate(rec);
    return rec;
}

EmaRecording interpolate_invalid(const EmaRecording& rec)
{
    validate(rec);
    EmaRecording out = rec;
    for (auto& channel : out.channels)
    {
        const std::size_t n = channel.positions.size();
        for (int axis = 0; axis < 3; ++axis)
        {
            std::vector<std::size_t> valid;
            for (std::size_t t = 0; t < n; ++t)
            {
                if (std::isfinite(channel.positions[t](axis)))
                {
                    valid.push_back(t);
                }
            }
            if (valid.size() == n)
            {
                continue;
            }
            if (valid.empty())
            {
                throw DataError("recording '" + rec.utterance + "': coil '" + channel.label +
                                "' has no valid samples to interpolate from");
            }
            auto value = [&](std::size_t t) { return channel.positions[t](axis); };
            for (std::size_t t = 0; t < valid.front(); ++t)
            {
                channel.positions[t](axis) = value(valid.front());
            }
            for (std::size_t t = valid.back() + 1; t < n; ++t)
            {
                channel.positions[t](axis) = value(valid.back());
            }
            for (std::size_t v = 0; v + 1 < valid.size(); ++v)
            {
                const std::size_t a = valid[v];
                const std::size_t b = valid[v + 1];
                const double ya = value(a);
                const double yb = value(b);
                for (std::size_t t = a + 1; t < b; ++t)
                {
                    const double w = static_cast<double>(t - a) / static_cast<double>(b - a);
                    channel.positions[t](axis) = ya + w * (yb - ya);
                }
            }
        }
        // rms values are diagnostic only; fill them the same way so downstream code never sees NaN.
        if (!channel.rms.empty())
        {
            std::vector<std::size_t> valid;
            for (std::size_t t = 0; t < channel.rms.size(); ++t)
            {
                if (std::isfinite(channel.rms[t]))
                {
                    valid.push_back(t);
                }
            }
            if (valid.empty())
            {
                std::fill(channel.rms.begin(), channel.rms.end(), 0.0);
                continue;
            }
            for (std::size_t t = 0; t < valid.front(); ++t)
            {
                channel.rms[t] = channel.rms[valid.front()];
            }
            for (std::size_t t = valid.back() + 1; t < channel.rms.size(); ++t)
            {
                channel.rms[t] = channel.rms[valid.back()];
            }
            for (std::size_t v = 0; v + 1 < valid.size(); ++v)
            {
                const std::size_t a = valid[v];
                const std::size_t b = valid[v + 1];
                for (std::size_t t = a + 1; t < b; ++t)
                {
                    const double w = static_cast<double>(t - a) / static_cast<double>(b - a);
                    channel.rms[t] = channel.rms[a] + w * (channel.rms[b] - channel.rms[a]);
                }
            }
        }
    }
    return out;
}

RigidTransform RigidTransform::inverse() const
{
    if (scale == 0.0)
    {
        throw NumericError("cannot invert a transform with zero scale");
    }
    RigidTransform inv;
    inv.rotation = rotation.inverse();
    inv.scale = 1.0 / scale;
    inv.translation = -inv.scale * (inv.rotation * translation);
    return inv;
}

RigidTransform transform_from_json(const Json& json)
{
    RigidTransform t;
    if (json.contains("rotation"))
    {
        const Matrix r = matrix_from_json(json["rotation"], "transform.rotation");
        if (r.rows() != 3 || r.cols() != 3)
        {
            throw ParseError("transform.rotation must be 3x3");
        }
        t.rotation = r;
        const double orthogonality = (t.rotation.transpose() * t.rotation - Eigen::Matrix3d::Identity()).norm();
        if (orthogonality > 1e-6 || t.rotation.determinant() < 0.0)
        {
            throw DataError("transform.rotation is not a proper rotation matrix");
        }
    }
    if (json.contains("scale"))
    {
        t.scale = json["scale"].get<double>();
        if (!(t.scale > 0.0))
        {
            throw DataError("transform.scale must be positive");
        }
    }
    if (json.contains("translation"))
    {
        const Vector v = vector_from_json(json["translation"], "transform.translation");
        if (v.size() != 3)
        {
            throw ParseError("transform.translation must have three entries");
        }
        t.translation = v;
    }
    return t;
}

Json transform_to_json(const RigidTransform& t)
{
    Json out;
    out["rotation"] = matrix_to_json(t.rotation);
    out["scale"] = t.scale;
    out["translation"] = vector_to_json(t.translation);
    return out;
}

EmaRecording align_to_reference(const EmaRecording& rec, const std::string& reference_coil,
                                const std::optional<RigidTransform>& transform)
{
    validate(rec);
    const EmaChannel& ref = rec.channel(reference_coil);
    if (ref.positions.empty())
    {
        throw DataError("recording '" + rec.utterance + "' has no frames");
    }
    Point3 origin = Point3::Zero();
    for (const auto& p : ref.positions)
    {
        origin += p;
    }
    origin /= static_cast<double>(ref.positions.size());
    if (!origin.allFinite())
    {
        throw DataError("reference coil '" + reference_coil + "' has missing samples; interpolate first");
    }
    EmaRecording out = rec;
    for (auto& channel : out.channels)
    {
        for (auto& p : channel.positions)
        {
            p -= origin;
            if (transform)
            {
                p = transform->apply(p);
            }
        }
    }
    return out;
}

EmaRecording select_channels(const EmaRecording& rec, const std::vector<std::string>& labels)
{
    EmaRecording out;
    out.utterance = rec.utterance;
    out.frame_rate = rec.frame_rate;
    for (const auto& label : labels)
    {
        out.channels.push_back(rec.channel(label));
    }
    return out;
}

std::vector<std::string> Segmentation::phones() const
{
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto& e : entries)
    {
        out.push_back(e.phone);
    }
    return out;
}

Segmentation parse_labels(std::istream& in, const std::string& pause_symbol)
{
    Segmentation seg;
    std::string raw;
    std::size_t line_no = 0;
    double previous_end = 0.0;
    while (std::getline(in, raw))
    {
        ++line_no;
        if (const auto hash = raw.find('#'); hash != std::string::npos && raw.find_first_not_of(" \t") == hash)
        {
            continue;
        }
        std::istringstream line(raw);
        double start = 0.0;
        double end = 0.0;
        std::string phone;
        if (!(line >> start))
        {
            if (raw.find_first_not_of(" \t\r") == std::string::npos)
            {
                continue;
            }
            throw ParseError("expected 'start end phone'", line_no);
        }
        if (!(line >> end >> phone))
        {
            throw ParseError("expected 'start end phone'", line_no);
        }
        std::string extra;
        if (line >> extra)
        {
            throw ParseError("unexpected trailing field '" + extra + "'", line_no);
        }
        if (!(start >= 0.0) || !(end > start))
        {
            throw ParseError("segment needs 0 <= start < end", line_no);
        }
        if (start < previous_end - time_epsilon)
        {
            throw ParseError("segment starting at " + std::to_string(start) + " overlaps the previous segment", line_no);
        }
        if (start > previous_end + time_epsilon)
        {
            seg.entries.push_back({pause_symbol, previous_end, start});
        }
        else
        {
            start = previous_end;
        }
        seg.entries.push_back({phone, start, end});
        previous_end = end;
    }
    return seg;
}

Segmentation parse_labels(const std::filesystem::path& path, const std::string& pause_symbol)
{
    std::istringstream in(read_text_file(path));
    try
    {
        return parse_labels(in, pause_symbol);
    } catch (const ParseError& e)
    {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_labels(const Segmentation& seg, std::ostream& out)
{
    char buffer[64];
    for (const auto& e : seg.entries)
    {
        std::snprintf(buffer, sizeof(buffer), "%.6f\t%.6f\t", e.start, e.end);
        out << buffer << e.phone << '\n';
    }
}

void save_labels(const Segmentation& seg, const std::filesystem::path& path)
{
    std::ostringstream out;
    write_labels(seg, out);
    write_text_file(path, out.str());
}

const char* to_string(PhoneClass c)
{
    switch (c)
    {
    case PhoneClass::silence:
        return "silence";
    case PhoneClass::coronal:
        return "coronal";
    case PhoneClass::dorsal:
        return "dorsal";
    default:
        return "other";
    }
}

PhoneClassTable PhoneClassTable::defaults()
{
    PhoneClassTable t;
    t.silence = {"pau", "sil", "#"};
    t.coronal = {"t", "d", "n", "l", "s", "z", "ʃ", "ʒ", "θ", "ð", "S", "Z", "T", "D", "sh", "zh", "th", "dh"};
    t.dorsal = {"g", "k", "ŋ", "N", "ng"};
    return t;
}

PhoneClassTable PhoneClassTable::from_json(const Json& json)
{
    PhoneClassTable t = defaults();
    auto read = [&json](const char* key, std::set<std::string>& target) {
        if (json.contains(key))
        {
            try
            {
                const auto values = json[key].get<std::vector<std::string>>();
                target = std::set<std::string>(values.begin(), values.end());
            } catch (const nlohmann::json::exception&)
            {
                throw ParseError(std::string("phone class table: field '") + key + "' must be a list of strings");
            }
        }
    };
    read("silence", t.silence);
    read("coronal", t.coronal);
    read("dorsal", t.dorsal);
    return t;
}

PhoneClass PhoneClassTable::classify(const std::string& phone) const
{
    if (silence.count(phone))
    {
        return PhoneClass::silence;
    }
    if (coronal.count(phone))
    {
        return PhoneClass::coronal;
    }
    if (dorsal.count(phone))
    {
        return PhoneClass::dorsal;
    }
    return PhoneClass::other;
}

PhoneClass phone_class(const std::string& phone, const PhoneClassTable& table)
{
    return table.classify(phone);
}

} // namespace articulate
