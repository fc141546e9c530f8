/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: src/model.cpp
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

#include "articulate/model.hpp"
#include "articulate/errors.hpp"
#include "articulate/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>

namespace articulate {

namespace {

ParamStats column_stats(const Matrix& factor)
{
    ParamStats stats;
    const Eigen::Index n = factor.rows();
    stats.mean = factor.colwise().mean().transpose();
    stats.stddev.resize(factor.cols());
    for (Eigen::Index c = 0; c < factor.cols(); ++c)
    {
        const double var = (factor.col(c).array() - stats.mean(c)).square().sum() / static_cast<double>(n);
        stats.stddev(c) = std::sqrt(var);
    }
    return stats;
}

} // namespace

std::size_t MultilinearModel::vertex_for(const std::string& coil) const
{
    for (const auto& cv : correspondence)
    {
        if (cv.coil == coil)
        {
            return cv.vertex;
        }
    }
    throw DataError("model has no vertex correspondence for coil '" + coil + "'");
}

bool operator==(const MultilinearModel& a, const MultilinearModel& b)
{
    return a.core == b.core && a.mean.size() == b.mean.size() && a.mean == b.mean && a.faces == b.faces &&
           a.speaker_stats == b.speaker_stats && a.pose_stats == b.pose_stats && a.correspondence == b.correspondence &&
           a.speaker_ids == b.speaker_ids && a.phone_labels == b.phone_labels;
}

void validate(const MultilinearModel& model)
{
    const auto& d = model.core.dims();
    if (d[0] == 0 || d[1] == 0 || d[2] == 0 || d[2] % 3 != 0)
    {
        throw ShapeError("model core dims must be positive with a third mode divisible by 3");
    }
    if (static_cast<std::size_t>(model.mean.size()) != d[2])
    {
        throw ShapeError("model mean has length " + std::to_string(model.mean.size()) + ", core expects " +
                         std::to_string(d[2]));
    }
    if (static_cast<std::size_t>(model.speaker_stats.size()) != d[0] ||
        static_cast<std::size_t>(model.speaker_stats.stddev.size()) != d[0])
    {
        throw ShapeError("speaker statistics do not match the speaker dimension");
    }
    if (static_cast<std::size_t>(model.pose_stats.size()) != d[1] ||
        static_cast<std::size_t>(model.pose_stats.stddev.size()) != d[1])
    {
        throw ShapeError("pose statistics do not match the pose dimension");
    }
    if ((model.speaker_stats.stddev.array() < 0.0).any() || (model.pose_stats.stddev.array() < 0.0).any())
    {
        throw ShapeError("negative standard deviation in model statistics");
    }
    const std::size_t v = d[2] / 3;
    for (const auto& f : model.faces)
    {
        for (std::size_t idx : f)
        {
            if (idx >= v)
            {
                throw ShapeError("model face references vertex " + std::to_string(idx) + " of " + std::to_string(v));
            }
        }
    }
    for (const auto& cv : model.correspondence)
    {
        if (cv.vertex >= v)
        {
            throw ShapeError("correspondence for coil '" + cv.coil + "' references vertex " +
                             std::to_string(cv.vertex) + " of " + std::to_string(v));
        }
    }
}

BuiltModel build_model(const MeshCorpus& corpus)
{
    validate(corpus);
    const std::size_t m = corpus.speakers.size();
    const std::size_t n = corpus.poses.size();
    const std::size_t len = 3 * corpus.meshes.front().vertices.size();
    if (len == 0)
    {
        throw DataError("corpus meshes have no vertices");
    }

    std::vector<Vector> features;
    features.reserve(corpus.meshes.size());
    for (const auto& mesh : corpus.meshes)
    {
        features.push_back(to_feature_vector(center(mesh).first));
    }
    Vector mean = Vector::Zero(static_cast<Eigen::Index>(len));
    for (const auto& f : features)
    {
        mean += f;
    }
    mean /= static_cast<double>(features.size());

    Tensor3 data(m, n, len);
    for (std::size_t i = 0; i < m; ++i)
    {
        for (std::size_t j = 0; j < n; ++j)
        {
            const Vector& f = features[i * n + j];
            for (std::size_t k = 0; k < len; ++k)
            {
                data(i, j, k) = f(static_cast<Eigen::Index>(k)) - mean(static_cast<Eigen::Index>(k));
            }
        }
    }

    HosvdResult decomposition = hosvd(data);
    BuiltModel built;
    built.model.core = std::move(decomposition.core);
    built.model.mean = std::move(mean);
    built.model.faces = corpus.meshes.front().faces;
    built.model.speaker_stats = column_stats(decomposition.u1);
    built.model.pose_stats = column_stats(decomposition.u2);
    built.model.speaker_ids = corpus.speakers;
    built.model.phone_labels = corpus.poses;
    built.u1 = std::move(decomposition.u1);
    built.u2 = std::move(decomposition.u2);
    return built;
}

Vector generate_positions(const MultilinearModel& model, const Vector& speaker, const Vector& pose)
{
    const auto& d = model.core.dims();
    if (static_cast<std::size_t>(speaker.size()) != d[0] || static_cast<std::size_t>(pose.size()) != d[1])
    {
        throw ShapeError("parameters (" + std::to_string(speaker.size()) + ", " + std::to_string(pose.size()) +
                         ") do not match model dims (" + std::to_string(d[0]) + ", " + std::to_string(d[1]) + ")");
    }
    Vector out = model.mean;
    const double* core = model.core.data().data();
    for (std::size_t a = 0; a < d[0]; ++a)
    {
        for (std::size_t b = 0; b < d[1]; ++b)
        {
            const double w = speaker(static_cast<Eigen::Index>(a)) * pose(static_cast<Eigen::Index>(b));
            if (w == 0.0)
            {
                continue;
            }
            const double* slice = core + (a * d[1] + b) * d[2];
            for (std::size_t k = 0; k < d[2]; ++k)
            {
                out(static_cast<Eigen::Index>(k)) += w * slice[k];
            }
        }
    }
    return out;
}

Mesh generate(const MultilinearModel& model, const ModelParams& params)
{
    return from_feature_vector(generate_positions(model, params.speaker, params.pose), model.faces);
}

MultilinearModel truncate(const MultilinearModel& model, std::size_t speaker_dims, std::size_t pose_dims)
{
    const auto& d = model.core.dims();
    if (speaker_dims < 1 || speaker_dims > d[0] || pose_dims < 1 || pose_dims > d[1])
    {
        throw ShapeError("truncate: requested (" + std::to_string(speaker_dims) + ", " + std::to_string(pose_dims) +
                         ") outside model dims (" + std::to_string(d[0]) + ", " + std::to_string(d[1]) + ")");
    }
    MultilinearModel out = model;
    out.core = Tensor3(speaker_dims, pose_dims, d[2]);
    for (std::size_t a = 0; a < speaker_dims; ++a)
    {
        for (std::size_t b = 0; b < pose_dims; ++b)
        {
            for (std::size_t k = 0; k < d[2]; ++k)
            {
                out.core(a, b, k) = model.core(a, b, k);
            }
        }
    }
    const auto sd = static_cast<Eigen::Index>(speaker_dims);
    const auto pd = static_cast<Eigen::Index>(pose_dims);
    out.speaker_stats.mean = model.speaker_stats.mean.head(sd);
    out.speaker_stats.stddev = model.speaker_stats.stddev.head(sd);
    out.pose_stats.mean = model.pose_stats.mean.head(pd);
    out.pose_stats.stddev = model.pose_stats.stddev.head(pd);
    return out;
}

namespace {

constexpr char magic[] = "MLTM0001";
constexpr std::uint64_t format_version = 1;

class Writer
{
public:
    void u64(std::uint64_t v)
    {
        for (int b = 0; b < 8; ++b)
        {
            out_.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
        }
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s)
    {
        u64(s.size());
        out_ += s;
    }
    void raw(const char* data, std::size_t n) { out_.append(data, n); }
    void vec(const Vector& v)
    {
        u64(static_cast<std::uint64_t>(v.size()));
        for (Eigen::Index i = 0; i < v.size(); ++i)
        {
            f64(v(i));
        }
    }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader
{
public:
    explicit Reader(const std::string& in) : in_(in) {}

    std::uint64_t u64()
    {
        need(8);
        std::uint64_t v = 0;
        for (int b = 0; b < 8; ++b)
        {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + static_cast<std::size_t>(b)]))
                 << (8 * b);
        }
        pos_ += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str()
    {
        const auto n = count(1);
        std::string s = in_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::string raw(std::size_t n)
    {
        need(n);
        std::string s = in_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    Vector vec()
    {
        const auto n = count(8);
        Vector v(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < v.size(); ++i)
        {
            v(i) = f64();
        }
        return v;
    }
    /// Reads an element count and checks that count * element_size bytes remain.
    std::size_t count(std::size_t element_size)
    {
        const auto n = u64();
        if (n > (in_.size() - pos_) / element_size)
        {
            throw IoError("model file truncated");
        }
        return static_cast<std::size_t>(n);
    }
    bool at_end() const { return pos_ == in_.size(); }

private:
    void need(std::size_t n) const
    {
        if (in_.size() - pos_ < n)
        {
            throw IoError("model file truncated");
        }
    }

    const std::string& in_;
    std::size_t pos_ = 0;
};

} // namespace

std::string serialize_model(const MultilinearModel& model)
{
    validate(model);
    Writer w;
    w.raw(magic, 8);
    w.u64(format_version);
    for (auto d : model.core.dims())
    {
        w.u64(d);
    }
    for (double x : model.core.data())
    {
        w.f64(x);
    }
    w.vec(model.mean);
    w.u64(model.faces.size());
    for (const auto& f : model.faces)
    {
        for (auto idx : f)
        {
            w.u64(idx);
        }
    }
    for (const ParamStats* stats : {&model.speaker_stats, &model.pose_stats})
    {
        w.u64(static_cast<std::uint64_t>(stats->size()));
        for (Eigen::Index i = 0; i < stats->size(); ++i)
        {
            w.f64(stats->mean(i));
        }
        for (Eigen::Index i = 0; i < stats->size(); ++i)
        {
            w.f64(stats->stddev(i));
        }
    }
    w.u64(model.correspondence.size());
    for (const auto& cv : model.correspondence)
    {
        w.str(cv.coil);
        w.u64(cv.vertex);
    }
    for (const auto* names : {&model.speaker_ids, &model.phone_labels})
    {
        w.u64(names->size());
        for (const auto& s : *names)
        {
            w.str(s);
        }
    }
    return w.take();
}

MultilinearModel deserialize_model(const std::string& bytes)
{
    if (bytes.size() < 8)
    {
        throw IoError("model file truncated");
    }
    Reader r(bytes);
    if (r.raw(8) != std::string(magic, 8))
    {
        throw FormatError("not a model file (bad magic)");
    }
    if (const auto version = r.u64(); version != format_version)
    {
        throw FormatError("unsupported model file version " + std::to_string(version));
    }
    MultilinearModel model;
    std::array<std::size_t, 3> dims{};
    for (auto& d : dims)
    {
        d = static_cast<std::size_t>(r.u64());
    }
    if (dims[1] != 0 && dims[2] != 0 && dims[0] > bytes.size() / 8 / dims[1] / dims[2])
    {
        throw IoError("model file truncated");
    }
    std::vector<double> core(dims[0] * dims[1] * dims[2]);
    for (auto& x : core)
    {
        x = r.f64();
    }
    model.core = Tensor3(dims, std::move(core));
    model.mean = r.vec();
    model.faces.resize(r.count(24));
    for (auto& f : model.faces)
    {
        for (auto& idx : f)
        {
            idx = static_cast<std::size_t>(r.u64());
        }
    }
    for (ParamStats* stats : {&model.speaker_stats, &model.pose_stats})
    {
        const auto n = static_cast<Eigen::Index>(r.count(16));
        stats->mean.resize(n);
        stats->stddev.resize(n);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            stats->mean(i) = r.f64();
        }
        for (Eigen::Index i = 0; i < n; ++i)
        {
            stats->stddev(i) = r.f64();
        }
    }
    model.correspondence.resize(r.count(16));
    for (auto& cv : model.correspondence)
    {
        cv.coil = r.str();
        cv.vertex = static_cast<std::size_t>(r.u64());
    }
    for (auto* names : {&model.speaker_ids, &model.phone_labels})
    {
        names->resize(r.count(8));
        for (auto& s : *names)
        {
            s = r.str();
        }
    }
    if (!r.at_end())
    {
        throw FormatError("trailing bytes after model data");
    }
    validate(model);
    return model;
}

void save_model(const MultilinearModel& model, const std::filesystem::path& path)
{
    write_text_file(path, serialize_model(model));
}

MultilinearModel load_model(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path))
    {
        throw IoError("model file not found: " + path.string());
    }
    return deserialize_model(read_text_file(path));
}

} // namespace articulate
