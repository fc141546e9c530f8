/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: src/synthetic.cpp
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

#include "articulate/synthetic.hpp"
#include "articulate/errors.hpp"
#include "articulate/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

namespace articulate {

namespace {

// Seeded generator with portable uniform and normal draws (the standard distributions are
// implementation-defined, which would break cross-platform reproducibility).
class Rng
{
public:
    Rng(std::uint64_t seed, std::uint32_t stream)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                          stream};
        engine_.seed(seq);
    }

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::size_t index(std::size_t lo, std::size_t hi) ///< inclusive range
    {
        return lo + static_cast<std::size_t>(uniform() * static_cast<double>(hi - lo + 1));
    }
    double normal()
    {
        if (spare_)
        {
            const double v = *spare_;
            spare_.reset();
            return v;
        }
        double u = uniform();
        while (u <= 0.0)
        {
            u = uniform();
        }
        const double r = std::sqrt(-2.0 * std::log(u));
        const double phi = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(phi);
        return r * std::cos(phi);
    }

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

constexpr double radius_x = 25.0;
constexpr double radius_y = 15.0;
constexpr double radius_z = 12.0;

Point3 speaker_warp(const Point3& v, const Eigen::Vector3d& scale, double hump, double width)
{
    const double u = v.x() / radius_x;
    const double w = v.y() / radius_y;
    Point3 out = scale.cwiseProduct(v);
    out.z() += hump * u * u;
    out.x() += width * w * w;
    return out;
}

Point3 pose_displacement(const Point3& v, const Eigen::Vector4d& q)
{
    const double u = v.x() / radius_x;
    const double w = v.y() / radius_y;
    const double top = 0.5 * (1.0 + v.z() / radius_z);
    const double front = std::max(0.0, u);
    Point3 d = Point3::Zero();
    d.z() += q(0) * 6.0 * front * front;                                  // tip raise
    d.z() += q(1) * 5.0 * std::exp(-(u + 0.1) * (u + 0.1) / 0.15) * top; // dorsum raise
    d.x() += q(2) * -4.0 * top;                                           // retraction
    d.y() += q(3) * 3.0 * w * 0.5 * (u + 1.0);                            // lateral spread
    d.z() += q(3) * -2.0 * w * w * top;
    return d;
}

// Gaussian smoothing along time with edge replication.
Matrix smooth(const Matrix& x, double sigma)
{
    if (sigma <= 0.0 || x.rows() == 0)
    {
        return x;
    }
    const auto reach = static_cast<Eigen::Index>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * reach + 1));
    double total = 0.0;
    for (Eigen::Index o = -reach; o <= reach; ++o)
    {
        const double k = std::exp(-0.5 * static_cast<double>(o * o) / (sigma * sigma));
        kernel[static_cast<std::size_t>(o + reach)] = k;
        total += k;
    }
    Matrix out = Matrix::Zero(x.rows(), x.cols());
    for (Eigen::Index t = 0; t < x.rows(); ++t)
    {
        for (Eigen::Index o = -reach; o <= reach; ++o)
        {
            const Eigen::Index src = std::clamp<Eigen::Index>(t + o, 0, x.rows() - 1);
            out.row(t) += kernel[static_cast<std::size_t>(o + reach)] / total * x.row(src);
        }
    }
    return out;
}

Matrix filtered_noise(Rng& rng, Eigen::Index frames, Eigen::Index dims, double sigma_frames, double amplitude)
{
    Matrix white(frames, dims);
    for (Eigen::Index t = 0; t < frames; ++t)
    {
        for (Eigen::Index d = 0; d < dims; ++d)
        {
            white(t, d) = rng.normal();
        }
    }
    Matrix out = smooth(white, 2.0 * sigma_frames);
    // Rescale so the filtered process has roughly unit variance per dimension.
    const double gain = std::sqrt(2.0 * std::sqrt(std::numbers::pi) * 2.0 * std::max(sigma_frames, 0.5));
    return out * gain * amplitude;
}

std::size_t pick_vertex(const Vector& positions, std::size_t vertices, const Point3& goal)
{
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < vertices; ++v)
    {
        const Point3 x = positions.segment<3>(static_cast<Eigen::Index>(3 * v));
        if (x.z() <= 0.0)
        {
            continue;
        }
        const double d = (x - goal).squaredNorm();
        if (d < best_d)
        {
            best_d = d;
            best = v;
        }
    }
    return best;
}

std::string utterance_id(std::size_t i)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "utt%03zu", i);
    return buf;
}

} // namespace

SyntheticConfig synthetic_config_from_json(const Json& json, SyntheticConfig d)
{
    if (!json.is_object())
    {
        throw ParseError("synthetic corpus config must be an object");
    }
    try
    {
        d.seed = json.value("seed", d.seed);
        d.speakers = json.value("speakers", d.speakers);
        d.poses = json.value("poses", d.poses);
        d.rings = json.value("rings", d.rings);
        d.segments = json.value("segments", d.segments);
        d.utterances = json.value("utterances", d.utterances);
        d.phones = json.value("phones", d.phones);
        d.voiced_phones = json.value("voicedPhones", d.voiced_phones);
        d.frame_rate = json.value("frameRate", d.frame_rate);
        d.min_phone_frames = json.value("minPhoneFrames", d.min_phone_frames);
        d.max_phone_frames = json.value("maxPhoneFrames", d.max_phone_frames);
        d.min_phones = json.value("minPhones", d.min_phones);
        d.max_phones = json.value("maxPhones", d.max_phones);
        d.target_spread = json.value("targetSpread", d.target_spread);
        d.pose_noise = json.value("poseNoise", d.pose_noise);
        d.smoothing_frames = json.value("smoothingFrames", d.smoothing_frames);
        d.jitter_mm = json.value("jitterMm", d.jitter_mm);
        d.missing_rate = json.value("missingRate", d.missing_rate);
        d.mgc_order = json.value("mgcOrder", d.mgc_order);
        d.test_fraction = json.value("testFraction", d.test_fraction);
    } catch (const nlohmann::json::exception& e)
    {
        throw ParseError(std::string("synthetic corpus config: ") + e.what());
    }
    return d;
}

Json synthetic_config_to_json(const SyntheticConfig& c)
{
    Json j;
    j["seed"] = c.seed;
    j["speakers"] = c.speakers;
    j["poses"] = c.poses;
    j["rings"] = c.rings;
    j["segments"] = c.segments;
    j["utterances"] = c.utterances;
    j["phones"] = c.phones;
    j["voicedPhones"] = c.voiced_phones;
    j["frameRate"] = c.frame_rate;
    j["minPhoneFrames"] = c.min_phone_frames;
    j["maxPhoneFrames"] = c.max_phone_frames;
    j["minPhones"] = c.min_phones;
    j["maxPhones"] = c.max_phones;
    j["targetSpread"] = c.target_spread;
    j["poseNoise"] = c.pose_noise;
    j["smoothingFrames"] = c.smoothing_frames;
    j["jitterMm"] = c.jitter_mm;
    j["missingRate"] = c.missing_rate;
    j["mgcOrder"] = c.mgc_order;
    j["testFraction"] = c.test_fraction;
    return j;
}

double SyntheticCorpus::oracle_error_mm() const
{
    if (utterances.empty())
    {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto& u : utterances)
    {
        sum += u.oracle_error_mm;
    }
    return sum / static_cast<double>(utterances.size());
}

Mesh tongue_mesh(std::size_t rings, std::size_t segments)
{
    if (rings < 2 || segments < 3)
    {
        throw UsageError("tongue mesh needs at least 2 rings and 3 segments");
    }
    Mesh mesh;
    mesh.vertices.push_back({radius_x, 0.0, 0.0});
    for (std::size_t r = 0; r < rings; ++r)
    {
        const double theta = std::numbers::pi * static_cast<double>(r + 1) / static_cast<double>(rings + 1);
        for (std::size_t s = 0; s < segments; ++s)
        {
            const double phi = 2.0 * std::numbers::pi * static_cast<double>(s) / static_cast<double>(segments);
            mesh.vertices.push_back({radius_x * std::cos(theta), radius_y * std::sin(theta) * std::cos(phi),
                                     radius_z * std::sin(theta) * std::sin(phi)});
        }
    }
    mesh.vertices.push_back({-radius_x, 0.0, 0.0});
    const std::size_t last = mesh.vertices.size() - 1;
    auto ring_vertex = [&](std::size_t r, std::size_t s) { return 1 + r * segments + (s % segments); };
    for (std::size_t s = 0; s < segments; ++s)
    {
        mesh.faces.push_back({0, ring_vertex(0, s + 1), ring_vertex(0, s)});
    }
    for (std::size_t r = 0; r + 1 < rings; ++r)
    {
        for (std::size_t s = 0; s < segments; ++s)
        {
            mesh.faces.push_back({ring_vertex(r, s), ring_vertex(r, s + 1), ring_vertex(r + 1, s)});
            mesh.faces.push_back({ring_vertex(r, s + 1), ring_vertex(r + 1, s + 1), ring_vertex(r + 1, s)});
        }
    }
    for (std::size_t s = 0; s < segments; ++s)
    {
        mesh.faces.push_back({last, ring_vertex(rings - 1, s), ring_vertex(rings - 1, s + 1)});
    }
    return mesh;
}

SyntheticCorpus make_synthetic_corpus(const SyntheticConfig& config)
{
    if (config.speakers < 2 || config.poses < 2)
    {
        throw UsageError("synthetic corpus needs at least 2 speakers and 2 poses");
    }
    if (config.phones.empty() || config.utterances == 0)
    {
        throw UsageError("synthetic corpus needs phones and utterances");
    }
    if (config.min_phone_frames < 5 || config.max_phone_frames < config.min_phone_frames ||
        config.max_phones < config.min_phones || config.min_phones == 0)
    {
        throw UsageError("synthetic corpus: invalid phone length or count range");
    }
    if (!(config.frame_rate > 0.0) || config.mgc_order < 2)
    {
        throw UsageError("synthetic corpus: frame rate must be positive and mgc order at least 2");
    }

    SyntheticCorpus out;
    const Mesh base = tongue_mesh(config.rings, config.segments);

    // Mesh grid: pose displacement first, then a nonlinear speaker warp.
    Rng grid_rng(config.seed, 1);
    std::vector<std::tuple<Eigen::Vector3d, double, double>> speakers;
    for (std::size_t i = 0; i < config.speakers; ++i)
    {
        const Eigen::Vector3d scale(grid_rng.uniform(0.85, 1.15), grid_rng.uniform(0.85, 1.15),
                                    grid_rng.uniform(0.85, 1.15));
        speakers.emplace_back(scale, grid_rng.uniform(-3.0, 3.0), grid_rng.uniform(-3.0, 3.0));
    }
    std::vector<Eigen::Vector4d> poses;
    for (std::size_t j = 0; j < config.poses; ++j)
    {
        poses.emplace_back(grid_rng.normal(), grid_rng.normal(), grid_rng.normal(), grid_rng.normal());
    }
    for (std::size_t i = 0; i < config.speakers; ++i)
    {
        out.meshes.speakers.push_back("spk" + std::to_string(i + 1));
    }
    for (std::size_t j = 0; j < config.poses; ++j)
    {
        out.meshes.poses.push_back("pose" + std::to_string(j + 1));
    }
    for (std::size_t i = 0; i < config.speakers; ++i)
    {
        const auto& [scale, hump, width] = speakers[i];
        for (std::size_t j = 0; j < config.poses; ++j)
        {
            Mesh m = base;
            for (auto& v : m.vertices)
            {
                v = speaker_warp(v + pose_displacement(v, poses[j]), scale, hump, width);
            }
            out.meshes.meshes.push_back(std::move(m));
        }
    }
    BuiltModel built = build_model(out.meshes);
    MultilinearModel& model = built.model;

    // Ground-truth speaker and phone targets inside the one-sigma and spread boxes.
    Rng param_rng(config.seed, 2);
    out.speaker = model.speaker_stats.mean;
    for (Eigen::Index k = 0; k < out.speaker.size(); ++k)
    {
        out.speaker(k) += param_rng.uniform(-1.0, 1.0) * model.speaker_stats.stddev(k);
    }
    const std::string pause = "pau";
    out.phone_targets[pause] = model.pose_stats.mean;
    for (const auto& phone : config.phones)
    {
        Vector p = model.pose_stats.mean;
        for (Eigen::Index k = 0; k < p.size(); ++k)
        {
            p(k) += param_rng.uniform(-config.target_spread, config.target_spread) * model.pose_stats.stddev(k);
        }
        out.phone_targets[phone] = p;
    }

    // Planted coils along the upper surface, front to back.
    const Vector mean_positions = generate_positions(model, out.speaker, model.pose_stats.mean);
    const std::size_t vertex_count = model.vertex_count();
    const double goals[3] = {0.6, 0.1, -0.4};
    for (std::size_t c = 0; c < 3; ++c)
    {
        const Point3 goal(goals[c] * radius_x + param_rng.uniform(-0.1, 0.1) * radius_x,
                          param_rng.uniform(-0.2, 0.2) * radius_y, radius_z);
        std::size_t v = pick_vertex(mean_positions, vertex_count, goal);
        while (std::any_of(out.correspondence.begin(), out.correspondence.end(),
                           [v](const CoilVertex& cv) { return cv.vertex == v; }))
        {
            v = (v + 1) % vertex_count;
        }
        out.correspondence.push_back({tongue_coils()[c], v});
    }
    model.correspondence = out.correspondence;
    model.phone_labels = config.phones;
    model.phone_labels.push_back(pause);
    out.model = model;
    out.reference_offset = Point3(0.0, 0.0, 40.0);

    const Eigen::Index pose_dims = model.pose_stats.size();
    Vector pose_lo = model.pose_stats.lower(1.9);
    Vector pose_hi = model.pose_stats.upper(1.9);
    const Point3 upper_lip(35.0, 0.0, 10.0);
    const Point3 lower_lip(33.0, 0.0, -8.0);
    const Point3 jaw(20.0, 0.0, -20.0);

    // Per-phone cepstral targets, shared by every utterance.
    const auto order = static_cast<Eigen::Index>(config.mgc_order);
    std::map<std::string, Vector> mgc_by_phone;
    {
        Rng mgc_rng(config.seed, 3);
        for (const auto& [phone, target] : out.phone_targets)
        {
            Vector m(order);
            for (Eigen::Index k = 0; k < order; ++k)
            {
                m(k) = mgc_rng.normal() * (k == 0 ? 2.0 : 1.0 / static_cast<double>(k));
            }
            mgc_by_phone[phone] = m;
        }
    }

    for (std::size_t u = 0; u < config.utterances; ++u)
    {
        Rng rng(config.seed, static_cast<std::uint32_t>(100 + u));
        SyntheticUtterance utt;
        utt.id = utterance_id(u);

        // Phone sequence framed by pauses, no immediate repeats.
        std::vector<std::string> phones{pause};
        const std::size_t n = rng.index(config.min_phones, config.max_phones);
        for (std::size_t k = 0; k < n; ++k)
        {
            std::string p = config.phones[rng.index(0, config.phones.size() - 1)];
            while (config.phones.size() > 1 && p == phones.back())
            {
                p = config.phones[rng.index(0, config.phones.size() - 1)];
            }
            phones.push_back(p);
        }
        phones.push_back(pause);
        std::vector<std::size_t> frames;
        for (const auto& p : phones)
        {
            frames.push_back(p == pause ? rng.index(config.min_phone_frames + 2, config.max_phone_frames)
                                        : rng.index(config.min_phone_frames, config.max_phone_frames));
        }
        std::size_t total = 0;
        std::vector<std::size_t> phone_of_frame;
        for (std::size_t k = 0; k < phones.size(); ++k)
        {
            utt.labels.entries.push_back({phones[k], static_cast<double>(total) / config.frame_rate,
                                          static_cast<double>(total + frames[k]) / config.frame_rate});
            phone_of_frame.insert(phone_of_frame.end(), frames[k], k);
            total += frames[k];
        }
        const auto T = static_cast<Eigen::Index>(total);

        // Pose trajectory: smoothed phone targets plus filtered noise, kept inside the 1.9-sigma box.
        Matrix targets(T, pose_dims);
        for (Eigen::Index t = 0; t < T; ++t)
        {
            targets.row(t) = out.phone_targets.at(phones[phone_of_frame[static_cast<std::size_t>(t)]]).transpose();
        }
        Matrix pose = smooth(targets, config.smoothing_frames);
        const Matrix noise = filtered_noise(rng, T, pose_dims, config.smoothing_frames, config.pose_noise);
        for (Eigen::Index t = 0; t < T; ++t)
        {
            Vector p = pose.row(t).transpose() + noise.row(t).transpose().cwiseProduct(model.pose_stats.stddev);
            utt.poses.push_back(p.cwiseMax(pose_lo).cwiseMin(pose_hi));
        }

        // EMA channels in recorder coordinates: model space shifted by the reference offset.
        utt.ema.utterance = utt.id;
        utt.ema.frame_rate = config.frame_rate;
        for (const auto& label : {"T1", "T2", "T3", "ref", "jaw", "upperlip", "lowerlip"})
        {
            utt.ema.channels.push_back({label, std::vector<Point3>(total), {}});
        }
        double oracle_sum = 0.0;
        for (std::size_t t = 0; t < total; ++t)
        {
            const Vector positions = generate_positions(model, out.speaker, utt.poses[t]);
            const Vector predicted =
                generate_positions(model, out.speaker, out.phone_targets.at(phones[phone_of_frame[t]]));
            for (std::size_t c = 0; c < 3; ++c)
            {
                const auto v = static_cast<Eigen::Index>(3 * out.correspondence[c].vertex);
                Point3 x = positions.segment<3>(v);
                if (config.jitter_mm > 0.0)
                {
                    x += config.jitter_mm * Point3(rng.normal(), rng.normal(), rng.normal());
                }
                oracle_sum += (predicted.segment<3>(v) - x).norm();
                utt.ema.channels[c].positions[t] = x + out.reference_offset;
            }
            const double open = utt.poses[t](0) - model.pose_stats.mean(0);
            utt.ema.channels[3].positions[t] = out.reference_offset;
            utt.ema.channels[4].positions[t] = jaw + Point3(0.0, 0.0, 2.0 * open) + out.reference_offset;
            utt.ema.channels[5].positions[t] = upper_lip + out.reference_offset;
            utt.ema.channels[6].positions[t] = lower_lip + Point3(0.0, 0.0, 3.0 * open) + out.reference_offset;
            for (std::size_t c = 5; c < 7; ++c)
            {
                if (rng.uniform() < config.missing_rate && t > 0 && t + 1 < total)
                {
                    utt.ema.channels[c].positions[t] = Point3::Constant(std::numeric_limits<double>::quiet_NaN());
                }
            }
        }
        utt.oracle_error_mm = oracle_sum / static_cast<double>(3 * total);

        // Acoustic streams: log-f0 contour on voiced phones, smoothed per-phone cepstral targets.
        Matrix f0(T, 1);
        const Matrix f0_noise = filtered_noise(rng, T, 1, 2.0 * config.smoothing_frames, 0.05);
        for (Eigen::Index t = 0; t < T; ++t)
        {
            const std::string& p = phones[phone_of_frame[static_cast<std::size_t>(t)]];
            const bool voiced =
                std::find(config.voiced_phones.begin(), config.voiced_phones.end(), p) != config.voiced_phones.end();
            const double offset = p == config.phones.front() ? 0.0 : 0.08;
            f0(t, 0) = voiced ? 110.0 * std::exp(offset + f0_noise(t, 0)) : 0.0;
        }
        Matrix mgc_targets(T, order);
        for (Eigen::Index t = 0; t < T; ++t)
        {
            mgc_targets.row(t) = mgc_by_phone.at(phones[phone_of_frame[static_cast<std::size_t>(t)]]).transpose();
        }
        Matrix mgc = smooth(mgc_targets, config.smoothing_frames) +
                     filtered_noise(rng, T, order, config.smoothing_frames, 0.05);
        utt.streams["f0"] = std::move(f0);
        utt.streams["mgc"] = std::move(mgc);
        out.utterances.push_back(std::move(utt));
    }
    return out;
}

namespace {

Json pipeline_config_json(const SyntheticCorpus& corpus, const SyntheticConfig& config)
{
    Json j;
    j["seed"] = config.seed;
    j["jobs"] = 1;
    j["paths"] = {{"corpus", "corpus"}, {"model", "work/model.mltm"}, {"ema", "ema"},
                  {"labels", "labels"}, {"streams", "streams"},       {"output", "work"}};
    Json ids = Json::array();
    for (const auto& u : corpus.utterances)
    {
        ids.push_back(u.id);
    }
    j["utterances"] = std::move(ids);
    j["split"] = {{"testFraction", config.test_fraction}};
    j["preprocess"] = {{"referenceCoil", "ref"}};
    j["coils"] = tongue_coils();
    j["correspondence"] = {{"c", 0.25}, {"restarts", 10}, {"maxRounds", 20}, {"frames", 10}};
    j["fitting"] = {{"fit", {{"alpha", 0.0}, {"beta", 1.0}, {"c", 2.0}}},
                    {"anatomyPass", {{"alpha", 20.0}, {"beta", 10.0}, {"c", 3.0}}},
                    {"posePass", {{"alpha", 0.0}, {"beta", 1.0}, {"c", 2.0}}}};
    j["synthesis"] = {{"states", 5},
                      {"varianceFloor", 1e-6},
                      {"frameRate", config.frame_rate},
                      {"poseDeltaDelta", false},
                      {"streams",
                       Json::array({{{"name", "f0"}, {"dim", 1}, {"voicedAware", true}},
                                    {{"name", "mgc"}, {"dim", config.mgc_order}}})}};
    j["evaluate"] = {{"conditions", Json::array({"imposed", "free"})}, {"f0Stream", "f0"}, {"mgcStream", "mgc"}};
    return j;
}

} // namespace

void write_synthetic_corpus(const SyntheticCorpus& corpus, const SyntheticConfig& config,
                            const std::filesystem::path& directory)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    for (const char* sub : {"corpus", "ema", "labels", "streams"})
    {
        fs::create_directories(directory / sub, ec);
        if (ec)
        {
            throw IoError("cannot create directory " + (directory / sub).string() + ": " + ec.message());
        }
    }
    save_corpus(corpus.meshes, directory / "corpus");
    for (const auto& u : corpus.utterances)
    {
        save_recording(u.ema, directory / "ema" / (u.id + ".json"));
        save_labels(u.labels, directory / "labels" / (u.id + ".lab"));
        write_json_file(directory / "streams" / (u.id + ".json"), streams_to_json(config.frame_rate, u.streams));
    }

    Json truth;
    truth["generator"] = synthetic_config_to_json(config);
    truth["speaker"] = vector_to_json(corpus.speaker);
    Json corr = Json::array();
    for (const auto& cv : corpus.correspondence)
    {
        corr.push_back({{"coil", cv.coil}, {"vertex", cv.vertex}});
    }
    truth["correspondence"] = std::move(corr);
    truth["referenceOffset"] = vector_to_json(corpus.reference_offset);
    Json targets = Json::object();
    for (const auto& [phone, p] : corpus.phone_targets)
    {
        targets[phone] = vector_to_json(p);
    }
    truth["phoneTargets"] = std::move(targets);
    Json per_utt = Json::object();
    for (const auto& u : corpus.utterances)
    {
        per_utt[u.id] = u.oracle_error_mm;
    }
    truth["oracle"] = {{"description", "phone-target pose predictor vs recorded tongue coils, mm"},
                       {"meanTongueErrorMm", corpus.oracle_error_mm()},
                       {"perUtterance", std::move(per_utt)}};
    write_json_file(directory / "truth.json", truth);
    write_json_file(directory / "config.json", pipeline_config_json(corpus, config));
}

} // namespace articulate
