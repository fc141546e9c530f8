/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: src/synthesis.cpp
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

#include "articulate/synthesis.hpp"
#include "articulate/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace articulate {

void validate(const StreamSpec& spec)
{
    if (spec.name.empty())
    {
        throw UsageError("stream spec needs a name");
    }
    if (spec.dim < 1)
    {
        throw UsageError("stream '" + spec.name + "': dim must be at least 1");
    }
    if (spec.windows.empty() || spec.windows.front() != Window::identity())
    {
        throw UsageError("stream '" + spec.name + "': the first window must be the static identity window");
    }
    for (const auto& w : spec.windows)
    {
        if (w.coefficients.size() % 2 != 1)
        {
            throw UsageError("stream '" + spec.name + "': windows must have odd length");
        }
    }
    if (spec.voiced_aware && spec.dim != 1)
    {
        throw UsageError("stream '" + spec.name + "': voiced-aware streams must be one-dimensional");
    }
}

Json stream_spec_to_json(const StreamSpec& spec)
{
    Json j;
    j["name"] = spec.name;
    j["dim"] = spec.dim;
    Json windows = Json::array();
    for (const auto& w : spec.windows)
    {
        windows.push_back(w.coefficients);
    }
    j["windows"] = std::move(windows);
    j["voicedAware"] = spec.voiced_aware;
    return j;
}

StreamSpec stream_spec_from_json(const Json& json)
{
    StreamSpec spec;
    try
    {
        spec.name = json.at("name").get<std::string>();
        spec.dim = json.at("dim").get<std::size_t>();
        spec.voiced_aware = json.value("voicedAware", false);
        if (json.contains("windows"))
        {
            spec.windows.clear();
            for (const auto& w : json["windows"])
            {
                spec.windows.push_back({w.get<std::vector<double>>()});
            }
        }
        else if (json.value("deltaDelta", false))
        {
            spec.windows.push_back(Window::delta_delta());
        }
    } catch (const nlohmann::json::exception& e)
    {
        throw ParseError(std::string("stream spec: ") + e.what());
    }
    validate(spec);
    return spec;
}

Matrix apply_windows(const Matrix& trajectory, const std::vector<Window>& windows)
{
    const Eigen::Index t_count = trajectory.rows();
    const Eigen::Index dim = trajectory.cols();
    Matrix out = Matrix::Zero(t_count, dim * static_cast<Eigen::Index>(windows.size()));
    for (std::size_t w = 0; w < windows.size(); ++w)
    {
        const int reach = windows[w].reach();
        for (Eigen::Index t = 0; t < t_count; ++t)
        {
            for (int o = -reach; o <= reach; ++o)
            {
                const double coef = windows[w].coefficients[static_cast<std::size_t>(o + reach)];
                if (coef == 0.0)
                {
                    continue;
                }
                const Eigen::Index src = std::clamp<Eigen::Index>(t + o, 0, t_count - 1);
                out.block(t, static_cast<Eigen::Index>(w) * dim, 1, dim) += coef * trajectory.row(src);
            }
        }
    }
    return out;
}

Matrix compute_deltas(const Matrix& trajectory)
{
    return apply_windows(trajectory, {Window::identity(), Window::delta()});
}

StateAlignment align_states(const Segmentation& seg, double frame_rate, std::size_t states)
{
    if (states < 1)
    {
        throw UsageError("align_states: need at least one state per phone");
    }
    if (!(frame_rate > 0.0))
    {
        throw UsageError("align_states: frame rate must be positive");
    }
    StateAlignment out;
    std::size_t cursor = 0;
    for (const auto& e : seg.entries)
    {
        const auto begin_raw = static_cast<std::size_t>(std::llround(e.start * frame_rate));
        const auto end_raw = static_cast<std::size_t>(std::llround(e.end * frame_rate));
        const std::size_t begin = std::max(begin_raw, cursor);
        std::size_t end = std::max(end_raw, begin);
        PhoneInstance inst;
        inst.phone = e.phone;
        inst.begin = begin;
        inst.state_durations.assign(states, 0);
        if (end == begin)
        {
            end = begin + 1;
            inst.state_durations[0] = 1;
            ++out.warnings;
        }
        else
        {
            const std::size_t n = end - begin;
            for (std::size_t s = 0; s < states; ++s)
            {
                inst.state_durations[s] = n / states + (s < n % states ? 1 : 0);
            }
        }
        cursor = end;
        out.instances.push_back(std::move(inst));
    }
    out.frame_count = cursor;
    return out;
}

std::size_t StatModel::stream_index(const std::string& name) const
{
    for (std::size_t i = 0; i < streams.size(); ++i)
    {
        if (streams[i].name == name)
        {
            return i;
        }
    }
    throw DataError("statistical model has no stream '" + name + "'");
}

const std::vector<StateModel>& StatModel::phone_states(const std::string& phone, bool allow_unknown) const
{
    if (const auto it = phones.find(phone); it != phones.end())
    {
        return it->second;
    }
    if (!allow_unknown || global.empty())
    {
        throw DataError("phone '" + phone + "' is not in the statistical model");
    }
    return global;
}

namespace {

// Neumaier-compensated accumulation; the result does not depend on summation order beyond
// rounding of the final correction.
class CompensatedSum
{
public:
    explicit CompensatedSum(Eigen::Index n = 0) : sum_(Vector::Zero(n)), c_(Vector::Zero(n)) {}

    void add(const Eigen::Ref<const Vector>& x)
    {
        for (Eigen::Index i = 0; i < x.size(); ++i)
        {
            const double t = sum_(i) + x(i);
            c_(i) += std::abs(sum_(i)) >= std::abs(x(i)) ? (sum_(i) - t) + x(i) : (x(i) - t) + sum_(i);
            sum_(i) = t;
        }
    }
    Vector value() const { return sum_ + c_; }

private:
    Vector sum_;
    Vector c_;
};

struct FrameRef
{
    std::size_t utterance;
    std::size_t frame;
};

// Observation matrices per utterance for one stream, with voicing per frame.
struct StreamObservations
{
    std::vector<Matrix> stacked;
    std::vector<std::vector<bool>> voiced;
};

// Maximal runs [begin, end) of true flags.
std::vector<std::pair<std::size_t, std::size_t>> voiced_runs(const std::vector<bool>& voiced)
{
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    std::size_t t = 0;
    while (t < voiced.size())
    {
        if (!voiced[t])
        {
            ++t;
            continue;
        }
        std::size_t end = t;
        while (end < voiced.size() && voiced[end])
        {
            ++end;
        }
        runs.emplace_back(t, end);
        t = end;
    }
    return runs;
}

StreamObservations observe(const std::vector<TrainingUtterance>& corpus, const StreamSpec& spec)
{
    StreamObservations obs;
    const auto width = static_cast<Eigen::Index>(spec.dim * spec.windows.size());
    for (const auto& utt : corpus)
    {
        const auto it = utt.streams.find(spec.name);
        if (it == utt.streams.end())
        {
            throw DataError("utterance '" + utt.id + "' has no stream '" + spec.name + "'");
        }
        const Matrix& data = it->second;
        if (static_cast<std::size_t>(data.cols()) != spec.dim)
        {
            throw ShapeError("utterance '" + utt.id + "' stream '" + spec.name + "' has dim " +
                             std::to_string(data.cols()) + ", expected " + std::to_string(spec.dim));
        }
        std::vector<bool> voiced(static_cast<std::size_t>(data.rows()), true);
        Matrix stacked = Matrix::Zero(data.rows(), width);
        if (!spec.voiced_aware)
        {
            stacked = apply_windows(data, spec.windows);
        }
        else
        {
            for (Eigen::Index t = 0; t < data.rows(); ++t)
            {
                voiced[static_cast<std::size_t>(t)] = data(t, 0) > 0.0;
            }
            for (const auto& [b, e] : voiced_runs(voiced))
            {
                const auto begin = static_cast<Eigen::Index>(b);
                const auto len = static_cast<Eigen::Index>(e - b);
                const Matrix logs = data.block(begin, 0, len, 1).array().log().matrix();
                stacked.block(begin, 0, len, width) = apply_windows(logs, spec.windows);
            }
        }
        obs.stacked.push_back(std::move(stacked));
        obs.voiced.push_back(std::move(voiced));
    }
    return obs;
}

Gaussian fit_gaussian(const StreamObservations& obs, const std::vector<FrameRef>& frames, Eigen::Index width,
                      double floor)
{
    CompensatedSum sum(width);
    for (const auto& f : frames)
    {
        sum.add(obs.stacked[f.utterance].row(static_cast<Eigen::Index>(f.frame)).transpose());
    }
    Gaussian g;
    g.mean = sum.value() / static_cast<double>(frames.size());
    CompensatedSum sq(width);
    for (const auto& f : frames)
    {
        const Vector d = obs.stacked[f.utterance].row(static_cast<Eigen::Index>(f.frame)).transpose() - g.mean;
        sq.add(d.cwiseProduct(d));
    }
    g.variance = (sq.value() / static_cast<double>(frames.size())).cwiseMax(floor);
    return g;
}

std::pair<double, double> duration_stats(const std::vector<double>& counts, double floor)
{
    if (counts.empty())
    {
        return {1.0, floor};
    }
    const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / static_cast<double>(counts.size());
    double var = 0.0;
    for (double c : counts)
    {
        var += (c - mean) * (c - mean);
    }
    var /= static_cast<double>(counts.size());
    return {std::max(1.0, mean), std::max(floor, var)};
}

} // namespace

StatModel train(const std::vector<TrainingUtterance>& corpus, const std::vector<StreamSpec>& specs,
                double frame_rate, const TrainOptions& options)
{
    if (corpus.empty())
    {
        throw UsageError("training needs at least one utterance");
    }
    if (specs.empty())
    {
        throw UsageError("training needs at least one stream");
    }
    if (options.states < 1 || !(options.variance_floor > 0.0))
    {
        throw UsageError("training needs states >= 1 and a positive variance floor");
    }
    for (const auto& spec : specs)
    {
        validate(spec);
    }
    StatModel model;
    model.frame_rate = frame_rate;
    model.states = options.states;
    model.variance_floor = options.variance_floor;
    model.streams = specs;

    std::vector<StreamObservations> observations;
    for (const auto& spec : specs)
    {
        observations.push_back(observe(corpus, spec));
    }

    const std::size_t S = options.states;
    // frames[phone][state] and per-instance state durations.
    std::map<std::string, std::vector<std::vector<FrameRef>>> frames;
    std::map<std::string, std::vector<std::vector<double>>> durations;
    std::vector<std::vector<double>> global_durations(S);
    for (std::size_t u = 0; u < corpus.size(); ++u)
    {
        const StateAlignment alignment = align_states(corpus[u].segmentation, frame_rate, S);
        std::size_t usable = alignment.frame_count;
        for (const auto& obs : observations)
        {
            usable = std::min(usable, static_cast<std::size_t>(obs.stacked[u].rows()));
        }
        for (const auto& inst : alignment.instances)
        {
            auto& cells = frames[inst.phone];
            auto& durs = durations[inst.phone];
            cells.resize(S);
            durs.resize(S);
            std::size_t t = inst.begin;
            for (std::size_t s = 0; s < S; ++s)
            {
                durs[s].push_back(static_cast<double>(inst.state_durations[s]));
                global_durations[s].push_back(static_cast<double>(inst.state_durations[s]));
                for (std::size_t k = 0; k < inst.state_durations[s]; ++k, ++t)
                {
                    if (t < usable)
                    {
                        cells[s].push_back({u, t});
                    }
                }
            }
        }
    }

    // Pools: per phone (all states) and global (all phones, all states).
    std::map<std::string, std::vector<FrameRef>> phone_pool;
    std::vector<FrameRef> global_pool;
    for (const auto& [phone, cells] : frames)
    {
        auto& pool = phone_pool[phone];
        for (const auto& cell : cells)
        {
            pool.insert(pool.end(), cell.begin(), cell.end());
        }
        global_pool.insert(global_pool.end(), pool.begin(), pool.end());
    }
    if (global_pool.empty())
    {
        throw DataError("training corpus contains no usable frames");
    }

    auto voiced_only = [&](const std::vector<FrameRef>& refs, std::size_t stream) {
        std::vector<FrameRef> out;
        for (const auto& r : refs)
        {
            if (observations[stream].voiced[r.utterance][r.frame])
            {
                out.push_back(r);
            }
        }
        return out;
    };
    auto voiced_fraction = [&](const std::vector<FrameRef>& refs, std::size_t stream) {
        return static_cast<double>(voiced_only(refs, stream).size()) / static_cast<double>(refs.size());
    };

    // Global cells first; they are the last backoff level.
    std::vector<StreamCell> global_cells(specs.size());
    for (std::size_t k = 0; k < specs.size(); ++k)
    {
        const auto width = static_cast<Eigen::Index>(specs[k].dim * specs[k].windows.size());
        std::vector<FrameRef> refs = specs[k].voiced_aware ? voiced_only(global_pool, k) : global_pool;
        if (refs.empty())
        {
            throw DataError("stream '" + specs[k].name + "' has no voiced frames in the training corpus");
        }
        global_cells[k].gaussian = fit_gaussian(observations[k], refs, width, options.variance_floor);
        global_cells[k].voiced_probability = specs[k].voiced_aware ? voiced_fraction(global_pool, k) : 1.0;
    }
    model.global.resize(S);
    for (std::size_t s = 0; s < S; ++s)
    {
        model.global[s].streams = global_cells;
        std::tie(model.global[s].duration_mean, model.global[s].duration_variance) =
            duration_stats(global_durations[s], options.variance_floor);
    }

    for (const auto& [phone, cells] : frames)
    {
        auto& states = model.phones[phone];
        states.resize(S);
        const auto& pool = phone_pool[phone];
        for (std::size_t s = 0; s < S; ++s)
        {
            std::tie(states[s].duration_mean, states[s].duration_variance) =
                duration_stats(durations[phone][s], options.variance_floor);
            states[s].streams.resize(specs.size());
            for (std::size_t k = 0; k < specs.size(); ++k)
            {
                const auto width = static_cast<Eigen::Index>(specs[k].dim * specs[k].windows.size());
                StreamCell& cell = states[s].streams[k];
                const bool voiced_aware = specs[k].voiced_aware;
                // Voicing probability: own frames, else phone pool, else global.
                if (!cells[s].empty())
                {
                    cell.voiced_probability = voiced_aware ? voiced_fraction(cells[s], k) : 1.0;
                }
                else if (!pool.empty())
                {
                    cell.voiced_probability = voiced_aware ? voiced_fraction(pool, k) : 1.0;
                }
                else
                {
                    cell.voiced_probability = global_cells[k].voiced_probability;
                }
                const std::vector<FrameRef> own = voiced_aware ? voiced_only(cells[s], k) : cells[s];
                if (!own.empty())
                {
                    cell.gaussian = fit_gaussian(observations[k], own, width, options.variance_floor);
                    continue;
                }
                const std::vector<FrameRef> phone_refs = voiced_aware ? voiced_only(pool, k) : pool;
                if (!phone_refs.empty())
                {
                    cell.gaussian = fit_gaussian(observations[k], phone_refs, width, options.variance_floor);
                    model.backoffs.push_back({phone, s, specs[k].name, "phone"});
                }
                else
                {
                    cell.gaussian = global_cells[k].gaussian;
                    model.backoffs.push_back({phone, s, specs[k].name, "global"});
                }
            }
        }
    }
    return model;
}

namespace {

Json gaussian_to_json(const Gaussian& g)
{
    return {{"mean", vector_to_json(g.mean)}, {"variance", vector_to_json(g.variance)}};
}

Gaussian gaussian_from_json(const Json& j)
{
    if (!j.is_object() || !j.contains("mean") || !j.contains("variance"))
    {
        throw ParseError("statistical model: gaussian needs 'mean' and 'variance'");
    }
    return {vector_from_json(j["mean"], "gaussian mean"), vector_from_json(j["variance"], "gaussian variance")};
}

Json states_to_json(const std::vector<StateModel>& states, const std::vector<StreamSpec>& specs)
{
    Json out = Json::array();
    for (const auto& st : states)
    {
        Json j;
        j["durationMean"] = st.duration_mean;
        j["durationVariance"] = st.duration_variance;
        Json streams;
        for (std::size_t k = 0; k < specs.size(); ++k)
        {
            Json cell = gaussian_to_json(st.streams[k].gaussian);
            cell["voicedProbability"] = st.streams[k].voiced_probability;
            streams[specs[k].name] = std::move(cell);
        }
        j["streams"] = std::move(streams);
        out.push_back(std::move(j));
    }
    return out;
}

std::vector<StateModel> states_from_json(const Json& json, const std::vector<StreamSpec>& specs, std::size_t S)
{
    if (!json.is_array() || json.size() != S)
    {
        throw ParseError("statistical model: each phone needs " + std::to_string(S) + " states");
    }
    std::vector<StateModel> states;
    for (const auto& j : json)
    {
        StateModel st;
        st.duration_mean = j.at("durationMean").get<double>();
        st.duration_variance = j.at("durationVariance").get<double>();
        for (const auto& spec : specs)
        {
            const Json& cell = j.at("streams").at(spec.name);
            StreamCell c;
            c.gaussian = gaussian_from_json(cell);
            c.voiced_probability = cell.value("voicedProbability", 1.0);
            const auto width = static_cast<Eigen::Index>(spec.dim * spec.windows.size());
            if (c.gaussian.mean.size() != width || c.gaussian.variance.size() != width)
            {
                throw ShapeError("statistical model: stream '" + spec.name + "' cell has the wrong width");
            }
            st.streams.push_back(std::move(c));
        }
        states.push_back(std::move(st));
    }
    return states;
}

} // namespace

Json stat_model_to_json(const StatModel& model)
{
    Json j;
    j["frameRate"] = model.frame_rate;
    j["states"] = model.states;
    j["varianceFloor"] = model.variance_floor;
    Json streams = Json::array();
    for (const auto& s : model.streams)
    {
        streams.push_back(stream_spec_to_json(s));
    }
    j["streams"] = std::move(streams);
    Json phones = Json::object();
    for (const auto& [phone, states] : model.phones)
    {
        phones[phone] = states_to_json(states, model.streams);
    }
    j["phones"] = std::move(phones);
    j["global"] = states_to_json(model.global, model.streams);
    Json backoffs = Json::array();
    for (const auto& b : model.backoffs)
    {
        backoffs.push_back({{"phone", b.phone}, {"state", b.state}, {"stream", b.stream}, {"level", b.level}});
    }
    j["backoffs"] = std::move(backoffs);
    return j;
}

StatModel stat_model_from_json(const Json& json)
{
    StatModel model;
    try
    {
        model.frame_rate = json.at("frameRate").get<double>();
        model.states = json.at("states").get<std::size_t>();
        model.variance_floor = json.value("varianceFloor", 1e-6);
        for (const auto& s : json.at("streams"))
        {
            model.streams.push_back(stream_spec_from_json(s));
        }
        for (const auto& [phone, states] : json.at("phones").items())
        {
            model.phones[phone] = states_from_json(states, model.streams, model.states);
        }
        model.global = states_from_json(json.at("global"), model.streams, model.states);
        for (const auto& b : json.value("backoffs", Json::array()))
        {
            model.backoffs.push_back({b.at("phone").get<std::string>(), b.at("state").get<std::size_t>(),
                                      b.at("stream").get<std::string>(), b.at("level").get<std::string>()});
        }
    } catch (const nlohmann::json::exception& e)
    {
        throw ParseError(std::string("statistical model: ") + e.what());
    }
    return model;
}

void save_stat_model(const StatModel& model, const std::filesystem::path& path)
{
    write_json_file(path, stat_model_to_json(model));
}

StatModel load_stat_model(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path))
    {
        throw IoError("statistical model not found: " + path.string());
    }
    return stat_model_from_json(read_json_file(path));
}

std::vector<std::vector<std::size_t>> predict_durations(const StatModel& model, const Segmentation& seg,
                                                        DurationMode mode, bool allow_unknown)
{
    const std::size_t S = model.states;
    std::vector<std::vector<std::size_t>> out;
    out.reserve(seg.entries.size());
    for (const auto& e : seg.entries)
    {
        const auto& states = model.phone_states(e.phone, allow_unknown);
        std::vector<std::size_t> d(S, 1);
        if (mode == DurationMode::free)
        {
            for (std::size_t s = 0; s < S; ++s)
            {
                d[s] = static_cast<std::size_t>(std::max(1LL, std::llround(states[s].duration_mean)));
            }
            out.push_back(std::move(d));
            continue;
        }
        const long long begin = std::llround(e.start * model.frame_rate);
        const long long end = std::llround(e.end * model.frame_rate);
        const long long span = end - begin;
        if (span < static_cast<long long>(S))
        {
            throw DataError("imposed duration of '" + e.phone + "' [" + std::to_string(e.start) + ", " +
                            std::to_string(e.end) + "] spans " + std::to_string(span) + " frames, fewer than the " +
                            std::to_string(S) + " states");
        }
        double total = 0.0;
        for (const auto& st : states)
        {
            total += st.duration_mean;
        }
        std::vector<double> remainder(S);
        std::size_t assigned = 0;
        for (std::size_t s = 0; s < S; ++s)
        {
            const double quota = static_cast<double>(span) * states[s].duration_mean / total;
            d[s] = static_cast<std::size_t>(std::floor(quota));
            remainder[s] = quota - std::floor(quota);
            assigned += d[s];
        }
        std::vector<std::size_t> order(S);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
        for (std::size_t i = 0; assigned < static_cast<std::size_t>(span); ++i, ++assigned)
        {
            ++d[order[i % S]];
        }
        for (std::size_t s = 0; s < S; ++s)
        {
            while (d[s] == 0)
            {
                const auto donor = static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
                --d[donor];
                ++d[s];
            }
        }
        out.push_back(std::move(d));
    }
    return out;
}

GaussianSequence build_gaussian_sequence(const StatModel& model, const std::vector<std::string>& phones,
                                         const std::vector<std::vector<std::size_t>>& durations, bool allow_unknown)
{
    if (phones.size() != durations.size())
    {
        throw ShapeError("phone list and duration list differ in length");
    }
    std::size_t total = 0;
    for (const auto& d : durations)
    {
        if (d.size() != model.states)
        {
            throw ShapeError("duration entry has " + std::to_string(d.size()) + " states, model has " +
                             std::to_string(model.states));
        }
        total = std::accumulate(d.begin(), d.end(), total);
    }
    GaussianSequence seq;
    for (const auto& spec : model.streams)
    {
        const auto width = static_cast<Eigen::Index>(spec.dim * spec.windows.size());
        StreamSequence ss;
        ss.name = spec.name;
        ss.mean.resize(static_cast<Eigen::Index>(total), width);
        ss.variance.resize(static_cast<Eigen::Index>(total), width);
        ss.voiced.assign(total, true);
        seq.streams.push_back(std::move(ss));
    }
    Eigen::Index t = 0;
    for (std::size_t i = 0; i < phones.size(); ++i)
    {
        const auto& states = model.phone_states(phones[i], allow_unknown);
        for (std::size_t s = 0; s < model.states; ++s)
        {
            for (std::size_t k = 0; k < durations[i][s]; ++k, ++t)
            {
                for (std::size_t m = 0; m < model.streams.size(); ++m)
                {
                    const StreamCell& cell = states[s].streams[m];
                    seq.streams[m].mean.row(t) = cell.gaussian.mean.transpose();
                    seq.streams[m].variance.row(t) = cell.gaussian.variance.transpose();
                    seq.streams[m].voiced[static_cast<std::size_t>(t)] =
                        !model.streams[m].voiced_aware || cell.voiced_probability >= 0.5;
                }
            }
        }
    }
    return seq;
}

namespace {

// Symmetric positive-definite band matrix, upper band stored as band(i, k) = A(i, i + k).
class BandMatrix
{
public:
    BandMatrix(Eigen::Index n, Eigen::Index bandwidth) : band_(Matrix::Zero(n, bandwidth + 1)), width_(bandwidth) {}

    void add(Eigen::Index i, Eigen::Index j, double v)
    {
        if (j < i)
        {
            std::swap(i, j);
        }
        band_(i, j - i) += v;
    }

    /// In-place Cholesky (A = L L^T) followed by forward and back substitution.
    Vector solve(Vector rhs)
    {
        const Eigen::Index n = band_.rows();
        // After factorisation band_(i, k) holds L(i + k, i).
        for (Eigen::Index i = 0; i < n; ++i)
        {
            double diag = band_(i, 0);
            for (Eigen::Index k = std::max<Eigen::Index>(0, i - width_); k < i; ++k)
            {
                const double l = band_(k, i - k);
                diag -= l * l;
            }
            if (!(diag > 0.0))
            {
                throw NumericError("mlpg: system matrix is not positive definite");
            }
            const double root = std::sqrt(diag);
            band_(i, 0) = root;
            for (Eigen::Index j = i + 1; j <= std::min(n - 1, i + width_); ++j)
            {
                double v = band_(i, j - i);
                for (Eigen::Index k = std::max<Eigen::Index>(0, j - width_); k < i; ++k)
                {
                    v -= band_(k, i - k) * band_(k, j - k);
                }
                band_(i, j - i) = v / root;
            }
        }
        for (Eigen::Index i = 0; i < n; ++i)
        {
            double v = rhs(i);
            for (Eigen::Index k = std::max<Eigen::Index>(0, i - width_); k < i; ++k)
            {
                v -= band_(k, i - k) * rhs(k);
            }
            rhs(i) = v / band_(i, 0);
        }
        for (Eigen::Index i = n - 1; i >= 0; --i)
        {
            double v = rhs(i);
            for (Eigen::Index j = i + 1; j <= std::min(n - 1, i + width_); ++j)
            {
                v -= band_(i, j - i) * rhs(j);
            }
            rhs(i) = v / band_(i, 0);
        }
        return rhs;
    }

private:
    Matrix band_;
    Eigen::Index width_;
};

} // namespace

Vector mlpg_solve(const Matrix& mean, const Matrix& variance, const std::vector<Window>& windows)
{
    const Eigen::Index n = mean.rows();
    if (variance.rows() != n || mean.cols() != static_cast<Eigen::Index>(windows.size()) ||
        variance.cols() != mean.cols())
    {
        throw ShapeError("mlpg: mean/variance must be T x windows");
    }
    if (n == 0)
    {
        return Vector();
    }
    if (windows.size() == 1 && windows[0] == Window::identity())
    {
        return mean.col(0); // the system is diagonal; skip the round trip through the variances
    }
    int reach = 0;
    for (const auto& w : windows)
    {
        reach = std::max(reach, w.reach());
    }
    BandMatrix system(n, std::min<Eigen::Index>(2 * reach, n - 1));
    Vector rhs = Vector::Zero(n);
    std::vector<std::pair<Eigen::Index, double>> row;
    for (std::size_t w = 0; w < windows.size(); ++w)
    {
        const int r = windows[w].reach();
        for (Eigen::Index t = 0; t < n; ++t)
        {
            // Sparse row of W for (t, w); edge taps fold onto the boundary frame.
            row.clear();
            for (int o = -r; o <= r; ++o)
            {
                const double coef = windows[w].coefficients[static_cast<std::size_t>(o + r)];
                const Eigen::Index col = std::clamp<Eigen::Index>(t + o, 0, n - 1);
                auto it = std::find_if(row.begin(), row.end(), [col](const auto& e) { return e.first == col; });
                if (it == row.end())
                {
                    row.emplace_back(col, coef);
                }
                else
                {
                    it->second += coef;
                }
            }
            const auto wi = static_cast<Eigen::Index>(w);
            const double precision = 1.0 / variance(t, wi);
            for (std::size_t a = 0; a < row.size(); ++a)
            {
                if (row[a].second == 0.0)
                {
                    continue;
                }
                rhs(row[a].first) += precision * row[a].second * mean(t, wi);
                for (std::size_t b = a; b < row.size(); ++b)
                {
                    const double v = precision * row[a].second * row[b].second;
                    if (v == 0.0)
                    {
                        continue;
                    }
                    system.add(row[a].first, row[b].first, v);
                }
            }
        }
    }
    return system.solve(std::move(rhs));
}

Matrix mlpg(const GaussianSequence& sequence, const StreamSpec& spec)
{
    const StreamSequence* stream = nullptr;
    for (const auto& s : sequence.streams)
    {
        if (s.name == spec.name)
        {
            stream = &s;
        }
    }
    if (!stream)
    {
        throw DataError("gaussian sequence has no stream '" + spec.name + "'");
    }
    const Eigen::Index n = stream->mean.rows();
    const auto dim = static_cast<Eigen::Index>(spec.dim);
    const auto windows = static_cast<Eigen::Index>(spec.windows.size());
    if (stream->mean.cols() != dim * windows)
    {
        throw ShapeError("stream '" + spec.name + "' sequence width does not match its spec");
    }
    Matrix out = Matrix::Zero(n, dim);
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    if (spec.voiced_aware)
    {
        runs = voiced_runs(stream->voiced);
    }
    else if (n > 0)
    {
        runs.emplace_back(0, static_cast<std::size_t>(n));
    }
    for (const auto& [b, e] : runs)
    {
        const auto begin = static_cast<Eigen::Index>(b);
        const auto len = static_cast<Eigen::Index>(e - b);
        for (Eigen::Index d = 0; d < dim; ++d)
        {
            Matrix mean(len, windows);
            Matrix var(len, windows);
            for (Eigen::Index w = 0; w < windows; ++w)
            {
                mean.col(w) = stream->mean.block(begin, w * dim + d, len, 1);
                var.col(w) = stream->variance.block(begin, w * dim + d, len, 1);
            }
            out.block(begin, d, len, 1) = mlpg_solve(mean, var, spec.windows);
        }
        if (spec.voiced_aware)
        {
            out.block(begin, 0, len, dim) = out.block(begin, 0, len, dim).array().exp().matrix();
        }
    }
    return out;
}

Synthesis synthesize(const StatModel& model, const Segmentation& seg, DurationMode mode, bool allow_unknown)
{
    Synthesis out;
    out.durations = predict_durations(model, seg, mode, allow_unknown);
    const auto phones = seg.phones();
    const GaussianSequence seq = build_gaussian_sequence(model, phones, out.durations, allow_unknown);
    for (const auto& spec : model.streams)
    {
        out.streams[spec.name] = mlpg(seq, spec);
    }
    std::size_t frame = 0;
    for (std::size_t i = 0; i < phones.size(); ++i)
    {
        const std::size_t n = std::accumulate(out.durations[i].begin(), out.durations[i].end(), std::size_t{0});
        out.timing.entries.push_back({phones[i], static_cast<double>(frame) / model.frame_rate,
                                      static_cast<double>(frame + n) / model.frame_rate});
        frame += n;
    }
    return out;
}

Json streams_to_json(double frame_rate, const std::map<std::string, Matrix>& streams)
{
    Json j;
    j["frameRate"] = frame_rate;
    Json s = Json::object();
    for (const auto& [name, m] : streams)
    {
        s[name] = matrix_to_json(m);
    }
    j["streams"] = std::move(s);
    return j;
}

std::map<std::string, Matrix> streams_from_json(const Json& json, double* frame_rate)
{
    if (!json.is_object() || !json.contains("streams") || !json["streams"].is_object())
    {
        throw ParseError("stream file: field 'streams' missing or not an object");
    }
    if (frame_rate)
    {
        if (!json.contains("frameRate") || !json["frameRate"].is_number())
        {
            throw ParseError("stream file: field 'frameRate' missing or not a number");
        }
        *frame_rate = json["frameRate"].get<double>();
    }
    std::map<std::string, Matrix> out;
    for (const auto& [name, rows] : json["streams"].items())
    {
        out[name] = matrix_from_json(rows, "stream '" + name + "'");
    }
    return out;
}

} // namespace articulate
