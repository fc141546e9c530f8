/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: src/metrics.cpp
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

#include "articulate/metrics.hpp"
#include "articulate/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace articulate {

namespace {

void require_same_length(const Vector& r, const Vector& s, const char* what)
{
    if (r.size() != s.size())
    {
        throw ShapeError(std::string(what) + ": series lengths differ (" + std::to_string(r.size()) + " vs " +
                         std::to_string(s.size()) + ")");
    }
}

} // namespace

double duration_rmse(const Segmentation& reference, const Segmentation& hypothesis)
{
    const auto& r = reference.entries;
    const auto& h = hypothesis.entries;
    const std::size_t common = std::min(r.size(), h.size());
    for (std::size_t i = 0; i < common; ++i)
    {
        if (r[i].phone != h[i].phone)
        {
            throw DataError("alignment error at phone " + std::to_string(i) + ": '" + r[i].phone + "' vs '" +
                            h[i].phone + "'");
        }
    }
    if (r.size() != h.size())
    {
        throw DataError("alignment error at phone " + std::to_string(common) + ": sequences have " +
                        std::to_string(r.size()) + " and " + std::to_string(h.size()) + " phones");
    }
    if (r.empty())
    {
        throw DataError("duration_rmse: empty segmentation");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i)
    {
        const double diff_ms = ((r[i].end - r[i].start) - (h[i].end - h[i].start)) * 1000.0;
        sum += diff_ms * diff_ms;
    }
    return std::sqrt(sum / static_cast<double>(r.size()));
}

double vuv_rate(const Vector& reference, const Vector& hypothesis)
{
    require_same_length(reference, hypothesis, "vuv_rate");
    if (reference.size() == 0)
    {
        throw DataError("vuv_rate: empty series");
    }
    Eigen::Index mismatches = 0;
    for (Eigen::Index t = 0; t < reference.size(); ++t)
    {
        mismatches += (reference(t) > 0.0) != (hypothesis(t) > 0.0) ? 1 : 0;
    }
    return 100.0 * static_cast<double>(mismatches) / static_cast<double>(reference.size());
}

double rmse_hz(const Vector& reference, const Vector& hypothesis)
{
    require_same_length(reference, hypothesis, "rmse_hz");
    if (reference.size() == 0)
    {
        throw DataError("rmse_hz: empty series");
    }
    return std::sqrt((reference - hypothesis).squaredNorm() / static_cast<double>(reference.size()));
}

std::optional<double> rmse_hz_voiced(const Vector& reference, const Vector& hypothesis)
{
    require_same_length(reference, hypothesis, "rmse_hz_voiced");
    double sum = 0.0;
    std::size_t n = 0;
    for (Eigen::Index t = 0; t < reference.size(); ++t)
    {
        if (reference(t) > 0.0 && hypothesis(t) > 0.0)
        {
            const double d = reference(t) - hypothesis(t);
            sum += d * d;
            ++n;
        }
    }
    if (n == 0)
    {
        return std::nullopt;
    }
    return std::sqrt(sum / static_cast<double>(n));
}

std::optional<double> rmse_cent(const Vector& reference, const Vector& hypothesis)
{
    require_same_length(reference, hypothesis, "rmse_cent");
    double sum = 0.0;
    std::size_t n = 0;
    for (Eigen::Index t = 0; t < reference.size(); ++t)
    {
        if (reference(t) > 0.0 && hypothesis(t) > 0.0)
        {
            const double c = 1200.0 * std::log2(reference(t) / hypothesis(t));
            sum += c * c;
            ++n;
        }
    }
    if (n == 0)
    {
        return std::nullopt;
    }
    return std::sqrt(sum / static_cast<double>(n));
}

double mcd(const Matrix& reference, const Matrix& hypothesis)
{
    if (reference.rows() != hypothesis.rows() || reference.cols() != hypothesis.cols())
    {
        throw ShapeError("mcd: shapes differ");
    }
    if (reference.cols() < 2)
    {
        throw ShapeError("mcd: need at least two coefficients");
    }
    if (reference.rows() == 0)
    {
        throw DataError("mcd: empty series");
    }
    const Eigen::Index m = reference.cols() - 1;
    const double sum = (reference.rightCols(m) - hypothesis.rightCols(m)).squaredNorm();
    return 10.0 / std::numbers::ln10 * std::sqrt(2.0) * std::sqrt(sum / static_cast<double>(reference.rows()));
}

std::vector<double> coil_distances(const EmaRecording& reference, const EmaRecording& hypothesis,
                                   const std::string& coil)
{
    const auto& r = reference.channel(coil).positions;
    const auto& h = hypothesis.channel(coil).positions;
    if (r.size() != h.size())
    {
        throw ShapeError("coil '" + coil + "': frame counts differ (" + std::to_string(r.size()) + " vs " +
                         std::to_string(h.size()) + ")");
    }
    std::vector<double> d(r.size());
    for (std::size_t t = 0; t < r.size(); ++t)
    {
        d[t] = (r[t] - h[t]).norm();
    }
    return d;
}

namespace {

void require_same_rate(const EmaRecording& reference, const EmaRecording& hypothesis)
{
    if (reference.frame_rate != hypothesis.frame_rate)
    {
        throw ShapeError("recordings have different frame rates");
    }
}

} // namespace

std::vector<CoilStats> euclidean_stats(const EmaRecording& reference, const EmaRecording& hypothesis,
                                       const std::vector<std::string>& coils)
{
    require_same_rate(reference, hypothesis);
    std::vector<CoilStats> out;
    for (const auto& coil : coils)
    {
        const auto d = coil_distances(reference, hypothesis, coil);
        CoilStats st{coil, 0.0, 0.0, d.size()};
        if (!d.empty())
        {
            const Eigen::Map<const Vector> v(d.data(), static_cast<Eigen::Index>(d.size()));
            st.mean = v.mean();
            st.stddev = std::sqrt((v.array() - st.mean).square().mean());
        }
        out.push_back(st);
    }
    return out;
}

std::vector<double> dynamics_rmse(const EmaRecording& reference, const EmaRecording& hypothesis,
                                  const std::vector<std::string>& coils)
{
    require_same_rate(reference, hypothesis);
    std::vector<double> out;
    for (const auto& coil : coils)
    {
        const auto& r = reference.channel(coil).positions;
        const auto& h = hypothesis.channel(coil).positions;
        if (r.size() != h.size())
        {
            throw ShapeError("coil '" + coil + "': frame counts differ");
        }
        if (r.size() < 2)
        {
            out.push_back(0.0);
            continue;
        }
        double sum = 0.0;
        for (std::size_t t = 0; t + 1 < r.size(); ++t)
        {
            sum += ((r[t + 1] - r[t]) - (h[t + 1] - h[t])).squaredNorm();
        }
        out.push_back(std::sqrt(sum / static_cast<double>(r.size() - 1)));
    }
    return out;
}

DistributionSummary summarize(std::vector<double> values)
{
    if (values.empty())
    {
        throw DataError("summarize: empty sample");
    }
    std::sort(values.begin(), values.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
    };
    DistributionSummary s;
    double sum = 0.0;
    for (double v : values)
    {
        sum += v;
    }
    s.mean = sum / static_cast<double>(values.size());
    s.median = quantile(0.5);
    s.q1 = quantile(0.25);
    s.q3 = quantile(0.75);
    return s;
}

std::optional<DistributionSummary> ClassBucket::summary() const
{
    if (values.empty())
    {
        return std::nullopt;
    }
    return summarize(values);
}

namespace {

constexpr PhoneClass all_classes[] = {PhoneClass::silence, PhoneClass::coronal, PhoneClass::dorsal,
                                      PhoneClass::other};

} // namespace

PhoneClassReport phone_class_report(const std::map<std::string, std::vector<double>>& distances,
                                    const Segmentation& seg, double frame_rate, const PhoneClassTable& table)
{
    if (!(frame_rate > 0.0))
    {
        throw UsageError("phone_class_report: frame rate must be positive");
    }
    std::size_t frames = 0;
    bool first = true;
    for (const auto& [coil, d] : distances)
    {
        if (!first && d.size() != frames)
        {
            throw ShapeError("phone_class_report: coil '" + coil + "' has a different frame count");
        }
        frames = d.size();
        first = false;
    }
    std::vector<PhoneClass> frame_class(frames, PhoneClass::silence);
    std::vector<bool> labelled(frames, false);
    for (const auto& e : seg.entries)
    {
        const auto begin = static_cast<std::size_t>(std::max(0LL, std::llround(e.start * frame_rate)));
        const auto end = static_cast<std::size_t>(std::max(0LL, std::llround(e.end * frame_rate)));
        const PhoneClass cls = table.classify(e.phone);
        for (std::size_t t = begin; t < std::min(end, frames); ++t)
        {
            frame_class[t] = cls;
            labelled[t] = true;
        }
    }
    PhoneClassReport report;
    report.unlabelled_frames = static_cast<std::size_t>(std::count(labelled.begin(), labelled.end(), false));
    for (PhoneClass cls : all_classes)
    {
        for (const auto& [coil, d] : distances)
        {
            ClassBucket bucket{cls, coil, {}};
            for (std::size_t t = 0; t < frames; ++t)
            {
                if (frame_class[t] == cls)
                {
                    bucket.values.push_back(d[t]);
                }
            }
            report.buckets.push_back(std::move(bucket));
        }
    }
    return report;
}

void merge(PhoneClassReport& into, const PhoneClassReport& more)
{
    if (into.buckets.empty())
    {
        into = more;
        return;
    }
    if (into.buckets.size() != more.buckets.size())
    {
        throw ShapeError("phone class reports cover different coils");
    }
    for (std::size_t i = 0; i < into.buckets.size(); ++i)
    {
        if (into.buckets[i].coil != more.buckets[i].coil || into.buckets[i].phone_class != more.buckets[i].phone_class)
        {
            throw ShapeError("phone class reports cover different coils");
        }
        auto& v = into.buckets[i].values;
        v.insert(v.end(), more.buckets[i].values.begin(), more.buckets[i].values.end());
    }
    into.unlabelled_frames += more.unlabelled_frames;
}

Aggregate aggregate(const std::vector<double>& values)
{
    Aggregate a;
    a.n = values.size();
    if (values.empty())
    {
        return a;
    }
    double sum = 0.0;
    for (double v : values)
    {
        sum += v;
    }
    a.mean = sum / static_cast<double>(a.n);
    if (a.n > 1)
    {
        double sq = 0.0;
        for (double v : values)
        {
            sq += (v - a.mean) * (v - a.mean);
        }
        a.stddev = std::sqrt(sq / static_cast<double>(a.n - 1));
        a.ci95 = 1.96 * a.stddev / std::sqrt(static_cast<double>(a.n));
    }
    return a;
}

void MetricsAccumulator::add(const std::string& metric, double value)
{
    auto it = std::find_if(values_.begin(), values_.end(), [&](const auto& e) { return e.first == metric; });
    if (it == values_.end())
    {
        values_.emplace_back(metric, std::vector<double>{value});
    }
    else
    {
        it->second.push_back(value);
    }
}

void MetricsAccumulator::add(const std::string& metric, const std::optional<double>& value)
{
    if (value)
    {
        add(metric, *value);
    }
    else if (std::none_of(values_.begin(), values_.end(), [&](const auto& e) { return e.first == metric; }))
    {
        values_.emplace_back(metric, std::vector<double>{});
    }
}

MetricsReport MetricsAccumulator::finish(std::string condition) const
{
    MetricsReport report;
    report.condition = std::move(condition);
    for (const auto& [name, v] : values_)
    {
        report.metrics.emplace_back(name, aggregate(v));
    }
    return report;
}

Json metrics_report_to_json(const MetricsReport& report)
{
    Json j;
    j["condition"] = report.condition;
    Json metrics = Json::object();
    for (const auto& [name, a] : report.metrics)
    {
        if (a.n == 0)
        {
            metrics[name] = {{"n", 0}, {"mean", nullptr}};
            continue;
        }
        metrics[name] = {{"mean", a.mean}, {"std", a.stddev}, {"ci95", a.ci95}, {"n", a.n}};
    }
    j["metrics"] = std::move(metrics);
    if (report.phone_classes)
    {
        Json buckets = Json::array();
        for (const auto& b : report.phone_classes->buckets)
        {
            Json e{{"class", to_string(b.phone_class)}, {"coil", b.coil}, {"count", b.count()}};
            if (const auto s = b.summary())
            {
                e["mean"] = s->mean;
                e["median"] = s->median;
                e["q1"] = s->q1;
                e["q3"] = s->q3;
            }
            buckets.push_back(std::move(e));
        }
        j["phoneClasses"] = {{"buckets", std::move(buckets)},
                             {"unlabelledFrames", report.phone_classes->unlabelled_frames}};
    }
    j["frameCounts"] = report.frame_counts;
    return j;
}

std::string metrics_report_to_table(const MetricsReport& report)
{
    std::size_t width = 6;
    for (const auto& [name, a] : report.metrics)
    {
        width = std::max(width, name.size());
    }
    std::ostringstream out;
    char line[256];
    if (!report.condition.empty())
    {
        out << "condition: " << report.condition << '\n';
    }
    std::snprintf(line, sizeof line, "%-*s %12s %12s %12s %6s\n", static_cast<int>(width), "metric", "mean", "std",
                  "ci95", "n");
    out << line;
    for (const auto& [name, a] : report.metrics)
    {
        if (a.n == 0)
        {
            std::snprintf(line, sizeof line, "%-*s %12s %12s %12s %6d\n", static_cast<int>(width), name.c_str(), "n/a",
                          "n/a", "n/a", 0);
        }
        else
        {
            std::snprintf(line, sizeof line, "%-*s %12.4f %12.4f %12.4f %6zu\n", static_cast<int>(width),
                          name.c_str(), a.mean, a.stddev, a.ci95, a.n);
        }
        out << line;
    }
    if (report.phone_classes)
    {
        out << '\n';
        std::snprintf(line, sizeof line, "%-8s %-10s %8s %10s %10s %10s %10s\n", "class", "coil", "count", "mean",
                      "median", "q1", "q3");
        out << line;
        for (const auto& b : report.phone_classes->buckets)
        {
            if (const auto s = b.summary())
            {
                std::snprintf(line, sizeof line, "%-8s %-10s %8zu %10.4f %10.4f %10.4f %10.4f\n",
                              to_string(b.phone_class), b.coil.c_str(), b.count(), s->mean, s->median, s->q1, s->q3);
            }
            else
            {
                std::snprintf(line, sizeof line, "%-8s %-10s %8d %10s %10s %10s %10s\n", to_string(b.phone_class),
                              b.coil.c_str(), 0, "-", "-", "-", "-");
            }
            out << line;
        }
    }
    return out.str();
}

} // namespace articulate
