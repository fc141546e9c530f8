/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: include/articulate/metrics.hpp
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

#include "articulate/ema.hpp"
#include "articulate/io.hpp"
#include "articulate/tensor.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace articulate {

/// Phone-level duration RMSE in ms. Throws DataError at the first phone where the label sequences diverge.
double duration_rmse(const Segmentation& reference, const Segmentation& hypothesis);

/// Percentage of frames where exactly one series is voiced (value > 0).
double vuv_rate(const Vector& reference, const Vector& hypothesis);

/// RMSE in Hz over all frames, unvoiced frames counting as 0.
double rmse_hz(const Vector& reference, const Vector& hypothesis);

/// RMSE in Hz over frames voiced in both series; absent when there are none.
std::optional<double> rmse_hz_voiced(const Vector& reference, const Vector& hypothesis);

/// RMSE of 1200 log2(r / s) over frames voiced in both series; absent when there are none.
std::optional<double> rmse_cent(const Vector& reference, const Vector& hypothesis);

/// Mel-cepstral distortion in dB over T x M frames, excluding the first coefficient.
double mcd(const Matrix& reference, const Matrix& hypothesis);

/// Per-frame Euclidean distance of one coil, mm.
std::vector<double> coil_distances(const EmaRecording& reference, const EmaRecording& hypothesis,
                                   const std::string& coil);

struct CoilStats
{
    std::string coil;
    double mean = 0.0;
    double stddev = 0.0; ///< population, over frames
    std::size_t frames = 0;
};

std::vector<CoilStats> euclidean_stats(const EmaRecording& reference, const EmaRecording& hypothesis,
                                       const std::vector<std::string>& coils);

/// Per coil: RMSE of first-difference vectors, mm per frame. Zero for recordings shorter than two frames.
std::vector<double> dynamics_rmse(const EmaRecording& reference, const EmaRecording& hypothesis,
                                  const std::vector<std::string>& coils);

struct DistributionSummary
{
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
};

/// Linear-interpolation quantiles. Requires a non-empty sample.
DistributionSummary summarize(std::vector<double> values);

struct ClassBucket
{
    PhoneClass phone_class = PhoneClass::other;
    std::string coil;
    std::vector<double> values;

    std::size_t count() const { return values.size(); }
    std::optional<DistributionSummary> summary() const;
};

struct PhoneClassReport
{
    std::vector<ClassBucket> buckets; ///< class-major, every (class, coil) pair present
    std::size_t unlabelled_frames = 0; ///< frames outside all segments, counted as silence
};

/**
 * Buckets per-frame distances by the phone class of the segment covering each frame. Segment i
 * covers frames round(start * rate) .. round(end * rate) - 1.
 */
PhoneClassReport phone_class_report(const std::map<std::string, std::vector<double>>& distances,
                                    const Segmentation& seg, double frame_rate,
                                    const PhoneClassTable& table = PhoneClassTable::defaults());

/// Appends the frames of `more` into `into`; both must cover the same coils.
void merge(PhoneClassReport& into, const PhoneClassReport& more);

struct Aggregate
{
    double mean = 0.0;
    double stddev = 0.0;     ///< sample standard deviation over utterances
    double ci95 = 0.0;       ///< 1.96 * stddev / sqrt(n)
    std::size_t n = 0;
};

Aggregate aggregate(const std::vector<double>& values);

struct MetricsReport
{
    std::string condition;
    std::vector<std::pair<std::string, Aggregate>> metrics; ///< in insertion order
    std::optional<PhoneClassReport> phone_classes;
    std::map<std::string, std::size_t> frame_counts;
};

/// Collects per-utterance values; each utterance weighs equally in the aggregate.
class MetricsAccumulator
{
public:
    void add(const std::string& metric, double value);
    void add(const std::string& metric, const std::optional<double>& value);
    MetricsReport finish(std::string condition) const;

private:
    std::vector<std::pair<std::string, std::vector<double>>> values_;
};

Json metrics_report_to_json(const MetricsReport& report);
/// Aligned columns: metric, mean, std, ci95, n.
std::string metrics_report_to_table(const MetricsReport& report);

} // namespace articulate
