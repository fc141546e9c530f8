/*
 * articulate - multilinear tongue modelling and articulatory synthesis.
 *
 * File: tools/articulate.cpp
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

// Command-line front end: each subcommand is a thin wrapper over one pipeline stage.

#include "articulate/errors.hpp"
#include "articulate/pipeline.hpp"
#include "articulate/synthetic.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>

namespace {

using namespace articulate;
namespace fs = std::filesystem;

struct CommonOptions
{
    std::string config = "config.json";
    std::optional<std::size_t> jobs;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& opts)
{
    cmd->add_option("--config", opts.config, "Pipeline configuration file")->capture_default_str();
    cmd->add_option("--jobs", opts.jobs, "Worker threads (output is independent of this value)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", opts.seed, "Master seed (split and correspondence search)");
    cmd->add_option("--set", opts.overrides, "Config override key.path=value (repeatable)");
}

PipelineConfig load_config(const CommonOptions& opts)
{
    std::vector<std::string> overrides = opts.overrides;
    if (opts.jobs)
    {
        overrides.push_back("jobs=" + std::to_string(*opts.jobs));
    }
    if (opts.seed)
    {
        overrides.push_back("seed=" + std::to_string(*opts.seed));
    }
    return load_pipeline_config(opts.config, overrides);
}

DurationMode parse_mode(const std::string& s)
{
    if (s == "imposed")
    {
        return DurationMode::imposed;
    }
    if (s == "free")
    {
        return DurationMode::free;
    }
    throw UsageError("durations must be 'imposed' or 'free', got '" + s + "'");
}

// Runs a stage; on failure removes its outputs and maps the error category to an exit code.
int guarded(const std::function<void(OutputLog&)>& stage)
{
    OutputLog log;
    try
    {
        stage(log);
        return 0;
    } catch (const Error& e)
    {
        log.remove_all();
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const nlohmann::json::exception& e)
    {
        log.remove_all();
        std::fprintf(stderr, "error: malformed JSON: %s\n", e.what());
        return static_cast<int>(ErrorCategory::data);
    } catch (const std::exception& e)
    {
        log.remove_all();
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"articulate: multilinear tongue model fitting and articulatory synthesis"};
    app.require_subcommand(1);

    CommonOptions common;
    std::string durations = "imposed";
    std::string utterance;
    std::string source = "synth";
    std::string out_dir;
    std::string generator_config;
    std::optional<std::size_t> utterance_count;
    std::optional<double> jitter;
    std::vector<std::string> generator_overrides;
    std::vector<std::string> split_items;
    double split_fraction = 0.2;

    auto* build = app.add_subcommand("build-model", "Build the multilinear model from a mesh corpus");
    auto* correspond = app.add_subcommand("correspond", "Estimate the coil-to-vertex correspondence");
    auto* fit = app.add_subcommand("fit", "Fit every utterance with the 'fitting.fit' options");
    auto* speaker = app.add_subcommand("estimate-speaker", "Two-pass speaker estimation and pose trajectories");
    auto* train_cmd = app.add_subcommand("train", "Train the statistical model on the training split");
    auto* synth = app.add_subcommand("synth", "Synthesize the test split");
    auto* evaluate = app.add_subcommand("evaluate", "Compute the metrics report");
    auto* run = app.add_subcommand("run", "Run build-model through evaluate in order");
    auto* anim = app.add_subcommand("export-anim", "Write an OBJ frame sequence and trajectory sidecar");
    auto* make = app.add_subcommand("make-synthetic-corpus", "Generate a seeded synthetic corpus");
    auto* split = app.add_subcommand("split", "Print the seeded train/test split");

    for (auto* cmd : {build, correspond, fit, speaker, train_cmd, synth, evaluate, run, anim})
    {
        add_common(cmd, common);
    }
    synth->add_option("--durations", durations, "imposed or free")->capture_default_str();
    anim->add_option("--utterance", utterance, "Utterance id")->required();
    anim->add_option("--source", source, "synth or fit")->capture_default_str();
    anim->add_option("--out", out_dir, "Output directory")->required();

    make->add_option("--out", out_dir, "Output directory")->required();
    make->add_option("--seed", common.seed, "Generator seed");
    make->add_option("--config", generator_config, "Generator settings (JSON)");
    make->add_option("--utterances", utterance_count, "Number of utterances");
    make->add_option("--jitter", jitter, "Tongue coil jitter, mm");
    make->add_option("--set", generator_overrides, "Generator override key=value (repeatable)");

    split->add_option("items", split_items, "Utterance ids")->required();
    split->add_option("--fraction", split_fraction, "Test fraction")->capture_default_str();
    split->add_option("--seed", common.seed, "Shuffle seed");

    try
    {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ErrorCategory::usage);
    }

    if (*build)
    {
        return guarded([&](OutputLog& log) { run_build_model(load_config(common), log); });
    }
    if (*correspond)
    {
        return guarded([&](OutputLog& log) { run_correspond(load_config(common), log); });
    }
    if (*fit)
    {
        return guarded([&](OutputLog& log) { run_fit(load_config(common), log); });
    }
    if (*speaker)
    {
        return guarded([&](OutputLog& log) { run_estimate_speaker(load_config(common), log); });
    }
    if (*train_cmd)
    {
        return guarded([&](OutputLog& log) { run_train(load_config(common), log); });
    }
    if (*synth)
    {
        return guarded([&](OutputLog& log) { run_synth(load_config(common), parse_mode(durations), log); });
    }
    if (*evaluate)
    {
        return guarded([&](OutputLog& log) { std::cout << run_evaluate(load_config(common), log); });
    }
    if (*run)
    {
        const int code = guarded([&](OutputLog& log) {
            const PipelineConfig config = load_config(common);
            run_build_model(config, log);
            run_correspond(config, log);
            run_estimate_speaker(config, log);
            run_train(config, log);
            for (const auto& cond : config.conditions)
            {
                run_synth(config, parse_mode(cond), log);
            }
            std::cout << run_evaluate(config, log);
        });
        return code;
    }
    if (*anim)
    {
        return guarded(
            [&](OutputLog& log) { run_export_anim(load_config(common), utterance, source, out_dir, log); });
    }
    if (*make)
    {
        return guarded([&](OutputLog& log) {
            Json settings = Json::object();
            if (!generator_config.empty())
            {
                if (!fs::exists(generator_config))
                {
                    throw IoError("generator config not found: " + generator_config);
                }
                settings = read_json_file(generator_config);
            }
            for (const auto& o : generator_overrides)
            {
                apply_override(settings, o);
            }
            SyntheticConfig config = synthetic_config_from_json(settings);
            if (common.seed)
            {
                config.seed = *common.seed;
            }
            if (utterance_count)
            {
                config.utterances = *utterance_count;
            }
            if (jitter)
            {
                config.jitter_mm = *jitter;
            }
            const SyntheticCorpus corpus = make_synthetic_corpus(config);
            if (!fs::exists(out_dir))
            {
                log.record(out_dir); // a fresh directory is removed whole on failure
            }
            else
            {
                log.record(fs::path(out_dir) / "config.json");
                log.record(fs::path(out_dir) / "truth.json");
            }
            write_synthetic_corpus(corpus, config, out_dir);
            std::fprintf(stderr, "[make-synthetic-corpus] %zu utterances, oracle error %.4f mm\n",
                         corpus.utterances.size(), corpus.oracle_error_mm());
        });
    }
    if (*split)
    {
        return guarded([&](OutputLog&) {
            const Split s = split_corpus(split_items, split_fraction, common.seed.value_or(1));
            const Json j{{"train", s.train}, {"test", s.test}};
            std::cout << j.dump(1) << '\n';
        });
    }
    return static_cast<int>(ErrorCategory::usage);
}
