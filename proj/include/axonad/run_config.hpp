#pragma once

#include "axonad/model.hpp"
#include "axonad/scoring.hpp"
#include "axonad/synth.hpp"
#include "axonad/training.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string_view>

namespace axonad {

struct SplitConfig {
    double train_fraction = 0.5;
    double val_fraction = 0.2;  // of the training segment, taken from its end
    friend bool operator==(const SplitConfig&, const SplitConfig&) = default;
};

struct ScoreConfig {
    ScoreMode mode = ScoreMode::combined;
    AlignmentMode align = AlignmentMode::center;
    friend bool operator==(const ScoreConfig&, const ScoreConfig&) = default;
};

/// Everything a run needs, under the JSON sections `model`, `train`,
/// `generator`, `split` and `score`, plus the top-level `seed`. The seed
/// drives initialization, shuffling, masking and dropout.
struct RunConfig {
    std::uint64_t seed = 2024;
    ModelConfig model;
    TrainConfig train;
    GeneratorConfig generator;
    SplitConfig split;
    ScoreConfig score;

    /// Training configuration with the run seed applied.
    TrainConfig train_config() const {
        TrainConfig t = train;
        t.seed = seed;
        return t;
    }
    void validate() const;
    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Full config with every default spelled out.
nlohmann::json to_json(const RunConfig& cfg);

/// Missing keys keep their defaults. Unknown keys and ill-typed values throw
/// `E_CONFIG` naming the key path (e.g. `train.mask_ratio`).
RunConfig run_config_from_json(const nlohmann::json& j);

/// Reads a JSON file; an empty path yields the defaults.
RunConfig load_run_config(const std::filesystem::path& path);

/// Sets one dotted key (`model.heads`, `seed`, ...) with the same checks.
void apply_override(RunConfig& cfg, std::string_view key_path, const nlohmann::json& value);

nlohmann::json to_json(const Calibration& cal);
Calibration calibration_from_json(const nlohmann::json& j);

}  // namespace axonad
