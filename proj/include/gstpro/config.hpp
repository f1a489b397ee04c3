#pragma once

#include <string>

#include "gstpro/model.hpp"
#include "gstpro/trainer.hpp"

namespace gstpro {

/// Flat key=value run configuration: model architecture, training loop and
/// scorer settings, plus optional default paths. Unknown keys are rejected.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    int scorer_window = 50000;
    double sigma_floor = 1e-4;

    std::string train_path;
    std::string test_path;
    std::string labels_path;
    std::string model_path;
    std::string scores_path;
    std::string report_path;
    std::string out_dir;
};

/// Parse a config file: one key=value per line, '#' comments, UTF-8.
RunConfig parse_run_config(const std::string& path);

/// Apply one key=value assignment; throws on unknown keys or bad values.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

/// Human-readable list of every key with its default, for --help.
std::string run_config_help();

}  // namespace gstpro
