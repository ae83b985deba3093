#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cfa/graph.hpp"
#include "cfa/vgae.hpp"

namespace cfa {

// Tool configuration; defaults are the trained-system hyperparameters.
// Every value can be overridden by a CLI flag; unknown JSON keys are
// rejected so typos fail loudly.
struct Config {
    std::string corpus_path;
    std::string model_path;
    std::string profile_path;
    std::string reports_path;
    TrainConfig train;
    bool constant_16th_feature = false;
    std::uint64_t seed = 0;
    std::string log_level = "info";

    FeatureOptions feature_options() const {
        return FeatureOptions{constant_16th_feature};
    }
};

Config parse_config(const std::string& json_text);
Config load_config(const std::filesystem::path& path);

}  // namespace cfa
