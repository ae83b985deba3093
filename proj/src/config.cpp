#include "cfa/config.hpp"

#include <fstream>
#include <sstream>

#include "cfa/errors.hpp"
#include "json.hpp"

namespace cfa {

namespace {

void reject_unknown(const nlohmann::json& obj,
                    std::initializer_list<const char*> allowed,
                    const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok |= key == a;
        if (!ok)
            throw ConfigError("unknown config key '" + key + "' in " + where);
    }
}

}  // namespace

Config parse_config(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(doc,
                   {"paths", "train", "constant_16th_feature", "seed",
                    "log_level"},
                   "top level");

    Config cfg;
    if (doc.contains("paths")) {
        const auto& paths = doc.at("paths");
        reject_unknown(paths, {"corpus", "model", "profile", "reports"},
                       "paths");
        cfg.corpus_path = paths.value("corpus", "");
        cfg.model_path = paths.value("model", "");
        cfg.profile_path = paths.value("profile", "");
        cfg.reports_path = paths.value("reports", "");
    }
    if (doc.contains("train")) {
        const auto& train = doc.at("train");
        reject_unknown(train,
                       {"max_epochs", "patience", "lr0", "lr_decay_factor",
                        "lr_decay_every", "lr_fixed_after",
                        "negative_sampling_ratio"},
                       "train");
        cfg.train.max_epochs = train.value("max_epochs", cfg.train.max_epochs);
        cfg.train.patience = train.value("patience", cfg.train.patience);
        cfg.train.lr0 = train.value("lr0", cfg.train.lr0);
        cfg.train.lr_decay_factor =
            train.value("lr_decay_factor", cfg.train.lr_decay_factor);
        cfg.train.lr_decay_every =
            train.value("lr_decay_every", cfg.train.lr_decay_every);
        cfg.train.lr_fixed_after =
            train.value("lr_fixed_after", cfg.train.lr_fixed_after);
        cfg.train.negative_sampling_ratio = train.value(
            "negative_sampling_ratio", cfg.train.negative_sampling_ratio);
        cfg.train.validate();
    }
    cfg.constant_16th_feature =
        doc.value("constant_16th_feature", cfg.constant_16th_feature);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.log_level = doc.value("log_level", cfg.log_level);
    if (cfg.log_level != "debug" && cfg.log_level != "info" &&
        cfg.log_level != "warn" && cfg.log_level != "error")
        throw ConfigError("log_level must be debug|info|warn|error");
    return cfg;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace cfa
