#include "cfa/config.hpp"

#include "cfa/errors.hpp"
#include "doctest.h"

using namespace cfa;

TEST_CASE("defaults are the trained-system hyperparameters") {
    Config cfg = parse_config("{}");
    CHECK(cfg.train.max_epochs == 3000);
    CHECK(cfg.train.patience == 500);
    CHECK(cfg.train.lr0 == doctest::Approx(0.01));
    CHECK(cfg.train.lr_decay_factor == doctest::Approx(3.0));
    CHECK(cfg.train.lr_decay_every == 150);
    CHECK(cfg.train.lr_fixed_after == 750);
    CHECK(cfg.train.negative_sampling_ratio == doctest::Approx(1.0));
    CHECK_FALSE(cfg.constant_16th_feature);
    CHECK(cfg.log_level == "info");
}

TEST_CASE("full config parses") {
    Config cfg = parse_config(R"({
        "paths": {"corpus": "c.json", "model": "m.json",
                  "profile": "p.json", "reports": "out/"},
        "train": {"max_epochs": 100, "patience": 50, "lr0": 0.02},
        "constant_16th_feature": true,
        "seed": 9,
        "log_level": "debug"
    })");
    CHECK(cfg.corpus_path == "c.json");
    CHECK(cfg.reports_path == "out/");
    CHECK(cfg.train.max_epochs == 100);
    CHECK(cfg.train.patience == 50);
    CHECK(cfg.train.lr0 == doctest::Approx(0.02));
    CHECK(cfg.constant_16th_feature);
    CHECK(cfg.seed == 9);
    CHECK(cfg.feature_options().feature_count() == 16);
}

TEST_CASE("unknown keys are rejected at any level") {
    CHECK_THROWS_AS(parse_config(R"({"surprise": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"train": {"lr": 0.1}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"paths": {"model2": "x"}})"), ConfigError);
}

TEST_CASE("invalid values are rejected") {
    CHECK_THROWS_AS(parse_config(R"({"log_level": "loud"})"), ConfigError);
    CHECK_THROWS_AS(
        parse_config(R"({"train": {"max_epochs": 10, "patience": 20}})"),
        ConfigError);
    CHECK_THROWS_AS(parse_config("not json"), ConfigError);
}
