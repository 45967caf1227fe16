#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "mrcd/config.hpp"
#include "mrcd/errors.hpp"

using namespace mrcd;
using nlohmann::json;
namespace fs = std::filesystem;

TEST_CASE("defaults mirror the published hyperparameters") {
    AppConfig c = AppConfig::from_json(json::object());
    CHECK(c.run.omega == doctest::Approx(0.8));
    CHECK(c.run.rounds == 3);
    CHECK(c.run.k == 4);
    CHECK(c.run.slm_hyper.learning_rate == doctest::Approx(1e-3));
    CHECK(c.run.slm_hyper.weight_decay == doctest::Approx(1e-4));
    CHECK(c.run.slm_hyper.batch_size == 32);
    CHECK(c.llm_backend == "mock");
    CHECK(c.slm_backend == "linear");
    CHECK_FALSE(c.allow_live);
    CHECK(c.wiki_enabled);
    CHECK(c.run.vocab.positive_term == "realistic");
    CHECK(c.run.vocab.negative_term == "unrealistic");
}

TEST_CASE("a full config file parses field for field") {
    fs::path path = fs::temp_directory_path() / "mrcd_cfg_full.json";
    std::ofstream(path) << R"({
      "dataset": "data/news.jsonl",
      "split_cutoff": 1700000000,
      "corpus": "data/corpus.jsonl",
      "cache_dir": "my_cache",
      "allow_live": true,
      "run_dir": "out",
      "search": {"enabled": true, "base_url": "http://localhost:9001",
                 "api_key_env": "MY_SEARCH_KEY", "market": "en-GB"},
      "wiki": {"enabled": false, "language": "de"},
      "llm": {"backend": "oracle", "oracle": {"accuracy": 0.9, "seed": 4,
              "confidence": {"correct_lo": 0.8}}},
      "slm": {"backend": "oracle", "oracle": {"accuracy": 0.7, "finetune_gain": 3.0}},
      "run": {"omega": 0.75, "rounds": 2, "k": 6, "seed": 13,
              "positive_term": "plausible", "negative_term": "implausible",
              "ablations": {"knowledge": false},
              "strict_inequality": true,
              "hyper": {"epochs": 40, "learning_rate": 0.05}}
    })";
    AppConfig c = AppConfig::from_file(path);
    CHECK(c.dataset == "data/news.jsonl");
    CHECK(c.split_cutoff == 1700000000);
    CHECK(c.corpus == "data/corpus.jsonl");
    CHECK(c.cache_dir == "my_cache");
    CHECK(c.allow_live);
    CHECK(c.run_dir == "out");
    CHECK(c.search.enabled);
    CHECK(c.search.base_url == "http://localhost:9001");
    CHECK(c.search.api_key_env == "MY_SEARCH_KEY");
    CHECK(c.search.market == "en-GB");
    CHECK_FALSE(c.wiki_enabled);
    CHECK(c.wiki.language == "de");
    CHECK(c.llm_backend == "oracle");
    CHECK(c.llm_oracle.accuracy == doctest::Approx(0.9));
    CHECK(c.llm_oracle.seed == 4);
    CHECK(c.llm_oracle.confidence.correct_lo == doctest::Approx(0.8));
    CHECK(c.llm_oracle.confidence.correct_hi == doctest::Approx(1.0));
    CHECK(c.slm_backend == "oracle");
    CHECK(c.slm_oracle.finetune_gain == doctest::Approx(3.0));
    CHECK(c.run.omega == doctest::Approx(0.75));
    CHECK(c.run.rounds == 2);
    CHECK(c.run.k == 6);
    CHECK(c.run.seed == 13);
    CHECK(c.run.vocab.positive_term == "plausible");
    CHECK_FALSE(c.run.ablations.knowledge);
    CHECK(c.run.ablations.demonstrations);
    CHECK(c.run.selection.strict_inequality);
    CHECK(c.run.slm_hyper.epochs == 40);
    CHECK(c.run.slm_hyper.learning_rate == doctest::Approx(0.05));
    CHECK(c.run.slm_hyper.weight_decay == doctest::Approx(1e-4));
}

TEST_CASE("unknown keys are rejected at every level") {
    CHECK_THROWS_WITH_AS(AppConfig::from_json({{"datset", "x"}}),
                         doctest::Contains("datset"), ConfigError);
    CHECK_THROWS_WITH_AS(AppConfig::from_json({{"run", {{"omga", 0.8}}}}),
                         doctest::Contains("omga"), ConfigError);
    CHECK_THROWS_WITH_AS(
        AppConfig::from_json({{"run", {{"ablations", {{"knowldge", false}}}}}}),
        doctest::Contains("knowldge"), ConfigError);
    CHECK_THROWS_WITH_AS(AppConfig::from_json({{"llm", {{"api_key", "sk-123"}}}}),
                         doctest::Contains("api_key"), ConfigError);
    CHECK_THROWS_WITH_AS(AppConfig::from_json({{"run", {{"hyper", {{"lr", 0.1}}}}}}),
                         doctest::Contains("lr"), ConfigError);
}

TEST_CASE("backend names are validated") {
    CHECK_THROWS_AS(AppConfig::from_json({{"llm", {{"backend", "gpt"}}}}), ConfigError);
    CHECK_THROWS_AS(AppConfig::from_json({{"slm", {{"backend", "bert"}}}}), ConfigError);
}

TEST_CASE("environment interpolation") {
    setenv("MRCD_TEST_TOKEN", "s3cret", 1);
    CHECK(interpolate_env(std::string("plain")) == "plain");
    CHECK(interpolate_env(std::string("${MRCD_TEST_TOKEN}")) == "s3cret");
    CHECK(interpolate_env(std::string("a-${MRCD_TEST_TOKEN}-b")) == "a-s3cret-b");
    CHECK(interpolate_env(std::string("${MRCD_TEST_TOKEN}${MRCD_TEST_TOKEN}")) ==
          "s3crets3cret");

    unsetenv("MRCD_TEST_MISSING");
    CHECK_THROWS_WITH_AS(interpolate_env(std::string("${MRCD_TEST_MISSING}")),
                         doctest::Contains("MRCD_TEST_MISSING"), ConfigError);
    CHECK_THROWS_AS(interpolate_env(std::string("${unterminated")), ConfigError);
    CHECK_THROWS_AS(interpolate_env(std::string("${}")), ConfigError);

    json nested = {{"a", "${MRCD_TEST_TOKEN}"},
                   {"b", {{"c", json::array({"x", "${MRCD_TEST_TOKEN}"})}}},
                   {"n", 5}};
    json out = interpolate_env(nested);
    CHECK(out.at("a") == "s3cret");
    CHECK(out.at("b").at("c")[1] == "s3cret");
    CHECK(out.at("n") == 5);
}

TEST_CASE("interpolation reaches nested config values") {
    setenv("MRCD_TEST_URL", "http://localhost:7777", 1);
    AppConfig c = AppConfig::from_json({{"search", {{"base_url", "${MRCD_TEST_URL}"}}}});
    CHECK(c.search.base_url == "http://localhost:7777");
    unsetenv("MRCD_TEST_GONE");
    CHECK_THROWS_AS(
        AppConfig::from_json({{"search", {{"base_url", "${MRCD_TEST_GONE}"}}}}),
        ConfigError);
}

TEST_CASE("missing and malformed config files") {
    CHECK_THROWS_AS(AppConfig::from_file("/nonexistent/config.json"), ConfigError);
    fs::path path = fs::temp_directory_path() / "mrcd_cfg_bad.json";
    std::ofstream(path) << "{oops";
    CHECK_THROWS_AS(AppConfig::from_file(path), ConfigError);
}
