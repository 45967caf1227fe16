#include "mrcd/config.hpp"

#include <cstdlib>
#include <fstream>
#include <initializer_list>

#include "mrcd/errors.hpp"

namespace mrcd {

using nlohmann::json;

std::string interpolate_env(const std::string& value) {
    std::string out;
    std::size_t pos = 0;
    while (pos < value.size()) {
        std::size_t open = value.find("${", pos);
        if (open == std::string::npos) {
            out.append(value, pos, std::string::npos);
            break;
        }
        std::size_t close = value.find('}', open + 2);
        if (close == std::string::npos) {
            throw ConfigError("unterminated ${ in config value: " + value);
        }
        out.append(value, pos, open - pos);
        std::string name = value.substr(open + 2, close - open - 2);
        if (name.empty()) throw ConfigError("empty ${} in config value: " + value);
        const char* env = std::getenv(name.c_str());
        if (env == nullptr) {
            throw ConfigError("environment variable " + name + " is not set");
        }
        out += env;
        pos = close + 1;
    }
    return out;
}

json interpolate_env(const json& j) {
    if (j.is_string()) return interpolate_env(j.get<std::string>());
    if (j.is_object()) {
        json out = json::object();
        for (const auto& [key, value] : j.items()) out[key] = interpolate_env(value);
        return out;
    }
    if (j.is_array()) {
        json out = json::array();
        for (const json& value : j) out.push_back(interpolate_env(value));
        return out;
    }
    return j;
}

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* name : allowed) {
            if (key == name) {
                known = true;
                break;
            }
        }
        if (!known) throw ConfigError("unknown key \"" + key + "\" in " + where);
    }
}

OracleConfig parse_oracle(const json& j, const std::string& where) {
    reject_unknown(j,
                   {"accuracy", "seed", "demo_sensitive", "demo_bonus", "difficulty_spread",
                    "finetune_gain", "finetune_pivot", "finetune_size_ref", "confidence"},
                   where);
    OracleConfig c;
    c.accuracy = j.value("accuracy", c.accuracy);
    c.seed = j.value("seed", c.seed);
    c.demo_sensitive = j.value("demo_sensitive", c.demo_sensitive);
    c.demo_bonus = j.value("demo_bonus", c.demo_bonus);
    c.difficulty_spread = j.value("difficulty_spread", c.difficulty_spread);
    c.finetune_gain = j.value("finetune_gain", c.finetune_gain);
    c.finetune_pivot = j.value("finetune_pivot", c.finetune_pivot);
    c.finetune_size_ref = j.value("finetune_size_ref", c.finetune_size_ref);
    if (j.contains("confidence")) {
        const json& m = j.at("confidence");
        reject_unknown(m, {"correct_lo", "correct_hi", "wrong_lo", "wrong_hi"},
                       where + ".confidence");
        c.confidence.correct_lo = m.value("correct_lo", c.confidence.correct_lo);
        c.confidence.correct_hi = m.value("correct_hi", c.confidence.correct_hi);
        c.confidence.wrong_lo = m.value("wrong_lo", c.confidence.wrong_lo);
        c.confidence.wrong_hi = m.value("wrong_hi", c.confidence.wrong_hi);
    }
    return c;
}

RunConfig parse_run(const json& j) {
    reject_unknown(j,
                   {"omega", "rounds", "k", "seed", "positive_term", "negative_term",
                    "unlabeled_demos", "max_entities", "search_limit", "ablations",
                    "require_agreement", "strict_inequality", "finetune_final_round",
                    "cumulative_finetune", "hyper"},
                   "run");
    RunConfig r;
    r.omega = j.value("omega", r.omega);
    r.rounds = j.value("rounds", r.rounds);
    r.k = j.value("k", r.k);
    r.seed = j.value("seed", r.seed);
    r.vocab.positive_term = j.value("positive_term", r.vocab.positive_term);
    r.vocab.negative_term = j.value("negative_term", r.vocab.negative_term);
    r.unlabeled_demos = j.value("unlabeled_demos", r.unlabeled_demos);
    r.max_entities = j.value("max_entities", r.max_entities);
    r.search_limit = j.value("search_limit", r.search_limit);
    r.selection.require_agreement = j.value("require_agreement", r.selection.require_agreement);
    r.selection.strict_inequality = j.value("strict_inequality", r.selection.strict_inequality);
    r.finetune_final_round = j.value("finetune_final_round", r.finetune_final_round);
    r.cumulative_finetune = j.value("cumulative_finetune", r.cumulative_finetune);
    if (j.contains("ablations")) {
        const json& a = j.at("ablations");
        reject_unknown(
            a, {"demonstrations", "search_engine", "news_corpus", "knowledge", "multi_round"},
            "run.ablations");
        r.ablations.demonstrations = a.value("demonstrations", r.ablations.demonstrations);
        r.ablations.search_engine = a.value("search_engine", r.ablations.search_engine);
        r.ablations.news_corpus = a.value("news_corpus", r.ablations.news_corpus);
        r.ablations.knowledge = a.value("knowledge", r.ablations.knowledge);
        r.ablations.multi_round = a.value("multi_round", r.ablations.multi_round);
    }
    if (j.contains("hyper")) {
        const json& h = j.at("hyper");
        reject_unknown(h, {"epochs", "learning_rate", "batch_size", "weight_decay"},
                       "run.hyper");
        r.slm_hyper.epochs = h.value("epochs", r.slm_hyper.epochs);
        r.slm_hyper.learning_rate = h.value("learning_rate", r.slm_hyper.learning_rate);
        r.slm_hyper.batch_size = h.value("batch_size", r.slm_hyper.batch_size);
        r.slm_hyper.weight_decay = h.value("weight_decay", r.slm_hyper.weight_decay);
    }
    return r;
}

}  // namespace

AppConfig AppConfig::from_json(const json& raw) {
    json j = interpolate_env(raw);
    reject_unknown(j,
                   {"dataset", "split_cutoff", "corpus", "cache_dir", "allow_live", "run_dir",
                    "search", "wiki", "llm", "slm", "run"},
                   "config");
    AppConfig c;
    if (j.contains("dataset")) c.dataset = j.at("dataset").get<std::string>();
    if (j.contains("split_cutoff")) c.split_cutoff = j.at("split_cutoff").get<std::int64_t>();
    if (j.contains("corpus")) c.corpus = j.at("corpus").get<std::string>();
    if (j.contains("cache_dir")) c.cache_dir = j.at("cache_dir").get<std::string>();
    c.allow_live = j.value("allow_live", c.allow_live);
    if (j.contains("run_dir")) c.run_dir = j.at("run_dir").get<std::string>();

    if (j.contains("search")) {
        const json& s = j.at("search");
        reject_unknown(s, {"enabled", "base_url", "path", "api_key_env", "market"}, "search");
        c.search.enabled = s.value("enabled", c.search.enabled);
        c.search.base_url = s.value("base_url", c.search.base_url);
        c.search.path = s.value("path", c.search.path);
        c.search.api_key_env = s.value("api_key_env", c.search.api_key_env);
        c.search.market = s.value("market", c.search.market);
    }
    if (j.contains("wiki")) {
        const json& w = j.at("wiki");
        reject_unknown(w, {"enabled", "language", "base_url"}, "wiki");
        c.wiki_enabled = w.value("enabled", c.wiki_enabled);
        c.wiki.language = w.value("language", c.wiki.language);
        c.wiki.base_url = w.value("base_url", c.wiki.base_url);
    }
    if (j.contains("llm")) {
        const json& l = j.at("llm");
        reject_unknown(
            l, {"backend", "base_url", "model", "api_key_env", "script", "fallback", "oracle"},
            "llm");
        c.llm_backend = l.value("backend", c.llm_backend);
        c.llm_remote.base_url = l.value("base_url", c.llm_remote.base_url);
        c.llm_remote.model = l.value("model", c.llm_remote.model);
        c.llm_remote.api_key_env = l.value("api_key_env", c.llm_remote.api_key_env);
        if (l.contains("script")) c.llm_script = l.at("script").get<std::string>();
        c.llm_fallback = l.value("fallback", c.llm_fallback);
        if (l.contains("oracle")) c.llm_oracle = parse_oracle(l.at("oracle"), "llm.oracle");
        if (c.llm_backend != "mock" && c.llm_backend != "remote" &&
            c.llm_backend != "oracle") {
            throw ConfigError("llm.backend must be mock, remote or oracle");
        }
    }
    if (j.contains("slm")) {
        const json& s = j.at("slm");
        reject_unknown(s, {"backend", "base_url", "api_key_env", "oracle"}, "slm");
        c.slm_backend = s.value("backend", c.slm_backend);
        c.slm_remote.base_url = s.value("base_url", c.slm_remote.base_url);
        c.slm_remote.api_key_env = s.value("api_key_env", c.slm_remote.api_key_env);
        if (s.contains("oracle")) c.slm_oracle = parse_oracle(s.at("oracle"), "slm.oracle");
        if (c.slm_backend != "linear" && c.slm_backend != "remote" &&
            c.slm_backend != "oracle") {
            throw ConfigError("slm.backend must be linear, remote or oracle");
        }
    }
    if (j.contains("run")) c.run = parse_run(j.at("run"));
    return c;
}

AppConfig AppConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed config " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

}  // namespace mrcd
