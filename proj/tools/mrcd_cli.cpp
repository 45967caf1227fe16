#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "mrcd/config.hpp"
#include "mrcd/det.hpp"
#include "mrcd/errors.hpp"
#include "mrcd/orchestrator.hpp"
#include "mrcd/simharness.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace mrcd;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitBackend = 3;
constexpr int kExitIntegrity = 4;

// Everything the pipeline needs, built once from the resolved config.
// Optional members stay empty when the matching source is not configured or
// is ablated away.
struct Wiring {
    std::unique_ptr<ReplayCache> cache;
    std::optional<NewsSearchClient> search;
    std::optional<CorpusStore> corpus;
    std::optional<WikiClient> wiki;
    std::unique_ptr<LlmBackend> llm;
    std::unique_ptr<Slm> slm;
    std::optional<Retriever> retriever;
};

Wiring build_wiring(const AppConfig& cfg) {
    Wiring w;
    w.cache = std::make_unique<ReplayCache>(cfg.cache_dir, cfg.allow_live);
    if (cfg.search.enabled && cfg.run.ablations.search_engine) {
        w.search.emplace(cfg.search, *w.cache);
    }
    if (!cfg.corpus.empty() && cfg.run.ablations.news_corpus) {
        w.corpus.emplace(CorpusStore::load(cfg.corpus));
    }
    if (cfg.wiki_enabled && cfg.run.ablations.knowledge) {
        w.wiki.emplace(cfg.wiki, *w.cache);
    }

    if (cfg.llm_backend == "mock") {
        if (!cfg.llm_script.empty()) {
            w.llm = std::make_unique<MockLlmBackend>(
                MockLlmBackend::from_script(cfg.llm_script, cfg.llm_fallback));
        } else {
            w.llm = std::make_unique<MockLlmBackend>(cfg.llm_fallback);
        }
    } else if (cfg.llm_backend == "remote") {
        if (cfg.llm_remote.base_url.empty()) {
            throw ConfigError("llm.base_url is required for the remote backend");
        }
        w.llm = std::make_unique<RemoteLlmBackend>(cfg.llm_remote);
    } else {
        OracleConfig oc = cfg.llm_oracle;
        if (oc.seed == 0) oc.seed = det::mix(cfg.run.seed, "llm-oracle");
        w.llm = std::make_unique<OracleLlmBackend>(oc);
    }

    if (cfg.slm_backend == "linear") {
        w.slm = std::make_unique<LinearSlm>();
    } else if (cfg.slm_backend == "remote") {
        if (cfg.slm_remote.base_url.empty()) {
            throw ConfigError("slm.base_url is required for the remote backend");
        }
        w.slm = std::make_unique<RemoteSlm>(cfg.slm_remote);
    } else {
        OracleConfig oc = cfg.slm_oracle;
        if (oc.seed == 0) oc.seed = det::mix(cfg.run.seed, "slm-oracle");
        w.slm = std::make_unique<OracleSlm>(oc);
    }

    Retriever::Options opts;
    opts.search_limit = cfg.run.search_limit;
    opts.corpus_limit = cfg.run.search_limit;
    opts.max_entities = cfg.run.max_entities;
    opts.use_search = w.search.has_value();
    opts.use_corpus = w.corpus.has_value();
    opts.unlabeled_demos = cfg.run.unlabeled_demos;
    w.retriever.emplace(w.search ? &*w.search : nullptr, w.corpus ? &*w.corpus : nullptr,
                        w.wiki ? &*w.wiki : nullptr,
                        cfg.run.ablations.knowledge ? w.llm.get() : nullptr, opts);
    w.retriever->set_warning_sink([](const std::string& msg) {
        std::cerr << "warning: " << msg << '\n';
    });
    return w;
}

Dataset load_input_dataset(const AppConfig& cfg) {
    if (cfg.dataset.empty()) throw ConfigError("a dataset path is required");
    if (!cfg.split_cutoff) {
        throw ConfigError("split_cutoff is required (config key or --split-cutoff)");
    }
    return load_dataset(cfg.dataset, *cfg.split_cutoff);
}

std::map<std::string, Label> gold_labels(const Dataset& d, bool future_only) {
    std::map<std::string, Label> gold;
    for (const NewsItem& item : d.items) {
        if (future_only && item.timestamp <= d.split_cutoff) continue;
        if (item.gold_label) gold.emplace(item.id, *item.gold_label);
    }
    return gold;
}

void write_labels(const std::map<std::string, Label>& labels, const fs::path& path) {
    json out = json::object();
    for (const auto& [id, label] : labels) out[id] = to_string(label);
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << out.dump(2) << '\n';
}

std::map<std::string, Label> read_labels(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open labels file: " + path.string());
    json j;
    try {
        f >> j;
    } catch (const json::parse_error& e) {
        throw ParseError("malformed labels file " + path.string() + ": " + e.what());
    }
    std::map<std::string, Label> labels;
    for (const auto& [id, label] : j.items()) {
        labels.emplace(id, label_from_string(label.get<std::string>()));
    }
    return labels;
}

void write_summary(const AppConfig& cfg, const RunResult& result, const ReplayCache& cache) {
    json reports = json::array();
    for (const RoundReport& r : result.reports) reports.push_back(r.to_json());
    json summary{{"config", cfg.run.to_json()},
                 {"seed", cfg.run.seed},
                 {"cache_digest", cache.digest()},
                 {"completed", result.completed},
                 {"reports", reports}};
    std::ofstream f(cfg.run_dir / "summary.json");
    f << summary.dump(2) << '\n';
}

void print_result(const Dataset& dataset, const RunResult& result) {
    for (const RoundReport& r : result.reports) {
        std::cout << "round " << r.round << ": evaluated=" << r.evaluated
                  << " clean=" << r.clean_size << " noisy=" << r.noisy_size
                  << " transfers=" << r.transfers_in << " deferred=" << r.deferred
                  << " slm_version=" << r.slm_version << '\n';
    }
    if (!result.completed) {
        std::cout << "stopped early; resume to finish\n";
        return;
    }
    auto gold = gold_labels(dataset, true);
    std::map<std::string, Metrics> rows;
    std::map<std::string, Label> graded;
    for (const auto& [id, label] : result.final_labels) {
        if (gold.count(id) != 0) graded.emplace(id, label);
    }
    if (!graded.empty()) {
        rows.emplace("final", evaluate(graded, gold));
        std::cout << render_metrics_table(rows);
    } else {
        std::cout << "no gold labels on future items; metrics skipped\n";
    }
}

int cmd_run(const AppConfig& cfg, std::optional<int> stop_after, const fs::path& out,
            bool require_state) {
    Dataset dataset = load_input_dataset(cfg);
    Wiring w = build_wiring(cfg);
    Orchestrator orch(*w.slm, *w.llm, *w.retriever);
    orch.set_log_sink([](const std::string& msg) { std::cerr << msg << '\n'; });

    RunResult result;
    try {
        result = require_state ? orch.resume(dataset, cfg.run, cfg.run_dir)
                               : orch.run(dataset, cfg.run, cfg.run_dir, stop_after);
    } catch (const BackendError& e) {
        std::cerr << "error: " << e.what() << '\n'
                  << "partial state kept in " << cfg.run_dir.string()
                  << "; rerun `resume` once the backend recovers\n";
        return kExitBackend;
    }
    write_summary(cfg, result, *w.cache);
    if (result.completed) {
        fs::path labels_path = out.empty() ? cfg.run_dir / "labels.json" : out;
        write_labels(result.final_labels, labels_path);
        std::cout << "labels written to " << labels_path.string() << '\n';
    }
    print_result(dataset, result);
    return kExitOk;
}

struct SimOutcome {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
};

SimOutcome run_sim_cell(const AppConfig& base, const Dataset& dataset, const fs::path& dir) {
    AppConfig cfg = base;
    cfg.run_dir = dir;
    Wiring w = build_wiring(cfg);
    Orchestrator orch(*w.slm, *w.llm, *w.retriever);
    RunResult result = orch.run(dataset, cfg.run, dir);
    auto gold = gold_labels(dataset, true);
    Metrics m = evaluate(result.final_labels, gold);
    return {m.accuracy, m.macro_f1};
}

int cmd_simulate(AppConfig cfg, const SyntheticSpec& spec, std::size_t corpus_docs,
                 bool sweep, const fs::path& out) {
    Dataset dataset = generate(spec);
    fs::create_directories(cfg.run_dir);
    save_dataset(dataset, cfg.run_dir / "synthetic.jsonl");

    if (cfg.corpus.empty() && cfg.run.ablations.news_corpus) {
        fs::path corpus_path = cfg.run_dir / "synthetic_corpus.jsonl";
        generate_corpus(spec, corpus_docs, corpus_path);
        cfg.corpus = corpus_path;
    }
    cfg.search.enabled = false;  // simulation is self-contained
    cfg.wiki_enabled = false;
    if (cfg.llm_backend == "remote") cfg.llm_backend = "oracle";
    if (cfg.slm_backend == "remote") cfg.slm_backend = "oracle";
    cfg.dataset = cfg.run_dir / "synthetic.jsonl";
    cfg.split_cutoff = dataset.split_cutoff;

    if (!sweep) {
        AppConfig cell = cfg;
        cell.run_dir = cfg.run_dir / "sim";
        Wiring w = build_wiring(cell);
        Orchestrator orch(*w.slm, *w.llm, *w.retriever);
        orch.set_log_sink([](const std::string& msg) { std::cerr << msg << '\n'; });
        RunResult result = orch.run(dataset, cell.run, cell.run_dir);
        write_summary(cell, result, *w.cache);
        if (!out.empty()) write_labels(result.final_labels, out);
        print_result(dataset, result);
        return kExitOk;
    }

    std::cout << "rounds";
    const double omegas[] = {0.6, 0.7, 0.8, 0.9};
    for (double omega : omegas) {
        std::cout << "  acc@" << omega;
    }
    std::cout << '\n';
    json grid = json::array();
    for (int rounds = 1; rounds <= 5; ++rounds) {
        std::cout << rounds;
        for (double omega : omegas) {
            AppConfig cell = cfg;
            cell.run.rounds = rounds;
            cell.run.omega = omega;
            char name[48];
            std::snprintf(name, sizeof(name), "sweep_r%d_w%02d", rounds,
                          static_cast<int>(omega * 100 + 0.5));
            SimOutcome o = run_sim_cell(cell, dataset, cfg.run_dir / name);
            std::cout << "  " << o.accuracy;
            grid.push_back({{"rounds", rounds},
                            {"omega", omega},
                            {"accuracy", o.accuracy},
                            {"macro_f1", o.macro_f1}});
        }
        std::cout << '\n';
    }
    std::ofstream f(cfg.run_dir / "sweep.json");
    f << grid.dump(2) << '\n';
    if (!out.empty()) {
        std::ofstream g(out);
        g << grid.dump(2) << '\n';
    }
    return kExitOk;
}

int cmd_evaluate(const AppConfig& cfg, const fs::path& pred_path) {
    Dataset dataset = load_input_dataset(cfg);
    auto gold = gold_labels(dataset, false);
    auto pred = read_labels(pred_path);
    std::map<std::string, Metrics> rows;
    rows.emplace(pred_path.filename().string(), evaluate(pred, gold));
    std::cout << render_metrics_table(rows);
    return kExitOk;
}

int cmd_compare(const AppConfig& cfg, const fs::path& a_path, const fs::path& b_path) {
    Dataset dataset = load_input_dataset(cfg);
    auto gold = gold_labels(dataset, false);
    auto a = read_labels(a_path);
    auto b = read_labels(b_path);
    std::map<std::string, Metrics> rows;
    rows.emplace("a: " + a_path.filename().string(), evaluate(a, gold));
    rows.emplace("b: " + b_path.filename().string(), evaluate(b, gold));
    std::cout << render_metrics_table(rows);

    std::size_t shared = 0, same = 0;
    for (const auto& [id, label] : a) {
        auto it = b.find(id);
        if (it == b.end()) continue;
        ++shared;
        if (it->second == label) ++same;
    }
    if (shared > 0) {
        std::cout << "agreement: " << same << "/" << shared << " ("
                  << static_cast<double>(same) / static_cast<double>(shared) << ")\n";
    }
    return kExitOk;
}

int cmd_cache_warm(const AppConfig& cfg) {
    if (!cfg.allow_live) {
        throw ConfigError("cache warm needs allow_live (there is nothing to fetch from)");
    }
    Dataset dataset = load_input_dataset(cfg);
    Wiring w = build_wiring(cfg);
    auto split = temporal_split(dataset);
    std::size_t ok = 0, failed = 0;
    for (const NewsItem& item : split.unlabeled) {
        try {
            w.retriever->demonstrations(item, 1, {}, cfg.run.k, cfg.run.vocab,
                                        det::mix(cfg.run.seed, "demos", det::fnv1a(item.id)));
            if (cfg.run.ablations.knowledge) w.retriever->knowledge(item);
            ++ok;
        } catch (const Error& e) {
            ++failed;
            std::cerr << "warning: " << item.id << ": " << e.what() << '\n';
        }
    }
    std::cout << "warmed " << ok << " items (" << failed << " failed), cache digest "
              << w.cache->digest() << '\n';
    return kExitOk;
}

int cmd_cache_verify(const AppConfig& cfg) {
    ReplayCache cache(cfg.cache_dir, false);
    auto bad = cache.verify();
    if (bad.empty()) {
        std::cout << "cache ok, digest " << cache.digest() << '\n';
        return kExitOk;
    }
    for (const std::string& name : bad) {
        std::cerr << "corrupt cache record: " << name << '\n';
    }
    return kExitIntegrity;
}

int cmd_cache_gc(const AppConfig& cfg, long long days) {
    ReplayCache cache(cfg.cache_dir, false);
    auto now = std::chrono::system_clock::now();
    std::int64_t cutoff =
        std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count() -
        days * 86400;
    std::size_t removed = cache.gc_older_than(cutoff);
    std::cout << "removed " << removed << " records\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-round LLM/SLM collaboration pipeline for emergent fake news"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file")->expected(1);

    // Flags shared by data-bearing subcommands; a set flag overrides the
    // config file, which overrides built-in defaults.
    std::string dataset_path, corpus_path, cache_dir, run_dir, out_path;
    std::int64_t split_cutoff = 0;
    double omega = 0.0;
    int rounds = 0, k = -1;
    std::uint64_t seed = 0;
    bool allow_live = false;
    bool no_demos = false, no_search = false, no_corpus = false, no_knowledge = false,
         no_multi_round = false;
    int stop_after = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--dataset", dataset_path, "news JSONL");
        cmd->add_option("--split-cutoff", split_cutoff, "temporal split cutoff (epoch seconds)");
        cmd->add_option("--corpus", corpus_path, "news corpus JSONL");
        cmd->add_option("--cache-dir", cache_dir, "replay cache directory");
        cmd->add_option("--run-dir", run_dir, "run state directory");
        cmd->add_option("--out", out_path, "output labels path");
        cmd->add_option("--omega", omega, "confidence threshold")->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--rounds", rounds, "collaboration rounds");
        cmd->add_option("--k", k, "demonstrations per item");
        cmd->add_option("--seed", seed, "master seed");
        cmd->add_flag("--allow-live", allow_live, "permit live provider fetches");
        cmd->add_flag("--no-demonstrations", no_demos, "ablate demonstrations");
        cmd->add_flag("--no-search", no_search, "ablate the search engine source");
        cmd->add_flag("--no-corpus", no_corpus, "ablate the news corpus source");
        cmd->add_flag("--no-knowledge", no_knowledge, "ablate wikipedia knowledge");
        cmd->add_flag("--no-multi-round", no_multi_round, "single round, no collaboration loop");
    };

    CLI::App* run_cmd = app.add_subcommand("run", "execute the multi-round pipeline");
    add_common(run_cmd);
    run_cmd->add_option("--stop-after-round", stop_after,
                        "persist state and stop after this round");

    CLI::App* resume_cmd = app.add_subcommand("resume", "continue an interrupted run");
    add_common(resume_cmd);

    CLI::App* sim_cmd = app.add_subcommand("simulate", "synthetic run with oracle backends");
    add_common(sim_cmd);
    std::string spec_path;
    std::size_t sim_items = 200, sim_events = 10, sim_corpus_docs = 8;
    double sim_drift = 0.4, sim_balance = 0.5, sim_purity = 0.75;
    std::uint64_t sim_seed = 1;
    bool sweep = false;
    sim_cmd->add_option("--spec", spec_path, "synthetic spec JSON");
    sim_cmd->add_option("--items", sim_items, "synthetic item count");
    sim_cmd->add_option("--events", sim_events, "synthetic event count");
    sim_cmd->add_option("--drift", sim_drift, "future vocabulary drift probability");
    sim_cmd->add_option("--balance", sim_balance, "fake fraction");
    sim_cmd->add_option("--purity", sim_purity, "class token purity");
    sim_cmd->add_option("--data-seed", sim_seed, "generator seed");
    sim_cmd->add_option("--corpus-docs", sim_corpus_docs, "corpus docs per event");
    sim_cmd->add_flag("--sweep", sweep, "sweep rounds x omega and print the grid");

    CLI::App* eval_cmd = app.add_subcommand("evaluate", "score a labels file against gold");
    add_common(eval_cmd);
    std::string pred_path;
    eval_cmd->add_option("--pred", pred_path, "predicted labels JSON")->required();

    CLI::App* compare_cmd = app.add_subcommand("compare", "compare two labels files");
    add_common(compare_cmd);
    std::string a_path, b_path;
    compare_cmd->add_option("--a", a_path, "first labels JSON")->required();
    compare_cmd->add_option("--b", b_path, "second labels JSON")->required();

    CLI::App* cache_cmd = app.add_subcommand("cache", "replay cache maintenance");
    CLI::App* warm_cmd = cache_cmd->add_subcommand("warm", "prefetch provider responses");
    add_common(warm_cmd);
    CLI::App* verify_cmd = cache_cmd->add_subcommand("verify", "check record integrity");
    add_common(verify_cmd);
    CLI::App* gc_cmd = cache_cmd->add_subcommand("gc", "drop records older than --days");
    add_common(gc_cmd);
    long long gc_days = 30;
    gc_cmd->add_option("--days", gc_days, "age cutoff in days");
    cache_cmd->require_subcommand(1);

    CLI11_PARSE(app, argc, argv);

    try {
        AppConfig cfg =
            config_path.empty() ? AppConfig{} : AppConfig::from_file(config_path);

        CLI::App* sub = app.get_subcommands().front();
        CLI::App* flag_scope = sub;
        if (sub == cache_cmd) flag_scope = sub->get_subcommands().front();
        auto passed = [&](const std::string& name) { return flag_scope->count(name) > 0; };

        if (passed("--dataset")) cfg.dataset = dataset_path;
        if (passed("--split-cutoff")) cfg.split_cutoff = split_cutoff;
        if (passed("--corpus")) cfg.corpus = corpus_path;
        if (passed("--cache-dir")) cfg.cache_dir = cache_dir;
        if (passed("--run-dir")) cfg.run_dir = run_dir;
        if (passed("--omega")) cfg.run.omega = omega;
        if (passed("--rounds")) cfg.run.rounds = rounds;
        if (passed("--k")) cfg.run.k = k;
        if (passed("--seed")) cfg.run.seed = seed;
        if (passed("--allow-live")) cfg.allow_live = true;
        if (passed("--no-demonstrations")) cfg.run.ablations.demonstrations = false;
        if (passed("--no-search")) cfg.run.ablations.search_engine = false;
        if (passed("--no-corpus")) cfg.run.ablations.news_corpus = false;
        if (passed("--no-knowledge")) cfg.run.ablations.knowledge = false;
        if (passed("--no-multi-round")) {
            cfg.run.ablations.multi_round = false;
            cfg.run.rounds = 1;
        }
        fs::path out = out_path;

        if (sub == run_cmd) {
            std::optional<int> stop;
            if (run_cmd->count("--stop-after-round") > 0) stop = stop_after;
            return cmd_run(cfg, stop, out, false);
        }
        if (sub == resume_cmd) return cmd_run(cfg, std::nullopt, out, true);
        if (sub == sim_cmd) {
            SyntheticSpec spec;
            if (!spec_path.empty()) {
                spec = SyntheticSpec::from_file(spec_path);
            } else {
                spec.n_items = sim_items;
                spec.events = sim_events;
                spec.drift = sim_drift;
                spec.balance = sim_balance;
                spec.token_purity = sim_purity;
                spec.seed = sim_seed;
            }
            // Without an explicit config, simulation defaults to the oracles.
            if (config_path.empty()) {
                if (cfg.llm_backend == "mock") cfg.llm_backend = "oracle";
                if (cfg.slm_backend == "linear") cfg.slm_backend = "oracle";
            }
            return cmd_simulate(cfg, spec, sim_corpus_docs, sweep, out);
        }
        if (sub == eval_cmd) return cmd_evaluate(cfg, pred_path);
        if (sub == compare_cmd) return cmd_compare(cfg, a_path, b_path);
        if (sub == cache_cmd) {
            CLI::App* op = cache_cmd->get_subcommands().front();
            if (op == warm_cmd) return cmd_cache_warm(cfg);
            if (op == verify_cmd) return cmd_cache_verify(cfg);
            return cmd_cache_gc(cfg, gc_days);
        }
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IntegrityError& e) {
        std::cerr << "integrity error: " << e.what() << '\n';
        return kExitIntegrity;
    } catch (const ProviderUnavailable& e) {
        std::cerr << "provider unavailable: " << e.what() << '\n';
        return kExitBackend;
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << '\n';
        return kExitBackend;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
