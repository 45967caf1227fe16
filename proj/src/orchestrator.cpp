#include "mrcd/orchestrator.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "mrcd/det.hpp"
#include "mrcd/errors.hpp"

namespace mrcd {

using nlohmann::json;
namespace fs = std::filesystem;

void RunConfig::validate() const {
    if (!(omega > 0.0 && omega < 1.0)) {
        throw ConfigError("omega must lie strictly between 0 and 1");
    }
    if (rounds < 1) throw ConfigError("rounds must be >= 1");
    if (k < 0) throw ConfigError("k must be >= 0");
    if (!ablations.multi_round && rounds > 1) {
        throw ConfigError("multi_round ablation requires rounds == 1");
    }
    vocab.validate(false);
}

json RunConfig::to_json() const {
    return json{{"omega", omega},
                {"rounds", rounds},
                {"k", k},
                {"vocab", {{"positive", vocab.positive_term}, {"negative", vocab.negative_term}}},
                {"unlabeled_demos", unlabeled_demos},
                {"ablations",
                 {{"demonstrations", ablations.demonstrations},
                  {"search_engine", ablations.search_engine},
                  {"news_corpus", ablations.news_corpus},
                  {"knowledge", ablations.knowledge},
                  {"multi_round", ablations.multi_round}}},
                {"selection",
                 {{"require_agreement", selection.require_agreement},
                  {"strict_inequality", selection.strict_inequality}}},
                {"slm_hyper",
                 {{"epochs", slm_hyper.epochs},
                  {"learning_rate", slm_hyper.learning_rate},
                  {"batch_size", slm_hyper.batch_size},
                  {"weight_decay", slm_hyper.weight_decay}}},
                {"seed", seed},
                {"max_entities", max_entities},
                {"search_limit", search_limit},
                {"finetune_final_round", finetune_final_round},
                {"cumulative_finetune", cumulative_finetune}};
}

json RoundReport::to_json() const {
    json j{{"round", round},
           {"evaluated", evaluated},
           {"clean_size", clean_size},
           {"noisy_size", noisy_size},
           {"transfers_in", transfers_in},
           {"deferred", deferred},
           {"slm_version", slm_version}};
    if (llm_metrics) j["llm_metrics"] = llm_metrics->to_json();
    if (slm_metrics) j["slm_metrics"] = slm_metrics->to_json();
    return j;
}

namespace {

Metrics metrics_from_json(const json& j) {
    Metrics m;
    m.accuracy = j.at("accuracy").get<double>();
    m.precision_fake = j.at("precision_fake").get<double>();
    m.recall_fake = j.at("recall_fake").get<double>();
    m.f1_fake = j.at("f1_fake").get<double>();
    m.precision_real = j.at("precision_real").get<double>();
    m.recall_real = j.at("recall_real").get<double>();
    m.f1_real = j.at("f1_real").get<double>();
    m.macro_f1 = j.at("macro_f1").get<double>();
    m.support_fake = j.at("support_fake").get<std::size_t>();
    m.support_real = j.at("support_real").get<std::size_t>();
    return m;
}

}  // namespace

RoundReport RoundReport::from_json(const json& j) {
    RoundReport r;
    r.round = j.at("round").get<int>();
    r.evaluated = j.at("evaluated").get<std::size_t>();
    r.clean_size = j.at("clean_size").get<std::size_t>();
    r.noisy_size = j.at("noisy_size").get<std::size_t>();
    r.transfers_in = j.at("transfers_in").get<std::size_t>();
    r.deferred = j.at("deferred").get<std::size_t>();
    r.slm_version = j.at("slm_version").get<int>();
    if (j.contains("llm_metrics")) r.llm_metrics = metrics_from_json(j.at("llm_metrics"));
    if (j.contains("slm_metrics")) r.slm_metrics = metrics_from_json(j.at("slm_metrics"));
    return r;
}

namespace {

std::string file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IntegrityError("missing file for integrity check: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return det::hex(det::fnv1a(ss.str()));
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IntegrityError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw IntegrityError("corrupt file " + path.string() + ": " + e.what());
    }
    return j;
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

class RunDir {
public:
    explicit RunDir(fs::path dir) : dir_(std::move(dir)) {}

    fs::path manifest() const { return dir_ / "manifest.json"; }
    fs::path result() const { return dir_ / "result.json"; }
    fs::path checksums() const { return dir_ / "checksums.json"; }
    fs::path pretrain_ckpt() const { return dir_ / "pretrain.ckpt"; }
    fs::path state(int r) const { return dir_ / ("round_" + std::to_string(r) + ".state.json"); }
    fs::path ckpt(int r) const { return dir_ / ("round_" + std::to_string(r) + ".ckpt"); }
    fs::path pools_audit(int r) const {
        return dir_ / ("round_" + std::to_string(r) + ".pools.jsonl");
    }

    void record_checksum(const fs::path& file) {
        json sums = fs::exists(checksums()) ? read_json_file(checksums()) : json::object();
        sums[file.filename().string()] = file_digest(file);
        write_json_file(checksums(), sums);
    }

    // Every checksummed file must match its recorded digest.
    void verify() const {
        if (!fs::exists(checksums())) return;
        json sums = read_json_file(checksums());
        for (const auto& [name, digest] : sums.items()) {
            fs::path file = dir_ / name;
            if (file_digest(file) != digest.get<std::string>()) {
                throw IntegrityError("integrity check failed for " + file.string());
            }
        }
    }

    int latest_state_round() const {
        int latest = 0;
        for (int r = 1; fs::exists(state(r)); ++r) latest = r;
        return latest;
    }

private:
    fs::path dir_;
};

struct RunState {
    DataPools pools;
    std::set<std::string> deferred;
    std::vector<RoundReport> reports;
};

json pools_to_json(const RunState& s) {
    json clean = json::array();
    for (const auto& [id, entry] : s.pools.clean) {
        clean.push_back({{"id", id},
                         {"label", to_string(entry.label)},
                         {"round_admitted", entry.round_admitted},
                         {"agreement", entry.model_agreement}});
    }
    return json{{"clean", clean},
                {"noisy", json(std::vector<std::string>(s.pools.noisy.begin(),
                                                        s.pools.noisy.end()))},
                {"deferred", json(std::vector<std::string>(s.deferred.begin(),
                                                           s.deferred.end()))}};
}

void pools_from_json(const json& j, RunState& s) {
    s.pools = {};
    s.deferred.clear();
    for (const json& entry : j.at("clean")) {
        s.pools.clean.emplace(entry.at("id").get<std::string>(),
                              CleanEntry{label_from_string(entry.at("label").get<std::string>()),
                                         entry.at("round_admitted").get<int>(),
                                         entry.at("agreement").get<bool>()});
    }
    for (const json& id : j.at("noisy")) s.pools.noisy.insert(id.get<std::string>());
    for (const json& id : j.at("deferred")) s.deferred.insert(id.get<std::string>());
}

std::optional<Metrics> metrics_or_null(const std::map<std::string, Label>& pred,
                                       const std::map<std::string, Label>& gold) {
    std::map<std::string, Label> graded;
    for (const auto& [id, label] : pred) {
        if (gold.count(id) != 0) graded.emplace(id, label);
    }
    if (graded.empty()) return std::nullopt;
    return evaluate(graded, gold);
}

}  // namespace

RunResult Orchestrator::resume(const Dataset& dataset, const RunConfig& config,
                               const fs::path& run_dir) {
    RunDir paths{run_dir};
    if (!fs::exists(paths.result()) && paths.latest_state_round() == 0) {
        throw ConfigError("no resumable state in " + run_dir.string());
    }
    return run(dataset, config, run_dir);
}

RunResult Orchestrator::run(const Dataset& dataset, const RunConfig& config,
                            const fs::path& run_dir, std::optional<int> stop_after_round) {
    config.validate();
    fs::create_directories(run_dir);
    RunDir paths{run_dir};

    auto split = temporal_split(dataset);
    if (split.unlabeled.empty()) {
        throw ValidationError("dataset has no unlabeled future items");
    }
    std::map<std::string, const NewsItem*> unlabeled_by_id;
    std::map<std::string, Label> gold;
    for (const NewsItem& item : split.unlabeled) {
        unlabeled_by_id.emplace(item.id, &item);
        if (item.gold_label) gold.emplace(item.id, *item.gold_label);
    }

    // A finished run is served from its stored result.
    if (fs::exists(paths.result())) {
        paths.verify();
        json stored = read_json_file(paths.result());
        RunResult result;
        result.completed = true;
        for (const auto& [id, label] : stored.at("final_labels").items()) {
            result.final_labels.emplace(id, label_from_string(label.get<std::string>()));
        }
        for (const json& r : stored.at("reports")) {
            result.reports.push_back(RoundReport::from_json(r));
        }
        return result;
    }

    SlmHyper hyper = config.slm_hyper;
    hyper.seed = det::mix(config.seed, "slm-train");
    SelectionRules rules = config.selection;
    rules.omega = config.omega;

    RunState state;
    int start_round = 1;
    int latest = paths.latest_state_round();
    if (latest > 0) {
        paths.verify();
        json manifest = read_json_file(paths.manifest());
        if (manifest.at("config") != config.to_json()) {
            throw ConfigError("run directory was created with a different configuration");
        }
        json stored = read_json_file(paths.state(latest));
        pools_from_json(stored.at("pools"), state);
        for (const json& r : stored.at("reports")) {
            state.reports.push_back(RoundReport::from_json(r));
        }
        slm_.load(paths.ckpt(latest));
        start_round = latest + 1;
        log_("resuming from round " + std::to_string(latest));
    } else {
        write_json_file(paths.manifest(),
                        json{{"config", config.to_json()},
                             {"dataset_items", dataset.items.size()},
                             {"unlabeled_items", split.unlabeled.size()}});
        std::vector<std::pair<NewsItem, Label>> past;
        for (const NewsItem& item : split.labeled) past.emplace_back(item, *item.gold_label);
        slm_.pretrain(past, hyper);
        slm_.save(paths.pretrain_ckpt());
        for (const auto& [id, item] : unlabeled_by_id) state.pools.noisy.insert(id);
        paths.record_checksum(paths.manifest());
        paths.record_checksum(paths.pretrain_ckpt());
    }

    RunResult result;
    for (int round = start_round; round <= config.rounds; ++round) {
        bool final_round = round == config.rounds;
        bool full_pass = !final_round || config.rounds == 1;

        if (round > 1 && (!final_round || config.finetune_final_round)) {
            if (!config.cumulative_finetune) slm_.load(paths.pretrain_ckpt());
            std::vector<std::pair<NewsItem, Label>> clean_data;
            for (const auto& [id, entry] : state.pools.clean) {
                clean_data.emplace_back(*unlabeled_by_id.at(id), entry.label);
            }
            if (!slm_.finetune(clean_data, hyper)) {
                log_("round " + std::to_string(round) + ": empty clean pool, fine-tune skipped");
            }
        }

        RoundReport report;
        report.round = round;

        if (full_pass) {
            std::vector<CleanPoolDoc> clean_view;
            for (const auto& [id, entry] : state.pools.clean) {
                const NewsItem& item = *unlabeled_by_id.at(id);
                clean_view.push_back({item.id, item.text, item.event_id, entry.label});
            }
            std::vector<std::string> to_evaluate;
            if (round == 1) {
                for (const auto& [id, item] : unlabeled_by_id) to_evaluate.push_back(id);
            } else {
                to_evaluate.assign(state.pools.noisy.begin(), state.pools.noisy.end());
            }

            std::vector<DualPrediction> preds;
            std::map<std::string, Label> llm_labels;
            std::map<std::string, Label> slm_labels;
            std::ofstream audit(paths.pools_audit(round));
            for (const std::string& id : to_evaluate) {
                const NewsItem& item = *unlabeled_by_id.at(id);
                std::vector<Demonstration> demos;
                if (config.ablations.demonstrations && config.k > 0) {
                    try {
                        demos = retriever_.demonstrations(
                            item, round, clean_view, static_cast<std::size_t>(config.k),
                            config.vocab, det::mix(config.seed, "demos", det::fnv1a(id)));
                    } catch (const RetrievalError& e) {
                        // Only possible in round 1; retried next round.
                        state.deferred.insert(id);
                        log_("deferring item " + id + ": " + e.what());
                        continue;
                    }
                }
                state.deferred.erase(id);
                KnowledgePack pack;
                if (config.ablations.knowledge) pack = retriever_.knowledge(item);

                DualPrediction dual;
                dual.item_id = id;
                dual.round = round;
                dual.llm = predict(llm_, item, demos, pack, round);
                dual.slm = slm_.predict(item, round);
                if (dual.llm.label) llm_labels.emplace(id, *dual.llm.label);
                slm_labels.emplace(id, dual.slm.label);
                preds.push_back(std::move(dual));
            }

            PartitionResult part = partition(preds, rules);
            apply_transfer(state.pools, part.clean, round);

            for (const DualPrediction& p : preds) {
                bool is_clean = state.pools.clean.count(p.item_id) != 0;
                json line{{"item_id", p.item_id},
                          {"pool", is_clean ? "clean" : "noisy"},
                          {"round", round},
                          {"llm_label",
                           p.llm.label ? json(to_string(*p.llm.label)) : json(nullptr)},
                          {"slm_label", to_string(p.slm.label)},
                          {"slm_confidence", p.slm.confidence},
                          {"demos", p.llm.demonstrations_used},
                          {"knowledge", p.llm.knowledge_used}};
                if (is_clean) line["label"] = to_string(state.pools.clean.at(p.item_id).label);
                audit << line.dump() << '\n';
            }

            report.evaluated = preds.size();
            report.transfers_in = part.clean.size();
            report.llm_metrics = metrics_or_null(llm_labels, gold);
            report.slm_metrics = metrics_or_null(slm_labels, gold);
        }

        if (final_round) {
            // Without multi-round learning the single round still fine-tunes
            // on its own clean pool before the final prediction.
            if (config.rounds == 1 && !config.ablations.multi_round) {
                std::vector<std::pair<NewsItem, Label>> clean_data;
                for (const auto& [id, entry] : state.pools.clean) {
                    clean_data.emplace_back(*unlabeled_by_id.at(id), entry.label);
                }
                if (!slm_.finetune(clean_data, hyper)) {
                    log_("empty round-1 clean pool, fine-tune skipped");
                }
            }
            std::map<std::string, Label> final_slm_labels;
            for (const std::string& id : state.pools.noisy) {
                SlmPrediction pred = slm_.predict(*unlabeled_by_id.at(id), round);
                final_slm_labels.emplace(id, pred.label);
            }
            for (const auto& [id, entry] : state.pools.clean) {
                result.final_labels.emplace(id, entry.label);
            }
            for (const auto& [id, label] : final_slm_labels) {
                result.final_labels.emplace(id, label);
            }
            if (!full_pass) {
                report.evaluated = final_slm_labels.size();
                report.slm_metrics = metrics_or_null(final_slm_labels, gold);
            }
        }

        report.clean_size = state.pools.clean.size();
        report.noisy_size = state.pools.noisy.size();
        report.deferred = state.deferred.size();
        report.slm_version = slm_.version();
        state.reports.push_back(report);

        json reports_json = json::array();
        for (const RoundReport& r : state.reports) reports_json.push_back(r.to_json());

        if (!final_round) {
            slm_.save(paths.ckpt(round));
            write_json_file(paths.state(round), json{{"round", round},
                                                     {"pools", pools_to_json(state)},
                                                     {"reports", reports_json}});
            paths.record_checksum(paths.ckpt(round));
            paths.record_checksum(paths.state(round));
            if (fs::exists(paths.pools_audit(round))) {
                paths.record_checksum(paths.pools_audit(round));
            }
            if (stop_after_round && *stop_after_round == round) {
                result.completed = false;
                result.reports = state.reports;
                return result;
            }
        } else {
            json final_labels = json::object();
            for (const auto& [id, label] : result.final_labels) {
                final_labels[id] = to_string(label);
            }
            write_json_file(paths.result(),
                            json{{"final_labels", final_labels}, {"reports", reports_json}});
            paths.record_checksum(paths.result());
            if (fs::exists(paths.pools_audit(round))) {
                paths.record_checksum(paths.pools_audit(round));
            }
        }
    }

    result.completed = true;
    result.reports = state.reports;
    return result;
}

}  // namespace mrcd
