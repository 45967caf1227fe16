#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrcd/corpus.hpp"
#include "mrcd/evaluation.hpp"
#include "mrcd/retrieval.hpp"
#include "mrcd/selection.hpp"
#include "mrcd/slm.hpp"

namespace mrcd {

struct AblationFlags {
    bool demonstrations = true;
    bool search_engine = true;
    bool news_corpus = true;
    bool knowledge = true;
    bool multi_round = true;
};

struct RunConfig {
    double omega = 0.8;
    int rounds = 3;  // collaboration round threshold
    int k = 4;       // demonstrations per item
    PseudoLabelVocab vocab;
    bool unlabeled_demos = false;
    AblationFlags ablations;
    SelectionRules selection;  // selection.omega is kept in sync with omega
    SlmHyper slm_hyper;
    std::uint64_t seed = 0;
    std::size_t max_entities = 5;
    std::size_t search_limit = 10;
    // Fine-tune before the final-round SLM labeling (rounds >= 2).
    bool finetune_final_round = true;
    // Cumulative: each fine-tune continues from the previous round's weights;
    // off restarts from the pretrain checkpoint every round.
    bool cumulative_finetune = true;

    void validate() const;
    nlohmann::json to_json() const;
};

struct RoundReport {
    int round = 1;
    std::size_t evaluated = 0;
    std::optional<Metrics> llm_metrics;  // on re-evaluated items, when gold exists
    std::optional<Metrics> slm_metrics;
    std::size_t clean_size = 0;
    std::size_t noisy_size = 0;
    std::size_t transfers_in = 0;
    std::size_t deferred = 0;
    int slm_version = 0;

    nlohmann::json to_json() const;
    static RoundReport from_json(const nlohmann::json& j);
};

struct RunResult {
    bool completed = false;  // false when stopped early via stop_after_round
    std::map<std::string, Label> final_labels;
    std::vector<RoundReport> reports;
};

// The multi-round loop: pretrain on past events, then per round two-stage
// retrieval, dual inference, selection and transfer; the final round
// fine-tunes and lets the SLM label whatever is still noisy. Per-round state
// is checksummed into the run directory, so an interrupted run resumes to a
// bit-identical result.
class Orchestrator {
public:
    Orchestrator(Slm& slm, LlmBackend& llm, Retriever& retriever)
        : slm_(slm), llm_(llm), retriever_(retriever) {}

    // Continues automatically from existing state in run_dir; a completed
    // run returns its stored result without recomputation.
    RunResult run(const Dataset& dataset, const RunConfig& config,
                  const std::filesystem::path& run_dir,
                  std::optional<int> stop_after_round = std::nullopt);

    // Like run, but requires existing state (or a stored result) in run_dir.
    RunResult resume(const Dataset& dataset, const RunConfig& config,
                     const std::filesystem::path& run_dir);

    void set_log_sink(std::function<void(const std::string&)> sink) {
        log_ = std::move(sink);
    }

private:
    Slm& slm_;
    LlmBackend& llm_;
    Retriever& retriever_;
    std::function<void(const std::string&)> log_ = [](const std::string&) {};
};

}  // namespace mrcd
