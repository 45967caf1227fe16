#pragma once

#include <cstdint>
#include <filesystem>

#include "mrcd/corpus.hpp"
#include "mrcd/llm_gateway.hpp"
#include "mrcd/slm.hpp"

namespace mrcd {

// Synthetic news generator with class-conditioned token distributions and a
// controllable vocabulary drift between past and future events, standing in
// for the real-world shift between annotated history and emergent news.
struct SyntheticSpec {
    std::size_t n_items = 200;
    double balance = 0.5;  // fraction of Fake items, deterministic rounding
    double drift = 0.4;    // probability a future class token comes from the drifted pool
    std::size_t events = 10;
    // Class tokens come from the item's own class pool with this probability,
    // otherwise from the opposite pool; < 1 keeps the task noisy.
    double token_purity = 0.75;
    std::uint64_t seed = 1;

    static SyntheticSpec from_file(const std::filesystem::path& path);
};

// Items are dealt round-robin over events; the first 70% of events (by
// timestamp) form the labeled past, the rest the unlabeled future. Pure
// function of the spec.
Dataset generate(const SyntheticSpec& spec);

// Companion unlabeled corpus drawn from the same event token pools, for
// round-1 demonstration retrieval. Corpus docs carry no event_id.
void generate_corpus(const SyntheticSpec& spec, std::size_t docs_per_event,
                     const std::filesystem::path& out_path);

// Per-item difficulty in [0, 1), shared by both oracles so their errors
// correlate across rounds on the same hard items.
double item_difficulty(const std::string& item_id);

struct ConfidenceModel {
    double correct_lo = 0.7;
    double correct_hi = 1.0;
    double wrong_lo = 0.5;
    double wrong_hi = 0.85;
};

struct OracleConfig {
    double accuracy = 0.75;
    ConfidenceModel confidence;
    std::uint64_t seed = 0;
    // Demo-sensitive mode: accuracy bonus when at least one demonstration
    // shares the item's event_id.
    bool demo_sensitive = false;
    double demo_bonus = 0.10;
    // Spread > 0 shifts per-item accuracy by difficulty, biasing later-round
    // noisy pools toward hard items.
    double difficulty_spread = 0.0;
    // Fine-tune response of the SLM-shaped oracle: effective accuracy moves
    // by gain * (pool precision - pivot), scaled by pool size up to size_ref.
    double finetune_gain = 2.0;
    double finetune_pivot = 0.85;
    std::size_t finetune_size_ref = 500;
};

// LLM-shaped oracle: the draw depends only on (seed, item id, gold, round,
// effective accuracy) - never on prompt content. Entity-extraction prompts
// get an empty response.
class OracleLlmBackend : public LlmBackend {
public:
    explicit OracleLlmBackend(OracleConfig config) : config_(config) {}

    std::string complete(const std::vector<ChatTurn>& turns,
                         const LlmContext& context) override;

    double effective_accuracy(const LlmContext& context) const;

private:
    OracleConfig config_;
};

// SLM-shaped oracle with the pretrain/finetune lifecycle: fine-tuning shifts
// its effective accuracy as a function of the training pool's precision
// against gold, so a clean pool helps and a contaminated one hurts.
class OracleSlm : public Slm {
public:
    explicit OracleSlm(OracleConfig config) : config_(config) {}

    void pretrain(const std::vector<std::pair<NewsItem, Label>>& labeled,
                  const SlmHyper& hyper) override;
    bool finetune(const std::vector<std::pair<NewsItem, Label>>& clean,
                  const SlmHyper& hyper) override;
    SlmPrediction predict(const NewsItem& item, int round) const override;
    int version() const override { return version_; }
    double effective_accuracy() const { return effective_accuracy_; }
    void save(const std::filesystem::path& path) const override;
    void load(const std::filesystem::path& path) override;

private:
    OracleConfig config_;
    double effective_accuracy_ = 0.0;
    int version_ = 0;
};

}  // namespace mrcd
