#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mrcd/corpus.hpp"
#include "mrcd/retrieval_types.hpp"

namespace mrcd {

enum class Role { System, User, Assistant };

std::string to_string(Role r);

struct ChatTurn {
    Role role;
    std::string content;
};

enum class LlmTask { Detect, ExtractEntities };

// Side-channel handed to backends alongside the prompt. Live backends ignore
// it; test doubles use it (the oracle keys its draw on item id and gold, the
// demo-sensitive mode compares event ids).
struct LlmContext {
    LlmTask task = LlmTask::Detect;
    std::string item_id;
    std::string item_event_id;
    std::optional<Label> gold;
    std::vector<std::string> demo_event_ids;
    int round = 1;
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual std::string complete(const std::vector<ChatTurn>& turns,
                                 const LlmContext& context) = 0;
};

struct LlmPrediction {
    std::optional<Label> label;  // nullopt = abstention (twice unparseable)
    std::string raw_response;
    int round = 1;
    int demonstrations_used = 0;
    int knowledge_used = 0;
};

// System turn, then a user/assistant pair per demonstration, then the final
// user turn carrying the knowledge entries and the query news. Pure function
// of its arguments; golden fixtures pin the exact bytes.
std::vector<ChatTurn> assemble_prompt(const NewsItem& item,
                                      const std::vector<Demonstration>& demos,
                                      const KnowledgePack& pack);

std::vector<ChatTurn> entity_extraction_prompt(const NewsItem& item,
                                               std::size_t max_entities);

// Whole-word case-insensitive scan: exactly one of "real"/"fake" in the first
// line wins; otherwise the full text is scanned; still ambiguous -> nullopt.
std::optional<Label> parse_label(const std::string& raw);

// Assemble, call, parse. An unparseable response is retried once with an
// appended "answer with exactly one word" instruction; a second failure is an
// abstention, not a default label, so it cannot bias the agreement test.
LlmPrediction predict(LlmBackend& backend, const NewsItem& item,
                      const std::vector<Demonstration>& demos, const KnowledgePack& pack,
                      int round);

std::uint64_t prompt_hash(const std::vector<ChatTurn>& turns);

// Script-table backend: responses keyed by prompt hash, loaded from JSONL
// fixtures. With the deterministic fallback enabled, unscripted prompts get a
// label derived from the prompt hash, so identical prompts always produce
// identical responses.
class MockLlmBackend : public LlmBackend {
public:
    MockLlmBackend() = default;

    static MockLlmBackend from_script(const std::filesystem::path& jsonl_path,
                                      bool deterministic_fallback = false);
    explicit MockLlmBackend(bool deterministic_fallback)
        : deterministic_fallback_(deterministic_fallback) {}

    void script(const std::vector<ChatTurn>& turns, std::string response);
    std::string complete(const std::vector<ChatTurn>& turns, const LlmContext&) override;
    std::size_t calls() const { return calls_; }

private:
    std::unordered_map<std::uint64_t, std::string> responses_;
    bool deterministic_fallback_ = false;
    std::size_t calls_ = 0;
};

struct RemoteLlmConfig {
    std::string base_url;
    std::string model;
    std::string api_key_env = "MRCD_LLM_API_KEY";
    double temperature = 0.0;
};

// Chat-completions endpoint client. Temperature is pinned to 0.
class RemoteLlmBackend : public LlmBackend {
public:
    explicit RemoteLlmBackend(RemoteLlmConfig config) : config_(std::move(config)) {}

    std::string complete(const std::vector<ChatTurn>& turns, const LlmContext&) override;
    std::size_t calls() const { return calls_; }

private:
    RemoteLlmConfig config_;
    std::size_t calls_ = 0;
};

}  // namespace mrcd
