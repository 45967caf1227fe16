#include "mrcd/llm_gateway.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "mrcd/det.hpp"
#include "mrcd/errors.hpp"

namespace mrcd {

using nlohmann::json;

std::string to_string(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "unknown";
}

void PseudoLabelVocab::validate(bool avoid_task_labels) const {
    if (positive_term.empty() || negative_term.empty()) {
        throw ValidationError("pseudo-label vocabulary terms must be non-empty");
    }
    if (positive_term == negative_term) {
        throw ValidationError("pseudo-label vocabulary terms must be distinct");
    }
    if (avoid_task_labels) {
        for (const auto& term : {positive_term, negative_term}) {
            if (term == "real" || term == "fake") {
                throw ValidationError("pseudo-label term \"" + term +
                                      "\" collides with a task output label");
            }
        }
    }
}

namespace {

constexpr const char* kSystemPrompt =
    "You are a useful assistant, working as a fake news detector on the dataset. "
    "This news dataset consists of a mix of fake news reviews and real news reviews. "
    "Your task is to make a binary detection, categorizing the news as real or fake "
    "based on your judgment of it. The category is divided into two types: real or fake.";

std::string render_knowledge(const KnowledgePack& pack) {
    std::string out;
    for (const KnowledgeEntry& e : pack.entries) {
        if (!out.empty()) out += "; ";
        out += e.entity + ": " + e.summary;
    }
    return out;
}

}  // namespace

std::vector<ChatTurn> assemble_prompt(const NewsItem& item,
                                      const std::vector<Demonstration>& demos,
                                      const KnowledgePack& pack) {
    std::vector<ChatTurn> turns;
    turns.push_back({Role::System, kSystemPrompt});
    for (const Demonstration& d : demos) {
        turns.push_back({Role::User, "Give a news:" + d.text +
                                         ".Do you think the above news is more real or "
                                         "more fake?."});
        turns.push_back({Role::Assistant, d.pseudo_label});
    }
    std::string final_turn;
    if (!pack.entries.empty()) {
        final_turn = "Give you some extra information from wikidata: " +
                     render_knowledge(pack) + ".Then, give you a news to detect: " +
                     item.text;
    } else {
        final_turn = "Give you a news to detect: " + item.text;
    }
    final_turn +=
        ".Do you think the above news is more real or more fake?"
        "please answer in a single line with real or fake.";
    turns.push_back({Role::User, final_turn});
    return turns;
}

std::vector<ChatTurn> entity_extraction_prompt(const NewsItem& item,
                                               std::size_t max_entities) {
    std::vector<ChatTurn> turns;
    turns.push_back({Role::User,
                     "Extract up to " + std::to_string(max_entities) +
                         " key entities (proper nouns) from the following news. Answer "
                         "with one entity per line and nothing else.\nNews: " +
                         item.text});
    return turns;
}

namespace {

// Occurrences of `word` as a whole word (non-alphanumeric boundaries),
// case-insensitive, within [begin, end).
bool contains_word(const std::string& text, std::size_t begin, std::size_t end,
                   const std::string& word) {
    auto lower = [](char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); };
    auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
    for (std::size_t i = begin; i + word.size() <= end; ++i) {
        bool match = true;
        for (std::size_t j = 0; j < word.size(); ++j) {
            if (lower(text[i + j]) != word[j]) {
                match = false;
                break;
            }
        }
        if (!match) continue;
        bool left_ok = i == begin || !alnum(text[i - 1]);
        bool right_ok = i + word.size() == end || !alnum(text[i + word.size()]);
        if (left_ok && right_ok) return true;
    }
    return false;
}

std::optional<Label> scan_range(const std::string& raw, std::size_t begin, std::size_t end) {
    bool has_real = contains_word(raw, begin, end, "real");
    bool has_fake = contains_word(raw, begin, end, "fake");
    if (has_real == has_fake) return std::nullopt;
    return has_real ? Label::Real : Label::Fake;
}

}  // namespace

std::optional<Label> parse_label(const std::string& raw) {
    std::size_t first_line_end = raw.find('\n');
    if (first_line_end == std::string::npos) first_line_end = raw.size();
    if (auto l = scan_range(raw, 0, first_line_end)) return l;
    return scan_range(raw, 0, raw.size());
}

LlmPrediction predict(LlmBackend& backend, const NewsItem& item,
                      const std::vector<Demonstration>& demos, const KnowledgePack& pack,
                      int round) {
    LlmContext context;
    context.task = LlmTask::Detect;
    context.item_id = item.id;
    context.item_event_id = item.event_id;
    context.gold = item.gold_label;
    context.round = round;
    for (const Demonstration& d : demos) {
        if (d.event_id) context.demo_event_ids.push_back(*d.event_id);
    }

    auto turns = assemble_prompt(item, demos, pack);
    LlmPrediction prediction;
    prediction.round = round;
    prediction.demonstrations_used = static_cast<int>(demos.size());
    prediction.knowledge_used = static_cast<int>(pack.entries.size());

    prediction.raw_response = backend.complete(turns, context);
    prediction.label = parse_label(prediction.raw_response);
    if (!prediction.label) {
        turns.push_back({Role::Assistant, prediction.raw_response.empty()
                                              ? " "
                                              : prediction.raw_response});
        turns.push_back({Role::User, "Answer with exactly one word: real or fake."});
        prediction.raw_response = backend.complete(turns, context);
        prediction.label = parse_label(prediction.raw_response);
    }
    return prediction;
}

std::uint64_t prompt_hash(const std::vector<ChatTurn>& turns) {
    std::uint64_t h = det::kFnvOffset;
    for (const ChatTurn& t : turns) {
        h = det::fnv1a(to_string(t.role), h);
        h = det::fnv1a("\x1f", h);
        h = det::fnv1a(t.content, h);
        h = det::fnv1a("\x1e", h);
    }
    return h;
}

MockLlmBackend MockLlmBackend::from_script(const std::filesystem::path& jsonl_path,
                                           bool deterministic_fallback) {
    std::ifstream in(jsonl_path);
    if (!in) {
        throw ConfigError("cannot open mock script: " + jsonl_path.string());
    }
    MockLlmBackend backend(deterministic_fallback);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("mock script line " + std::to_string(line_no) + ": " + e.what());
        }
        auto hash = std::stoull(rec.at("prompt_hash").get<std::string>(), nullptr, 16);
        backend.responses_[hash] = rec.at("response").get<std::string>();
    }
    return backend;
}

void MockLlmBackend::script(const std::vector<ChatTurn>& turns, std::string response) {
    responses_[prompt_hash(turns)] = std::move(response);
}

std::string MockLlmBackend::complete(const std::vector<ChatTurn>& turns, const LlmContext&) {
    ++calls_;
    std::uint64_t h = prompt_hash(turns);
    if (auto it = responses_.find(h); it != responses_.end()) return it->second;
    if (deterministic_fallback_) {
        return (det::splitmix(h) & 1) != 0 ? "real" : "fake";
    }
    throw BackendError("mock backend has no scripted response for prompt hash " +
                       det::hex(h));
}

std::string RemoteLlmBackend::complete(const std::vector<ChatTurn>& turns,
                                       const LlmContext&) {
    ++calls_;
    json messages = json::array();
    for (const ChatTurn& t : turns) {
        messages.push_back({{"role", to_string(t.role)}, {"content", t.content}});
    }
    json request{{"model", config_.model},
                 {"messages", messages},
                 {"temperature", config_.temperature}};

    auto scheme_end = config_.base_url.find("://");
    auto path_start =
        config_.base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    std::string host = path_start == std::string::npos ? config_.base_url
                                                       : config_.base_url.substr(0, path_start);
    std::string base_path =
        path_start == std::string::npos ? "" : config_.base_url.substr(path_start);

    httplib::Client client(host);
    client.set_connection_timeout(30);
    client.set_read_timeout(120);
    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str())) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    auto res = client.Post(base_path + "/chat/completions", headers, request.dump(),
                           "application/json");
    if (!res || res->status != 200) {
        throw BackendError("chat completions request failed" +
                           (res ? " (status " + std::to_string(res->status) + ")" : ""));
    }
    try {
        json body = json::parse(res->body);
        return body.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed chat completions response: ") + e.what());
    }
}

}  // namespace mrcd
