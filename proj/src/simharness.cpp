#include "mrcd/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "mrcd/det.hpp"
#include "mrcd/errors.hpp"

namespace mrcd {

using nlohmann::json;

namespace {

constexpr std::int64_t kEpochBase = 1600000000;
constexpr std::int64_t kEventSpacing = 86400;

std::size_t past_event_count(std::size_t events) {
    return std::max<std::size_t>(1, events * 7 / 10);
}

std::string class_token(bool fake, bool drifted, std::uint64_t i) {
    if (drifted) return (fake ? "newfake" : "newreal") + std::to_string(i % 40);
    return (fake ? "fakeword" : "realword") + std::to_string(i % 40);
}

std::string synth_text(const SyntheticSpec& spec, det::Stream& s, std::size_t event,
                       bool fake, bool future) {
    std::vector<std::string> tokens;
    for (int j = 0; j < 6; ++j) {
        tokens.push_back("event" + std::to_string(event) + "tok" + std::to_string(s.below(10)));
    }
    for (int j = 0; j < 6; ++j) {
        tokens.push_back("common" + std::to_string(s.below(50)));
    }
    for (int j = 0; j < 12; ++j) {
        bool own_class = s.unit() < spec.token_purity;
        bool drifted = future && s.unit() < spec.drift;
        tokens.push_back(class_token(own_class == fake, drifted, s.next()));
    }
    std::string text;
    for (const auto& t : tokens) {
        if (!text.empty()) text.push_back(' ');
        text += t;
    }
    return text;
}

}  // namespace

SyntheticSpec SyntheticSpec::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open synthetic spec: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed synthetic spec: ") + e.what());
    }
    SyntheticSpec spec;
    spec.n_items = j.value("n_items", spec.n_items);
    spec.balance = j.value("balance", spec.balance);
    spec.drift = j.value("drift", spec.drift);
    spec.events = j.value("events", spec.events);
    spec.token_purity = j.value("token_purity", spec.token_purity);
    spec.seed = j.value("seed", spec.seed);
    if (spec.n_items < 1) throw ValidationError("n_items must be >= 1");
    if (!(spec.balance > 0.0 && spec.balance < 1.0)) {
        throw ValidationError("balance must lie strictly between 0 and 1");
    }
    return spec;
}

Dataset generate(const SyntheticSpec& spec) {
    if (spec.n_items < 1) throw ValidationError("n_items must be >= 1");
    if (!(spec.balance > 0.0 && spec.balance < 1.0)) {
        throw ValidationError("balance must lie strictly between 0 and 1");
    }
    std::size_t past_events = past_event_count(spec.events);

    Dataset d;
    d.split_cutoff = kEpochBase + static_cast<std::int64_t>(past_events - 1) * kEventSpacing;
    std::size_t fake_so_far = 0;
    for (std::size_t i = 0; i < spec.n_items; ++i) {
        std::size_t event = i % spec.events;
        bool future = event >= past_events;
        // Deterministic rounding keeps the class counts exact.
        bool fake = static_cast<std::size_t>(
                        std::floor(static_cast<double>(i + 1) * spec.balance)) > fake_so_far;
        if (fake) ++fake_so_far;

        det::Stream s(det::mix(spec.seed, "item", i));
        NewsItem item;
        char id[16];
        std::snprintf(id, sizeof(id), "n%05zu", i);
        item.id = id;
        item.event_id = "ev" + std::to_string(event);
        item.timestamp = kEpochBase + static_cast<std::int64_t>(event) * kEventSpacing;
        item.text = synth_text(spec, s, event, fake, future);
        item.gold_label = fake ? Label::Fake : Label::Real;
        d.items.push_back(std::move(item));
    }
    return d;
}

void generate_corpus(const SyntheticSpec& spec, std::size_t docs_per_event,
                     const std::filesystem::path& out_path) {
    std::ofstream out(out_path);
    if (!out) throw ConfigError("cannot write corpus file: " + out_path.string());
    std::size_t i = 0;
    for (std::size_t event = 0; event < spec.events; ++event) {
        bool future = event >= past_event_count(spec.events);
        for (std::size_t k = 0; k < docs_per_event; ++k, ++i) {
            det::Stream s(det::mix(spec.seed, "corpus-doc", i));
            bool fake = (s.next() & 1) != 0;
            json rec{{"id", "cdoc" + std::to_string(i)},
                     {"text", synth_text(spec, s, event, fake, future)}};
            out << rec.dump() << '\n';
        }
    }
}

double item_difficulty(const std::string& item_id) {
    return det::unit(det::mix(det::fnv1a(item_id), "difficulty"));
}

namespace {

double clamp_accuracy(double a) { return std::clamp(a, 0.02, 0.98); }

double confidence_draw(const ConfidenceModel& model, bool correct, std::uint64_t key) {
    double lo = correct ? model.correct_lo : model.wrong_lo;
    double hi = correct ? model.correct_hi : model.wrong_hi;
    return lo + det::unit(key) * (hi - lo);
}

std::uint64_t draw_key(std::uint64_t seed, std::string_view tag, const std::string& id,
                       int round) {
    return det::mix(det::mix(seed, tag, det::fnv1a(id)), static_cast<std::uint64_t>(round));
}

}  // namespace

double OracleLlmBackend::effective_accuracy(const LlmContext& context) const {
    double a = config_.accuracy;
    if (config_.demo_sensitive) {
        for (const std::string& ev : context.demo_event_ids) {
            if (ev == context.item_event_id) {
                a += config_.demo_bonus;
                break;
            }
        }
    }
    if (config_.difficulty_spread != 0.0) {
        a += config_.difficulty_spread * (0.5 - item_difficulty(context.item_id));
    }
    return clamp_accuracy(a);
}

std::string OracleLlmBackend::complete(const std::vector<ChatTurn>&,
                                       const LlmContext& context) {
    if (context.task == LlmTask::ExtractEntities) return "";
    if (!context.gold) {
        throw ValidationError("oracle backend needs a gold label for item " + context.item_id);
    }
    bool correct = det::unit(draw_key(config_.seed, "llm-correct", context.item_id,
                                      context.round)) < effective_accuracy(context);
    return to_string(correct ? *context.gold : flipped(*context.gold));
}

void OracleSlm::pretrain(const std::vector<std::pair<NewsItem, Label>>& labeled,
                         const SlmHyper&) {
    if (labeled.empty()) {
        throw ValidationError("pretrain requires a non-empty labeled set");
    }
    effective_accuracy_ = clamp_accuracy(config_.accuracy);
    version_ = 1;
}

bool OracleSlm::finetune(const std::vector<std::pair<NewsItem, Label>>& clean,
                         const SlmHyper&) {
    if (clean.empty()) return false;
    std::size_t graded = 0;
    std::size_t correct = 0;
    for (const auto& [item, label] : clean) {
        if (!item.gold_label) continue;
        ++graded;
        if (*item.gold_label == label) ++correct;
    }
    if (graded > 0) {
        double precision = static_cast<double>(correct) / static_cast<double>(graded);
        double size_factor = std::min(
            1.0, static_cast<double>(clean.size()) /
                     static_cast<double>(std::max<std::size_t>(1, config_.finetune_size_ref)));
        effective_accuracy_ = clamp_accuracy(
            config_.accuracy +
            config_.finetune_gain * (precision - config_.finetune_pivot) * size_factor);
    }
    ++version_;
    return true;
}

SlmPrediction OracleSlm::predict(const NewsItem& item, int round) const {
    if (!item.gold_label) {
        throw ValidationError("oracle SLM needs a gold label for item " + item.id);
    }
    double a = effective_accuracy_;
    if (config_.difficulty_spread != 0.0) {
        a = clamp_accuracy(a + config_.difficulty_spread * (0.5 - item_difficulty(item.id)));
    }
    bool correct = det::unit(draw_key(config_.seed, "slm-correct", item.id, round)) < a;
    SlmPrediction pred;
    pred.label = correct ? *item.gold_label : flipped(*item.gold_label);
    pred.confidence =
        confidence_draw(config_.confidence, correct,
                        draw_key(config_.seed, "slm-confidence", item.id, round));
    return pred;
}

void OracleSlm::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    out << json{{"effective_accuracy", effective_accuracy_}, {"version", version_}}.dump()
        << '\n';
}

void OracleSlm::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IntegrityError("cannot open checkpoint: " + path.string());
    json rec;
    try {
        in >> rec;
    } catch (const json::parse_error& e) {
        throw IntegrityError("corrupt oracle checkpoint " + path.string() + ": " + e.what());
    }
    effective_accuracy_ = rec.at("effective_accuracy").get<double>();
    version_ = rec.at("version").get<int>();
}

}  // namespace mrcd
