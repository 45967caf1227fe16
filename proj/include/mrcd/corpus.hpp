#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mrcd {

enum class Label { Real, Fake };

// Labels serialize as lowercase "real"/"fake"; anything else is a hard error.
std::string to_string(Label label);
Label label_from_string(const std::string& s);
inline Label flipped(Label l) { return l == Label::Real ? Label::Fake : Label::Real; }

struct NewsItem {
    std::string id;
    std::string text;
    std::string event_id;
    std::int64_t timestamp = 0;
    // Present on past-event items and on evaluation fixtures. The pipeline
    // never reads it for future items; only evaluation and oracle test
    // doubles do.
    std::optional<Label> gold_label;
};

struct Dataset {
    std::vector<NewsItem> items;
    std::int64_t split_cutoff = 0;
};

struct TemporalSplit {
    std::vector<NewsItem> labeled;    // timestamp <= cutoff, gold label present
    std::vector<NewsItem> unlabeled;  // timestamp > cutoff
};

// JSONL, one record per line: id, text, event_id, timestamp, optional label.
// Preserves file order, rejects duplicate ids with the offending line number.
Dataset load_dataset(const std::filesystem::path& path, std::int64_t split_cutoff);

void save_dataset(const Dataset& d, const std::filesystem::path& path);

// Items at the cutoff go to the past side. Every past item must be labeled.
TemporalSplit temporal_split(const Dataset& d);

}  // namespace mrcd
