#include "mrcd/corpus.hpp"

#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "mrcd/errors.hpp"

namespace mrcd {

using nlohmann::json;

std::string to_string(Label label) {
    return label == Label::Real ? "real" : "fake";
}

Label label_from_string(const std::string& s) {
    if (s == "real") return Label::Real;
    if (s == "fake") return Label::Fake;
    throw ValidationError("unknown label \"" + s + "\" (expected \"real\" or \"fake\")");
}

namespace {

bool is_blank(const std::string& line) {
    return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

NewsItem parse_record(const json& rec, std::size_t line_no) {
    if (!rec.is_object()) {
        throw ParseError("line " + std::to_string(line_no) + ": record is not an object");
    }
    for (const char* field : {"id", "text", "event_id", "timestamp"}) {
        if (!rec.contains(field)) {
            throw ParseError("line " + std::to_string(line_no) + ": missing field \"" +
                             field + "\"");
        }
    }
    NewsItem item;
    item.id = rec.at("id").get<std::string>();
    item.text = rec.at("text").get<std::string>();
    item.event_id = rec.at("event_id").get<std::string>();
    item.timestamp = rec.at("timestamp").get<std::int64_t>();
    if (rec.contains("label") && !rec.at("label").is_null()) {
        item.gold_label = label_from_string(rec.at("label").get<std::string>());
    }
    if (item.text.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw ValidationError("line " + std::to_string(line_no) + ": empty text for id \"" +
                              item.id + "\"");
    }
    return item;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, std::int64_t split_cutoff) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open dataset file: " + path.string());
    }
    Dataset d;
    d.split_cutoff = split_cutoff;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        NewsItem item = parse_record(rec, line_no);
        if (!seen.insert(item.id).second) {
            throw ValidationError("line " + std::to_string(line_no) + ": duplicate id \"" +
                                  item.id + "\"");
        }
        d.items.push_back(std::move(item));
    }
    return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write dataset file: " + path.string());
    }
    for (const NewsItem& item : d.items) {
        json rec{{"id", item.id},
                 {"text", item.text},
                 {"event_id", item.event_id},
                 {"timestamp", item.timestamp}};
        if (item.gold_label) rec["label"] = to_string(*item.gold_label);
        out << rec.dump() << '\n';
    }
}

TemporalSplit temporal_split(const Dataset& d) {
    TemporalSplit split;
    for (const NewsItem& item : d.items) {
        if (item.timestamp <= d.split_cutoff) {
            if (!item.gold_label) {
                throw ValidationError("past item \"" + item.id + "\" has no gold label");
            }
            split.labeled.push_back(item);
        } else {
            split.unlabeled.push_back(item);
        }
    }
    return split;
}

}  // namespace mrcd
