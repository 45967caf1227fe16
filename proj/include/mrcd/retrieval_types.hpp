#pragma once

#include <string>
#include <vector>

#include "mrcd/external_sources.hpp"

namespace mrcd {

// Synonym pair used as demonstration pseudo-labels. Keeping the terms away
// from the task output strings "real"/"fake" avoids the copy effect where the
// model parrots demonstration labels.
struct PseudoLabelVocab {
    std::string positive_term = "realistic";   // stands in for Real
    std::string negative_term = "unrealistic"; // stands in for Fake

    const std::string& term_for(Label l) const {
        return l == Label::Real ? positive_term : negative_term;
    }
    // avoid_task_labels: reject vocabularies that collide with "real"/"fake".
    void validate(bool avoid_task_labels) const;
};

struct Demonstration {
    std::string text;
    std::string pseudo_label;  // a vocab term
    Source origin = Source::NewsCorpus;
    double score = 0.0;        // BM25 score against the query item
    std::optional<std::string> event_id;
};

struct KnowledgePack {
    std::vector<KnowledgeEntry> entries;  // deduplicated by entity, order kept
};

}  // namespace mrcd
