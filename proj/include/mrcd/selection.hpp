#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mrcd/corpus.hpp"
#include "mrcd/llm_gateway.hpp"
#include "mrcd/slm.hpp"

namespace mrcd {

struct DualPrediction {
    std::string item_id;
    LlmPrediction llm;  // label == nullopt means abstention
    SlmPrediction slm;
    int round = 1;
};

struct SelectionRules {
    double omega = 0.8;
    // The default applies the full agreement-and-confidence criterion with a
    // non-strict bound in every round; both switches exist so the literal
    // strict / agreement-free transfer variant is runnable.
    bool require_agreement = true;
    bool strict_inequality = false;
};

struct PartitionResult {
    std::vector<std::pair<std::string, Label>> clean;  // admitted with SLM label
    std::vector<std::string> noisy;
};

// Clean iff the LLM did not abstain, the two labels agree (when required) and
// the SLM confidence clears omega. Output covers the input exactly; duplicate
// item ids are rejected.
PartitionResult partition(const std::vector<DualPrediction>& preds,
                          const SelectionRules& rules);

struct CleanEntry {
    Label label = Label::Real;
    int round_admitted = 1;
    bool model_agreement = true;
};

// Disjoint clean/noisy pools. Admission is monotone: once clean, an item
// never returns to noisy.
struct DataPools {
    std::map<std::string, CleanEntry> clean;
    std::set<std::string> noisy;
};

// Moves the additions noisy -> clean for the given round. Every addition must
// currently be noisy.
void apply_transfer(DataPools& pools,
                    const std::vector<std::pair<std::string, Label>>& clean_additions,
                    int round);

}  // namespace mrcd
