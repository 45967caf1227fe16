#include "mrcd/selection.hpp"

#include <unordered_set>

#include "mrcd/errors.hpp"

namespace mrcd {

PartitionResult partition(const std::vector<DualPrediction>& preds,
                          const SelectionRules& rules) {
    if (!(rules.omega > 0.0 && rules.omega < 1.0)) {
        throw ValidationError("omega must lie strictly between 0 and 1");
    }
    std::unordered_set<std::string> seen;
    PartitionResult result;
    for (const DualPrediction& pred : preds) {
        if (!seen.insert(pred.item_id).second) {
            throw ValidationError("duplicate item_id in predictions: " + pred.item_id);
        }
        bool confident = rules.strict_inequality ? pred.slm.confidence > rules.omega
                                                 : pred.slm.confidence >= rules.omega;
        bool agree = pred.llm.label.has_value() &&
                     (!rules.require_agreement || *pred.llm.label == pred.slm.label);
        if (agree && confident) {
            result.clean.emplace_back(pred.item_id, pred.slm.label);
        } else {
            result.noisy.push_back(pred.item_id);
        }
    }
    return result;
}

void apply_transfer(DataPools& pools,
                    const std::vector<std::pair<std::string, Label>>& clean_additions,
                    int round) {
    for (const auto& [id, label] : clean_additions) {
        auto it = pools.noisy.find(id);
        if (it == pools.noisy.end()) {
            throw ValidationError("clean addition \"" + id + "\" is not in the noisy pool");
        }
        pools.noisy.erase(it);
        pools.clean.emplace(id, CleanEntry{label, round, true});
    }
}

}  // namespace mrcd
