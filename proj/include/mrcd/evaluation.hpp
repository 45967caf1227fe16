#pragma once

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "mrcd/corpus.hpp"
#include "mrcd/selection.hpp"

namespace mrcd {

// Confusion-matrix metrics with Fake as the headline positive class; per-class
// values are reported so either convention is recoverable.
struct Metrics {
    double accuracy = 0.0;
    double precision_fake = 0.0;
    double recall_fake = 0.0;
    double f1_fake = 0.0;
    double precision_real = 0.0;
    double recall_real = 0.0;
    double f1_real = 0.0;
    double macro_f1 = 0.0;
    std::size_t support_fake = 0;
    std::size_t support_real = 0;

    nlohmann::json to_json() const;
};

// Standard confusion-matrix evaluation over the ids present in `pred`; every
// predicted id must carry a gold label. Permutation-invariant.
Metrics evaluate(const std::map<std::string, Label>& pred,
                 const std::map<std::string, Label>& gold);

struct PoolReport {
    std::optional<Metrics> clean;  // absent when the pool is empty
    std::optional<Metrics> noisy;
    std::size_t clean_size = 0;
    std::size_t noisy_size = 0;
};

// Clean-pool labels vs gold, and SLM labels of noisy items vs gold.
PoolReport pool_report(const DataPools& pools,
                       const std::map<std::string, Label>& noisy_slm_labels,
                       const std::map<std::string, Label>& gold);

std::string render_metrics_table(const std::map<std::string, Metrics>& rows);

}  // namespace mrcd
