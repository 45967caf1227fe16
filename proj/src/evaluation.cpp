#include "mrcd/evaluation.hpp"

#include <iomanip>
#include <sstream>

#include "mrcd/errors.hpp"

namespace mrcd {

using nlohmann::json;

namespace {

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double f1(double precision, double recall) {
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

json Metrics::to_json() const {
    return json{{"accuracy", accuracy},
                {"precision_fake", precision_fake},
                {"recall_fake", recall_fake},
                {"f1_fake", f1_fake},
                {"precision_real", precision_real},
                {"recall_real", recall_real},
                {"f1_real", f1_real},
                {"macro_f1", macro_f1},
                {"support_fake", support_fake},
                {"support_real", support_real}};
}

Metrics evaluate(const std::map<std::string, Label>& pred,
                 const std::map<std::string, Label>& gold) {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;  // Fake = positive
    for (const auto& [id, predicted] : pred) {
        auto it = gold.find(id);
        if (it == gold.end()) {
            throw ValidationError("no gold label for predicted item \"" + id + "\"");
        }
        bool gold_fake = it->second == Label::Fake;
        bool pred_fake = predicted == Label::Fake;
        if (pred_fake && gold_fake) ++tp;
        else if (pred_fake && !gold_fake) ++fp;
        else if (!pred_fake && gold_fake) ++fn;
        else ++tn;
    }
    std::size_t total = tp + fp + fn + tn;
    if (total == 0) {
        throw ValidationError("evaluate called with no overlapping items");
    }

    Metrics m;
    m.accuracy = safe_div(static_cast<double>(tp + tn), static_cast<double>(total));
    m.precision_fake = safe_div(static_cast<double>(tp), static_cast<double>(tp + fp));
    m.recall_fake = safe_div(static_cast<double>(tp), static_cast<double>(tp + fn));
    m.f1_fake = f1(m.precision_fake, m.recall_fake);
    m.precision_real = safe_div(static_cast<double>(tn), static_cast<double>(tn + fn));
    m.recall_real = safe_div(static_cast<double>(tn), static_cast<double>(tn + fp));
    m.f1_real = f1(m.precision_real, m.recall_real);
    m.macro_f1 = 0.5 * (m.f1_fake + m.f1_real);
    m.support_fake = tp + fn;
    m.support_real = tn + fp;
    return m;
}

PoolReport pool_report(const DataPools& pools,
                       const std::map<std::string, Label>& noisy_slm_labels,
                       const std::map<std::string, Label>& gold) {
    PoolReport report;
    report.clean_size = pools.clean.size();
    report.noisy_size = pools.noisy.size();

    std::map<std::string, Label> clean_pred;
    for (const auto& [id, entry] : pools.clean) clean_pred.emplace(id, entry.label);
    if (!clean_pred.empty()) report.clean = evaluate(clean_pred, gold);

    std::map<std::string, Label> noisy_pred;
    for (const std::string& id : pools.noisy) {
        auto it = noisy_slm_labels.find(id);
        if (it != noisy_slm_labels.end()) noisy_pred.emplace(id, it->second);
    }
    if (!noisy_pred.empty()) report.noisy = evaluate(noisy_pred, gold);
    return report;
}

std::string render_metrics_table(const std::map<std::string, Metrics>& rows) {
    std::ostringstream out;
    out << std::left << std::setw(24) << "set" << std::right << std::setw(8) << "acc"
        << std::setw(10) << "f1_fake" << std::setw(10) << "f1_real" << std::setw(10)
        << "macro_f1" << std::setw(8) << "n" << '\n';
    out << std::string(70, '-') << '\n';
    out << std::fixed << std::setprecision(4);
    for (const auto& [name, m] : rows) {
        out << std::left << std::setw(24) << name << std::right << std::setw(8) << m.accuracy
            << std::setw(10) << m.f1_fake << std::setw(10) << m.f1_real << std::setw(10)
            << m.macro_f1 << std::setw(8) << (m.support_fake + m.support_real) << '\n';
    }
    return out.str();
}

}  // namespace mrcd
