#include <chrono>
#include <functional>
#include <iostream>
#include <vector>

#include "mrcd/bm25.hpp"
#include "mrcd/det.hpp"
#include "mrcd/simharness.hpp"
#include "mrcd/slm.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace mrcd;

double time_ms(const std::function<void()>& fn, int reps) {
    auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    auto end = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(end - start).count() /
           static_cast<double>(reps);
}

void report(const std::string& name, double serial_ms, double parallel_ms) {
    std::cout << name << ": serial " << serial_ms << " ms, parallel " << parallel_ms
              << " ms, speedup " << serial_ms / parallel_ms << "x\n";
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::cout << "OpenMP threads: " << omp_get_max_threads() << "\n";
#else
    std::cout << "built without OpenMP; both paths are serial\n";
#endif

    SyntheticSpec spec;
    spec.n_items = 4000;
    spec.events = 40;
    spec.seed = 11;
    Dataset data = generate(spec);

    // BM25: indexed parallel scoring vs the brute-force serial reference.
    std::vector<TokenizedDoc> docs;
    for (const NewsItem& item : data.items) docs.push_back({item.id, tokenize(item.text)});
    Bm25Index index = Bm25Index::build(docs);
    std::vector<std::vector<std::string>> queries;
    for (std::size_t i = 0; i < 50; ++i) queries.push_back(docs[i * 7 % docs.size()].tokens);

    volatile std::size_t sink = 0;
    double bm25_serial = time_ms(
        [&] {
            for (const auto& q : queries) sink = sink + reference::bm25_rank(docs, q, 10).size();
        },
        3);
    double bm25_parallel = time_ms(
        [&] {
            for (const auto& q : queries) sink = sink + index.top_k_tokens(q, 10).size();
        },
        3);
    report("bm25 top-10 x50", bm25_serial, bm25_parallel);

    // SLM margin kernel: parallel batch logits vs the serial reference.
    LinearSlm model;
    std::vector<std::pair<NewsItem, Label>> labeled;
    for (const NewsItem& item : data.items) {
        if (item.gold_label) labeled.emplace_back(item, *item.gold_label);
    }
    SlmHyper hyper;
    hyper.epochs = 1;
    hyper.seed = 5;
    model.pretrain(labeled, hyper);

    std::vector<LinearSlm::Features> batch;
    for (const NewsItem& item : data.items) batch.push_back(LinearSlm::featurize(item.text));

    volatile double acc = 0.0;
    double slm_serial = time_ms(
        [&] {
            auto logits = reference::slm_logits(model, batch);
            for (double v : logits) acc = acc + v;
        },
        5);
    double slm_parallel = time_ms(
        [&] {
            auto preds = model.predict_many(data.items);
            for (const auto& p : preds) acc = acc + p.confidence;
        },
        5);
    report("slm logits x" + std::to_string(batch.size()), slm_serial, slm_parallel);
    return 0;
}
