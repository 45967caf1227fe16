#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mrcd/corpus.hpp"

namespace mrcd {

struct SlmPrediction {
    Label label = Label::Real;
    double confidence = 0.5;  // max of the two class probabilities
};

struct SlmHyper {
    int epochs = 5;
    double learning_rate = 1e-3;
    int batch_size = 32;
    double weight_decay = 1e-4;
    std::uint64_t seed = 0;
};

// The trainable probabilistic binary classifier behind the pipeline. Training
// is exclusive; prediction on a trained snapshot is concurrent-safe.
class Slm {
public:
    virtual ~Slm() = default;

    virtual void pretrain(const std::vector<std::pair<NewsItem, Label>>& labeled,
                          const SlmHyper& hyper) = 0;
    // Continues from current weights on clean data only. Returns false (and
    // leaves the model untouched) for an empty clean set.
    virtual bool finetune(const std::vector<std::pair<NewsItem, Label>>& clean,
                          const SlmHyper& hyper) = 0;
    // `round` is ignored by real models; oracle doubles key their draw on it.
    virtual SlmPrediction predict(const NewsItem& item, int round) const = 0;
    virtual int version() const = 0;
    virtual void save(const std::filesystem::path& path) const = 0;
    virtual void load(const std::filesystem::path& path) = 0;
};

// Logistic-loss linear model over hashed bag-of-words features, trained by
// mini-batch gradient descent with decoupled weight decay. Deterministic
// given the seed: shuffling uses an explicit generator and the parallel
// margin kernel accumulates in a fixed order.
class LinearSlm : public Slm {
public:
    static constexpr std::uint32_t kDim = 1u << 18;

    struct Features {
        std::vector<std::pair<std::uint32_t, float>> terms;  // sorted by index
        float label = 0.0f;                                  // 1 = Fake
    };

    static Features featurize(const std::string& text);

    void pretrain(const std::vector<std::pair<NewsItem, Label>>& labeled,
                  const SlmHyper& hyper) override;
    bool finetune(const std::vector<std::pair<NewsItem, Label>>& clean,
                  const SlmHyper& hyper) override;
    SlmPrediction predict(const NewsItem& item, int round) const override;
    SlmPrediction predict_text(const std::string& text) const;
    std::vector<SlmPrediction> predict_many(const std::vector<NewsItem>& items) const;
    int version() const override { return version_; }
    std::uint64_t trained_on() const { return trained_on_; }

    void save(const std::filesystem::path& path) const override;
    void load(const std::filesystem::path& path) override;

    // Mean logistic loss plus (wd/2)||w||^2 over a batch; the bias carries no
    // decay. Public so the finite-difference oracle can probe it.
    double batch_loss(const std::vector<Features>& batch, double weight_decay) const;
    void batch_gradient(const std::vector<Features>& batch, double weight_decay,
                        std::vector<double>& grad_weights, double& grad_bias) const;

    const std::vector<double>& weights() const { return weights_; }
    std::vector<double>& mutable_weights() { return weights_; }
    double bias() const { return bias_; }

private:
    void train(const std::vector<std::pair<NewsItem, Label>>& data, const SlmHyper& hyper);
    double logit(const Features& f) const;

    std::vector<double> weights_ = std::vector<double>(kDim, 0.0);
    double bias_ = 0.0;
    int version_ = 0;
    std::uint64_t trained_on_ = 0;
};

namespace reference {

// Plain serial margin kernel, the oracle for the OpenMP path.
std::vector<double> slm_logits(const LinearSlm& model,
                               const std::vector<LinearSlm::Features>& batch);

}  // namespace reference

struct RemoteSlmConfig {
    std::string base_url;
    std::string api_key_env = "MRCD_SLM_API_KEY";
};

// Adapter for an out-of-process classifier service (train/predict over HTTP),
// so a transformer model can stand in for the built-in classifier.
class RemoteSlm : public Slm {
public:
    explicit RemoteSlm(RemoteSlmConfig config) : config_(std::move(config)) {}

    void pretrain(const std::vector<std::pair<NewsItem, Label>>& labeled,
                  const SlmHyper& hyper) override;
    bool finetune(const std::vector<std::pair<NewsItem, Label>>& clean,
                  const SlmHyper& hyper) override;
    SlmPrediction predict(const NewsItem& item, int round) const override;
    int version() const override { return version_; }
    void save(const std::filesystem::path& path) const override;
    void load(const std::filesystem::path& path) override;

private:
    int train_call(const std::string& mode,
                   const std::vector<std::pair<NewsItem, Label>>& data,
                   const SlmHyper& hyper);

    RemoteSlmConfig config_;
    int version_ = 0;
};

}  // namespace mrcd
