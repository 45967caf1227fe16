#include "mrcd/slm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>

#include <httplib.h>
#include <json.hpp>

#include "mrcd/bm25.hpp"
#include "mrcd/det.hpp"
#include "mrcd/errors.hpp"

namespace mrcd {

using nlohmann::json;

namespace {

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

double softplus(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

}  // namespace

LinearSlm::Features LinearSlm::featurize(const std::string& text) {
    std::map<std::uint32_t, float> counts;
    for (const std::string& term : tokenize(text)) {
        counts[static_cast<std::uint32_t>(det::fnv1a(term)) & (kDim - 1)] += 1.0f;
    }
    Features f;
    f.terms.assign(counts.begin(), counts.end());
    return f;
}

double LinearSlm::logit(const Features& f) const {
    double z = bias_;
    for (const auto& [idx, val] : f.terms) z += weights_[idx] * static_cast<double>(val);
    return z;
}

namespace reference {

std::vector<double> slm_logits(const LinearSlm& model,
                               const std::vector<LinearSlm::Features>& batch) {
    std::vector<double> out(batch.size(), 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        double z = model.bias();
        for (const auto& [idx, val] : batch[i].terms) {
            z += model.weights()[idx] * static_cast<double>(val);
        }
        out[i] = z;
    }
    return out;
}

}  // namespace reference

namespace {

// Margins for a batch; read-only on the weights, one output slot per example,
// so the parallel result is identical to the serial reference.
std::vector<double> batch_logits(const std::vector<double>& weights, double bias,
                                 const std::vector<LinearSlm::Features>& batch) {
    std::vector<double> out(batch.size(), 0.0);
    const auto n = static_cast<std::int64_t>(batch.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        double z = bias;
        for (const auto& [idx, val] : batch[static_cast<std::size_t>(i)].terms) {
            z += weights[idx] * static_cast<double>(val);
        }
        out[static_cast<std::size_t>(i)] = z;
    }
    return out;
}

}  // namespace

double LinearSlm::batch_loss(const std::vector<Features>& batch, double weight_decay) const {
    auto logits = batch_logits(weights_, bias_, batch);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        loss += softplus(logits[i]) - static_cast<double>(batch[i].label) * logits[i];
    }
    loss /= static_cast<double>(batch.size());
    double norm = 0.0;
    for (double w : weights_) norm += w * w;
    return loss + 0.5 * weight_decay * norm;
}

void LinearSlm::batch_gradient(const std::vector<Features>& batch, double weight_decay,
                               std::vector<double>& grad_weights, double& grad_bias) const {
    grad_weights.assign(kDim, 0.0);
    for (std::uint32_t i = 0; i < kDim; ++i) grad_weights[i] = weight_decay * weights_[i];
    grad_bias = 0.0;
    auto logits = batch_logits(weights_, bias_, batch);
    double inv = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        double g = (sigmoid(logits[i]) - static_cast<double>(batch[i].label)) * inv;
        for (const auto& [idx, val] : batch[i].terms) {
            grad_weights[idx] += g * static_cast<double>(val);
        }
        grad_bias += g;
    }
}

void LinearSlm::train(const std::vector<std::pair<NewsItem, Label>>& data,
                      const SlmHyper& hyper) {
    std::vector<Features> features;
    features.reserve(data.size());
    for (const auto& [item, label] : data) {
        Features f = featurize(item.text);
        f.label = label == Label::Fake ? 1.0f : 0.0f;
        features.push_back(std::move(f));
    }

    std::vector<std::size_t> order(features.size());
    std::iota(order.begin(), order.end(), 0);
    const auto batch_size = static_cast<std::size_t>(std::max(1, hyper.batch_size));
    const double lr = hyper.learning_rate;
    const double wd = hyper.weight_decay;

    std::vector<Features> batch;
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        det::Stream shuffle_stream(
            det::mix(hyper.seed, "slm-epoch", static_cast<std::uint64_t>(epoch)));
        det::shuffle(order, shuffle_stream);
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            std::size_t end = std::min(order.size(), start + batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(features[order[i]]);

            auto logits = batch_logits(weights_, bias_, batch);
            // Decoupled decay against the pre-step weights, then the sparse
            // data term; together one exact gradient step on the batch loss.
            if (wd != 0.0) {
                double scale = 1.0 - lr * wd;
                for (double& w : weights_) w *= scale;
            }
            double inv = 1.0 / static_cast<double>(batch.size());
            for (std::size_t i = 0; i < batch.size(); ++i) {
                double g = (sigmoid(logits[i]) - static_cast<double>(batch[i].label)) * inv;
                for (const auto& [idx, val] : batch[i].terms) {
                    weights_[idx] -= lr * g * static_cast<double>(val);
                }
                bias_ -= lr * g;
            }
        }
    }
    trained_on_ += data.size();
    ++version_;
}

void LinearSlm::pretrain(const std::vector<std::pair<NewsItem, Label>>& labeled,
                         const SlmHyper& hyper) {
    if (labeled.empty()) {
        throw ValidationError("pretrain requires a non-empty labeled set");
    }
    bool has_real = false;
    bool has_fake = false;
    for (const auto& [item, label] : labeled) {
        (label == Label::Real ? has_real : has_fake) = true;
    }
    if (!has_real || !has_fake) {
        throw ValidationError("pretrain requires both classes in the labeled set");
    }
    weights_.assign(kDim, 0.0);
    bias_ = 0.0;
    version_ = 0;
    trained_on_ = 0;
    train(labeled, hyper);
}

bool LinearSlm::finetune(const std::vector<std::pair<NewsItem, Label>>& clean,
                         const SlmHyper& hyper) {
    if (clean.empty()) return false;
    train(clean, hyper);
    return true;
}

SlmPrediction LinearSlm::predict_text(const std::string& text) const {
    double p_fake = sigmoid(logit(featurize(text)));
    SlmPrediction pred;
    pred.label = p_fake > 0.5 ? Label::Fake : Label::Real;  // exact 0.5 -> Real
    pred.confidence = std::max(p_fake, 1.0 - p_fake);
    return pred;
}

SlmPrediction LinearSlm::predict(const NewsItem& item, int /*round*/) const {
    return predict_text(item.text);
}

std::vector<SlmPrediction> LinearSlm::predict_many(const std::vector<NewsItem>& items) const {
    std::vector<SlmPrediction> out(items.size());
    const auto n = static_cast<std::int64_t>(items.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] =
            predict_text(items[static_cast<std::size_t>(i)].text);
    }
    return out;
}

namespace {
constexpr char kCheckpointMagic[8] = {'M', 'R', 'C', 'D', 'S', 'L', 'M', '\1'};
}

void LinearSlm::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write checkpoint: " + path.string());
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    std::uint32_t dim = kDim;
    auto version = static_cast<std::uint32_t>(version_);
    out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&trained_on_), sizeof(trained_on_));
    out.write(reinterpret_cast<const char*>(&bias_), sizeof(bias_));
    out.write(reinterpret_cast<const char*>(weights_.data()),
              static_cast<std::streamsize>(weights_.size() * sizeof(double)));
}

void LinearSlm::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IntegrityError("cannot open checkpoint: " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
        throw IntegrityError("bad checkpoint magic: " + path.string());
    }
    std::uint32_t dim = 0;
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&trained_on_), sizeof(trained_on_));
    in.read(reinterpret_cast<char*>(&bias_), sizeof(bias_));
    if (!in || dim != kDim) {
        throw IntegrityError("checkpoint dimension mismatch: " + path.string());
    }
    weights_.assign(kDim, 0.0);
    in.read(reinterpret_cast<char*>(weights_.data()),
            static_cast<std::streamsize>(weights_.size() * sizeof(double)));
    if (!in) throw IntegrityError("truncated checkpoint: " + path.string());
    version_ = static_cast<int>(version);
}

namespace {

json slm_request_items(const std::vector<std::pair<NewsItem, Label>>& data) {
    json items = json::array();
    for (const auto& [item, label] : data) {
        items.push_back({{"id", item.id}, {"text", item.text}, {"label", to_string(label)}});
    }
    return items;
}

json post_json(const RemoteSlmConfig& config, const std::string& path, const json& body) {
    auto scheme_end = config.base_url.find("://");
    auto path_start =
        config.base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    std::string host = path_start == std::string::npos ? config.base_url
                                                       : config.base_url.substr(0, path_start);
    std::string base_path =
        path_start == std::string::npos ? "" : config.base_url.substr(path_start);
    httplib::Client client(host);
    client.set_connection_timeout(30);
    client.set_read_timeout(600);
    httplib::Headers headers;
    if (const char* key = std::getenv(config.api_key_env.c_str())) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    auto res = client.Post(base_path + path, headers, body.dump(), "application/json");
    if (!res || res->status != 200) {
        throw BackendError("remote SLM request " + path + " failed" +
                           (res ? " (status " + std::to_string(res->status) + ")" : ""));
    }
    try {
        return json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed remote SLM response: ") + e.what());
    }
}

}  // namespace

int RemoteSlm::train_call(const std::string& mode,
                          const std::vector<std::pair<NewsItem, Label>>& data,
                          const SlmHyper& hyper) {
    json body{{"mode", mode},
              {"items", slm_request_items(data)},
              {"hyper",
               {{"epochs", hyper.epochs},
                {"learning_rate", hyper.learning_rate},
                {"batch_size", hyper.batch_size},
                {"weight_decay", hyper.weight_decay},
                {"seed", hyper.seed}}}};
    return post_json(config_, "/train", body).at("version").get<int>();
}

void RemoteSlm::pretrain(const std::vector<std::pair<NewsItem, Label>>& labeled,
                         const SlmHyper& hyper) {
    version_ = train_call("pretrain", labeled, hyper);
}

bool RemoteSlm::finetune(const std::vector<std::pair<NewsItem, Label>>& clean,
                         const SlmHyper& hyper) {
    if (clean.empty()) return false;
    version_ = train_call("finetune", clean, hyper);
    return true;
}

SlmPrediction RemoteSlm::predict(const NewsItem& item, int /*round*/) const {
    json body{{"texts", json::array({item.text})}};
    json response = post_json(config_, "/predict", body);
    const json& p = response.at("predictions").at(0);
    SlmPrediction pred;
    pred.label = label_from_string(p.at("label").get<std::string>());
    pred.confidence = p.at("confidence").get<double>();
    return pred;
}

void RemoteSlm::save(const std::filesystem::path& path) const {
    // The service owns the weights; the checkpoint records only the version.
    std::ofstream out(path);
    out << json{{"remote_version", version_}}.dump() << '\n';
}

void RemoteSlm::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IntegrityError("cannot open checkpoint: " + path.string());
    json rec;
    in >> rec;
    version_ = rec.at("remote_version").get<int>();
}

}  // namespace mrcd
