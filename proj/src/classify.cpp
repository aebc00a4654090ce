#include "dualq/classify.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "dualq/baseline.hpp"
#include "dualq/errors.hpp"
#include "dualq/http.hpp"
#include "dualq/rng.hpp"

namespace dualq {

namespace {

uint64_t fnv1a(std::string_view s, uint64_t basis) {
    uint64_t h = basis;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::vector<Label> distinct_labels(std::span<const Label> labels) {
    std::array<bool, kNumLabels> seen{};
    for (auto l : labels) seen[index_of(l)] = true;
    std::vector<Label> out;
    for (auto l : kAllLabels) {
        if (seen[index_of(l)]) out.push_back(l);
    }
    return out;
}

nlohmann::json labels_json(const std::vector<Label>& ls) {
    nlohmann::json out = nlohmann::json::array();
    for (auto l : ls) out.push_back(to_string(l));
    return out;
}

} // namespace

// ---------------------------------------------------------------- backends

std::shared_ptr<const EmbeddingBackend> EmbeddingBackend::finetune(std::span<const ContrastivePair>,
                                                                   const FinetuneConfig&) const {
    throw StateError("embedding backend '" + descriptor().value("kind", std::string("?")) +
                     "' does not support fine-tuning");
}

HashingEmbedding::HashingEmbedding(std::size_t dim, uint64_t seed, bool bigrams)
    : dim_(dim), seed_(seed), bigrams_(bigrams) {
    if (dim == 0) throw ArgumentError("embedding dimension must be positive");
}

EmbeddingMatrix HashingEmbedding::embed(std::span<const std::string> texts) const {
    static const NullLemmatizer null;
    const uint64_t basis = 14695981039346656037ULL ^ splitmix(seed_);
    EmbeddingMatrix out = EmbeddingMatrix::Zero(static_cast<Eigen::Index>(texts.size()),
                                                static_cast<Eigen::Index>(dim_));
    auto add = [&](Eigen::Index row, std::string_view feature) {
        const uint64_t h = fnv1a(feature, basis);
        const auto col = static_cast<Eigen::Index>(h % dim_);
        out(row, col) += (h >> 63) ? -1.0 : 1.0;
    };
    for (std::size_t i = 0; i < texts.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const auto tokens = normalize_text(texts[i], null);
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            add(row, tokens[t]);
            if (bigrams_ && t + 1 < tokens.size()) add(row, tokens[t] + '\x1f' + tokens[t + 1]);
        }
        const double norm = out.row(row).norm();
        if (norm > 0.0) out.row(row) /= norm;
    }
    return out;
}

nlohmann::json HashingEmbedding::descriptor() const {
    return {{"kind", "hashing"}, {"dim", dim_}, {"seed", seed_}, {"bigrams", bigrams_}};
}

std::shared_ptr<const EmbeddingBackend> HashingEmbedding::finetune(std::span<const ContrastivePair>,
                                                                   const FinetuneConfig&) const {
    return std::make_shared<HashingEmbedding>(*this);
}

RemoteEmbedding::RemoteEmbedding(RemoteEmbeddingConfig config) : config_(std::move(config)) {
    http::parse_url(config_.base_url);
    if (config_.dim == 0) throw ArgumentError("remote embedding backend needs a positive dim");
    if (config_.batch_size == 0) throw ArgumentError("remote embedding batch_size must be positive");
}

EmbeddingMatrix RemoteEmbedding::embed(std::span<const std::string> texts) const {
    EmbeddingMatrix out(static_cast<Eigen::Index>(texts.size()), static_cast<Eigen::Index>(config_.dim));
    const auto token = http::env_or_empty(config_.api_key_env);
    for (std::size_t start = 0; start < texts.size(); start += config_.batch_size) {
        const auto n = std::min(config_.batch_size, texts.size() - start);
        nlohmann::json body = {{"model", config_.model},
                               {"input", std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                                                  texts.begin() + static_cast<std::ptrdiff_t>(start + n))}};
        const auto res = http::post_json(config_.base_url + "/embeddings", body, token, config_.timeout_seconds);
        if (res.status != 200) {
            throw BackendError("embeddings endpoint returned HTTP " + std::to_string(res.status) + ": " +
                               res.body.substr(0, 200));
        }
        try {
            const auto j = nlohmann::json::parse(res.body);
            const auto& data = j.at("data");
            if (data.size() != n) throw BackendError("embeddings endpoint returned " + std::to_string(data.size()) +
                                                     " vectors for " + std::to_string(n) + " texts");
            for (std::size_t k = 0; k < n; ++k) {
                const auto& item = data[k];
                const auto idx = item.value("index", k);
                if (idx >= n) throw BackendError("embedding index out of range");
                const auto vec = item.at("embedding").get<std::vector<double>>();
                if (vec.size() != config_.dim) {
                    throw BackendError("embedding has dimension " + std::to_string(vec.size()) + ", expected " +
                                       std::to_string(config_.dim));
                }
                for (std::size_t c = 0; c < vec.size(); ++c) {
                    out(static_cast<Eigen::Index>(start + idx), static_cast<Eigen::Index>(c)) = vec[c];
                }
            }
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("malformed embeddings response: ") + e.what());
        }
    }
    return out;
}

nlohmann::json RemoteEmbedding::descriptor() const {
    return {{"kind", "remote"},           {"base_url", config_.base_url},
            {"model", config_.model},     {"dim", config_.dim},
            {"api_key_env", config_.api_key_env}, {"timeout_seconds", config_.timeout_seconds},
            {"batch_size", config_.batch_size}};
}

std::shared_ptr<const EmbeddingBackend> make_embedding_backend(const nlohmann::json& d) {
    try {
        const auto kind = d.at("kind").get<std::string>();
        if (kind == "hashing") {
            return std::make_shared<HashingEmbedding>(d.value("dim", std::size_t{512}), d.value("seed", uint64_t{0}),
                                                      d.value("bigrams", true));
        }
        if (kind == "remote") {
            RemoteEmbeddingConfig c;
            c.base_url = d.at("base_url").get<std::string>();
            c.model = d.value("model", "");
            c.dim = d.at("dim").get<std::size_t>();
            c.api_key_env = d.value("api_key_env", c.api_key_env);
            c.timeout_seconds = d.value("timeout_seconds", c.timeout_seconds);
            c.batch_size = d.value("batch_size", c.batch_size);
            return std::make_shared<RemoteEmbedding>(std::move(c));
        }
        throw ArgumentError("unknown embedding backend kind: " + kind);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad embedding backend descriptor: ") + e.what());
    }
}

// ---------------------------------------------------------------- pairs

std::vector<ContrastivePair> generate_contrastive_pairs(std::span<const Review> train, std::size_t iterations,
                                                        uint64_t seed) {
    if (iterations == 0) throw ArgumentError("contrastive iterations must be at least 1");
    std::array<std::vector<std::size_t>, kNumLabels> members;
    std::vector<std::size_t> pos_in_class(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (!train[i].label) throw ArgumentError("review " + train[i].id + " has no label");
        auto& m = members[index_of(*train[i].label)];
        pos_in_class[i] = m.size();
        m.push_back(i);
    }
    std::vector<Label> present;
    for (auto l : kAllLabels) {
        const auto n = members[index_of(l)].size();
        if (n == 0) continue;
        if (n < 2) {
            throw ArgumentError("class \"" + std::string(to_string(l)) + "\" has " + std::to_string(n) +
                                " member; at least 2 are needed for pair sampling");
        }
        present.push_back(l);
    }
    if (present.size() < 2) throw ArgumentError("pair sampling needs at least two classes");

    Rng rng(seed);
    std::vector<ContrastivePair> pairs;
    pairs.reserve(2 * train.size() * iterations);
    for (std::size_t it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i < train.size(); ++i) {
            const Label c = *train[i].label;
            const auto& same = members[index_of(c)];
            auto k = static_cast<std::size_t>(rng.below(same.size() - 1));
            if (k >= pos_in_class[i]) ++k;
            const auto& p = train[same[k]];
            pairs.push_back({train[i].text, p.text, 1.0, train[i].id, p.id});

            auto other = static_cast<std::size_t>(rng.below(present.size() - 1));
            std::size_t own = 0;
            while (present[own] != c) ++own;
            if (other >= own) ++other;
            const auto& pool = members[index_of(present[other])];
            const auto& q = train[pool[rng.below(pool.size())]];
            pairs.push_back({train[i].text, q.text, 0.0, train[i].id, q.id});
        }
    }
    return pairs;
}

// ---------------------------------------------------------------- head

nlohmann::json to_json(const HeadConfig& c) {
    return {{"learning_rate", c.learning_rate},
            {"batch_size", c.batch_size},
            {"epochs", c.epochs},
            {"l2", c.l2},
            {"seed", c.seed}};
}

HeadConfig head_config_from_json(const nlohmann::json& j) {
    HeadConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.l2 = j.value("l2", c.l2);
    c.seed = j.value("seed", c.seed);
    return c;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - m).exp().matrix();
    return e / e.sum();
}

Eigen::MatrixXd LogisticHead::probabilities(const EmbeddingMatrix& X) const {
    if (static_cast<std::size_t>(X.cols()) != dim()) {
        throw StateError("embedding dimension " + std::to_string(X.cols()) + " does not match head dimension " +
                         std::to_string(dim()));
    }
    Eigen::MatrixXd logits = (X * W.transpose()).rowwise() + b.transpose();
    for (Eigen::Index r = 0; r < logits.rows(); ++r) logits.row(r) = softmax(logits.row(r).transpose()).transpose();
    return logits;
}

LossAndGradient head_loss_and_gradient(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const EmbeddingMatrix& X,
                                       std::span<const std::size_t> targets, double l2) {
    const auto n = X.rows();
    const auto k = W.rows();
    if (X.cols() != W.cols() || b.size() != k) throw ArgumentError("head parameter shapes do not match the data");
    if (static_cast<std::size_t>(n) != targets.size() || n == 0) {
        throw ArgumentError("need one target per row and at least one row");
    }
    Eigen::MatrixXd G = (X * W.transpose()).rowwise() + b.transpose();
    double loss = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto y = static_cast<Eigen::Index>(targets[static_cast<std::size_t>(r)]);
        if (y >= k) throw ArgumentError("target class index out of range");
        const double m = G.row(r).maxCoeff();
        const double lse = m + std::log((G.row(r).array() - m).exp().sum());
        loss += lse - G(r, y);
        G.row(r) = (G.row(r).array() - lse).exp().matrix();
        G(r, y) -= 1.0;
    }
    G /= static_cast<double>(n);
    LossAndGradient out;
    out.loss = loss / static_cast<double>(n) + 0.5 * l2 * W.squaredNorm();
    out.dW = G.transpose() * X + l2 * W;
    out.db = G.colwise().sum().transpose();
    return out;
}

LogisticHead train_head(const EmbeddingMatrix& X, std::span<const Label> labels, const HeadConfig& config) {
    if (static_cast<std::size_t>(X.rows()) != labels.size()) {
        throw ArgumentError("embeddings have " + std::to_string(X.rows()) + " rows but there are " +
                            std::to_string(labels.size()) + " labels");
    }
    if (config.batch_size == 0) throw ArgumentError("batch_size must be positive");
    if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
        throw ArgumentError("learning_rate must be a positive finite number");
    }
    if (!(config.l2 >= 0.0) || !std::isfinite(config.l2)) throw ArgumentError("l2 must be >= 0");
    LogisticHead head;
    head.classes = distinct_labels(labels);
    if (head.classes.size() < 2) throw ArgumentError("training a head needs at least two distinct labels");
    head.config = config;
    const auto k = static_cast<Eigen::Index>(head.classes.size());
    const auto n = static_cast<std::size_t>(X.rows());
    head.W = Eigen::MatrixXd::Zero(k, X.cols());
    head.b = Eigen::VectorXd::Zero(k);

    std::vector<std::size_t> targets(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t c = 0;
        while (head.classes[c] != labels[i]) ++c;
        targets[i] = c;
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    Rng rng(config.seed);
    EmbeddingMatrix batch;
    std::vector<std::size_t> batch_targets;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const auto m = std::min(config.batch_size, n - start);
            batch.resize(static_cast<Eigen::Index>(m), X.cols());
            batch_targets.resize(m);
            for (std::size_t j = 0; j < m; ++j) {
                batch.row(static_cast<Eigen::Index>(j)) = X.row(static_cast<Eigen::Index>(order[start + j]));
                batch_targets[j] = targets[order[start + j]];
            }
            const auto g = head_loss_and_gradient(head.W, head.b, batch, batch_targets, config.l2);
            head.W -= config.learning_rate * g.dW;
            head.b -= config.learning_rate * g.db;
        }
        const double loss = head_loss_and_gradient(head.W, head.b, X, targets, config.l2).loss;
        if (!std::isfinite(loss)) {
            throw NumericalError("training loss became non-finite at epoch " + std::to_string(epoch + 1));
        }
        head.epoch_losses.push_back(loss);
    }
    return head;
}

std::vector<Prediction> predict(const EmbeddingMatrix& X, const LogisticHead& head, const std::string& model_id) {
    const auto P = head.probabilities(X);
    std::vector<Prediction> out;
    out.reserve(static_cast<std::size_t>(P.rows()));
    for (Eigen::Index r = 0; r < P.rows(); ++r) {
        std::array<double, kNumLabels> probs{};
        for (std::size_t c = 0; c < head.classes.size(); ++c) {
            probs[index_of(head.classes[c])] = P(r, static_cast<Eigen::Index>(c));
        }
        out.push_back(make_prediction(probs, model_id));
    }
    return out;
}

std::vector<Prediction> predict(std::span<const std::string> texts, const EmbeddingBackend& backend,
                                const LogisticHead& head, const std::string& model_id) {
    if (backend.dim() != head.dim()) {
        throw StateError("backend dimension " + std::to_string(backend.dim()) + " does not match head dimension " +
                         std::to_string(head.dim()));
    }
    if (texts.empty()) return {};
    return predict(backend.embed(texts), head, model_id);
}

// ---------------------------------------------------------------- binary mode

Dataset binary_collapse(const Dataset& d) {
    Dataset out = d;
    const auto now = utc_timestamp();
    for (auto& r : out.reviews) {
        if (!r.label) throw StateError("review " + r.id + " is unlabeled; binary collapse needs labels");
        if (*r.label != Label::OtherProblems) continue;
        ProvenanceEvent ev;
        ev.actor = "system";
        ev.timestamp = now;
        ev.action = "binary_collapse";
        ev.from_label = Label::OtherProblems;
        ev.to_label = Label::Standard;
        // the subtype only makes sense for other problems, so it travels in the note
        if (r.subtype) ev.note = to_string(*r.subtype);
        r.provenance.push_back(std::move(ev));
        r.label = Label::Standard;
        r.subtype.reset();
    }
    return out;
}

Dataset binary_expand(const Dataset& d) {
    Dataset out = d;
    for (auto& r : out.reviews) {
        if (r.provenance.empty() || r.provenance.back().action != "binary_collapse") continue;
        const auto ev = r.provenance.back();
        r.provenance.pop_back();
        r.label = ev.from_label;
        if (!ev.note.empty()) r.subtype = subtype_from_string(ev.note);
    }
    return out;
}

// ---------------------------------------------------------------- classifiers

ProbeClassifier::ProbeClassifier(std::shared_ptr<const EmbeddingBackend> backend, LogisticHead head,
                                 std::string model_id)
    : backend_(std::move(backend)), head_(std::move(head)), model_id_(std::move(model_id)) {
    if (!backend_) throw ArgumentError("probe classifier needs an embedding backend");
    if (backend_->dim() != head_.dim()) {
        throw StateError("backend dimension " + std::to_string(backend_->dim()) + " does not match head dimension " +
                         std::to_string(head_.dim()));
    }
}

std::vector<Prediction> ProbeClassifier::predict(std::span<const std::string> texts) const {
    return dualq::predict(texts, *backend_, head_, model_id_);
}

nlohmann::json ProbeClassifier::snapshot() const {
    nlohmann::json W = nlohmann::json::array();
    for (Eigen::Index r = 0; r < head_.W.rows(); ++r) {
        std::vector<double> row(head_.W.row(r).begin(), head_.W.row(r).end());
        W.push_back(row);
    }
    return {{"kind", "probe"},
            {"model_id", model_id_},
            {"classes", labels_json(head_.classes)},
            {"d", head_.dim()},
            {"W", W},
            {"b", std::vector<double>(head_.b.begin(), head_.b.end())},
            {"config", to_json(head_.config)},
            {"epoch_losses", head_.epoch_losses},
            {"backend", backend_->descriptor()}};
}

std::unique_ptr<ProbeClassifier> train_few_shot(std::span<const Review> train,
                                                std::shared_ptr<const EmbeddingBackend> backend,
                                                const FewShotConfig& config, std::string model_id) {
    if (!backend) throw ArgumentError("few-shot training needs an embedding backend");
    if (backend->supports_finetune() && config.contrastive_iterations > 0) {
        const auto pairs = generate_contrastive_pairs(train, config.contrastive_iterations, config.finetune.seed);
        backend = backend->finetune(pairs, config.finetune);
    }
    std::vector<std::string> texts;
    std::vector<Label> labels;
    texts.reserve(train.size());
    labels.reserve(train.size());
    for (const auto& r : train) {
        if (!r.label) throw ArgumentError("review " + r.id + " has no label");
        texts.push_back(r.text);
        labels.push_back(*r.label);
    }
    auto head = train_head(backend->embed(texts), labels, config.head);
    return std::make_unique<ProbeClassifier>(std::move(backend), std::move(head), std::move(model_id));
}

void check_probability_rows(const Eigen::MatrixXd& probs, double tol) {
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        double sum = 0.0;
        for (Eigen::Index c = 0; c < probs.cols(); ++c) {
            const double p = probs(r, c);
            if (!std::isfinite(p) || p < 0.0) {
                throw NumericalError("probability row " + std::to_string(r) + " has an invalid entry");
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > tol) {
            throw NumericalError("probability row " + std::to_string(r) + " sums to " + std::to_string(sum));
        }
    }
}

namespace {

class ProbeEncoderModel final : public EncoderModel {
public:
    ProbeEncoderModel(std::shared_ptr<const EmbeddingBackend> e, LogisticHead h)
        : embeddings_(std::move(e)), head_(std::move(h)) {}
    std::vector<Label> classes() const override { return head_.classes; }
    Eigen::MatrixXd predict_proba(std::span<const std::string> texts) const override {
        if (texts.empty()) return Eigen::MatrixXd(0, static_cast<Eigen::Index>(head_.classes.size()));
        return head_.probabilities(embeddings_->embed(texts));
    }

private:
    std::shared_ptr<const EmbeddingBackend> embeddings_;
    LogisticHead head_;
};

} // namespace

ProbeEncoderBackend::ProbeEncoderBackend(std::shared_ptr<const EmbeddingBackend> embeddings, double l2)
    : embeddings_(std::move(embeddings)), l2_(l2) {
    if (!embeddings_) throw ArgumentError("probe encoder needs an embedding backend");
}

std::unique_ptr<EncoderModel> ProbeEncoderBackend::train(const Dataset& train, const EncoderConfig& config) const {
    std::vector<std::string> texts;
    std::vector<Label> labels;
    for (const auto& r : train.reviews) {
        if (!r.label) throw ArgumentError("review " + r.id + " has no label");
        texts.push_back(r.text);
        labels.push_back(*r.label);
    }
    HeadConfig hc{config.learning_rate, config.batch_size, config.epochs, l2_, config.seed};
    return std::make_unique<ProbeEncoderModel>(embeddings_, train_head(embeddings_->embed(texts), labels, hc));
}

EncoderClassifier::EncoderClassifier(std::shared_ptr<const EncoderModel> model, std::string model_id)
    : model_(std::move(model)), model_id_(std::move(model_id)) {
    if (!model_) throw ArgumentError("encoder classifier needs a model");
}

std::vector<Prediction> EncoderClassifier::predict(std::span<const std::string> texts) const {
    const auto classes = model_->classes();
    const auto P = model_->predict_proba(texts);
    if (static_cast<std::size_t>(P.rows()) != texts.size() || static_cast<std::size_t>(P.cols()) != classes.size()) {
        throw BackendError("encoder returned a " + std::to_string(P.rows()) + "x" + std::to_string(P.cols()) +
                           " probability matrix for " + std::to_string(texts.size()) + " texts");
    }
    check_probability_rows(P);
    std::vector<Prediction> out;
    for (Eigen::Index r = 0; r < P.rows(); ++r) {
        std::array<double, kNumLabels> probs{};
        for (std::size_t c = 0; c < classes.size(); ++c) probs[index_of(classes[c])] = P(r, static_cast<Eigen::Index>(c));
        out.push_back(make_prediction(probs, model_id_));
    }
    return out;
}

nlohmann::json EncoderClassifier::snapshot() const {
    // encoder weights live with their runtime; only the reference is recorded
    return {{"kind", "encoder"}, {"model_id", model_id_}, {"classes", labels_json(model_->classes())}};
}

std::unique_ptr<Classifier> load_classifier(const nlohmann::json& j) {
    try {
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "baseline") return BaselineClassifier::from_snapshot(j);
        if (kind != "probe") throw ArgumentError("cannot load a classifier of kind '" + kind + "'");
        LogisticHead head;
        for (const auto& c : j.at("classes")) head.classes.push_back(label_from_string(c.get<std::string>()));
        const auto d = j.at("d").get<Eigen::Index>();
        const auto k = static_cast<Eigen::Index>(head.classes.size());
        const auto& W = j.at("W");
        const auto b = j.at("b").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(W.size()) != k || static_cast<Eigen::Index>(b.size()) != k) {
            throw ParseError("probe snapshot: W and b must have one row per class");
        }
        head.W.resize(k, d);
        head.b.resize(k);
        for (Eigen::Index r = 0; r < k; ++r) {
            const auto row = W[static_cast<std::size_t>(r)].get<std::vector<double>>();
            if (static_cast<Eigen::Index>(row.size()) != d) throw ParseError("probe snapshot: W row has wrong width");
            for (Eigen::Index c = 0; c < d; ++c) head.W(r, c) = row[static_cast<std::size_t>(c)];
            head.b(r) = b[static_cast<std::size_t>(r)];
        }
        if (auto it = j.find("config"); it != j.end()) head.config = head_config_from_json(*it);
        head.epoch_losses = j.value("epoch_losses", std::vector<double>{});
        return std::make_unique<ProbeClassifier>(make_embedding_backend(j.at("backend")), std::move(head),
                                                 j.at("model_id").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad model snapshot: ") + e.what());
    }
}

std::unique_ptr<Classifier> load_classifier_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open model file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return load_classifier(nlohmann::json::parse(buf.str()));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_classifier(const Classifier& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot write model file " + path.string());
    out << c.snapshot().dump(2) << '\n';
}

} // namespace dualq
