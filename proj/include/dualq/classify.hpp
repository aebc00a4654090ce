#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dualq/corpus.hpp"
#include "dualq/prediction.hpp"

namespace dualq {

/// Row-major so each row is one text's embedding.
using EmbeddingMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ContrastivePair {
    std::string text_a;
    std::string text_b;
    /// 1.0 when both texts share a class, 0.0 otherwise.
    double similarity_target = 0.0;
    std::string id_a;
    std::string id_b;

    friend bool operator==(const ContrastivePair&, const ContrastivePair&) = default;
};

struct FinetuneConfig {
    double learning_rate = 2e-5;
    std::size_t batch_size = 8;
    std::size_t epochs = 1;
    uint64_t seed = 0;
};

/// Maps texts to fixed-width vectors. Real sentence-embedding models plug in here.
class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    /// One row per text; deterministic for a fixed backend state.
    virtual EmbeddingMatrix embed(std::span<const std::string> texts) const = 0;
    virtual std::size_t dim() const = 0;
    /// JSON that make_embedding_backend() turns back into an equivalent backend.
    virtual nlohmann::json descriptor() const = 0;

    virtual bool supports_finetune() const { return false; }
    /// Returns a new backend adapted on the pairs; the receiver is not modified.
    virtual std::shared_ptr<const EmbeddingBackend> finetune(std::span<const ContrastivePair> pairs,
                                                             const FinetuneConfig& config) const;
};

/// Signed feature hashing of lowercase unigrams and bigrams, L2-normalised.
/// Fine-tuning is accepted and leaves the projection unchanged.
class HashingEmbedding final : public EmbeddingBackend {
public:
    explicit HashingEmbedding(std::size_t dim = 512, uint64_t seed = 0, bool bigrams = true);

    EmbeddingMatrix embed(std::span<const std::string> texts) const override;
    std::size_t dim() const override { return dim_; }
    nlohmann::json descriptor() const override;
    bool supports_finetune() const override { return true; }
    std::shared_ptr<const EmbeddingBackend> finetune(std::span<const ContrastivePair> pairs,
                                                     const FinetuneConfig& config) const override;

private:
    std::size_t dim_;
    uint64_t seed_;
    bool bigrams_;
};

/// OpenAI-compatible embeddings endpoint: POST {base_url}/embeddings.
struct RemoteEmbeddingConfig {
    std::string base_url;
    std::string model;
    std::size_t dim = 0;
    /// Name of the environment variable holding the bearer token.
    std::string api_key_env = "EMBEDDINGS_API_KEY";
    double timeout_seconds = 30.0;
    std::size_t batch_size = 64;
};

class RemoteEmbedding final : public EmbeddingBackend {
public:
    explicit RemoteEmbedding(RemoteEmbeddingConfig config);

    EmbeddingMatrix embed(std::span<const std::string> texts) const override;
    std::size_t dim() const override { return config_.dim; }
    nlohmann::json descriptor() const override;

private:
    RemoteEmbeddingConfig config_;
};

/// Builds a backend from descriptor() output. Unknown kinds are an ArgumentError.
std::shared_ptr<const EmbeddingBackend> make_embedding_backend(const nlohmann::json& descriptor);

/// For every anchor and iteration: one same-class partner and one partner from another
/// class (class chosen uniformly among the others, then a member uniformly). Partners are
/// never the anchor itself. Output size is 2 * |train| * iterations.
std::vector<ContrastivePair> generate_contrastive_pairs(std::span<const Review> train, std::size_t iterations,
                                                        uint64_t seed);

struct HeadConfig {
    double learning_rate = 2e-5;
    std::size_t batch_size = 8;
    std::size_t epochs = 1;
    double l2 = 1e-4;
    uint64_t seed = 0;

    friend bool operator==(const HeadConfig&, const HeadConfig&) = default;
};

nlohmann::json to_json(const HeadConfig& c);
HeadConfig head_config_from_json(const nlohmann::json& j);

/// Multinomial logistic regression over embeddings.
struct LogisticHead {
    std::vector<Label> classes;
    Eigen::MatrixXd W;
    Eigen::VectorXd b;
    HeadConfig config;
    /// Full-data objective after each epoch.
    std::vector<double> epoch_losses;

    std::size_t dim() const { return static_cast<std::size_t>(W.cols()); }
    /// Row-wise softmax(X W^T + b), columns in `classes` order.
    Eigen::MatrixXd probabilities(const EmbeddingMatrix& X) const;
};

struct LossAndGradient {
    double loss = 0.0;
    Eigen::MatrixXd dW;
    Eigen::VectorXd db;
};

/// Mean cross-entropy over the rows plus (l2 / 2) * ||W||^2, and its gradient.
/// `targets` holds class indices into the rows of W.
LossAndGradient head_loss_and_gradient(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const EmbeddingMatrix& X,
                                       std::span<const std::size_t> targets, double l2);

/// Mini-batch gradient descent from W = 0, b = 0. Classes are the distinct labels
/// present, in fixed label order. Throws ArgumentError on bad shapes or a single class,
/// NumericalError when the loss stops being finite.
LogisticHead train_head(const EmbeddingMatrix& X, std::span<const Label> labels, const HeadConfig& config);

/// Softmax over logits with the max subtracted first.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

std::vector<Prediction> predict(const EmbeddingMatrix& X, const LogisticHead& head, const std::string& model_id);
/// Throws StateError when the backend and head dimensions differ.
std::vector<Prediction> predict(std::span<const std::string> texts, const EmbeddingBackend& backend,
                                const LogisticHead& head, const std::string& model_id = "probe");

/// Merges other problems into the negative (standard) class. Every relabelled review gets
/// a "binary_collapse" provenance event recording its original label.
Dataset binary_collapse(const Dataset& d);
/// Undoes binary_collapse using the recorded events.
Dataset binary_expand(const Dataset& d);

/// Embedding backend + logistic head behind the Classifier interface.
class ProbeClassifier final : public Classifier {
public:
    ProbeClassifier(std::shared_ptr<const EmbeddingBackend> backend, LogisticHead head, std::string model_id);

    std::vector<Prediction> predict(std::span<const std::string> texts) const override;
    std::string model_id() const override { return model_id_; }
    nlohmann::json snapshot() const override;

    const LogisticHead& head() const { return head_; }
    const EmbeddingBackend& backend() const { return *backend_; }
    std::shared_ptr<const EmbeddingBackend> backend_ptr() const { return backend_; }

private:
    std::shared_ptr<const EmbeddingBackend> backend_;
    LogisticHead head_;
    std::string model_id_;
};

struct FewShotConfig {
    /// 0 skips pair generation and fine-tuning altogether.
    std::size_t contrastive_iterations = 1;
    FinetuneConfig finetune;
    HeadConfig head;
};

/// Pair generation, optional backend fine-tuning, then the logistic head on the
/// resulting embeddings. Every review must be labeled.
std::unique_ptr<ProbeClassifier> train_few_shot(std::span<const Review> train,
                                                std::shared_ptr<const EmbeddingBackend> backend,
                                                const FewShotConfig& config, std::string model_id);

struct EncoderConfig {
    double learning_rate = 2e-6;
    std::size_t batch_size = 8;
    std::size_t epochs = 10;
    uint64_t seed = 0;
};

/// A trained end-to-end model.
class EncoderModel {
public:
    virtual ~EncoderModel() = default;
    virtual std::vector<Label> classes() const = 0;
    /// One row per text, columns in classes() order.
    virtual Eigen::MatrixXd predict_proba(std::span<const std::string> texts) const = 0;
};

/// Fine-tuning adapter for full encoder models (native runtimes or remote trainers).
class EncoderBackend {
public:
    virtual ~EncoderBackend() = default;
    virtual std::string name() const = 0;
    virtual std::unique_ptr<EncoderModel> train(const Dataset& train, const EncoderConfig& config) const = 0;
};

/// Reference adapter: a logistic head trained on a fixed embedding backend.
class ProbeEncoderBackend final : public EncoderBackend {
public:
    explicit ProbeEncoderBackend(std::shared_ptr<const EmbeddingBackend> embeddings, double l2 = 1e-4);
    std::string name() const override { return "probe"; }
    std::unique_ptr<EncoderModel> train(const Dataset& train, const EncoderConfig& config) const override;

private:
    std::shared_ptr<const EmbeddingBackend> embeddings_;
    double l2_;
};

/// Throws NumericalError naming the row when a row has a negative or non-finite entry
/// or does not sum to 1 within tol.
void check_probability_rows(const Eigen::MatrixXd& probs, double tol = 1e-6);

/// Wraps an EncoderModel as a Classifier; predict_proba output is validated.
class EncoderClassifier final : public Classifier {
public:
    EncoderClassifier(std::shared_ptr<const EncoderModel> model, std::string model_id);
    std::vector<Prediction> predict(std::span<const std::string> texts) const override;
    std::string model_id() const override { return model_id_; }
    nlohmann::json snapshot() const override;

private:
    std::shared_ptr<const EncoderModel> model_;
    std::string model_id_;
};

/// Rebuilds a classifier from snapshot() JSON ("baseline" or "probe").
std::unique_ptr<Classifier> load_classifier(const nlohmann::json& snapshot);
std::unique_ptr<Classifier> load_classifier_file(const std::filesystem::path& path);
void save_classifier(const Classifier& c, const std::filesystem::path& path);

} // namespace dualq
