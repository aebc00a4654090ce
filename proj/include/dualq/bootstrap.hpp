#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dualq/classify.hpp"
#include "dualq/corpus.hpp"
#include "dualq/prediction.hpp"
#include "dualq/synthetic.hpp"

namespace dualq {

struct ScoredItem {
    std::string id;
    double dq_probability = 0.0;
    std::string text;

    friend bool operator==(const ScoredItem&, const ScoredItem&) = default;
};

struct AnnotationBatch {
    int iteration = 0;
    /// Descending by dq_probability, ties ascending by id.
    std::vector<ScoredItem> items;
    std::string created_at;

    friend bool operator==(const AnnotationBatch&, const AnnotationBatch&) = default;
};

struct AnnotationDecision {
    std::string review_id;
    Label label = Label::Standard;
    std::optional<ProblemSubtype> subtype;
    std::string annotator;
    std::string timestamp;

    friend bool operator==(const AnnotationDecision&, const AnnotationDecision&) = default;
};

/// Throws ArgumentError when a subtype accompanies a label other than other problems.
void validate(const AnnotationDecision& d);

struct IterationRecord {
    int iteration = 0;
    std::string model_id;
    std::size_t pool_scored = 0;
    AnnotationBatch batch;
    std::size_t decisions_ingested = 0;
    /// Labeled-set size and per-label counts; refreshed when decisions are ingested.
    std::size_t labeled_size = 0;
    std::array<std::size_t, kNumLabels> label_counts{};

    friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

nlohmann::json to_json(const ScoredItem& s);
nlohmann::json to_json(const AnnotationBatch& b);
AnnotationBatch annotation_batch_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AnnotationDecision& d);
AnnotationDecision annotation_decision_from_json(const nlohmann::json& j);
nlohmann::json to_json(const IterationRecord& r);
IterationRecord iteration_record_from_json(const nlohmann::json& j);

enum class TrainingMode : uint8_t { Binary, Ternary };
std::string_view to_string(TrainingMode m);
TrainingMode training_mode_from_string(std::string_view s);

/// Merges verified positives and verified standard reviews into the base dataset.
/// Every review gets a "seed" provenance event. Empty positives -> ArgumentError,
/// wrong labels -> ArgumentError, an id present twice -> IntegrityError.
Dataset seed_base_dataset(const Dataset& positives, const Dataset& negatives);

/// Top-k by probability among ids not in labeled_ids, ties by id. May return fewer than k.
/// k == 0 or a probability outside [0, 1] -> ArgumentError.
AnnotationBatch select_candidates(std::span<const ScoredItem> scored_pool,
                                  const std::unordered_set<std::string>& labeled_ids, std::size_t k,
                                  int iteration = 0);

/// Produces a model from labeled data; what the loop and the audit retrain each time.
class Trainer {
public:
    virtual ~Trainer() = default;
    virtual std::unique_ptr<Classifier> train(const Dataset& labeled, uint64_t seed,
                                              const std::string& model_id) const = 0;
    virtual nlohmann::json descriptor() const = 0;
};

/// train_few_shot on a fixed embedding backend. The seed is mixed into the head and
/// pair-generation seeds.
class ProbeTrainer final : public Trainer {
public:
    ProbeTrainer(std::shared_ptr<const EmbeddingBackend> backend, FewShotConfig config);
    std::unique_ptr<Classifier> train(const Dataset& labeled, uint64_t seed,
                                      const std::string& model_id) const override;
    nlohmann::json descriptor() const override;

private:
    std::shared_ptr<const EmbeddingBackend> backend_;
    FewShotConfig config_;
};

struct BootstrapConfig {
    std::size_t k = 200;
    TrainingMode mode = TrainingMode::Binary;
    std::size_t max_iterations = 7;
    std::size_t min_new_positives = 5;
    uint64_t seed = 0;
    nlohmann::json backend = {{"kind", "hashing"}, {"dim", 512}, {"seed", 0}, {"bigrams", true}};
    /// Head settings sized for the hashing stand-in: a sparse bag-of-words probe needs a
    /// far larger step than a fine-tuned sentence encoder.
    FewShotConfig few_shot = loop_few_shot_defaults();

    static FewShotConfig loop_few_shot_defaults() {
        FewShotConfig c;
        c.head.learning_rate = 0.5;
        c.head.epochs = 30;
        return c;
    }

    void validate() const;
};

nlohmann::json to_json(const BootstrapConfig& c);
BootstrapConfig bootstrap_config_from_json(const nlohmann::json& j);

/// The loop's full state: labeled set, unlabeled pool, history and the open batch.
struct BootstrapState {
    Dataset labeled;
    /// Reviews not yet labeled. Their label fields are always empty.
    Dataset pool;
    std::vector<IterationRecord> iterations;
    std::optional<AnnotationBatch> open_batch;

    std::unordered_set<std::string> labeled_ids() const;
    std::array<std::size_t, kNumLabels> label_counts() const;

    friend bool operator==(const BootstrapState&, const BootstrapState&) = default;
};

/// Pool reviews whose id is already labeled are dropped; gold labels in the pool are cleared.
BootstrapState make_state(Dataset labeled, Dataset pool);

/// Trains on the labeled set (collapsed to two classes in binary mode), scores every pool
/// review with the dual-quality probability, selects the next batch and appends the record.
/// Decisions are not ingested here. A trainer failure is rethrown as BackendError naming
/// the iteration.
IterationRecord run_iteration(BootstrapState& state, const Trainer& trainer, std::size_t k, TrainingMode mode,
                              uint64_t seed = 0);

struct IngestResult {
    std::size_t added = 0;
    std::size_t relabeled = 0;
};

/// Applies annotator verdicts. A decision for a pool review moves it into the labeled set;
/// a decision for an already-labeled review relabels it and appends a provenance event.
/// Unknown ids -> ArgumentError and nothing is applied. Updates the latest record.
IngestResult ingest_annotations(BootstrapState& state, std::span<const AnnotationDecision> decisions);

struct AuditEntry {
    std::string id;
    Label gold = Label::Standard;
    Label predicted = Label::Standard;
    /// 1 - P(gold) under the model that did not see the review.
    double disagreement = 0.0;
    std::size_t fold = 0;

    bool misclassified() const { return gold != predicted; }
};

/// Stratified k-fold cross-validation; each review is predicted once by a model not
/// trained on it. Output: misclassified first, then by disagreement descending, then id.
/// Needs folds >= 2 and every class with >= folds members (>= 2 for leave-one-out).
std::vector<AuditEntry> audit_labels(const Dataset& d, const Trainer& trainer, std::size_t folds, uint64_t seed);
nlohmann::json to_json(const AuditEntry& e);

/// Stratified fold index per review, in dataset order.
std::vector<std::size_t> stratified_folds(const Dataset& d, std::size_t folds, uint64_t seed);

using Annotator = std::function<std::vector<AnnotationDecision>(const AnnotationBatch&)>;

/// Iterates until max_iterations or until an iteration yields fewer than
/// min_new_positives new dual-quality labels.
void run_loop(BootstrapState& state, const Trainer& trainer, const BootstrapConfig& config,
              const Annotator& annotator, const std::function<void(const BootstrapState&)>& on_iteration = {});

/// Run directory layout: labeled.jsonl, pool.jsonl, iterations.jsonl (one record per line),
/// open_batch.json and batches/iteration-NNN.jsonl (one item per line). The run
/// configuration file lives next to them and is owned by the caller.
void save_state(const BootstrapState& state, const std::filesystem::path& dir);
BootstrapState load_state(const std::filesystem::path& dir);

struct SimulationConfig {
    synthetic::PoolSpec pool;
    synthetic::SeedSpec seed_set;
    BootstrapConfig bootstrap;
};

struct SimulationIteration {
    int iteration = 0;
    std::size_t batch_size = 0;
    std::size_t new_positives = 0;
    std::size_t cumulative_annotations = 0;
    std::size_t cumulative_positives = 0;
};

struct SimulationReport {
    std::vector<SimulationIteration> iterations;
    std::size_t pool_size = 0;
    std::size_t planted_positives = 0;
    std::size_t annotations = 0;
    std::size_t verified_positives = 0;
    /// Hypergeometric mean of positives for the same budget drawn at random.
    double random_expected = 0.0;
    double enrichment = 0.0;
    BootstrapState state;
};

/// Pool with planted positives, a perfect annotator reading the gold labels.
SimulationReport simulate(const SimulationConfig& config);
nlohmann::json to_json(const SimulationReport& r);

} // namespace dualq
