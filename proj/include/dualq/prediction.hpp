#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "dualq/corpus.hpp"

namespace dualq {

/// Class distribution for one text. Classes a model does not emit carry probability 0.
struct Prediction {
    Label label = Label::Standard;
    std::array<double, kNumLabels> probs{};
    std::string model_id;

    double prob(Label l) const { return probs[index_of(l)]; }

    friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// argmax over probs; equal values resolve to the earlier label in kAllLabels.
Label argmax_label(const std::array<double, kNumLabels>& probs);

Prediction make_prediction(const std::array<double, kNumLabels>& probs, std::string model_id);
/// All mass on one label (lexicon baseline, LLM answers).
Prediction degenerate_prediction(Label l, std::string model_id);

nlohmann::json to_json(const Prediction& p);
Prediction prediction_from_json(const nlohmann::json& j);

/// Anything that maps texts to predictions, in input order.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual std::vector<Prediction> predict(std::span<const std::string> texts) const = 0;
    virtual std::string model_id() const = 0;
    /// Self-describing JSON that load_classifier() can turn back into an equivalent model.
    virtual nlohmann::json snapshot() const = 0;
};

} // namespace dualq
