#include "dualq/prediction.hpp"

#include "dualq/errors.hpp"

namespace dualq {

Label argmax_label(const std::array<double, kNumLabels>& probs) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < kNumLabels; ++i) {
        if (probs[i] > probs[best]) best = i;
    }
    return kAllLabels[best];
}

Prediction make_prediction(const std::array<double, kNumLabels>& probs, std::string model_id) {
    return Prediction{argmax_label(probs), probs, std::move(model_id)};
}

Prediction degenerate_prediction(Label l, std::string model_id) {
    std::array<double, kNumLabels> probs{};
    probs[index_of(l)] = 1.0;
    return Prediction{l, probs, std::move(model_id)};
}

nlohmann::json to_json(const Prediction& p) {
    nlohmann::json probs = nlohmann::json::object();
    for (auto l : kAllLabels) probs[std::string(to_string(l))] = p.prob(l);
    return {{"label", to_string(p.label)}, {"probs", probs}, {"model_id", p.model_id}};
}

Prediction prediction_from_json(const nlohmann::json& j) {
    try {
        Prediction p;
        p.label = label_from_string(j.at("label").get<std::string>());
        if (auto it = j.find("probs"); it != j.end()) {
            for (auto l : kAllLabels) p.probs[index_of(l)] = it->value(std::string(to_string(l)), 0.0);
        } else {
            p.probs[index_of(p.label)] = 1.0;
        }
        p.model_id = j.value("model_id", "");
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad prediction record: ") + e.what());
    }
}

} // namespace dualq
