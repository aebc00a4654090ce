#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualq/corpus.hpp"
#include "dualq/prediction.hpp"

namespace dualq {

enum class PerturbationKind : uint8_t { Period, FirstLetter, Lower, PlChars, PlCharsOnce };

inline constexpr std::array<PerturbationKind, 5> kAllPerturbations = {
    PerturbationKind::Period, PerturbationKind::FirstLetter, PerturbationKind::Lower, PerturbationKind::PlChars,
    PerturbationKind::PlCharsOnce};

/// "period", "first_letter", "lower", "pl_chars", "pl_chars_once".
std::string_view to_string(PerturbationKind k);
PerturbationKind perturbation_from_string(std::string_view s);

struct PerturbOptions {
    /// Period toggling: when false, a text ending in other punctuation ("!", "?", "..")
    /// is left alone; when true, a single final period is removed or one is appended.
    bool strict_period = false;
};

/// Meaning-preserving edit. Trailing whitespace is kept in place; the period is toggled
/// in front of it. Invalid UTF-8 sequences come back as U+FFFD.
std::string perturb(std::string_view text, PerturbationKind kind, const PerturbOptions& opts = {});

/// Diacritic letters handled by pl_chars (lowercase and uppercase) and their base letters.
char32_t strip_polish_diacritic(char32_t c);

/// Label for one text; the seed lets stochastic models vary between runs.
using PredictFn = std::function<Label(const std::string& text, uint64_t seed)>;

/// Per-item adapter for a batch classifier.
PredictFn predict_fn(const Classifier& c);

struct DisagreementReport {
    PerturbationKind kind = PerturbationKind::Period;
    std::size_t n = 0;
    std::vector<uint64_t> seeds;
    /// Percentage of items whose label changed, per run.
    std::vector<double> per_run;
    std::vector<std::size_t> changed;
    double mean = 0.0;
    /// Sample (n-1) standard deviation; 0 for a single run.
    double std = 0.0;
};

/// Each run predicts every original and its perturbation with the same seed. A failing
/// prediction is rethrown as BackendError naming the item index and run.
/// Seeds default to 0..runs-1; otherwise there must be exactly `runs` of them.
DisagreementReport disagreement(const PredictFn& predict, std::span<const std::string> texts, PerturbationKind kind,
                                std::size_t runs, std::span<const uint64_t> seeds = {},
                                const PerturbOptions& opts = {});

nlohmann::json to_json(const DisagreementReport& r);

} // namespace dualq
