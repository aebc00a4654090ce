#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualq/prediction.hpp"
#include "dualq/robustness.hpp"

namespace dualq {

enum class PromptVariant : uint8_t { ZeroShot, FewShot, ZeroShotInst, FewShotInst };
inline constexpr std::array<PromptVariant, 4> kAllPromptVariants = {
    PromptVariant::ZeroShot, PromptVariant::FewShot, PromptVariant::ZeroShotInst, PromptVariant::FewShotInst};

enum class PromptLanguage : uint8_t { Pl, En };

/// "zero_shot", "few_shot", "zero_shot_inst", "few_shot_inst".
std::string_view to_string(PromptVariant v);
PromptVariant prompt_variant_from_string(std::string_view s);
std::string_view to_string(PromptLanguage l);
PromptLanguage prompt_language_from_string(std::string_view s);

inline constexpr std::string_view kReviewPlaceholder = "<review>";

struct PromptTemplate {
    PromptVariant variant = PromptVariant::ZeroShot;
    PromptLanguage language = PromptLanguage::Pl;
    std::string body;
};

/// Validates that the body holds exactly one placeholder.
PromptTemplate make_template(PromptVariant v, PromptLanguage l, std::string body);
/// The shipped Polish (normative) and English prompts.
const PromptTemplate& builtin_template(PromptVariant v, PromptLanguage l);
std::string_view builtin_prompt_body(PromptVariant v, PromptLanguage l);

/// Replaces the single placeholder with the review verbatim. Empty review -> ArgumentError.
std::string build_prompt(const PromptTemplate& t, std::string_view review_text);

/// Maps a model answer onto a class: trim, lowercase, drop one trailing period and one
/// pair of surrounding quotes, then exact match, else the only class name occurring as
/// whole words. Anything else is a LabelParseError carrying the raw answer.
Label parse_label(std::string_view raw);

struct LLMClientConfig {
    /// Base of an OpenAI-compatible API; requests go to {base_url}/chat/completions.
    std::string base_url = "https://api.openai.com/v1";
    std::string model = "gpt-4o";
    double temperature = 0.1;
    std::size_t max_retries = 3;
    /// Wait before retry k is backoff_seconds[min(k, size - 1)].
    std::vector<double> backoff_seconds = {1.0, 2.0, 4.0};
    double timeout_seconds = 60.0;
    std::size_t max_concurrency = 4;
    /// Environment variable holding the bearer token.
    std::string api_key_env = "LLM_API_KEY";

    /// Throws ArgumentError for negative temperature, zero concurrency or bad backoff values.
    void validate() const;
};

struct ChatRequest {
    std::string prompt;
    std::string model;
    double temperature = 0.0;
    /// Position of the item and the run, so test doubles can script answers.
    std::size_t item = 0;
    std::size_t run = 0;
};

/// One attempt at a chat completion. Retryable failures are TransportError; anything
/// else (e.g. a 400 answer) is BackendError. Implementations must be thread-safe.
class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
};

/// Chat-completions over HTTP(S): the whole prompt is sent as a single user message.
class HttpChatClient final : public ChatClient {
public:
    explicit HttpChatClient(LLMClientConfig config);
    std::string complete(const ChatRequest& request) override;

private:
    LLMClientConfig config_;
    std::string token_;
};

struct RetryEvent {
    std::size_t item = 0;
    std::size_t attempt = 0;
    std::string error;
};

struct LLMItemResult {
    std::optional<Prediction> prediction;
    /// Model answer, kept also when it could not be parsed.
    std::string raw;
    /// Empty on success, otherwise the error kind ("transport_error", "label_parse_error", ...).
    std::string error_kind;
    std::string error;
    std::size_t attempts = 0;

    bool ok() const { return prediction.has_value(); }
};

struct LLMRun {
    std::size_t run = 0;
    std::vector<LLMItemResult> items;
    std::vector<RetryEvent> retries;

    std::size_t failures() const;
};

using SleepFn = std::function<void(double seconds)>;

/// One request per text per run (plus retries), at most config.max_concurrency in flight.
/// Results keep input order. Per-item failures are recorded, never dropped.
std::vector<LLMRun> classify_with_llm(std::span<const std::string> texts, const PromptTemplate& t,
                                      ChatClient& client, const LLMClientConfig& config, std::size_t runs,
                                      const SleepFn& sleep = {});

/// Per-item predictor for the robustness harness; the seed is passed as the run index.
/// Failures (after retries) propagate as exceptions.
PredictFn llm_predict_fn(ChatClient& client, const PromptTemplate& t, const LLMClientConfig& config,
                         const SleepFn& sleep = {});

nlohmann::json to_json(const LLMRun& r);

} // namespace dualq
