#include "dualq/llm.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>
#include <tuple>

#include "dualq/errors.hpp"
#include "dualq/http.hpp"
#include "dualq/unicode.hpp"

namespace dualq {

namespace {

constexpr std::array<std::string_view, 4> kVariantNames = {"zero_shot", "few_shot", "zero_shot_inst",
                                                           "few_shot_inst"};

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + needle.size())) ++n;
    return n;
}

bool is_open_quote(char32_t c) {
    return c == U'"' || c == U'\'' || c == U'`' || c == U'“' || c == U'„' || c == U'«' || c == U'‘';
}
bool is_close_quote(char32_t c) {
    return c == U'"' || c == U'\'' || c == U'`' || c == U'”' || c == U'“' || c == U'»' || c == U'’';
}

std::u32string trim32(std::u32string s) {
    std::size_t b = 0, e = s.size();
    while (b < e && unicode::is_whitespace(s[b])) ++b;
    while (e > b && unicode::is_whitespace(s[e - 1])) --e;
    return s.substr(b, e - b);
}

// Whole-word occurrence: the match may not touch letters or digits on either side.
bool contains_words(const std::u32string& hay, const std::u32string& needle) {
    for (auto pos = hay.find(needle); pos != std::u32string::npos; pos = hay.find(needle, pos + 1)) {
        const bool left = pos == 0 || !unicode::is_word_char(hay[pos - 1]);
        const auto end = pos + needle.size();
        const bool right = end == hay.size() || !unicode::is_word_char(hay[end]);
        if (left && right) return true;
    }
    return false;
}

void default_sleep(double seconds) {
    if (seconds > 0) std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

} // namespace

std::string_view to_string(PromptVariant v) { return kVariantNames[static_cast<std::size_t>(v)]; }

PromptVariant prompt_variant_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kVariantNames.size(); ++i) {
        if (kVariantNames[i] == s) return kAllPromptVariants[i];
    }
    throw ParseError("unknown prompt variant \"" + std::string(s) + "\"");
}

std::string_view to_string(PromptLanguage l) { return l == PromptLanguage::Pl ? "pl" : "en"; }

PromptLanguage prompt_language_from_string(std::string_view s) {
    if (s == "pl") return PromptLanguage::Pl;
    if (s == "en") return PromptLanguage::En;
    throw ParseError("unknown prompt language \"" + std::string(s) + "\"");
}

PromptTemplate make_template(PromptVariant v, PromptLanguage l, std::string body) {
    const auto n = count_occurrences(body, kReviewPlaceholder);
    if (n != 1) {
        throw ArgumentError("prompt template must contain exactly one <review> placeholder, found " +
                            std::to_string(n));
    }
    return {v, l, std::move(body)};
}

const PromptTemplate& builtin_template(PromptVariant v, PromptLanguage l) {
    static const auto table = [] {
        std::array<std::array<PromptTemplate, 2>, 4> t;
        for (std::size_t i = 0; i < 4; ++i) {
            for (auto lang : {PromptLanguage::Pl, PromptLanguage::En}) {
                const auto var = kAllPromptVariants[i];
                t[i][static_cast<std::size_t>(lang)] =
                    make_template(var, lang, std::string(builtin_prompt_body(var, lang)));
            }
        }
        return t;
    }();
    return table[static_cast<std::size_t>(v)][static_cast<std::size_t>(l)];
}

std::string build_prompt(const PromptTemplate& t, std::string_view review_text) {
    if (review_text.empty()) throw ArgumentError("cannot build a prompt for an empty review");
    const auto pos = t.body.find(kReviewPlaceholder);
    if (pos == std::string::npos) throw ArgumentError("prompt template has no <review> placeholder");
    std::string out;
    out.reserve(t.body.size() + review_text.size());
    out.append(t.body, 0, pos);
    out.append(review_text);
    out.append(t.body, pos + kReviewPlaceholder.size());
    return out;
}

Label parse_label(std::string_view raw) {
    auto s = trim32(unicode::decode(unicode::to_lower(raw)));
    bool period_stripped = false;
    if (!s.empty() && s.back() == U'.') {
        s.pop_back();
        period_stripped = true;
        s = trim32(s);
    }
    if (s.size() >= 2 && is_open_quote(s.front()) && is_close_quote(s.back())) s = trim32(s.substr(1, s.size() - 2));
    if (!period_stripped && !s.empty() && s.back() == U'.') s = trim32(s.substr(0, s.size() - 1));

    std::optional<Label> found;
    for (auto l : kAllLabels) {
        if (s == unicode::decode(to_string(l))) return l;
    }
    for (auto l : kAllLabels) {
        if (!contains_words(s, unicode::decode(to_string(l)))) continue;
        if (found) throw LabelParseError(std::string(raw));
        found = l;
    }
    if (!found) throw LabelParseError(std::string(raw));
    return *found;
}

void LLMClientConfig::validate() const {
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) throw ArgumentError("temperature must be >= 0");
    if (max_concurrency == 0) throw ArgumentError("max_concurrency must be at least 1");
    if (!(timeout_seconds > 0.0)) throw ArgumentError("timeout_seconds must be positive");
    for (double b : backoff_seconds) {
        if (!(b >= 0.0) || !std::isfinite(b)) throw ArgumentError("backoff values must be finite and >= 0");
    }
    if (max_retries > 0 && backoff_seconds.empty()) throw ArgumentError("retries need a backoff schedule");
}

HttpChatClient::HttpChatClient(LLMClientConfig config)
    : config_(std::move(config)), token_(http::env_or_empty(config_.api_key_env)) {
    config_.validate();
    http::parse_url(config_.base_url);
}

std::string HttpChatClient::complete(const ChatRequest& request) {
    const nlohmann::json body = {
        {"model", request.model.empty() ? config_.model : request.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
        {"temperature", request.temperature},
    };
    const auto res = http::post_json(config_.base_url + "/chat/completions", body, token_, config_.timeout_seconds);
    if (res.status == 429 || res.status >= 500) {
        throw TransportError("chat endpoint answered HTTP " + std::to_string(res.status));
    }
    if (res.status != 200) {
        throw BackendError("chat endpoint answered HTTP " + std::to_string(res.status) + ": " +
                           res.body.substr(0, 300));
    }
    try {
        const auto j = nlohmann::json::parse(res.body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("malformed chat completion: ") + e.what());
    }
}

std::size_t LLMRun::failures() const {
    std::size_t n = 0;
    for (const auto& it : items) n += !it.ok();
    return n;
}

namespace {

// One item with retries. Returns the raw answer or throws the last failure.
std::string complete_with_retries(ChatClient& client, const ChatRequest& req, const LLMClientConfig& config,
                                  const SleepFn& sleep, std::size_t& attempts, std::vector<RetryEvent>* log,
                                  std::mutex* log_mutex) {
    for (std::size_t attempt = 0;; ++attempt) {
        attempts = attempt + 1;
        try {
            return client.complete(req);
        } catch (const TransportError& e) {
            if (attempt >= config.max_retries) throw;
            if (log) {
                std::lock_guard lock(*log_mutex);
                log->push_back({req.item, attempt + 1, e.what()});
            }
            const auto& b = config.backoff_seconds;
            (sleep ? sleep : SleepFn(default_sleep))(b[std::min(attempt, b.size() - 1)]);
        }
    }
}

} // namespace

std::vector<LLMRun> classify_with_llm(std::span<const std::string> texts, const PromptTemplate& t,
                                      ChatClient& client, const LLMClientConfig& config, std::size_t runs,
                                      const SleepFn& sleep) {
    config.validate();
    if (runs == 0) throw ArgumentError("runs must be at least 1");
    std::vector<std::string> prompts;
    prompts.reserve(texts.size());
    for (const auto& text : texts) prompts.push_back(build_prompt(t, text));

    const std::string model_id = "llm:" + config.model + ":" + std::string(to_string(t.variant)) + ":" +
                                 std::string(to_string(t.language));
    std::vector<LLMRun> out(runs);
    for (std::size_t r = 0; r < runs; ++r) {
        auto& run = out[r];
        run.run = r;
        run.items.resize(texts.size());
        std::mutex log_mutex;
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < texts.size(); i = next++) {
                auto& item = run.items[i];
                const ChatRequest req{prompts[i], config.model, config.temperature, i, r};
                try {
                    item.raw = complete_with_retries(client, req, config, sleep, item.attempts, &run.retries,
                                                     &log_mutex);
                    item.prediction = degenerate_prediction(parse_label(item.raw), model_id);
                } catch (const Error& e) {
                    item.error_kind = e.kind();
                    item.error = e.what();
                } catch (const std::exception& e) {
                    item.error_kind = "error";
                    item.error = e.what();
                }
            }
        };
        const auto n_threads = std::min(config.max_concurrency, texts.size());
        if (n_threads <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (std::size_t k = 0; k < n_threads; ++k) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
        std::sort(run.retries.begin(), run.retries.end(), [](const RetryEvent& a, const RetryEvent& b) {
            return std::tie(a.item, a.attempt) < std::tie(b.item, b.attempt);
        });
    }
    return out;
}

PredictFn llm_predict_fn(ChatClient& client, const PromptTemplate& t, const LLMClientConfig& config,
                         const SleepFn& sleep) {
    config.validate();
    return [&client, t, config, sleep](const std::string& text, uint64_t seed) {
        const ChatRequest req{build_prompt(t, text), config.model, config.temperature, 0,
                              static_cast<std::size_t>(seed)};
        std::size_t attempts = 0;
        return parse_label(complete_with_retries(client, req, config, sleep, attempts, nullptr, nullptr));
    };
}

nlohmann::json to_json(const LLMRun& r) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& it : r.items) {
        nlohmann::json j = {{"raw", it.raw}, {"attempts", it.attempts}};
        if (it.prediction) {
            j["label"] = to_string(it.prediction->label);
        } else {
            j["error_kind"] = it.error_kind;
            j["error"] = it.error;
        }
        items.push_back(std::move(j));
    }
    nlohmann::json retries = nlohmann::json::array();
    for (const auto& e : r.retries) retries.push_back({{"item", e.item}, {"attempt", e.attempt}, {"error", e.error}});
    return {{"run", r.run}, {"items", items}, {"retries", retries}, {"failures", r.failures()}};
}

} // namespace dualq
