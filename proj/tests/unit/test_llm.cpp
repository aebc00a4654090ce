#include <doctest.h>

#include <chrono>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "dualq/classify.hpp"
#include "dualq/errors.hpp"
#include "dualq/llm.hpp"
#include "dualq/rng.hpp"

// after Eigen: httplib pulls in <resolv.h>, whose _res macro clashes with Eigen internals
#include "../support/stub_http.hpp"

using namespace dualq;

namespace {

std::string read_fixture(const std::string& name) {
    std::ifstream in(std::string(DUALQ_SOURCE_DIR) + "/tests/fixtures/prompts/" + name, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing fixture " << name);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string naive_substitute(std::string fixture, const std::string& review) {
    const auto pos = fixture.find("<review>");
    return fixture.substr(0, pos) + review + fixture.substr(pos + 8);
}

/// Answers from a callback; counts calls. Thread-safe.
class ScriptedChatClient final : public ChatClient {
public:
    using Script = std::function<std::string(const ChatRequest&, int call_for_item)>;
    explicit ScriptedChatClient(Script s) : script_(std::move(s)) {}

    std::string complete(const ChatRequest& req) override {
        int n;
        {
            std::lock_guard lock(mu_);
            ++calls_;
            n = ++per_item_[{req.run, req.item}];
            prompts_.push_back(req.prompt);
        }
        return script_(req, n);
    }
    int calls() const { return calls_; }
    std::vector<std::string> prompts() const { return prompts_; }

private:
    Script script_;
    std::mutex mu_;
    int calls_ = 0;
    std::map<std::pair<std::size_t, std::size_t>, int> per_item_;
    std::vector<std::string> prompts_;
};

LLMClientConfig fast_config() {
    LLMClientConfig c;
    c.backoff_seconds = {0.0};
    return c;
}

const std::vector<std::string> kSampleReviews = {
    "Krem kupiony w Niemczech jest dużo gęstszy niż ten z polskiej drogerii.",
    "Paczka przyszła uszkodzona, a w środku był inny kolor niż zamówiony.",
    "Świetna kawa, \"mocna\" i aromatyczna. Polecam!",
};

} // namespace

TEST_SUITE("llm") {

TEST_CASE("prompt fidelity: 4 variants x 2 languages x 3 reviews against transcribed fixtures") {
    for (auto lang : {PromptLanguage::Pl, PromptLanguage::En}) {
        for (auto v : kAllPromptVariants) {
            const auto name = std::string(to_string(lang)) + "_" + std::string(to_string(v)) + ".txt";
            CAPTURE(name);
            const auto fixture = read_fixture(name);
            const auto& t = builtin_template(v, lang);
            CHECK(t.body == fixture);
            for (const auto& review : kSampleReviews) CHECK(build_prompt(t, review) == naive_substitute(fixture, review));
        }
    }
}

TEST_CASE("prompt examples") {
    const auto& zs = builtin_template(PromptVariant::ZeroShot, PromptLanguage::Pl);
    const auto p = build_prompt(zs, "X");
    const std::string tail = "Treść opinii:\nX";
    CHECK(p.substr(p.size() - tail.size()) == tail);

    const auto fs = build_prompt(builtin_template(PromptVariant::FewShot, PromptLanguage::Pl), "X");
    for (const char* example :
         {"Kapsułki są lepsze, niż na polski rynek tej samej firmy.", "Dobry smak kawy. Kraj pochodzenia Niemcy.",
          "Mój ulubiony zapach.", "Proszek może i z Niemiec, ale produkcja Czechy",
          "Niezły preparat. Łagodzi trochę bóle", "jest ok, nie zauważyłam większej różnicy"}) {
        CHECK(fs.find(example) != std::string::npos);
    }

    const std::string tricky = "tekst z <review> w środku";
    const auto q = build_prompt(zs, tricky);
    CHECK(q == naive_substitute(std::string(zs.body), tricky));
    std::size_t n = 0;
    for (auto pos = q.find("<review>"); pos != std::string::npos; pos = q.find("<review>", pos + 1)) ++n;
    CHECK(n == 1);

    CHECK_THROWS_AS(build_prompt(zs, ""), ArgumentError);
    CHECK_THROWS_AS(make_template(PromptVariant::ZeroShot, PromptLanguage::Pl, "no slot"), ArgumentError);
    CHECK_THROWS_AS(make_template(PromptVariant::ZeroShot, PromptLanguage::Pl, "<review><review>"), ArgumentError);
    for (auto v : kAllPromptVariants) CHECK(prompt_variant_from_string(to_string(v)) == v);
}

TEST_CASE("parse_label accepts class names with light formatting") {
    for (auto l : kAllLabels) CHECK(parse_label(to_string(l)) == l);
    CHECK(parse_label("dual quality") == Label::DualQuality);
    CHECK(parse_label(" Standard.\n") == Label::Standard);
    CHECK(parse_label("\"Other problems\"") == Label::OtherProblems);
    CHECK(parse_label("\"other problems\".") == Label::OtherProblems);
    CHECK(parse_label("„dual quality”") == Label::DualQuality);
    CHECK(parse_label("“standard”") == Label::Standard);
    CHECK(parse_label("'DUAL QUALITY'") == Label::DualQuality);
    CHECK(parse_label("Klasa: standard") == Label::Standard);
    CHECK(parse_label("Odpowiedź: \"other problems\"") == Label::OtherProblems);
}

TEST_CASE("parse_label rejects 20 adversarial answers and keeps the raw text") {
    const std::vector<std::string> bad = {
        "",
        "   \n",
        "It seems fine",
        "dual",
        "quality",
        "other",
        "problems",
        "dual quality or standard",
        "standard / other problems",
        "dual-quality",
        "dualquality",
        "podwójna jakość",
        "inne problemy",
        "standardowa",
        "substandard",
        "dual  quality",
        "other_problems",
        "Not sure, maybe dual quality, maybe other problems.",
        "...",
        "\"\"",
    };
    REQUIRE(bad.size() == 20);
    for (const auto& raw : bad) {
        CAPTURE(raw);
        try {
            parse_label(raw);
            FAIL("accepted an adversarial answer");
        } catch (const LabelParseError& e) {
            CHECK(e.raw() == raw);
        }
    }
}

TEST_CASE("classify_with_llm: constant stub") {
    ScriptedChatClient client([](const ChatRequest&, int) { return "standard"; });
    const auto runs = classify_with_llm(kSampleReviews, builtin_template(PromptVariant::ZeroShot, PromptLanguage::Pl),
                                        client, fast_config(), 2);
    REQUIRE(runs.size() == 2);
    for (const auto& run : runs) {
        REQUIRE(run.items.size() == 3);
        for (const auto& item : run.items) {
            REQUIRE(item.ok());
            CHECK(item.prediction->label == Label::Standard);
            CHECK(item.prediction->prob(Label::Standard) == 1.0);
            CHECK(item.attempts == 1);
        }
    }
    CHECK(client.calls() == 6);
}

TEST_CASE("classify_with_llm: retries, exhaustion and parse failures are recorded per item") {
    // item 0 fails twice then answers; item 1 never gets through; item 2 answers nonsense
    ScriptedChatClient client([](const ChatRequest& req, int call) -> std::string {
        if (req.item == 0 && call <= 2) throw TransportError("connection reset");
        if (req.item == 1) throw TransportError("timeout");
        if (req.item == 2) return "no idea";
        return "dual quality";
    });
    std::vector<double> sleeps;
    std::mutex mu;
    auto cfg = fast_config();
    cfg.max_retries = 3;
    cfg.backoff_seconds = {0.5, 1.0};
    cfg.max_concurrency = 1;
    const auto runs = classify_with_llm(kSampleReviews, builtin_template(PromptVariant::FewShot, PromptLanguage::En),
                                        client, cfg, 1, [&](double s) {
                                            std::lock_guard lock(mu);
                                            sleeps.push_back(s);
                                        });
    const auto& items = runs[0].items;
    REQUIRE(items[0].ok());
    CHECK(items[0].prediction->label == Label::DualQuality);
    CHECK(items[0].attempts == 3);
    CHECK(!items[1].ok());
    CHECK(items[1].error_kind == "transport_error");
    CHECK(items[1].attempts == 4);
    CHECK(!items[2].ok());
    CHECK(items[2].error_kind == "label_parse_error");
    CHECK(items[2].raw == "no idea");
    CHECK(runs[0].failures() == 2);
    // 2 retries for item 0, 3 for item 1
    CHECK(runs[0].retries.size() == 5);
    CHECK(sleeps == std::vector<double>{0.5, 1.0, 0.5, 1.0, 1.0});
    // no request amplification: |reviews| x runs + retries
    CHECK(client.calls() == 3 + 5);
    const auto j = to_json(runs[0]);
    CHECK(j["failures"] == 2);
    CHECK(j["items"][2]["raw"] == "no idea");
}

TEST_CASE("classify_with_llm: bounded concurrency keeps input order") {
    std::atomic<int> in_flight{0}, peak{0};
    ScriptedChatClient client([&](const ChatRequest& req, int) -> std::string {
        const int now = ++in_flight;
        int prev = peak.load();
        while (now > prev && !peak.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(1 + (req.item * 7) % 5));
        --in_flight;
        return req.item % 3 == 0 ? "dual quality" : req.item % 3 == 1 ? "other problems" : "standard";
    });
    std::vector<std::string> texts;
    for (int i = 0; i < 40; ++i) texts.push_back("opinia " + std::to_string(i));
    auto cfg = fast_config();
    cfg.max_concurrency = 3;
    const auto runs = classify_with_llm(texts, builtin_template(PromptVariant::ZeroShot, PromptLanguage::Pl), client,
                                        cfg, 1);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        REQUIRE(runs[0].items[i].ok());
        CHECK(runs[0].items[i].prediction->label == kAllLabels[i % 3]);
    }
    CHECK(peak.load() <= 3);
    CHECK(peak.load() >= 2);
}

TEST_CASE("classify_with_llm: stochastic stub gives distinct runs, deterministic stub does not") {
    std::vector<std::string> texts;
    for (int i = 0; i < 30; ++i) texts.push_back("opinia " + std::to_string(i));
    ScriptedChatClient noisy([](const ChatRequest& req, int) -> std::string {
        Rng rng(req.run * 1000 + req.item);
        return std::string(to_string(kAllLabels[rng.below(3)]));
    });
    const auto runs = classify_with_llm(texts, builtin_template(PromptVariant::ZeroShot, PromptLanguage::Pl), noisy,
                                        fast_config(), 5);
    REQUIRE(runs.size() == 5);
    std::set<std::vector<Label>> distinct;
    for (const auto& run : runs) {
        std::vector<Label> labels;
        for (const auto& it : run.items) labels.push_back(it.prediction->label);
        distinct.insert(labels);
    }
    CHECK(distinct.size() == 5);

    // temperature 0 model used through the robustness harness: zero spread across runs
    ScriptedChatClient deterministic([](const ChatRequest& req, int) -> std::string {
        return req.prompt.find("Niemcy") != std::string::npos ? "dual quality" : "standard";
    });
    auto cfg = fast_config();
    cfg.temperature = 0.0;
    const auto fn = llm_predict_fn(deterministic, builtin_template(PromptVariant::ZeroShotInst, PromptLanguage::Pl), cfg);
    const std::vector<std::string> reviews = {"Kawa z Niemcy lepsza", "zwykła opinia", "NIEMCY górą"};
    const auto rep = disagreement(fn, reviews, PerturbationKind::Lower, 5);
    CHECK(rep.std == 0.0);
    CHECK(rep.mean == doctest::Approx(100.0 / 3.0));
}

TEST_CASE("HTTP chat client against a local stub server") {
    std::mutex mu;
    std::vector<nlohmann::json> bodies;
    std::vector<std::string> auth;
    std::atomic<int> calls{0};
    testing::StubHttpServer server([&](const httplib::Request& req, httplib::Response& res) {
        const int n = ++calls;
        {
            std::lock_guard lock(mu);
            bodies.push_back(nlohmann::json::parse(req.body));
            auth.push_back(req.get_header_value("Authorization"));
        }
        if (req.path != "/v1/chat/completions") {
            res.status = 404;
            return;
        }
        if (n == 1) {
            res.status = 503;
            return;
        }
        const auto prompt = bodies.back()["messages"][0]["content"].get<std::string>();
        const std::string answer = prompt.find("fail-hard") != std::string::npos ? "" : "Other problems.";
        if (answer.empty()) {
            res.status = 400;
            res.set_content(R"({"error":"bad request"})", "application/json");
            return;
        }
        res.set_content(nlohmann::json({{"choices", {{{"message", {{"role", "assistant"}, {"content", answer}}}}}}})
                            .dump(),
                        "application/json");
    });
    ::setenv("DUALQ_TEST_LLM_KEY", "sekret", 1);
    LLMClientConfig cfg = fast_config();
    cfg.base_url = server.base_url() + "/v1";
    cfg.model = "stub-model";
    cfg.api_key_env = "DUALQ_TEST_LLM_KEY";
    cfg.max_concurrency = 1;
    HttpChatClient client(cfg);
    const std::vector<std::string> texts = {"pierwsza opinia", "fail-hard"};
    const auto runs = classify_with_llm(texts, builtin_template(PromptVariant::ZeroShot, PromptLanguage::Pl), client,
                                        cfg, 1);
    const auto& items = runs[0].items;
    REQUIRE(items[0].ok());
    CHECK(items[0].prediction->label == Label::OtherProblems);
    CHECK(items[0].attempts == 2);
    CHECK(runs[0].retries.size() == 1);
    CHECK(!items[1].ok());
    CHECK(items[1].error_kind == "backend_error");
    CHECK(items[1].attempts == 1);
    CHECK(server.requests() == 3);

    REQUIRE(!bodies.empty());
    const auto& b = bodies.front();
    CHECK(b["model"] == "stub-model");
    CHECK(b["temperature"] == 0.1);
    REQUIRE(b["messages"].size() == 1);
    CHECK(b["messages"][0]["role"] == "user");
    CHECK(b["messages"][0]["content"] == build_prompt(builtin_template(PromptVariant::ZeroShot, PromptLanguage::Pl),
                                                      "pierwsza opinia"));
    CHECK(auth.front() == "Bearer sekret");

    // nothing listens on the port once the server is gone
    LLMClientConfig dead = cfg;
    dead.base_url = "http://127.0.0.1:1";
    dead.timeout_seconds = 2;
    HttpChatClient unreachable(dead);
    CHECK_THROWS_AS(unreachable.complete({"x", "m", 0.0, 0, 0}), TransportError);
    LLMClientConfig negative = cfg;
    negative.temperature = -0.5;
    CHECK_THROWS_AS(HttpChatClient{negative}, ArgumentError);
}

TEST_CASE("remote embedding backend against a local stub server") {
    testing::StubHttpServer server([](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        nlohmann::json data = nlohmann::json::array();
        const auto& input = body["input"];
        // answer in reverse order to exercise the index field
        for (std::size_t i = input.size(); i-- > 0;) {
            const double len = static_cast<double>(input[i].get<std::string>().size());
            data.push_back({{"index", i}, {"embedding", {len, 1.0, -len}}});
        }
        res.set_content(nlohmann::json({{"data", data}}).dump(), "application/json");
    });
    RemoteEmbeddingConfig cfg;
    cfg.base_url = server.base_url();
    cfg.model = "stub-embed";
    cfg.dim = 3;
    cfg.batch_size = 2;
    RemoteEmbedding backend(cfg);
    const std::vector<std::string> texts = {"a", "bbb", "cc"};
    const auto X = backend.embed(texts);
    CHECK(X(0, 0) == 1.0);
    CHECK(X(1, 0) == 3.0);
    CHECK(X(2, 2) == -2.0);
    CHECK(server.requests() == 2);
    CHECK(make_embedding_backend(backend.descriptor())->embed(texts) == X);

    cfg.dim = 4;
    RemoteEmbedding wrong_dim(cfg);
    CHECK_THROWS_AS(wrong_dim.embed(texts), BackendError);
}

}
